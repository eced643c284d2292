// Copyright 2026 The vtsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "vtsim/dataset.hpp"
#include "vtsim/sensor.hpp"

namespace vtsim {

// Dense NCHW tensor of doubles. Vectors use shape (B, K, 1, 1).
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  static Tensor zeros(int n, int c, int h, int w);
  std::array<int, 4> shape() const { return {n, c, h, w}; }
  std::size_t size() const { return v.size(); }
  double& at(int b, int ch, int y, int x) {
    return v[((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x];
  }
  double at(int b, int ch, int y, int x) const {
    return v[((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x];
  }
  bool operator==(const Tensor&) const = default;
};

struct LearnerConfig {
  int input_w = 64;
  int input_h = 48;
  int latent_dim = 128;
  std::array<int, 3> channels{8, 16, 32};
  int marker_hidden = 64;
  int pose_hidden = 32;
  double lambda_s = 1.0;
  double lambda_c = 0.5;
  double lambda_p = 0.5;
  double lr = 0.02;
  double momentum = 0.9;
  int batch = 8;
  int epochs = 30;
  std::uint64_t seed = 0;

  // Throws kConfig. Input dims must be multiples of 8.
  void validate() const;
};

// Layer sizes. Every weight block is stored column-major with rows = outputs.
struct Architecture {
  int input_w = 0;
  int input_h = 0;
  int latent_dim = 0;
  std::array<int, 3> channels{};
  int marker_hidden = 0;
  int pose_hidden = 0;
  int n_markers = 0;

  static Architecture from(const LearnerConfig& config, int n_markers);

  struct Block {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;
  };
  // Flat index map of the parameter vector, in storage order.
  std::vector<Block> index_map() const;
  std::size_t param_count() const;
  nlohmann::json to_json() const;
  static Architecture from_json(const nlohmann::json& j);
  bool operator==(const Architecture&) const = default;
};

struct LearnerParams {
  Architecture arch;
  std::vector<double> w;
};

// Seeded LeCun-uniform weights, zero biases.
LearnerParams init_params(const Architecture& arch, std::uint64_t seed);

// Scales that map the stored channels into training units.
struct Normalizer {
  double max_indent = 1.0;  // depth scale, mm
  double image_w = 1.0;     // px
  double image_h = 1.0;     // px
  double half_diagonal = 1.0;  // gel half-diagonal, mm

  static Normalizer from_profile(const SensorProfile& profile);
  double depth(double mm) const { return mm / max_indent; }
  double depth_inv(double v) const { return v * max_indent; }
  double marker_x(double px) const { return 2.0 * px / image_w - 1.0; }
  double marker_x_inv(double v) const { return 0.5 * (v + 1.0) * image_w; }
  double marker_y(double px) const { return 2.0 * px / image_h - 1.0; }
  double marker_y_inv(double v) const { return 0.5 * (v + 1.0) * image_h; }
  double translation(double mm) const { return mm / half_diagonal; }
  double translation_inv(double v) const { return v * half_diagonal; }
  nlohmann::json to_json() const;
  static Normalizer from_json(const nlohmann::json& j);
};

// One training example in network units.
struct Example {
  std::vector<double> marked;  // 3 x h x w, [0, 1]
  std::vector<double> pure;    // 3 x h x w
  std::vector<double> depth;   // h x w, depth / max_indent
  std::vector<double> markers; // 2N, x then y per marker, [-1, 1]
  std::array<double, 7> pose{};
};

// Area-average resampling of an 8-bit RGB image to (w, h), CHW in [0, 1].
std::vector<double> downsample_rgb(const TactileImage& image, int w, int h);
// Area-average resampling of a single-channel row-major map.
std::vector<double> downsample_map(const std::vector<float>& map, int src_w, int src_h, int w,
                                   int h);

Example make_example(const Sample& sample, const Normalizer& norm, int w, int h);

struct Batch {
  Tensor input;    // (B, 3, h, w), downsampled I_marked
  Tensor marked;   // (B, 3, h, w)
  Tensor pure;     // (B, 3, h, w)
  Tensor depth;    // (B, 1, h, w)
  Tensor markers;  // (B, 2N, 1, 1)
  Tensor pose;     // (B, 7, 1, 1)

  int size() const { return input.n; }
};

Batch make_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& indices,
                 int w, int h);

struct Predictions {
  Tensor marked;
  Tensor pure;
  Tensor depth;
  Tensor markers;
  Tensor pose;
  Tensor latent;  // (B, latent_dim, 1, 1)
};

// Throws kShapeMismatch when the input does not fit the architecture.
Predictions forward(const LearnerParams& params, const Tensor& input);

// Mean squared error over all elements. Throws kShapeMismatch.
double mse(const Tensor& pred, const Tensor& target);
double loss_shape(const Predictions& pred, const Batch& target);
double loss_contact(const Predictions& pred, const Batch& target);
double loss_pose(const Predictions& pred, const Batch& target);
double loss_total(double shape, double contact, double pose, const LearnerConfig& config);

struct Losses {
  double shape = 0.0;
  double contact = 0.0;
  double pose = 0.0;
  double total = 0.0;
};

struct GradientResult {
  std::vector<double> grad;  // same layout as LearnerParams::w
  Losses losses;
};

// Exact reverse-mode gradient of loss_total. Throws kNonfiniteGradient
// naming the first offending index.
GradientResult backward(const LearnerParams& params, const Batch& batch,
                        const LearnerConfig& config);
Losses evaluate_losses(const LearnerParams& params, const Batch& batch,
                       const LearnerConfig& config);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};
// Central differences on `coords` randomly chosen coordinates;
// rel = |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult gradient_check(const LearnerParams& params, const Batch& batch,
                               const LearnerConfig& config, int coords, std::uint64_t seed,
                               double step = 1e-4);

struct TrainResult {
  LearnerParams params;
  std::vector<double> epoch_loss;  // mean total loss per epoch
};

// Momentum SGD over shuffled mini-batches. Throws kDivergence when the loss
// becomes non-finite and kEmptyInput without examples.
TrainResult train(const LearnerConfig& config, const std::vector<Example>& data, int n_markers);

// Latent code of one (3, h, w) image.
std::vector<double> embed(const LearnerParams& params, const std::vector<double>& image);

// Ridge-regularized least-squares map from latents (plus bias) to targets.
struct LinearProbe {
  Eigen::MatrixXd weights;  // (d + 1) x k

  static LinearProbe fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double ridge);
  Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;
};

// Loads training examples from a dataset in manifest order, at most `limit`.
std::vector<Example> load_examples(const std::filesystem::path& dataset_dir,
                                   const LearnerConfig& config, std::size_t limit,
                                   Normalizer* norm_out = nullptr, int* n_markers_out = nullptr);

// u32 header length, JSON header, then the weights as little-endian f32.
void write_params(const std::filesystem::path& path, const LearnerParams& params,
                  const Normalizer& norm, const nlohmann::json& extra);
LearnerParams read_params(const std::filesystem::path& path, Normalizer* norm_out = nullptr);

}  // namespace vtsim
