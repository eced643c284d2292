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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtsim/contact.hpp"
#include "vtsim/control.hpp"
#include "vtsim/dataset.hpp"
#include "vtsim/geometry.hpp"
#include "vtsim/rng.hpp"
#include "vtsim/sensor.hpp"

namespace vtsim {

enum class GenMode { kSweep, kCorrect };

std::string_view gen_mode_name(GenMode mode);
// Throws kConfig for anything but "sweep" or "correct".
GenMode gen_mode_from_name(std::string_view name);

struct ShapeSpec {
  std::string label;  // file-name safe: [A-Za-z0-9-]
  IndenterShape shape;
};

// The catalog shapes, labeled by kind name.
std::vector<ShapeSpec> standard_shapes();

struct GenConfig {
  std::uint64_t seed = 0;
  std::vector<ShapeSpec> shapes = standard_shapes();
  int episodes_per_shape = 2;
  int frames_per_episode = 20;
  // Reading thresholds; unset means [d_max - 0.7 m, d_max - 0.2 m] with
  // m = max_indent.
  std::optional<std::pair<double, double>> delta_th_range;
  double rotation_range = 0.03;    // rad, per rotate step
  double translation_range = 0.25; // mm, per move step and injected offset
  SensorProfile profile = default_profile("gelsight_mini");
  GenMode mode = GenMode::kSweep;

  // Correction episodes.
  double correction_cap = 1.0;  // mm per corrective step
  double correction_tol = 0.1;  // mm
  int correction_budget = 10;   // corrective steps

  // Scene layout.
  double approach_distance = 5.0;  // mm above the grasp height
  int approach_steps = 5;
  double gap = 1.0;        // mm between finger 0 and the tip before closing
  double clearance = 5.0;  // extra mm behind the object on the finger 1 side

  ContactParams contact;
  GripperConfig gripper;
  double v_fast = 3.0;
  double v_slow = 1.5;
  double dt = 0.1;

  std::string created_utc = "1970-01-01T00:00:00Z";
  int threads = 1;

  std::pair<double, double> resolved_delta_th_range() const;
  ControlGains gains() const;
  // Throws kConfig naming the first violated rule.
  void validate() const;
};

// Desk-scale default and the full-scale variant (14 shapes x 14,000 frames).
GenConfig desk_scale_config();
GenConfig full_scale_config();

nlohmann::json gen_config_to_json(const GenConfig& config);
// SHA-256 of the canonical JSON without seed and threads.
Digest config_digest(const GenConfig& config);

// Builds one Sample from finger 0 of the simulator.
Sample capture_sample(const GripperSim& sim, double time);

// Approach, grasp at a drawn delta_th, then alternating single-step Move and
// Rotate perturbations. Frame 0 is the settled grasp. Throws
// kNoContactTimeout when the fingers never touch.
Episode generate_sweep_episode(const GenConfig& config, const ShapeSpec& shape,
                               std::uint64_t seed);

// Offsets the gripper, probes toward the object, then moves by the capped
// misalignment between the gel center and the contact centroid until it is
// within tolerance or the budget runs out. `offset` overrides the drawn
// world (x, z) offset.
Episode generate_correction_episode(const GenConfig& config, const ShapeSpec& shape,
                                    std::uint64_t seed,
                                    std::optional<Vec2> offset = std::nullopt);

// Gripper and object placement shared by both episode kinds.
struct Scene {
  SceneObject object;
  GripperState start;
};
Scene make_scene(const GenConfig& config, const ShapeSpec& shape);

std::string episode_file_name(const std::string& label, std::uint32_t index);

struct GenReport {
  Manifest manifest;
  std::uint64_t episodes_written = 0;
  std::uint64_t episodes_discarded = 0;
};

// Writes episodes/ and manifest.json under `out_dir`. Output bytes do not
// depend on config.threads. On any failure other than a discarded episode,
// files written by this call are removed before rethrowing.
GenReport generate_dataset(const GenConfig& config, const std::filesystem::path& out_dir);

}  // namespace vtsim
