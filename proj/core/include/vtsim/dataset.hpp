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
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtsim/control.hpp"
#include "vtsim/hash.hpp"
#include "vtsim/render.hpp"
#include "vtsim/sensor.hpp"

namespace vtsim {

inline constexpr std::uint32_t kFormatVersion = 1;

// One annotated frame as stored on disk; float fields are the exact values
// that get serialized.
struct Sample {
  TactileImage i_marked;
  TactileImage i_pure;
  std::vector<float> depth;       // h * w, mm of indentation
  std::vector<float> markers_px;  // 2N, (x, y) per marker, pixels
  std::array<float, 7> pose{};    // object in the gel frame: tx ty tz qw qx qy qz
  std::uint32_t shape_id = 0;
  std::uint32_t episode_id = 0;
  std::uint32_t frame_id = 0;
  double time = 0.0;

  std::size_t marker_count() const { return markers_px.size() / 2; }
  // Compares the serialized fields only; the identifiers are not stored.
  bool operator==(const Sample& other) const;
};

struct Episode {
  std::vector<Sample> samples;
  std::vector<ActionRecord> actions;
  std::uint64_t seed = 0;
  Digest config_digest{};
  // Correction episodes only: gel center minus contact centroid, per frame,
  // world x/z mm.
  std::vector<Vec2> remaining_offsets;
  bool budget_exhausted = false;
};

struct FrameDims {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t n_markers = 0;

  static FrameDims of(const SensorProfile& profile);
  bool operator==(const FrameDims&) const = default;
};

// Byte sizes of the layout.
std::uint64_t frame_bytes(const FrameDims& dims);
std::uint64_t action_bytes(const ActionRecord& action);
std::uint64_t episode_bytes(const FrameDims& dims, std::size_t frames,
                            const std::vector<ActionRecord>& actions);

// Throws kInvariantViolation naming the first broken rule.
void validate_episode(const Episode& episode);

struct WriteResult {
  std::uint64_t bytes = 0;
  std::string sha256;
};

// Little-endian layout, per frame:
//   "UVTC" u32 version u32 width u32 height u32 n_markers u32 flags
//   i_marked u8[h*w*3]  i_pure u8[h*w*3]  depth f32[h*w]  markers f32[2N]
//   pose f32[7]  timestamp f64
// followed by the action log:
//   "UVAL" u32 count, then per action: u8 kind, u32 n, f64[n] with
//   n = 2 + action_param_count(kind) and values [t_start, t_end, params...].
// Validation failures abort before any byte is written.
WriteResult write_episode(const std::filesystem::path& path, const Episode& episode);
void write_episode(std::ostream& out, const Episode& episode);

// Streaming reader holding at most one frame in memory.
class EpisodeReader {
 public:
  explicit EpisodeReader(std::istream& in, std::optional<FrameDims> expected = std::nullopt);

  // Reads the next frame into `sample`; false once the action log is reached.
  bool next(Sample& sample);
  // Valid after next() returned false. Verifies that no bytes follow.
  const std::vector<ActionRecord>& actions() const { return actions_; }
  std::size_t frames_read() const { return frames_; }

 private:
  void read_actions();

  std::istream& in_;
  std::optional<FrameDims> dims_;
  std::size_t frames_ = 0;
  bool done_ = false;
  std::vector<ActionRecord> actions_;
};

// Errors: kBadMagic, kUnsupportedVersion, kTruncatedFile, kDimMismatch,
// kCorruptRecord, kTrailingData, kIo.
Episode read_episode(const std::filesystem::path& path,
                     std::optional<FrameDims> expected = std::nullopt);
Episode read_episode(std::istream& in, std::optional<FrameDims> expected = std::nullopt);

// ----- manifest -----

struct ShapeEntry {
  std::string label;
  std::string kind;
  std::vector<double> params;
  std::optional<BaseDims> base;
};

struct EpisodeEntry {
  std::string file;  // relative to the dataset root
  std::string shape;
  std::uint32_t shape_index = 0;
  std::uint32_t episode_index = 0;
  std::uint64_t samples = 0;
  std::uint64_t bytes = 0;
  std::string sha256;
  std::uint64_t seed = 0;
  std::string mode;
  bool budget_exhausted = false;
  std::vector<Vec2> remaining_offsets;
};

struct DiscardedEntry {
  std::string shape;
  std::uint32_t shape_index = 0;
  std::uint32_t episode_index = 0;
  std::uint64_t seed = 0;
  std::string reason;
};

struct Manifest {
  std::uint32_t format_version = kFormatVersion;
  std::string created_utc;
  std::uint64_t global_seed = 0;
  std::string prng_id;
  SensorProfile sensor_profile;
  std::vector<ShapeEntry> shape_list;
  std::vector<EpisodeEntry> episode_index;
  std::uint64_t total_samples = 0;
  std::string config_digest;
  std::vector<DiscardedEntry> discarded;
  nlohmann::json generator;  // echo of the generation settings
};

nlohmann::json profile_to_json(const SensorProfile& profile);
// Throws kConfig on missing or mistyped fields.
SensorProfile profile_from_json(const nlohmann::json& j);

nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j);
// Sorted keys, two-space indent, trailing newline.
std::string manifest_text(const Manifest& manifest);

std::filesystem::path manifest_path(const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const Manifest& manifest);
// Throws kMissingManifest when absent and kCorruptRecord when unparsable.
Manifest read_manifest(const std::filesystem::path& dir);

struct Discrepancy {
  enum class Kind { kMissingFile, kLength, kHash, kCount };
  Kind kind;
  std::string file;
  std::string detail;
};

std::string_view discrepancy_name(Discrepancy::Kind kind);

struct VerifyReport {
  std::vector<Discrepancy> discrepancies;
  std::uint64_t episodes_checked = 0;
  std::uint64_t samples_counted = 0;
  bool clean() const { return discrepancies.empty(); }
};

// Recomputes every length, hash, and sample count against the manifest.
VerifyReport verify_dataset(const std::filesystem::path& dir);

}  // namespace vtsim
