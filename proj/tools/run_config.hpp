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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "vtsim/datagen.hpp"
#include "vtsim/eval.hpp"
#include "vtsim/learn.hpp"

namespace vtsim::cli {

inline constexpr int kSchemaVersion = 1;

// Everything one TOML file can configure. See docs/config.md for the schema.
struct RunConfig {
  GenConfig generate = desk_scale_config();
  LearnerConfig learn;
  std::size_t max_examples = 4096;  // training examples read from a dataset
  std::optional<double> max_penetration_mm;  // unset: the profile's max_indent
  double max_slip_mm = 0.5;
  std::size_t min_frames = 1;

  ValidityConfig validity(const SensorProfile& profile) const;
};

// Throws Error(kConfig) on syntax errors, unknown keys, wrong types, a
// missing or unsupported schema_version, or values that fail validation.
RunConfig parse_run_config(std::string_view toml_text, const std::string& source = "<string>");
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace vtsim::cli
