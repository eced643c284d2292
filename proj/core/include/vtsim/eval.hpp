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
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtsim/dataset.hpp"
#include "vtsim/sensor.hpp"

namespace vtsim {

struct ValidityConfig {
  double max_penetration_mm = 2.0;
  double max_slip_mm = 0.5;
  std::size_t min_frames = 1;

  // max_penetration_mm = profile.max_indent.
  static ValidityConfig for_profile(const SensorProfile& profile);
  // Throws kConfig unless every threshold is strictly positive.
  void validate() const;
};

enum class ReasonKind { kPenetrationExceeded, kSlipExceeded, kTooShort };

std::string_view reason_kind_name(ReasonKind kind);

struct Reason {
  ReasonKind kind = ReasonKind::kTooShort;
  std::size_t frame = 0;  // unused for kTooShort
  double value = 0.0;     // mm; frame count for kTooShort

  bool operator==(const Reason&) const = default;
};

struct TrialVerdict {
  bool valid = true;
  std::vector<Reason> reasons;  // ascending frame, penetration before slip
  double peak_penetration = 0.0;
  double peak_slip = 0.0;
};

// Slip between consecutive frames, measured against the commanded in-plane
// motion of the actions that end in between. Entry 0 is always 0.
std::vector<double> frame_slips(const Episode& episode, const SensorProfile& profile);

TrialVerdict judge_trial(const Episode& episode, const SensorProfile& profile,
                         const ValidityConfig& config);

// 100 * #(success and valid) / total. Throws kEmptyInput, kShapeMismatch.
double success_rate(const std::vector<TrialVerdict>& verdicts, const std::vector<bool>& success);

nlohmann::json verdict_to_json(const TrialVerdict& verdict);

}  // namespace vtsim
