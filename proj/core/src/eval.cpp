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

#include "vtsim/eval.hpp"

#include <algorithm>
#include <cmath>

#include "vtsim/contact.hpp"
#include "vtsim/control.hpp"
#include "vtsim/error.hpp"

namespace vtsim {

ValidityConfig ValidityConfig::for_profile(const SensorProfile& profile) {
  ValidityConfig c;
  c.max_penetration_mm = profile.max_indent;
  return c;
}

void ValidityConfig::validate() const {
  if (!(max_penetration_mm > 0.0) || !std::isfinite(max_penetration_mm)) {
    throw Error(ErrorCode::kConfig, "validity: max_penetration_mm must be positive");
  }
  if (!(max_slip_mm > 0.0) || !std::isfinite(max_slip_mm)) {
    throw Error(ErrorCode::kConfig, "validity: max_slip_mm must be positive");
  }
  if (min_frames < 1) throw Error(ErrorCode::kConfig, "validity: min_frames must be >= 1");
}

std::string_view reason_kind_name(ReasonKind kind) {
  switch (kind) {
    case ReasonKind::kPenetrationExceeded:
      return "penetration_exceeded";
    case ReasonKind::kSlipExceeded:
      return "slip_exceeded";
    case ReasonKind::kTooShort:
      return "too_short";
  }
  return "unknown";
}

namespace {

DepthMap depth_of(const Sample& s, const PixelGrid& grid) {
  DepthMap d = DepthMap::zeros(grid);
  if (s.depth.size() != d.values.size()) {
    throw Error(ErrorCode::kDimMismatch, "frame " + std::to_string(s.frame_id) +
                                             ": depth size does not match the profile");
  }
  std::copy(s.depth.begin(), s.depth.end(), d.values.begin());
  return d;
}

MarkerField field_of(const Sample& s, const PixelGrid& grid, const std::vector<Vec2>& rest,
                     const DepthMap& depth) {
  if (s.marker_count() != rest.size()) {
    throw Error(ErrorCode::kMarkerCountMismatch,
                "frame has " + std::to_string(s.marker_count()) + " markers, profile has " +
                    std::to_string(rest.size()));
  }
  MarkerField f = MarkerField::at_rest(rest);
  for (std::size_t i = 0; i < rest.size(); ++i) {
    f.displaced[i] = Vec2((s.markers_px[2 * i] - 0.5 * grid.width) * grid.mm_per_px_x,
                          (s.markers_px[2 * i + 1] - 0.5 * grid.height) * grid.mm_per_px_y);
    f.contact[i] = depth.sample(rest[i]) > 0.0 ? 1 : 0;
  }
  return f;
}

struct Command {
  Vec2 shift = Vec2::Zero();
  double spin = 0.0;
};

Command commanded_between(const std::vector<ActionRecord>& actions, double t0, double t1) {
  constexpr double kTimeEps = 1e-9;
  Command c;
  for (const ActionRecord& a : actions) {
    if (!(a.t_end > t0 + kTimeEps && a.t_end <= t1 + kTimeEps)) continue;
    if (a.kind == ActionKind::kMove) {
      c.shift += Vec2(a.params[4], a.params[5]);
    } else if (a.kind == ActionKind::kRotate) {
      c.shift += Vec2(a.params[5], a.params[6]);
      c.spin += a.params[7];
    }
  }
  return c;
}

}  // namespace

std::vector<double> frame_slips(const Episode& e, const SensorProfile& profile) {
  const PixelGrid grid = PixelGrid::from_profile(profile);
  const std::vector<Vec2> rest = rest_markers(profile);
  std::vector<double> out(e.samples.size(), 0.0);
  if (e.samples.empty()) return out;
  MarkerField prev = field_of(e.samples[0], grid, rest, depth_of(e.samples[0], grid));
  for (std::size_t k = 1; k < e.samples.size(); ++k) {
    const DepthMap depth = depth_of(e.samples[k], grid);
    MarkerField cur = field_of(e.samples[k], grid, rest, depth);
    const Command cmd = commanded_between(e.actions, e.samples[k - 1].time, e.samples[k].time);
    const Vec2 centroid = depth_centroid(depth).value_or(Vec2::Zero());
    out[k] = slip_metric(prev, cur, cmd.shift, cmd.spin, centroid);
    prev = std::move(cur);
  }
  return out;
}

TrialVerdict judge_trial(const Episode& e, const SensorProfile& profile,
                         const ValidityConfig& config) {
  config.validate();
  TrialVerdict v;
  const std::vector<double> slips = frame_slips(e, profile);
  for (std::size_t k = 0; k < e.samples.size(); ++k) {
    const auto& d = e.samples[k].depth;
    const double peak = d.empty() ? 0.0 : static_cast<double>(*std::max_element(d.begin(), d.end()));
    v.peak_penetration = std::max(v.peak_penetration, peak);
    v.peak_slip = std::max(v.peak_slip, slips[k]);
    if (peak > config.max_penetration_mm) {
      v.reasons.push_back(Reason{ReasonKind::kPenetrationExceeded, k, peak});
    }
    if (slips[k] > config.max_slip_mm) {
      v.reasons.push_back(Reason{ReasonKind::kSlipExceeded, k, slips[k]});
    }
  }
  if (e.samples.size() < config.min_frames) {
    v.reasons.push_back(
        Reason{ReasonKind::kTooShort, 0, static_cast<double>(e.samples.size())});
  }
  v.valid = v.reasons.empty();
  return v;
}

double success_rate(const std::vector<TrialVerdict>& verdicts, const std::vector<bool>& success) {
  if (verdicts.empty()) throw Error(ErrorCode::kEmptyInput, "success_rate: no trials");
  if (verdicts.size() != success.size()) {
    throw Error(ErrorCode::kShapeMismatch, "success_rate: verdict and flag counts differ");
  }
  std::size_t wins = 0;
  for (std::size_t k = 0; k < verdicts.size(); ++k) {
    if (success[k] && verdicts[k].valid) ++wins;
  }
  return 100.0 * static_cast<double>(wins) / static_cast<double>(verdicts.size());
}

nlohmann::json verdict_to_json(const TrialVerdict& v) {
  nlohmann::json reasons = nlohmann::json::array();
  for (const Reason& r : v.reasons) {
    nlohmann::json j{{"kind", reason_kind_name(r.kind)}, {"value", r.value}};
    if (r.kind != ReasonKind::kTooShort) j["frame"] = r.frame;
    reasons.push_back(std::move(j));
  }
  return nlohmann::json{{"valid", v.valid},
                        {"reasons", reasons},
                        {"peak_penetration_mm", v.peak_penetration},
                        {"peak_slip_mm", v.peak_slip}};
}

}  // namespace vtsim
