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


#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "test_support.hpp"
#include "vtsim/contact.hpp"
#include "vtsim/datagen.hpp"
#include "vtsim/eval.hpp"

namespace vtsim {
namespace {

using testing::code_of;
using testing::random_episode;
using testing::small_profile;

Episode flat_episode(const SensorProfile& p, int frames) {
  Rng rng(1);
  Episode e = random_episode(rng, p.image_width, p.image_height, p.marker_count(), frames, 0);
  const PixelGrid grid = PixelGrid::from_profile(p);
  const auto rest = rest_markers(p);
  for (Sample& s : e.samples) {
    std::fill(s.depth.begin(), s.depth.end(), 0.0f);
    for (std::size_t k = 0; k < rest.size(); ++k) {
      const Vec2 px = grid.to_pixel_unchecked(rest[k]);
      s.markers_px[2 * k] = static_cast<float>(px.x());
      s.markers_px[2 * k + 1] = static_cast<float>(px.y());
    }
  }
  return e;
}

// Frame-by-frame recheck written against the stored fields directly.
TrialVerdict rescan(const Episode& e, const SensorProfile& p, const ValidityConfig& cfg) {
  const PixelGrid grid = PixelGrid::from_profile(p);
  const auto rest = rest_markers(p);
  const double sx = p.gel_width / p.image_width;
  const double sy = p.gel_height / p.image_height;
  const auto depth_map = [&](const Sample& s) {
    DepthMap d = DepthMap::zeros(grid);
    for (std::size_t i = 0; i < s.depth.size(); ++i) d.values[i] = s.depth[i];
    return d;
  };
  TrialVerdict v;
  for (std::size_t k = 0; k < e.samples.size(); ++k) {
    const Sample& s = e.samples[k];
    double peak = 0.0;
    for (float d : s.depth) peak = std::max(peak, static_cast<double>(d));
    double slip = 0.0;
    if (k > 0) {
      const Sample& q = e.samples[k - 1];
      double ux = 0.0, uy = 0.0, spin = 0.0;
      for (const ActionRecord& a : e.actions) {
        if (!(a.t_end > q.time + 1e-9 && a.t_end <= s.time + 1e-9)) continue;
        if (a.kind == ActionKind::kMove) {
          ux += a.params[4];
          uy += a.params[5];
        } else if (a.kind == ActionKind::kRotate) {
          ux += a.params[5];
          uy += a.params[6];
          spin += a.params[7];
        }
      }
      const DepthMap d = depth_map(s);
      const Vec2 c = depth_centroid(d).value_or(Vec2::Zero());
      double total = 0.0;
      int n = 0;
      for (std::size_t m = 0; m < rest.size(); ++m) {
        if (!(d.sample(rest[m]) > 0.0)) continue;
        const double dx = (s.markers_px[2 * m] - q.markers_px[2 * m]) * sx;
        const double dy = (s.markers_px[2 * m + 1] - q.markers_px[2 * m + 1]) * sy;
        const double ex = ux - spin * (rest[m].y() - c.y());
        const double ey = uy + spin * (rest[m].x() - c.x());
        total += std::hypot(dx - ex, dy - ey);
        ++n;
      }
      slip = n ? total / n : 0.0;
    }
    v.peak_penetration = std::max(v.peak_penetration, peak);
    v.peak_slip = std::max(v.peak_slip, slip);
    if (peak > cfg.max_penetration_mm) {
      v.reasons.push_back({ReasonKind::kPenetrationExceeded, k, peak});
    }
    if (slip > cfg.max_slip_mm) v.reasons.push_back({ReasonKind::kSlipExceeded, k, slip});
  }
  if (e.samples.size() < cfg.min_frames) {
    v.reasons.push_back({ReasonKind::kTooShort, 0, static_cast<double>(e.samples.size())});
  }
  v.valid = v.reasons.empty();
  return v;
}

TEST(ValidityConfig, DefaultsAndValidation) {
  const SensorProfile p = default_profile("gelsight_mini");
  EXPECT_EQ(ValidityConfig::for_profile(p).max_penetration_mm, p.max_indent);
  ValidityConfig c;
  c.max_slip_mm = 0.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kConfig);
  c = ValidityConfig{};
  c.min_frames = 0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kConfig);
}

TEST(JudgeTrial, UntouchedEpisodeIsValid) {
  const SensorProfile p = small_profile();
  const TrialVerdict v = judge_trial(flat_episode(p, 5), p, ValidityConfig::for_profile(p));
  EXPECT_TRUE(v.valid);
  EXPECT_TRUE(v.reasons.empty());
  EXPECT_EQ(v.peak_penetration, 0.0);
  EXPECT_EQ(v.peak_slip, 0.0);
}

TEST(JudgeTrial, PenetrationJustOverThresholdNamesTheFrame) {
  const SensorProfile p = small_profile();
  ValidityConfig cfg = ValidityConfig::for_profile(p);
  cfg.max_penetration_mm = 1.0;
  Episode e = flat_episode(p, 4);
  e.samples[2].depth[17] = std::nextafter(1.0f, 2.0f);
  const TrialVerdict v = judge_trial(e, p, cfg);
  EXPECT_FALSE(v.valid);
  ASSERT_EQ(v.reasons.size(), 1u);
  EXPECT_EQ(v.reasons[0].kind, ReasonKind::kPenetrationExceeded);
  EXPECT_EQ(v.reasons[0].frame, 2u);
  e.samples[2].depth[17] = 1.0f;
  EXPECT_TRUE(judge_trial(e, p, cfg).valid);
}

TEST(JudgeTrial, ShortEpisodeIsFlagged) {
  const SensorProfile p = small_profile();
  ValidityConfig cfg;
  cfg.min_frames = 3;
  const TrialVerdict v = judge_trial(flat_episode(p, 2), p, cfg);
  ASSERT_EQ(v.reasons.size(), 1u);
  EXPECT_EQ(v.reasons[0].kind, ReasonKind::kTooShort);
  EXPECT_EQ(v.reasons[0].value, 2.0);
  EXPECT_EQ(verdict_to_json(v)["reasons"][0]["kind"], "too_short");
}

TEST(JudgeTrial, MatchesIndependentRescan) {
  const SensorProfile p = small_profile();
  Rng rng(77);
  for (int t = 0; t < 100; ++t) {
    Episode e = random_episode(rng, p.image_width, p.image_height, p.marker_count(),
                               1 + static_cast<int>(rng.next_u64() % 6),
                               static_cast<int>(rng.next_u64() % 8));
    // Stretch action end times across the frame span.
    for (ActionRecord& a : e.actions) {
      a.t_end = a.t_start + rng.uniform(0.0, 2.0);
    }
    std::sort(e.actions.begin(), e.actions.end(),
              [](const ActionRecord& a, const ActionRecord& b) { return a.t_end < b.t_end; });
    ValidityConfig cfg;
    cfg.max_penetration_mm = rng.uniform(0.5, 2.5);
    cfg.max_slip_mm = rng.uniform(0.1, 5.0);
    cfg.min_frames = 1 + rng.next_u64() % 4;
    const TrialVerdict got = judge_trial(e, p, cfg);
    const TrialVerdict want = rescan(e, p, cfg);
    EXPECT_EQ(got.valid, want.valid);
    ASSERT_EQ(got.reasons.size(), want.reasons.size());
    for (std::size_t k = 0; k < got.reasons.size(); ++k) {
      EXPECT_EQ(got.reasons[k].kind, want.reasons[k].kind);
      EXPECT_EQ(got.reasons[k].frame, want.reasons[k].frame);
      EXPECT_NEAR(got.reasons[k].value, want.reasons[k].value, 1e-6);
    }
    EXPECT_NEAR(got.peak_penetration, want.peak_penetration, 1e-12);
    EXPECT_NEAR(got.peak_slip, want.peak_slip, 1e-6);
  }
}

TEST(JudgeTrial, LooseningThresholdsNeverInvalidates) {
  const SensorProfile p = small_profile();
  Rng rng(78);
  for (int t = 0; t < 200; ++t) {
    const Episode e = random_episode(rng, p.image_width, p.image_height, p.marker_count(),
                                     2 + static_cast<int>(rng.next_u64() % 4), 3);
    ValidityConfig tight;
    tight.max_penetration_mm = rng.uniform(0.5, 2.5);
    tight.max_slip_mm = rng.uniform(0.1, 8.0);
    ValidityConfig loose = tight;
    loose.max_penetration_mm += rng.uniform(0.0, 1.0);
    loose.max_slip_mm += rng.uniform(0.0, 4.0);
    const TrialVerdict a = judge_trial(e, p, tight);
    const TrialVerdict b = judge_trial(e, p, loose);
    if (a.valid) EXPECT_TRUE(b.valid);
    EXPECT_LE(b.reasons.size(), a.reasons.size());
  }
}

TEST(JudgeTrial, GeneratedSweepsPassDefaultThresholds) {
  GenConfig c = desk_scale_config();
  c.profile = small_profile();
  c.frames_per_episode = 8;
  for (ShapeKind kind : {ShapeKind::kSphere, ShapeKind::kCylinder, ShapeKind::kCross}) {
    const Episode e = generate_sweep_episode(
        c, {std::string(shape_kind_name(kind)), IndenterShape::standard(kind)}, 3);
    const TrialVerdict v = judge_trial(e, c.profile, ValidityConfig::for_profile(c.profile));
    EXPECT_TRUE(v.valid) << shape_kind_name(kind) << " " << verdict_to_json(v).dump();
    EXPECT_GT(v.peak_penetration, 0.0);
  }
}

TEST(SuccessRate, Fixtures) {
  std::vector<TrialVerdict> v(100);
  std::vector<bool> ok(100, false);
  for (int k = 0; k < 48; ++k) ok[k] = true;
  EXPECT_DOUBLE_EQ(success_rate(v, ok), 48.0);
  std::vector<TrialVerdict> ten(10);
  EXPECT_DOUBLE_EQ(success_rate(ten, std::vector<bool>(10, false)), 0.0);
  v[0].valid = false;
  EXPECT_DOUBLE_EQ(success_rate(v, ok), 47.0);
  EXPECT_EQ(code_of([] { success_rate({}, {}); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(code_of([&] { success_rate(ten, {true}); }), ErrorCode::kShapeMismatch);
}

TEST(SuccessRate, StaysInRange) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.next_u64() % 50;
    std::vector<TrialVerdict> v(n);
    std::vector<bool> ok(n);
    for (std::size_t k = 0; k < n; ++k) {
      v[k].valid = rng.uniform() < 0.7;
      ok[k] = rng.uniform() < 0.5;
    }
    const double r = success_rate(v, ok);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 100.0);
  }
}

}  // namespace
}  // namespace vtsim
