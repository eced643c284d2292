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
#include <filesystem>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "test_support.hpp"
#include "vtsim/datagen.hpp"
#include "vtsim/rng.hpp"

namespace vtsim {
namespace {

using testing::code_of;
using testing::small_profile;
using testing::TempDir;

GenConfig small_config() {
  GenConfig c = desk_scale_config();
  c.profile = small_profile();
  c.frames_per_episode = 6;
  return c;
}

ShapeSpec spec_of(ShapeKind kind) {
  return {std::string(shape_kind_name(kind)), IndenterShape::standard(kind)};
}

std::string episode_bytes_of(const Episode& e) {
  std::ostringstream out;
  write_episode(out, e);
  return out.str();
}

double max_depth(const Sample& s) { return *std::max_element(s.depth.begin(), s.depth.end()); }

TEST(Rng, MatchesTheStandardEngine) {
  // The standard fixes the 10000th output of a default-seeded mt19937_64.
  Rng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ull);
  Rng a(3), b(3);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_EQ(u, b.uniform());
  }
}

TEST(DeriveSeed, FrozenValues) {
  // Computed by an independent splitmix64 implementation.
  EXPECT_EQ(derive_seed(0, 0, 0), 0xa706dd2f4d197e6full);
  EXPECT_EQ(derive_seed(0, 0, 1), 0x5e41ab087439611eull);
  EXPECT_EQ(derive_seed(42, 13, 49), 0x3cc7c0dbb3b85133ull);
  EXPECT_EQ(derive_seed(2026, 3, 7), 0xb74afb35e848dcd2ull);
}

TEST(DeriveSeed, NoCollisionsOnTheShapeEpisodeGrid) {
  for (std::uint64_t g : {0ull, 1ull, 0xdeadbeefull}) {
    std::set<std::uint64_t> seen;
    for (std::uint32_t s = 0; s < 14; ++s) {
      for (std::uint32_t e = 0; e < 50; ++e) seen.insert(derive_seed(g, s, e));
    }
    EXPECT_EQ(seen.size(), 700u);
  }
  EXPECT_EQ(derive_seed(7, 2, 3), derive_seed(7, 2, 3));
}

TEST(GenConfig, ValidationRejectsBadValues) {
  auto broken = [](auto&& edit) {
    GenConfig c = small_config();
    edit(c);
    return code_of([&] { c.validate(); });
  };
  EXPECT_EQ(broken([](GenConfig& c) { c.shapes.clear(); }), ErrorCode::kConfig);
  EXPECT_EQ(broken([](GenConfig& c) { c.episodes_per_shape = 0; }), ErrorCode::kConfig);
  EXPECT_EQ(broken([](GenConfig& c) { c.frames_per_episode = 0; }), ErrorCode::kConfig);
  EXPECT_EQ(broken([](GenConfig& c) { c.delta_th_range = std::pair{2.0, 1.0}; }),
            ErrorCode::kConfig);
  EXPECT_EQ(broken([](GenConfig& c) { c.delta_th_range = std::pair{1.0, 9.0}; }),
            ErrorCode::kConfig);
  EXPECT_EQ(broken([](GenConfig& c) { c.shapes[1].label = c.shapes[0].label; }),
            ErrorCode::kConfig);
  EXPECT_EQ(broken([](GenConfig& c) { c.shapes[0].label = "bad/label"; }), ErrorCode::kConfig);
  EXPECT_EQ(broken([](GenConfig& c) { c.profile.friction_mu = -1.0; }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { gen_mode_from_name("replay"); }), ErrorCode::kConfig);
  EXPECT_NO_THROW(small_config().validate());
}

TEST(GenConfig, DigestIgnoresSeedAndThreads) {
  GenConfig a = small_config();
  GenConfig b = a;
  b.seed = 99;
  b.threads = 4;
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.frames_per_episode += 1;
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(GenConfig, FullScaleMatchesReferenceOrderOfMagnitude) {
  const GenConfig c = full_scale_config();
  EXPECT_EQ(c.shapes.size(), 14u);
  const double per_shape = static_cast<double>(c.episodes_per_shape) * c.frames_per_episode;
  EXPECT_NEAR(per_shape, 14000.0, 0.05 * 14000.0);
  const double total = per_shape * c.shapes.size();
  EXPECT_GT(total, 205826.0 / 2);
  EXPECT_LT(total, 205826.0 * 2);
}

TEST(SweepEpisode, FirstFrameSitsInTheGraspBand) {
  GenConfig c = small_config();
  c.frames_per_episode = 1;
  const double th = c.profile.d_max - 0.4 * c.profile.max_indent;
  c.delta_th_range = std::pair{th, th};
  const double band = c.v_slow * c.dt;
  for (ShapeKind kind : {ShapeKind::kSphere, ShapeKind::kCube, ShapeKind::kStar5}) {
    const Episode e = generate_sweep_episode(c, spec_of(kind), 17);
    ASSERT_GE(e.samples.size(), 1u);
    const double indent = max_depth(e.samples[0]);
    const double target = c.profile.d_max - th;
    EXPECT_GE(indent, target - band - 1e-6) << shape_kind_name(kind);
    EXPECT_LE(indent, target + band + 1e-6) << shape_kind_name(kind);
  }
}

TEST(SweepEpisode, SameSeedIsByteIdentical) {
  const GenConfig c = small_config();
  const Episode a = generate_sweep_episode(c, spec_of(ShapeKind::kTorusSegment), 123);
  const Episode b = generate_sweep_episode(c, spec_of(ShapeKind::kTorusSegment), 123);
  EXPECT_EQ(episode_bytes_of(a), episode_bytes_of(b));
  const Episode d = generate_sweep_episode(c, spec_of(ShapeKind::kTorusSegment), 124);
  EXPECT_NE(episode_bytes_of(a), episode_bytes_of(d));
}

TEST(SweepEpisode, StructureAndSampleInvariants) {
  const GenConfig c = small_config();
  const Episode e = generate_sweep_episode(c, spec_of(ShapeKind::kHexagon), 5);
  ASSERT_EQ(e.samples.size(), static_cast<std::size_t>(c.frames_per_episode));
  EXPECT_EQ(e.seed, 5u);
  EXPECT_NO_THROW(validate_episode(e));
  // Approach move, grasp, then alternating perturbations.
  ASSERT_EQ(e.actions.size(), 2u + c.frames_per_episode - 1);
  EXPECT_EQ(e.actions[0].kind, ActionKind::kMove);
  EXPECT_EQ(e.actions[1].kind, ActionKind::kGrasp);
  for (std::size_t k = 2; k < e.actions.size(); ++k) {
    EXPECT_EQ(e.actions[k].kind, k % 2 == 0 ? ActionKind::kMove : ActionKind::kRotate);
  }
  const PixelGrid grid = PixelGrid::from_profile(c.profile);
  for (std::size_t f = 0; f < e.samples.size(); ++f) {
    const Sample& s = e.samples[f];
    if (f > 0) EXPECT_GT(s.time, e.samples[f - 1].time);
    EXPECT_EQ(s.marker_count(), static_cast<std::size_t>(c.profile.marker_count()));
    for (std::size_t k = 0; k < s.markers_px.size(); k += 2) {
      EXPECT_GE(s.markers_px[k], 0.0f);
      EXPECT_LE(s.markers_px[k], static_cast<float>(grid.width));
      EXPECT_GE(s.markers_px[k + 1], 0.0f);
      EXPECT_LE(s.markers_px[k + 1], static_cast<float>(grid.height));
    }
    // Marked and pure images differ only inside marker disks.
    const double r = c.profile.marker_radius_px;
    for (int j = 0; j < grid.height; ++j) {
      for (int i = 0; i < grid.width; ++i) {
        bool near_marker = false;
        for (std::size_t k = 0; k < s.markers_px.size(); k += 2) {
          near_marker = near_marker || std::hypot(i + 0.5 - s.markers_px[k],
                                                  j + 0.5 - s.markers_px[k + 1]) < r;
        }
        if (near_marker) continue;
        for (int ch = 0; ch < 3; ++ch) ASSERT_EQ(s.i_marked.at(i, j, ch), s.i_pure.at(i, j, ch));
      }
    }
    const double qn = std::hypot(std::hypot(s.pose[3], s.pose[4]), std::hypot(s.pose[5], s.pose[6]));
    EXPECT_NEAR(qn, 1.0, 1e-6);
    EXPECT_GE(s.pose[3], 0.0f);
  }
}

TEST(SweepEpisode, DeepPressOutweighsLightPress) {
  GenConfig light = small_config();
  GenConfig deep = small_config();
  const double d_max = light.profile.d_max;
  const double m = light.profile.max_indent;
  light.delta_th_range = std::pair{d_max - 0.25 * m, d_max - 0.2 * m};
  deep.delta_th_range = std::pair{d_max - 0.8 * m, d_max - 0.75 * m};
  for (ShapeKind kind : {ShapeKind::kSphere, ShapeKind::kCone, ShapeKind::kRing}) {
    const auto mean_depth = [&](const GenConfig& c) {
      const Episode e = generate_sweep_episode(c, spec_of(kind), 31);
      double sum = 0.0;
      for (const Sample& s : e.samples) sum += max_depth(s);
      return sum / e.samples.size();
    };
    EXPECT_GE(mean_depth(deep), mean_depth(light)) << shape_kind_name(kind);
  }
}

TEST(CorrectionEpisode, ZeroOffsetNeedsNoCorrection) {
  GenConfig c = small_config();
  c.mode = GenMode::kCorrect;
  const Episode e = generate_correction_episode(c, spec_of(ShapeKind::kSphere), 9, Vec2::Zero());
  EXPECT_EQ(e.samples.size(), 1u);
  ASSERT_EQ(e.actions.size(), 1u);
  EXPECT_EQ(e.actions[0].kind, ActionKind::kProbe);
  EXPECT_FALSE(e.budget_exhausted);
  ASSERT_EQ(e.remaining_offsets.size(), 1u);
  EXPECT_LT(e.remaining_offsets[0].norm(), c.correction_tol);
}

TEST(CorrectionEpisode, CappedStepsShrinkTheOffsetMonotonically) {
  GenConfig c = small_config();
  c.mode = GenMode::kCorrect;
  c.correction_cap = 1.0;
  const Episode e =
      generate_correction_episode(c, spec_of(ShapeKind::kSphere), 9, Vec2(3.0, 0.0));
  std::size_t corrective = 0;
  for (const ActionRecord& a : e.actions) {
    if (a.kind != ActionKind::kMove) continue;
    ++corrective;
    EXPECT_LE(std::hypot(a.params[0], a.params[2]), c.correction_cap + 1e-12);
  }
  EXPECT_GE(corrective, 3u);
  ASSERT_EQ(e.remaining_offsets.size(), e.samples.size());
  EXPECT_GT(e.remaining_offsets.front().norm(), 2.5);
  for (std::size_t k = 1; k < e.remaining_offsets.size(); ++k) {
    EXPECT_LE(e.remaining_offsets[k].norm(), e.remaining_offsets[k - 1].norm() + 1e-9);
  }
  EXPECT_FALSE(e.budget_exhausted);
  EXPECT_LT(e.remaining_offsets.back().norm(), c.correction_tol);

  const Episode again =
      generate_correction_episode(c, spec_of(ShapeKind::kSphere), 9, Vec2(3.0, 0.0));
  EXPECT_EQ(episode_bytes_of(e), episode_bytes_of(again));
  EXPECT_EQ(e.remaining_offsets, again.remaining_offsets);
}

TEST(CorrectionEpisode, ExhaustedBudgetIsFlagged) {
  GenConfig c = small_config();
  c.mode = GenMode::kCorrect;
  c.correction_budget = 1;
  const Episode e =
      generate_correction_episode(c, spec_of(ShapeKind::kSphere), 9, Vec2(3.0, 0.0));
  EXPECT_TRUE(e.budget_exhausted);
  EXPECT_EQ(e.samples.size(), 2u);
}

TEST(GenerateDataset, OneShotCountsAndLayout) {
  TempDir dir("gen");
  GenConfig c = small_config();
  c.shapes = {spec_of(ShapeKind::kCube)};
  c.episodes_per_shape = 1;
  c.frames_per_episode = 4;
  const GenReport r = generate_dataset(c, dir.path());
  EXPECT_EQ(r.manifest.total_samples, 4u);
  EXPECT_EQ(r.episodes_written, 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "episodes/ep_cube_0000.uvtc"));
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_TRUE(verify_dataset(dir.path()).clean());
  EXPECT_EQ(read_manifest(dir.path()).episode_index[0].seed, derive_seed(c.seed, 0, 0));
}

TEST(GenerateDataset, ThreadCountDoesNotChangeOutput) {
  TempDir a("seq");
  TempDir b("par");
  GenConfig c = small_config();
  c.shapes = {spec_of(ShapeKind::kSphere), spec_of(ShapeKind::kCone), spec_of(ShapeKind::kCross),
              spec_of(ShapeKind::kEllipsoid)};
  c.episodes_per_shape = 2;
  c.frames_per_episode = 3;
  c.threads = 1;
  generate_dataset(c, a.path());
  c.threads = 3;
  generate_dataset(c, b.path());
  EXPECT_EQ(sha256_file(manifest_path(a.path())), sha256_file(manifest_path(b.path())));
  for (const auto& ep : read_manifest(a.path()).episode_index) {
    EXPECT_EQ(sha256_file(a.path() / ep.file), sha256_file(b.path() / ep.file));
  }
}

TEST(GenerateDataset, TimeoutsAreDiscardedAndLogged) {
  TempDir dir("disc");
  GenConfig c = small_config();
  c.shapes = {spec_of(ShapeKind::kSphere)};
  c.episodes_per_shape = 2;
  c.gripper.max_steps = 1;
  const GenReport r = generate_dataset(c, dir.path());
  EXPECT_EQ(r.episodes_written, 0u);
  EXPECT_EQ(r.episodes_discarded, 2u);
  const Manifest m = read_manifest(dir.path());
  ASSERT_EQ(m.discarded.size(), 2u);
  EXPECT_NE(m.discarded[0].reason.find("no_contact_timeout"), std::string::npos);
  EXPECT_EQ(m.total_samples, 0u);
  EXPECT_TRUE(std::filesystem::is_empty(dir / "episodes"));
}

TEST(GenerateDataset, FailureRemovesPartialOutput) {
  TempDir dir("fail");
  GenConfig c = small_config();
  c.shapes = {spec_of(ShapeKind::kCube)};
  c.episodes_per_shape = 3;
  c.frames_per_episode = 2;
  // A directory squatting on the second episode's file name makes its write fail.
  std::filesystem::create_directories(dir / "episodes/ep_cube_0001.uvtc/blocker");
  EXPECT_EQ(code_of([&] { generate_dataset(c, dir.path()); }), ErrorCode::kIo);
  EXPECT_FALSE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "episodes/ep_cube_0000.uvtc"));
  EXPECT_FALSE(std::filesystem::exists(dir / "episodes/ep_cube_0002.uvtc"));
}

}  // namespace
}  // namespace vtsim
