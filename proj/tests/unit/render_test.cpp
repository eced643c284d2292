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


#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "vtsim/contact.hpp"
#include "vtsim/render.hpp"
#include "vtsim/rng.hpp"

namespace vtsim {
namespace {

class RenderTest : public ::testing::Test {
 protected:
  SensorProfile profile = default_profile("gelsight_mini");
  PixelGrid grid = PixelGrid::from_profile(profile);

  DepthMap pressed(const SceneObject& obj) const {
    return elastic_smooth(profile, raw_penetration(profile, obj, Pose::identity()));
  }
};

TEST_F(RenderTest, FlatGelShadesUniformly) {
  const TactileImage img = shade(profile, DepthMap::zeros(grid));
  ASSERT_EQ(img.width, profile.image_width);
  ASSERT_EQ(img.height, profile.image_height);
  for (int j = 0; j < img.height; ++j) {
    for (int i = 0; i < img.width; ++i) {
      for (int c = 0; c < 3; ++c) ASSERT_EQ(img.at(i, j, c), img.at(0, 0, c));
    }
  }
}

TEST_F(RenderTest, ShadeIsDeterministic) {
  const DepthMap d = pressed({IndenterShape::standard(ShapeKind::kStar5),
                              Pose::from_translation(Vec3(1, 0, 1.5))});
  EXPECT_EQ(shade(profile, d), shade(profile, d));
}

TEST_F(RenderTest, MirroredHemisphereUnderMirroredRig) {
  // Lights at 90, 210 and 330 degrees: mirroring x swaps the last two.
  ASSERT_NEAR(profile.light_dirs[0].x(), 0.0, 1e-12);
  ASSERT_NEAR(profile.light_dirs[1].x(), -profile.light_dirs[2].x(), 1e-12);
  ASSERT_NEAR(profile.light_dirs[1].y(), profile.light_dirs[2].y(), 1e-12);
  ASSERT_EQ(profile.ambient[1], profile.ambient[2]);
  const SceneObject dome{IndenterShape(ShapeKind::kHemisphere, {4.5}, std::nullopt),
                         Pose::from_axis_angle(Vec3::UnitX(), std::numbers::pi, Vec3(0, 0, 3.5))};
  const TactileImage img = shade(profile, pressed(dome));
  int differing = 0;
  for (int j = 0; j < img.height; ++j) {
    for (int i = 0; i < img.width; ++i) {
      const int m = img.width - 1 - i;
      EXPECT_LE(std::abs(img.at(i, j, 0) - img.at(m, j, 0)), 1);
      EXPECT_LE(std::abs(img.at(i, j, 1) - img.at(m, j, 2)), 1);
      differing += img.at(i, j, 1) != img.at(i, j, 2);
    }
  }
  EXPECT_GT(differing, 0);
}

TEST_F(RenderTest, ShadeIsTranslationEquivariant) {
  const DepthMap d = pressed({IndenterShape::standard(ShapeKind::kSphere),
                              Pose::from_translation(Vec3(0, 0, 4.0))});
  const int sx = 7;
  const int sy = -4;
  DepthMap shifted = DepthMap::zeros(grid);
  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      const int si = i - sx;
      const int sj = j - sy;
      if (si >= 0 && si < grid.width && sj >= 0 && sj < grid.height) shifted.at(i, j) = d.at(si, sj);
    }
  }
  const TactileImage a = shade(profile, d);
  const TactileImage b = shade(profile, shifted);
  for (int j = 20; j < grid.height - 20; ++j) {
    for (int i = 20; i < grid.width - 20; ++i) {
      for (int c = 0; c < 3; ++c) ASSERT_EQ(b.at(i, j, c), a.at(i - sx, j - sy, c));
    }
  }
}

TEST_F(RenderTest, NoMarkersLeavesImageUnchanged) {
  const TactileImage base = shade(profile, DepthMap::zeros(grid));
  EXPECT_EQ(stamp_markers_px(base, {}, 4.0, 0.7), base);
  MarkerField none;
  EXPECT_EQ(stamp_markers(base, none, grid, 4.0, 0.7), base);
}

TEST_F(RenderTest, CenterMarkerDarkensImageCenter) {
  const TactileImage base = shade(profile, DepthMap::zeros(grid));
  MarkerField one = MarkerField::at_rest({Vec2::Zero()});
  const TactileImage out = stamp_markers(base, one, grid, 4.0, 0.7);
  const int ci = grid.width / 2;
  const int cj = grid.height / 2;
  // The four pixels around the image center are the darkest and equal.
  int darkest = 255;
  for (int j = 0; j < out.height; ++j) {
    for (int i = 0; i < out.width; ++i) darkest = std::min<int>(darkest, out.at(i, j, 0));
  }
  EXPECT_EQ(out.at(ci, cj, 0), darkest);
  EXPECT_EQ(out.at(ci - 1, cj - 1, 0), darkest);
  EXPECT_LT(darkest, base.at(0, 0, 0));
  EXPECT_EQ(out.at(ci + 5, cj, 0), base.at(ci + 5, cj, 0));
}

TEST_F(RenderTest, StampDiffIsExactlyTheDiskUnion) {
  Rng rng(33);
  const TactileImage base = shade(profile, pressed({IndenterShape::standard(ShapeKind::kCone),
                                                    Pose::from_translation(Vec3(2, 1, 4.5))}));
  for (int t = 0; t < 10; ++t) {
    std::vector<Vec2> centers;
    const int n = 1 + static_cast<int>(rng.next_u64() % 30);
    for (int k = 0; k < n; ++k) {
      centers.emplace_back(rng.uniform(-5, grid.width + 5), rng.uniform(-5, grid.height + 5));
    }
    const double radius = rng.uniform(1.0, 6.0);
    const TactileImage out = stamp_markers_px(base, centers, radius, 0.6);
    for (int j = 0; j < base.height; ++j) {
      for (int i = 0; i < base.width; ++i) {
        bool in_disk = false;
        for (const Vec2& c : centers) {
          const double dx = i + 0.5 - c.x();
          const double dy = j + 0.5 - c.y();
          in_disk = in_disk || dx * dx + dy * dy < radius * radius;
        }
        bool changed = false;
        for (int ch = 0; ch < 3; ++ch) {
          ASSERT_LE(out.at(i, j, ch), base.at(i, j, ch));
          if (base.at(i, j, ch) > 0) changed = changed || out.at(i, j, ch) != base.at(i, j, ch);
        }
        ASSERT_EQ(changed, in_disk) << i << "," << j;
      }
    }
  }
}

}  // namespace
}  // namespace vtsim
