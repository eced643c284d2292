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

#include "vtsim/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vtsim {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
}

}  // namespace

TactileImage TactileImage::blank(int width, int height) {
  return TactileImage{width, height,
                      std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3, 0)};
}

TactileImage shade(const SensorProfile& profile, const DepthMap& depth) {
  const PixelGrid& g = depth.grid;
  TactileImage img = TactileImage::blank(g.width, g.height);
  for (int j = 0; j < g.height; ++j) {
    const int jm = std::max(j - 1, 0);
    const int jp = std::min(j + 1, g.height - 1);
    for (int i = 0; i < g.width; ++i) {
      const int im = std::max(i - 1, 0);
      const int ip = std::min(i + 1, g.width - 1);
      const double dx = (depth.at(ip, j) - depth.at(im, j)) / (2.0 * g.mm_per_px_x);
      const double dy = (depth.at(i, jp) - depth.at(i, jm)) / (2.0 * g.mm_per_px_y);
      const Vec3 n = Vec3(dx, dy, 1.0).normalized();
      for (int c = 0; c < 3; ++c) {
        double v = profile.ambient[c];
        for (int k = 0; k < 3; ++k) {
          v += profile.light_colors[k][c] * std::max(0.0, n.dot(profile.light_dirs[k]));
        }
        img.at(i, j, c) = to_byte(v);
      }
    }
  }
  return img;
}

TactileImage stamp_markers(const TactileImage& image, const MarkerField& markers,
                           const PixelGrid& grid, double radius_px, double darkness) {
  std::vector<Vec2> centers;
  centers.reserve(markers.displaced.size());
  for (const Vec2& m : markers.displaced) centers.push_back(grid.to_pixel_unchecked(m));
  return stamp_markers_px(image, centers, radius_px, darkness);
}

TactileImage stamp_markers_px(const TactileImage& image, const std::vector<Vec2>& centers_px,
                              double radius_px, double darkness) {
  TactileImage out = image;
  if (centers_px.empty()) return out;
  std::vector<double> weight(static_cast<std::size_t>(image.width) * image.height, 0.0);
  for (const Vec2& c : centers_px) {
    const int i0 = std::max(0, static_cast<int>(std::floor(c.x() - radius_px - 1)));
    const int i1 = std::min(image.width - 1, static_cast<int>(std::ceil(c.x() + radius_px)));
    const int j0 = std::max(0, static_cast<int>(std::floor(c.y() - radius_px - 1)));
    const int j1 = std::min(image.height - 1, static_cast<int>(std::ceil(c.y() + radius_px)));
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const double dist = std::hypot(i + 0.5 - c.x(), j + 0.5 - c.y());
        if (dist >= radius_px) continue;
        const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * dist / radius_px));
        double& slot = weight[static_cast<std::size_t>(j) * image.width + i];
        slot = std::max({slot, w, 1e-300});
      }
    }
  }
  for (int j = 0; j < image.height; ++j) {
    for (int i = 0; i < image.width; ++i) {
      const double w = weight[static_cast<std::size_t>(j) * image.width + i];
      if (w <= 0.0) continue;
      for (int c = 0; c < 3; ++c) {
        const int old = out.at(i, j, c);
        if (old == 0) continue;
        const int dark = static_cast<int>(std::floor(old * (1.0 - darkness * w)));
        out.at(i, j, c) = static_cast<std::uint8_t>(std::max(0, std::min(old - 1, dark)));
      }
    }
  }
  return out;
}

}  // namespace vtsim
