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
#include <vector>

#include "vtsim/contact.hpp"
#include "vtsim/sensor.hpp"

namespace vtsim {

// 8-bit RGB, row-major, interleaved.
struct TactileImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  static TactileImage blank(int width, int height);
  std::uint8_t& at(int i, int j, int c) {
    return pixels[(static_cast<std::size_t>(j) * width + i) * 3 + c];
  }
  std::uint8_t at(int i, int j, int c) const {
    return pixels[(static_cast<std::size_t>(j) * width + i) * 3 + c];
  }
  bool operator==(const TactileImage&) const = default;
};

// Lambertian shading of the indented gel under the profile's light rig.
TactileImage shade(const SensorProfile& profile, const DepthMap& depth);

// Darkens a raised-cosine disk of `radius_px` around every displaced marker.
// Touched pixels lose at least one level per nonzero channel; the rest are
// left untouched.
TactileImage stamp_markers(const TactileImage& image, const MarkerField& markers,
                           const PixelGrid& grid, double radius_px, double darkness);
// Same, with marker centers already in continuous pixel coordinates.
TactileImage stamp_markers_px(const TactileImage& image, const std::vector<Vec2>& centers_px,
                              double radius_px, double darkness);

}  // namespace vtsim
