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
#include <string>
#include <string_view>
#include <vector>

#include "vtsim/geometry.hpp"

namespace vtsim {

using Rgb = std::array<double, 3>;

// Optical and mechanical description of one visuo-tactile sensor.
//
// Gel frame: origin at the center of the undeformed gel surface, +z along the
// outward normal (toward the object), x and y spanning the gel rectangle.
// Depth reading convention: reading = d_max - indentation, so an untouched gel
// reads d_max everywhere.
struct SensorProfile {
  std::string name;
  int image_width = 0;
  int image_height = 0;
  double gel_width = 0.0;   // mm, along gel x / image u
  double gel_height = 0.0;  // mm, along gel y / image v
  double gel_thickness = 0.0;
  double max_indent = 0.0;
  double elastic_sigma = 0.0;  // mm, Gaussian spread of gel elasticity
  int marker_rows = 0;
  int marker_cols = 0;
  double marker_radius_px = 0.0;
  double marker_darkness = 0.0;  // fraction of brightness removed at a marker center
  double friction_mu = 0.0;
  std::array<Vec3, 3> light_dirs{};   // unit vectors toward each light
  std::array<Rgb, 3> light_colors{};  // in [0, 1]
  Rgb ambient{};
  double d_max = 0.0;  // zero-contact depth reading, mm

  // Throws kInvalidArgument naming the first violated invariant.
  void validate() const;
  int marker_count() const { return marker_rows * marker_cols; }

  bool operator==(const SensorProfile&) const = default;
};

// Names of the built-in profiles, in a fixed order.
const std::array<std::string_view, 3>& builtin_sensor_names();
// Throws kUnknownSensor for names outside builtin_sensor_names().
SensorProfile default_profile(std::string_view name);

// Three lights at 120 degree azimuth spacing, colored R/G/B.
std::array<Vec3, 3> ring_light_dirs(double azimuth0_rad, double elevation_rad);

// Orthographic camera: affine map between the gel rectangle and the image.
struct PixelGrid {
  int width = 0;
  int height = 0;
  double mm_per_px_x = 0.0;
  double mm_per_px_y = 0.0;

  static PixelGrid from_profile(const SensorProfile& profile);

  double gel_width() const { return width * mm_per_px_x; }
  double gel_height() const { return height * mm_per_px_y; }
  double pixel_area_mm2() const { return mm_per_px_x * mm_per_px_y; }
  std::size_t size() const { return static_cast<std::size_t>(width) * height; }

  // Gel coordinates of the center of pixel (i, j), i along width.
  Vec2 pixel_center(int i, int j) const {
    return {(i + 0.5 - 0.5 * width) * mm_per_px_x, (j + 0.5 - 0.5 * height) * mm_per_px_y};
  }
  // Continuous pixel coordinates (gel corner -> (0, 0)) without bounds checks.
  Vec2 to_pixel_unchecked(const Vec2& gel) const {
    return {gel.x() / mm_per_px_x + 0.5 * width, gel.y() / mm_per_px_y + 0.5 * height};
  }
  Vec2 to_gel_unchecked(const Vec2& px) const {
    return {(px.x() - 0.5 * width) * mm_per_px_x, (px.y() - 0.5 * height) * mm_per_px_y};
  }
};

// Throws kOutOfGel when the point lies outside the gel rectangle by > 1e-9 mm.
Vec2 gel_to_pixel(const PixelGrid& grid, const Vec2& point);
// Throws kOutOfGel when the pixel lies outside the image rectangle.
Vec2 pixel_to_gel(const PixelGrid& grid, const Vec2& pixel);

// Marker rest positions: uniform grid, centered, row-major, pitch equal to the
// margin so the outermost markers sit one pitch inside the gel border.
std::vector<Vec2> rest_markers(const SensorProfile& profile);

}  // namespace vtsim
