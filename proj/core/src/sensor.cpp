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

#include "vtsim/sensor.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "vtsim/error.hpp"

namespace vtsim {

namespace {

[[noreturn]] void invalid(const SensorProfile& p, const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "sensor profile '" + p.name + "': " + what);
}

constexpr double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

void SensorProfile::validate() const {
  if (image_width <= 0 || image_height <= 0) invalid(*this, "image size must be positive");
  if (!(gel_width > 0.0 && gel_height > 0.0)) invalid(*this, "gel size must be positive");
  if (!(gel_thickness > 0.0)) invalid(*this, "gel thickness must be positive");
  if (!(max_indent > 0.0)) invalid(*this, "max_indent must be positive");
  if (!(max_indent < gel_thickness)) invalid(*this, "max_indent must be below gel thickness");
  if (!(elastic_sigma > 0.0)) invalid(*this, "elastic_sigma must be positive");
  if (marker_rows < 1 || marker_cols < 1) invalid(*this, "marker grid must be at least 1x1");
  if (!(marker_radius_px > 0.0)) invalid(*this, "marker radius must be positive");
  if (!(marker_darkness > 0.0 && marker_darkness <= 1.0)) {
    invalid(*this, "marker darkness must lie in (0, 1]");
  }
  if (!(friction_mu > 0.0)) invalid(*this, "friction_mu must be positive");
  if (!(d_max > 0.0)) invalid(*this, "d_max must be positive");
  if (!(d_max >= max_indent)) invalid(*this, "d_max must be at least max_indent");
  for (const auto& l : light_dirs) {
    if (std::abs(l.norm() - 1.0) > 1e-9) invalid(*this, "light directions must be unit vectors");
  }
  for (const auto& c : light_colors) {
    for (double v : c) {
      if (!(v >= 0.0 && v <= 1.0)) invalid(*this, "light colors must lie in [0, 1]");
    }
  }
  for (double v : ambient) {
    if (!(v >= 1.0 / 255.0 && v <= 1.0)) invalid(*this, "ambient must lie in [1/255, 1]");
  }
  // Marker pitch equals the border margin (see rest_markers), so the grid
  // always fits with a positive margin; the marker disks must fit too.
  const double pitch_x = gel_width / (marker_cols + 1);
  const double pitch_y = gel_height / (marker_rows + 1);
  const double radius_mm_x = marker_radius_px * gel_width / image_width;
  const double radius_mm_y = marker_radius_px * gel_height / image_height;
  if (!(radius_mm_x < pitch_x && radius_mm_y < pitch_y)) {
    invalid(*this, "marker disks do not fit inside the gel margin");
  }
}

std::array<Vec3, 3> ring_light_dirs(double azimuth0_rad, double elevation_rad) {
  std::array<Vec3, 3> dirs;
  for (int k = 0; k < 3; ++k) {
    const double az = azimuth0_rad + k * 2.0 * std::numbers::pi / 3.0;
    dirs[k] = Vec3(std::cos(elevation_rad) * std::cos(az), std::cos(elevation_rad) * std::sin(az),
                   std::sin(elevation_rad))
                  .normalized();
  }
  return dirs;
}

const std::array<std::string_view, 3>& builtin_sensor_names() {
  static const std::array<std::string_view, 3> names = {"gelsight_mini", "gf225", "xense_ws"};
  return names;
}

SensorProfile default_profile(std::string_view name) {
  SensorProfile p;
  p.light_colors = {Rgb{1.0, 0.0, 0.0}, Rgb{0.0, 1.0, 0.0}, Rgb{0.0, 0.0, 1.0}};
  if (name == "gelsight_mini") {
    p.name = "gelsight_mini";
    p.image_width = 320;
    p.image_height = 240;
    p.gel_width = 20.0;
    p.gel_height = 15.0;
    p.gel_thickness = 3.0;
    p.max_indent = 2.0;
    p.elastic_sigma = 0.25;
    p.marker_rows = 7;
    p.marker_cols = 9;
    p.marker_radius_px = 4.0;
    p.marker_darkness = 0.7;
    p.friction_mu = 0.8;
    p.light_dirs = ring_light_dirs(deg(90.0), deg(30.0));
    p.ambient = {0.25, 0.25, 0.25};
    p.d_max = 3.0;
  } else if (name == "gf225") {
    p.name = "gf225";
    p.image_width = 256;
    p.image_height = 256;
    p.gel_width = 16.0;
    p.gel_height = 16.0;
    p.gel_thickness = 2.5;
    p.max_indent = 1.8;
    p.elastic_sigma = 0.2;
    p.marker_rows = 11;
    p.marker_cols = 11;
    p.marker_radius_px = 3.0;
    p.marker_darkness = 0.6;
    p.friction_mu = 1.0;
    p.light_dirs = ring_light_dirs(deg(0.0), deg(25.0));
    p.ambient = {0.3, 0.28, 0.26};
    p.d_max = 2.5;
  } else if (name == "xense_ws") {
    p.name = "xense_ws";
    p.image_width = 240;
    p.image_height = 320;
    p.gel_width = 12.0;
    p.gel_height = 16.0;
    p.gel_thickness = 2.0;
    p.max_indent = 1.5;
    p.elastic_sigma = 0.2;
    p.marker_rows = 10;
    p.marker_cols = 8;
    p.marker_radius_px = 3.0;
    p.marker_darkness = 0.75;
    p.friction_mu = 0.7;
    p.light_dirs = ring_light_dirs(deg(30.0), deg(35.0));
    p.ambient = {0.22, 0.24, 0.3};
    p.d_max = 2.0;
  } else {
    throw Error(ErrorCode::kUnknownSensor, "unknown sensor '" + std::string(name) + "'");
  }
  p.validate();
  return p;
}

PixelGrid PixelGrid::from_profile(const SensorProfile& profile) {
  return PixelGrid{profile.image_width, profile.image_height,
                   profile.gel_width / profile.image_width,
                   profile.gel_height / profile.image_height};
}

Vec2 gel_to_pixel(const PixelGrid& grid, const Vec2& point) {
  constexpr double kTol = 1e-9;
  const double hw = 0.5 * grid.gel_width();
  const double hh = 0.5 * grid.gel_height();
  if (!(std::abs(point.x()) <= hw + kTol && std::abs(point.y()) <= hh + kTol)) {
    throw Error(ErrorCode::kOutOfGel, "point lies outside the gel rectangle");
  }
  return grid.to_pixel_unchecked(point);
}

Vec2 pixel_to_gel(const PixelGrid& grid, const Vec2& pixel) {
  constexpr double kTol = 1e-9;
  if (!(pixel.x() >= -kTol && pixel.x() <= grid.width + kTol && pixel.y() >= -kTol &&
        pixel.y() <= grid.height + kTol)) {
    throw Error(ErrorCode::kOutOfGel, "pixel lies outside the image rectangle");
  }
  return grid.to_gel_unchecked(pixel);
}

std::vector<Vec2> rest_markers(const SensorProfile& profile) {
  std::vector<Vec2> out;
  out.reserve(profile.marker_count());
  const double pitch_x = profile.gel_width / (profile.marker_cols + 1);
  const double pitch_y = profile.gel_height / (profile.marker_rows + 1);
  for (int r = 0; r < profile.marker_rows; ++r) {
    const double y = (r - 0.5 * (profile.marker_rows - 1)) * pitch_y;
    for (int c = 0; c < profile.marker_cols; ++c) {
      const double x = (c - 0.5 * (profile.marker_cols - 1)) * pitch_x;
      out.emplace_back(x, y);
    }
  }
  return out;
}

}  // namespace vtsim
