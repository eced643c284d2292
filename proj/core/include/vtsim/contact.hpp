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
#include <optional>
#include <vector>

#include "vtsim/geometry.hpp"
#include "vtsim/sensor.hpp"

namespace vtsim {

// Indentation depth per pixel, row-major (j * width + i), mm. Zero = untouched.
struct DepthMap {
  PixelGrid grid;
  std::vector<double> values;

  static DepthMap zeros(const PixelGrid& grid);

  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.width + i]; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(j) * grid.width + i]; }
  double max() const;
  // Bilinear sample at a gel point, with pixel centers as nodes and clamped
  // borders.
  double sample(const Vec2& gel) const;
  // Central-difference gradient of sample() in mm per mm.
  Vec2 gradient(const Vec2& gel) const;
};

struct MarkerField {
  std::vector<Vec2> rest;       // gel mm
  std::vector<Vec2> displaced;  // gel mm
  std::vector<std::uint8_t> stuck;
  std::vector<std::uint8_t> contact;  // depth at the rest position > 0

  static MarkerField at_rest(std::vector<Vec2> rest);
  std::size_t size() const { return rest.size(); }
};

// Constants of the heightfield contact model.
struct ContactParams {
  double k_bulge = 0.3;          // lateral bulge per unit depth slope, mm
  double k_press = 1.0;          // shear capacity per mm of depth
  double decay_length = 1.5;     // mm, falloff of the field outside contact
  double max_marker_disp = 1.5;  // mm
  double raymarch_tol = 1e-4;    // mm
  double raymarch_min_step = 1e-3;
  double raymarch_margin = 0.5;  // mm below max_indent where rays start
  int raymarch_max_steps = 4096;

  void validate() const;
};

struct ContactState {
  DepthMap depth;
  MarkerField markers;
  double d_min = 0.0;
  std::optional<Vec2> centroid;
  double contact_area_mm2 = 0.0;
};

// Per-pixel penetration of the object below the gel rest plane, in the frame
// of `sensor_pose` (z = 0 rest plane, +z outward). Rays run along +z from
// below the gel; the first surface crossing sets the depth.
DepthMap raw_penetration(const SensorProfile& profile, const SceneObject& object,
                         const Pose& sensor_pose, const ContactParams& params = {});

// Normalized Gaussian blur with sigma = elastic_sigma and reflective borders,
// re-clamped to [0, max_indent].
DepthMap elastic_smooth(const SensorProfile& profile, const DepthMap& raw);

// Depth-weighted mean of in-contact pixel centers, gel mm.
std::optional<Vec2> depth_centroid(const DepthMap& depth);

// Stick/slip marker model. `tangential` and `spin` are the in-plane motion the
// object demands of the gel surface since contact began.
MarkerField marker_displace(const SensorProfile& profile, const DepthMap& depth,
                            const Vec2& tangential, double spin,
                            const std::optional<Vec2>& centroid,
                            const ContactParams& params = {});

ContactState contact_summary(const SensorProfile& profile, const DepthMap& depth,
                             const MarkerField& markers);

// Mean over markers in contact (per `cur`) of |(cur - prev) - commanded|, mm.
// Throws kMarkerCountMismatch when the fields differ in size.
double slip_metric(const MarkerField& prev, const MarkerField& cur, const Vec2& commanded);
// Same, with the commanded motion of marker i being
// commanded + spin * perp(rest_i - centroid).
double slip_metric(const MarkerField& prev, const MarkerField& cur, const Vec2& commanded,
                   double spin, const Vec2& centroid);

// raw_penetration -> elastic_smooth -> marker_displace -> contact_summary.
ContactState sense(const SensorProfile& profile, const SceneObject& object,
                   const Pose& sensor_pose, const Vec2& tangential, double spin,
                   const ContactParams& params = {});

}  // namespace vtsim
