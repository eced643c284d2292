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

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vtsim {

// All lengths in this library are millimeters.
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

// Rigid transform with a unit quaternion kept in the w >= 0 hemisphere.
class Pose {
 public:
  Pose() : translation_(Vec3::Zero()), rotation_(Quat::Identity()) {}
  // Normalizes and canonicalizes the quaternion. Throws kInvalidArgument on a
  // zero or non-finite quaternion.
  Pose(const Vec3& translation, const Quat& rotation);

  static Pose identity() { return Pose(); }
  static Pose from_translation(const Vec3& t) { return Pose(t, Quat::Identity()); }
  static Pose from_axis_angle(const Vec3& axis, double angle, const Vec3& t = Vec3::Zero());

  const Vec3& translation() const { return translation_; }
  const Quat& rotation() const { return rotation_; }

  Pose inverse() const;

  // (w, x, y, z) order.
  std::array<double, 4> quaternion_wxyz() const {
    return {rotation_.w(), rotation_.x(), rotation_.y(), rotation_.z()};
  }

 private:
  Vec3 translation_;
  Quat rotation_;
};

// Flips q to the w >= 0 hemisphere. Idempotent.
Quat canonicalize(const Quat& q);

// Applies pose to a point: R p + t.
Vec3 transform_point(const Pose& pose, const Vec3& point);
// Rotates a direction without translating it.
Vec3 transform_vector(const Pose& pose, const Vec3& v);
// a ∘ b: first b, then a.
Pose compose(const Pose& a, const Pose& b);
// b expressed in frame a, so that compose(a, relative_pose(a, b)) == b.
Pose relative_pose(const Pose& a, const Pose& b);

enum class ShapeKind {
  kSphere,
  kHemisphere,
  kCylinder,
  kCone,
  kTruncatedCone,
  kCube,
  kRectangularPrism,
  kTriangularPrism,
  kTorusSegment,
  kRing,
  kCross,
  kStar5,
  kHexagon,
  kEllipsoid,
};

inline constexpr std::size_t kShapeKindCount = 14;

const std::array<ShapeKind, kShapeKindCount>& all_shape_kinds();
std::string_view shape_kind_name(ShapeKind kind);
// Throws kUnknownShape for anything outside the catalog.
ShapeKind shape_kind_from_name(std::string_view name);
// Number of dimension parameters a kind expects.
std::size_t shape_param_count(ShapeKind kind);

// Box the indenter is mounted on: full extents, centered on the shape axis,
// top face flush with the lowest point of the primitive.
struct BaseDims {
  double width = 14.0;   // along x
  double depth = 14.0;   // along y
  double height = 6.0;   // along z
};

// One indenter primitive. Parameters per kind (mm unless noted):
//   sphere            [radius]
//   hemisphere        [radius]                      flat face on z = 0, dome up
//   cylinder          [radius, height]              axis z
//   cone              [base_radius, height]         apex up
//   truncated-cone    [bottom_radius, top_radius, height]
//   cube              [side]
//   rectangular-prism [size_x, size_y, size_z]
//   triangular-prism  [side, length]                ridge up, extruded along x
//   torus-segment     [major_radius, minor_radius, half_arc (rad)]  in the xy plane
//   ring              [outer_radius, inner_radius, height]
//   cross             [arm_length, arm_width, height]
//   star-5            [outer_radius, inner_radius, height]
//   hexagon           [apothem, height]
//   ellipsoid         [semi_x, semi_y, semi_z]
// Every primitive except the hemisphere is centered on its own origin, so the
// whole primitive protrudes above its base.
class IndenterShape {
 public:
  // Throws kInvalidArgument on wrong parameter count or non-positive values.
  IndenterShape(ShapeKind kind, std::vector<double> params,
                std::optional<BaseDims> base = BaseDims{});

  // The catalog defaults used by data generation.
  static IndenterShape standard(ShapeKind kind);
  static IndenterShape from_name(std::string_view name, std::vector<double> params,
                                 std::optional<BaseDims> base = BaseDims{});

  ShapeKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  const std::optional<BaseDims>& base() const { return base_; }

  // Axis-aligned bounds of the primitive plus base in the shape frame.
  Eigen::AlignedBox3d local_bounds() const;
  // Highest point of the primitive along +z.
  double tip_height() const;
  // Lowest point of the primitive along z; the base top sits here.
  double mount_height() const;

 private:
  ShapeKind kind_;
  std::vector<double> params_;
  std::optional<BaseDims> base_;
};

// Signed distance to the primitive alone (no base). Negative inside.
double sdf_eval(const IndenterShape& shape, const Vec3& point);
// Primitive united with its base. Conservative where the two overlap.
double indenter_sdf(const IndenterShape& shape, const Vec3& point);

struct SceneObject {
  IndenterShape shape;
  Pose pose;  // shape frame -> world

  // Signed distance of a world point to the mounted indenter.
  double sdf_world(const Vec3& world_point) const {
    return indenter_sdf(shape, transform_point(pose.inverse(), world_point));
  }
  // World-frame bounds of the transformed local box (conservative).
  Eigen::AlignedBox3d world_bounds() const;
};

}  // namespace vtsim
