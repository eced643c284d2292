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

#include "vtsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vtsim/error.hpp"

namespace vtsim {

// ----- poses -----

Quat canonicalize(const Quat& q) {
  if (q.w() < 0.0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  return q;
}

Pose::Pose(const Vec3& translation, const Quat& rotation) : translation_(translation) {
  const double n = rotation.norm();
  if (!std::isfinite(n) || n < 1e-12 || !translation.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "pose: degenerate quaternion or translation");
  }
  rotation_ = canonicalize(Quat(rotation.coeffs() / n));
}

Pose Pose::from_axis_angle(const Vec3& axis, double angle, const Vec3& t) {
  const double n = axis.norm();
  if (n < 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "pose: zero rotation axis");
  }
  return Pose(t, Quat(Eigen::AngleAxisd(angle, axis / n)));
}

Pose Pose::inverse() const {
  const Quat inv = rotation_.conjugate();
  return Pose(-(inv * translation_), inv);
}

Vec3 transform_point(const Pose& pose, const Vec3& point) {
  return pose.rotation() * point + pose.translation();
}

Vec3 transform_vector(const Pose& pose, const Vec3& v) { return pose.rotation() * v; }

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation() * b.translation() + a.translation(), a.rotation() * b.rotation());
}

Pose relative_pose(const Pose& a, const Pose& b) { return compose(a.inverse(), b); }

// ----- shape catalog -----

namespace {

struct KindInfo {
  ShapeKind kind;
  std::string_view name;
  std::size_t n_params;
};

constexpr std::array<KindInfo, kShapeKindCount> kKinds = {{
    {ShapeKind::kSphere, "sphere", 1},
    {ShapeKind::kHemisphere, "hemisphere", 1},
    {ShapeKind::kCylinder, "cylinder", 2},
    {ShapeKind::kCone, "cone", 2},
    {ShapeKind::kTruncatedCone, "truncated-cone", 3},
    {ShapeKind::kCube, "cube", 1},
    {ShapeKind::kRectangularPrism, "rectangular-prism", 3},
    {ShapeKind::kTriangularPrism, "triangular-prism", 2},
    {ShapeKind::kTorusSegment, "torus-segment", 3},
    {ShapeKind::kRing, "ring", 3},
    {ShapeKind::kCross, "cross", 3},
    {ShapeKind::kStar5, "star-5", 3},
    {ShapeKind::kHexagon, "hexagon", 2},
    {ShapeKind::kEllipsoid, "ellipsoid", 3},
}};

const KindInfo& info(ShapeKind kind) { return kKinds[static_cast<std::size_t>(kind)]; }

}  // namespace

const std::array<ShapeKind, kShapeKindCount>& all_shape_kinds() {
  static const std::array<ShapeKind, kShapeKindCount> kinds = [] {
    std::array<ShapeKind, kShapeKindCount> out{};
    for (std::size_t i = 0; i < kShapeKindCount; ++i) out[i] = kKinds[i].kind;
    return out;
  }();
  return kinds;
}

std::string_view shape_kind_name(ShapeKind kind) { return info(kind).name; }

ShapeKind shape_kind_from_name(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  throw Error(ErrorCode::kUnknownShape, "unknown indenter kind '" + std::string(name) + "'");
}

std::size_t shape_param_count(ShapeKind kind) { return info(kind).n_params; }

IndenterShape::IndenterShape(ShapeKind kind, std::vector<double> params,
                             std::optional<BaseDims> base)
    : kind_(kind), params_(std::move(params)), base_(base) {
  const auto& ki = info(kind);
  if (params_.size() != ki.n_params) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(ki.name) + ": expected " + std::to_string(ki.n_params) +
                    " parameters, got " + std::to_string(params_.size()));
  }
  for (double p : params_) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(ki.name) + ": dimensions must be strictly positive");
    }
  }
  if (base_ && !(base_->width > 0.0 && base_->depth > 0.0 && base_->height > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "base dimensions must be strictly positive");
  }
  const auto bad = [&](const char* what) {
    throw Error(ErrorCode::kInvalidArgument, std::string(ki.name) + ": " + what);
  };
  switch (kind_) {
    case ShapeKind::kTruncatedCone:
      if (params_[1] >= params_[0]) bad("top radius must be below bottom radius");
      break;
    case ShapeKind::kTorusSegment:
      if (params_[1] >= params_[0]) bad("minor radius must be below major radius");
      if (params_[2] > std::numbers::pi) bad("half arc must not exceed pi");
      break;
    case ShapeKind::kRing:
    case ShapeKind::kStar5:
      if (params_[1] >= params_[0]) bad("inner radius must be below outer radius");
      break;
    case ShapeKind::kCross:
      if (params_[1] >= params_[0]) bad("arm width must be below arm length");
      break;
    default:
      break;
  }
}

IndenterShape IndenterShape::standard(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kSphere: return IndenterShape(kind, {5.0});
    case ShapeKind::kHemisphere: return IndenterShape(kind, {4.5});
    case ShapeKind::kCylinder: return IndenterShape(kind, {4.0, 6.0});
    case ShapeKind::kCone: return IndenterShape(kind, {4.5, 8.0});
    case ShapeKind::kTruncatedCone: return IndenterShape(kind, {4.5, 2.0, 6.0});
    case ShapeKind::kCube: return IndenterShape(kind, {6.0});
    case ShapeKind::kRectangularPrism: return IndenterShape(kind, {9.0, 4.0, 6.0});
    case ShapeKind::kTriangularPrism: return IndenterShape(kind, {6.0, 9.0});
    case ShapeKind::kTorusSegment: return IndenterShape(kind, {4.0, 1.5, 2.0});
    case ShapeKind::kRing: return IndenterShape(kind, {4.5, 2.5, 4.0});
    case ShapeKind::kCross: return IndenterShape(kind, {10.0, 3.0, 4.0});
    case ShapeKind::kStar5: return IndenterShape(kind, {5.5, 2.4, 4.0});
    case ShapeKind::kHexagon: return IndenterShape(kind, {3.5, 4.0});
    case ShapeKind::kEllipsoid: return IndenterShape(kind, {5.0, 3.5, 2.5});
  }
  throw Error(ErrorCode::kUnknownShape, "unknown indenter kind");
}

IndenterShape IndenterShape::from_name(std::string_view name, std::vector<double> params,
                                       std::optional<BaseDims> base) {
  return IndenterShape(shape_kind_from_name(name), std::move(params), base);
}

namespace {

// Half extents of the primitive's bounding box; z range reported separately.
struct PrimitiveExtent {
  double hx, hy, zmin, zmax;
};

PrimitiveExtent primitive_extent(const IndenterShape& s) {
  const auto& p = s.params();
  switch (s.kind()) {
    case ShapeKind::kSphere: return {p[0], p[0], -p[0], p[0]};
    case ShapeKind::kHemisphere: return {p[0], p[0], 0.0, p[0]};
    case ShapeKind::kCylinder: return {p[0], p[0], -p[1] / 2, p[1] / 2};
    case ShapeKind::kCone: return {p[0], p[0], -p[1] / 2, p[1] / 2};
    case ShapeKind::kTruncatedCone: return {p[0], p[0], -p[2] / 2, p[2] / 2};
    case ShapeKind::kCube: return {p[0] / 2, p[0] / 2, -p[0] / 2, p[0] / 2};
    case ShapeKind::kRectangularPrism: return {p[0] / 2, p[1] / 2, -p[2] / 2, p[2] / 2};
    case ShapeKind::kTriangularPrism: {
      const double half_side = p[0] / 2;
      return {p[1] / 2, half_side, -half_side / std::sqrt(3.0), 2 * half_side / std::sqrt(3.0)};
    }
    case ShapeKind::kTorusSegment: {
      const double r = p[0] + p[1];
      return {r, r, -p[1], p[1]};
    }
    case ShapeKind::kRing: return {p[0], p[0], -p[2] / 2, p[2] / 2};
    case ShapeKind::kCross: return {p[0] / 2, p[0] / 2, -p[2] / 2, p[2] / 2};
    case ShapeKind::kStar5: return {p[0], p[0], -p[2] / 2, p[2] / 2};
    case ShapeKind::kHexagon: {
      const double circ = p[0] * 2.0 / std::sqrt(3.0);
      return {circ, circ, -p[1] / 2, p[1] / 2};
    }
    case ShapeKind::kEllipsoid: return {p[0], p[1], -p[2], p[2]};
  }
  return {0, 0, 0, 0};
}

}  // namespace

Eigen::AlignedBox3d IndenterShape::local_bounds() const {
  const auto e = primitive_extent(*this);
  Eigen::AlignedBox3d box(Vec3(-e.hx, -e.hy, e.zmin), Vec3(e.hx, e.hy, e.zmax));
  if (base_) {
    box.extend(Vec3(-base_->width / 2, -base_->depth / 2, e.zmin - base_->height));
    box.extend(Vec3(base_->width / 2, base_->depth / 2, e.zmin));
  }
  return box;
}

double IndenterShape::tip_height() const { return primitive_extent(*this).zmax; }

double IndenterShape::mount_height() const { return primitive_extent(*this).zmin; }

// ----- signed distance functions -----

namespace {

double dot2(const Vec2& v) { return v.squaredNorm(); }
double sgn(double v) { return v < 0.0 ? -1.0 : 1.0; }

double sd_box(const Vec3& p, const Vec3& half) {
  const Vec3 q = p.cwiseAbs() - half;
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

// Exact extrusion along z of a 2D distance d2.
double extrude(double d2, double z, double half_height) {
  const Vec2 w(d2, std::abs(z) - half_height);
  return std::min(std::max(w.x(), w.y()), 0.0) + w.cwiseMax(0.0).norm();
}

double sd_capped_cone(const Vec3& p, double half_h, double r_bottom, double r_top) {
  const Vec2 q(std::hypot(p.x(), p.y()), p.z());
  const Vec2 k1(r_top, half_h);
  const Vec2 k2(r_top - r_bottom, 2.0 * half_h);
  const Vec2 ca(q.x() - std::min(q.x(), q.y() < 0.0 ? r_bottom : r_top), std::abs(q.y()) - half_h);
  const Vec2 cb = q - k1 + k2 * std::clamp((k1 - q).dot(k2) / dot2(k2), 0.0, 1.0);
  const double s = (cb.x() < 0.0 && ca.y() < 0.0) ? -1.0 : 1.0;
  return s * std::sqrt(std::min(dot2(ca), dot2(cb)));
}

double sd_hemisphere(const Vec3& p, double r) {
  const double rho = std::hypot(p.x(), p.y());
  const double len = p.norm();
  if (p.z() >= 0.0) {
    if (len <= r) return -std::min(r - len, p.z());
    return len - r;
  }
  if (rho <= r) return -p.z();
  return std::hypot(rho - r, p.z());
}

// Equilateral triangle with half side r, centroid at origin, apex toward +y.
double sd_equilateral_triangle(Vec2 p, double r) {
  const double k = std::sqrt(3.0);
  p.x() = std::abs(p.x()) - r;
  p.y() = p.y() + r / k;
  if (p.x() + k * p.y() > 0.0) p = Vec2(p.x() - k * p.y(), -k * p.x() - p.y()) / 2.0;
  p.x() -= std::clamp(p.x(), -2.0 * r, 0.0);
  return -p.norm() * sgn(p.y());
}

double sd_hexagon(Vec2 p, double apothem) {
  const Eigen::Vector3d k(-std::sqrt(3.0) / 2.0, 0.5, 1.0 / std::sqrt(3.0));
  p = p.cwiseAbs();
  p -= 2.0 * std::min(k.head<2>().dot(p), 0.0) * k.head<2>();
  p -= Vec2(std::clamp(p.x(), -k.z() * apothem, k.z() * apothem), apothem);
  return p.norm() * sgn(p.y());
}

// Five-pointed star, outer vertex radius r, inner vertex radius r * rf.
double sd_star5(Vec2 p, double r, double rf) {
  const Vec2 k1(std::cos(std::numbers::pi / 5), -std::sin(std::numbers::pi / 5));
  const Vec2 k2(-k1.x(), k1.y());
  p.x() = std::abs(p.x());
  p -= 2.0 * std::max(k1.dot(p), 0.0) * k1;
  p -= 2.0 * std::max(k2.dot(p), 0.0) * k2;
  p.x() = std::abs(p.x());
  p.y() -= r;
  const Vec2 ba = rf * Vec2(-k1.y(), k1.x()) - Vec2(0.0, 1.0);
  const double h = std::clamp(p.dot(ba) / ba.dot(ba), 0.0, r);
  return (p - ba * h).norm() * sgn(p.y() * ba.x() - p.x() * ba.y());
}

// Torus arc in the xy plane, symmetric about +y, half opening angle `half_arc`.
double sd_capped_torus(Vec3 p, double half_arc, double ra, double rb) {
  const Vec2 sc(std::sin(half_arc), std::cos(half_arc));
  p.x() = std::abs(p.x());
  const double k = (sc.y() * p.x() > sc.x() * p.y()) ? Vec2(p.x(), p.y()).dot(sc)
                                                     : std::hypot(p.x(), p.y());
  return std::sqrt(std::max(p.squaredNorm() + ra * ra - 2.0 * ra * k, 0.0)) - rb;
}

// ---- exact point-ellipsoid distance (robust bisection on the Lagrange root) ----

double robust_length(double a, double b) {
  return std::hypot(a, b);
}
double robust_length(double a, double b, double c) {
  return std::sqrt(a * a + b * b + c * c);
}

double ellipse_root(double r0, double z0, double z1, double g) {
  const double n0 = r0 * z0;
  double s0 = z1 - 1.0;
  double s1 = g < 0.0 ? 0.0 : robust_length(n0, z1) - 1.0;
  double s = 0.0;
  for (int i = 0; i < 2000; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double ratio0 = n0 / (s + r0);
    const double ratio1 = z1 / (s + 1.0);
    g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
    if (g > 0.0) {
      s0 = s;
    } else if (g < 0.0) {
      s1 = s;
    } else {
      break;
    }
  }
  return s;
}

// e0 >= e1 > 0, y0, y1 >= 0.
double ellipse_distance(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0;
      const double z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g != 0.0) {
        const double r0 = (e0 / e1) * (e0 / e1);
        const double sbar = ellipse_root(r0, z0, z1, g);
        const double x0 = r0 * y0 / (sbar + r0);
        const double x1 = y1 / (sbar + 1.0);
        return std::hypot(x0 - y0, x1 - y1);
      }
      return 0.0;
    }
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0;
  const double denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    const double x0 = e0 * xde0;
    const double x1 = e1 * std::sqrt(std::max(1.0 - xde0 * xde0, 0.0));
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

double ellipsoid_root(double r0, double r1, double z0, double z1, double z2, double g) {
  const double n0 = r0 * z0;
  const double n1 = r1 * z1;
  double lo = z2 - 1.0;
  double hi = g < 0.0 ? 0.0 : robust_length(n0, n1, z2) - 1.0;
  // F is convex and decreasing on the bracket, so Newton from the left side
  // never overshoots; bisection guards the rounding edge cases.
  double s = lo;
  for (int i = 0; i < 200; ++i) {
    const double q0 = n0 / (s + r0);
    const double q1 = n1 / (s + r1);
    const double q2 = z2 / (s + 1.0);
    const double f = q0 * q0 + q1 * q1 + q2 * q2 - 1.0;
    if (f == 0.0) return s;
    (f > 0.0 ? lo : hi) = s;
    const double df =
        -2.0 * (q0 * q0 / (s + r0) + q1 * q1 / (s + r1) + q2 * q2 / (s + 1.0));
    double next = s - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-15 * (1.0 + std::abs(s))) return next;
    s = next;
  }
  return s;
}

// e0 >= e1 >= e2 > 0, y0, y1, y2 >= 0.
double ellipsoid_distance(double e0, double e1, double e2, double y0, double y1, double y2) {
  if (y2 > 0.0) {
    if (y1 > 0.0) {
      if (y0 > 0.0) {
        const double z0 = y0 / e0;
        const double z1 = y1 / e1;
        const double z2 = y2 / e2;
        const double g = z0 * z0 + z1 * z1 + z2 * z2 - 1.0;
        if (g != 0.0) {
          const double r0 = (e0 / e2) * (e0 / e2);
          const double r1 = (e1 / e2) * (e1 / e2);
          const double sbar = ellipsoid_root(r0, r1, z0, z1, z2, g);
          const double x0 = r0 * y0 / (sbar + r0);
          const double x1 = r1 * y1 / (sbar + r1);
          const double x2 = y2 / (sbar + 1.0);
          return robust_length(x0 - y0, x1 - y1, x2 - y2);
        }
        return 0.0;
      }
      return ellipse_distance(e1, e2, y1, y2);
    }
    if (y0 > 0.0) return ellipse_distance(e0, e2, y0, y2);
    return std::abs(y2 - e2);
  }
  const double denom0 = e0 * e0 - e2 * e2;
  const double denom1 = e1 * e1 - e2 * e2;
  const double numer0 = e0 * y0;
  const double numer1 = e1 * y1;
  if (numer0 < denom0 && numer1 < denom1) {
    const double xde0 = numer0 / denom0;
    const double xde1 = numer1 / denom1;
    const double discr = 1.0 - xde0 * xde0 - xde1 * xde1;
    if (discr > 0.0) {
      const double x0 = e0 * xde0;
      const double x1 = e1 * xde1;
      const double x2 = e2 * std::sqrt(discr);
      return robust_length(x0 - y0, x1 - y1, x2);
    }
  }
  return ellipse_distance(e0, e1, y0, y1);
}

double sd_ellipsoid(const Vec3& p, const Vec3& radii) {
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return radii[a] > radii[b]; });
  const double d = ellipsoid_distance(radii[order[0]], radii[order[1]], radii[order[2]],
                                      std::abs(p[order[0]]), std::abs(p[order[1]]),
                                      std::abs(p[order[2]]));
  const double level = p.cwiseQuotient(radii).squaredNorm();
  return level < 1.0 ? -d : d;
}

}  // namespace

double sdf_eval(const IndenterShape& shape, const Vec3& p) {
  const auto& a = shape.params();
  switch (shape.kind()) {
    case ShapeKind::kSphere:
      return p.norm() - a[0];
    case ShapeKind::kHemisphere:
      return sd_hemisphere(p, a[0]);
    case ShapeKind::kCylinder: {
      const Vec2 d(std::hypot(p.x(), p.y()) - a[0], std::abs(p.z()) - a[1] / 2);
      return std::min(std::max(d.x(), d.y()), 0.0) + d.cwiseMax(0.0).norm();
    }
    case ShapeKind::kCone:
      return sd_capped_cone(p, a[1] / 2, a[0], 0.0);
    case ShapeKind::kTruncatedCone:
      return sd_capped_cone(p, a[2] / 2, a[0], a[1]);
    case ShapeKind::kCube:
      return sd_box(p, Vec3::Constant(a[0] / 2));
    case ShapeKind::kRectangularPrism:
      return sd_box(p, Vec3(a[0], a[1], a[2]) / 2);
    case ShapeKind::kTriangularPrism:
      return extrude(sd_equilateral_triangle(Vec2(p.y(), p.z()), a[0] / 2), p.x(), a[1] / 2);
    case ShapeKind::kTorusSegment:
      return sd_capped_torus(p, a[2], a[0], a[1]);
    case ShapeKind::kRing: {
      const double rho = std::hypot(p.x(), p.y());
      const double d2 = std::abs(rho - 0.5 * (a[0] + a[1])) - 0.5 * (a[0] - a[1]);
      return extrude(d2, p.z(), a[2] / 2);
    }
    case ShapeKind::kCross: {
      const double arm1 = sd_box(p, Vec3(a[0] / 2, a[1] / 2, a[2] / 2));
      const double arm2 = sd_box(p, Vec3(a[1] / 2, a[0] / 2, a[2] / 2));
      return std::min(arm1, arm2);
    }
    case ShapeKind::kStar5:
      return extrude(sd_star5(Vec2(p.x(), p.y()), a[0], a[1] / a[0]), p.z(), a[2] / 2);
    case ShapeKind::kHexagon:
      return extrude(sd_hexagon(Vec2(p.x(), p.y()), a[0]), p.z(), a[1] / 2);
    case ShapeKind::kEllipsoid:
      return sd_ellipsoid(p, Vec3(a[0], a[1], a[2]));
  }
  return 0.0;
}

double indenter_sdf(const IndenterShape& shape, const Vec3& p) {
  const double feature = sdf_eval(shape, p);
  const auto& base = shape.base();
  if (!base) return feature;
  const Vec3 center(0.0, 0.0, shape.mount_height() - base->height / 2);
  const Vec3 half(base->width / 2, base->depth / 2, base->height / 2);
  return std::min(feature, sd_box(p - center, half));
}

Eigen::AlignedBox3d SceneObject::world_bounds() const {
  const auto local = shape.local_bounds();
  Eigen::AlignedBox3d out;
  for (int c = 0; c < 8; ++c) {
    out.extend(transform_point(pose, local.corner(static_cast<Eigen::AlignedBox3d::CornerType>(c))));
  }
  return out;
}

}  // namespace vtsim
