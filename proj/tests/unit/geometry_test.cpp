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
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "vtsim/geometry.hpp"
#include "vtsim/rng.hpp"

namespace vtsim {
namespace {

using testing::code_of;

constexpr double kPi = std::numbers::pi;

Vec3 random_unit(Rng& rng) {
  for (;;) {
    const Vec3 v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

Pose random_pose(Rng& rng) {
  return Pose::from_axis_angle(random_unit(rng), rng.uniform(-kPi, kPi),
                               Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50),
                                    rng.uniform(-50, 50)));
}

double pose_gap(const Pose& a, const Pose& b) {
  const auto qa = a.quaternion_wxyz();
  const auto qb = b.quaternion_wxyz();
  double g = (a.translation() - b.translation()).cwiseAbs().maxCoeff();
  for (int i = 0; i < 4; ++i) g = std::max(g, std::abs(qa[i] - qb[i]));
  return g;
}

// ---- SDF examples ----

TEST(SdfEval, SphereExamples) {
  const IndenterShape s(ShapeKind::kSphere, {5.0});
  EXPECT_NEAR(sdf_eval(s, Vec3(0, 0, 0)), -5.0, 1e-12);
  EXPECT_NEAR(sdf_eval(s, Vec3(5, 0, 0)), 0.0, 1e-12);
  EXPECT_NEAR(sdf_eval(s, Vec3(8, 0, 0)), 3.0, 1e-12);
}

TEST(SdfEval, BoxFaceEdgeAndCorner) {
  const IndenterShape c(ShapeKind::kCube, {2.0});
  EXPECT_NEAR(sdf_eval(c, Vec3(3, 0, 0)), 2.0, 1e-12);
  EXPECT_NEAR(sdf_eval(c, Vec3(2, 2, 0)), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(sdf_eval(c, Vec3(2, 2, 2)), std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(sdf_eval(c, Vec3(0.5, 0, 0)), -0.5, 1e-12);
}

TEST(SdfEval, HemisphereFlatFaceOnZeroPlane) {
  const IndenterShape h(ShapeKind::kHemisphere, {4.0});
  EXPECT_NEAR(sdf_eval(h, Vec3(0, 0, 4)), 0.0, 1e-12);
  EXPECT_NEAR(sdf_eval(h, Vec3(0, 0, -1)), 1.0, 1e-12);
  EXPECT_NEAR(sdf_eval(h, Vec3(0, 0, 0.5)), -0.5, 1e-12);
  EXPECT_NEAR(sdf_eval(h, Vec3(7, 0, -4)), 5.0, 1e-12);
  EXPECT_DOUBLE_EQ(h.mount_height(), 0.0);
  EXPECT_DOUBLE_EQ(h.tip_height(), 4.0);
}

TEST(SdfEval, CylinderAxisAndRim) {
  const IndenterShape c(ShapeKind::kCylinder, {2.0, 6.0});
  EXPECT_NEAR(sdf_eval(c, Vec3(0, 0, 5)), 2.0, 1e-12);
  EXPECT_NEAR(sdf_eval(c, Vec3(5, 0, 0)), 3.0, 1e-12);
  EXPECT_NEAR(sdf_eval(c, Vec3(5, 0, 7)), 5.0, 1e-12);
  EXPECT_NEAR(sdf_eval(c, Vec3(0, 0, 0)), -2.0, 1e-12);
}

TEST(SdfEval, BaseSitsBelowPrimitive) {
  const IndenterShape s(ShapeKind::kSphere, {5.0}, BaseDims{10.0, 10.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mount_height(), -5.0);
  // Inside the base, away from the sphere.
  EXPECT_LT(indenter_sdf(s, Vec3(4.5, 4.5, -6.0)), 0.0);
  EXPECT_GT(sdf_eval(s, Vec3(4.5, 4.5, -6.0)), 0.0);
  // Below the base bottom face.
  EXPECT_NEAR(indenter_sdf(s, Vec3(0, 0, -10.0)), 1.0, 1e-12);
  const auto box = s.local_bounds();
  EXPECT_NEAR(box.min().z(), -9.0, 1e-12);
  EXPECT_NEAR(box.max().z(), 5.0, 1e-12);
  const IndenterShape bare(ShapeKind::kSphere, {5.0}, std::nullopt);
  EXPECT_DOUBLE_EQ(indenter_sdf(bare, Vec3(0, 0, -10.0)), sdf_eval(bare, Vec3(0, 0, -10.0)));
}

TEST(SdfEval, WorldFrameFollowsPose) {
  const SceneObject obj{IndenterShape(ShapeKind::kSphere, {5.0}, std::nullopt),
                        Pose::from_axis_angle(Vec3::UnitX(), 0.7, Vec3(1, 2, 3))};
  EXPECT_NEAR(obj.sdf_world(Vec3(1, 2, 3)), -5.0, 1e-12);
  EXPECT_NEAR(obj.sdf_world(Vec3(1, 2, 11)), 3.0, 1e-12);
}

// ---- catalog ----

TEST(Catalog, FourteenKindsRoundTripByName) {
  std::set<std::string> names;
  for (ShapeKind k : all_shape_kinds()) {
    const std::string name(shape_kind_name(k));
    names.insert(name);
    EXPECT_EQ(shape_kind_from_name(name), k);
    const IndenterShape s = IndenterShape::standard(k);
    EXPECT_EQ(s.params().size(), shape_param_count(k));
  }
  EXPECT_EQ(names.size(), kShapeKindCount);
  EXPECT_EQ(kShapeKindCount, 14u);
}

TEST(Catalog, UnknownKindIsRejected) {
  EXPECT_EQ(code_of([] { shape_kind_from_name("dodecahedron"); }), ErrorCode::kUnknownShape);
  EXPECT_EQ(code_of([] { IndenterShape::from_name("pyramid", {1.0}); }),
            ErrorCode::kUnknownShape);
}

TEST(Catalog, BadParametersAreRejected) {
  EXPECT_EQ(code_of([] { IndenterShape(ShapeKind::kSphere, {}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { IndenterShape(ShapeKind::kSphere, {1.0, 2.0}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { IndenterShape(ShapeKind::kCube, {0.0}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { IndenterShape(ShapeKind::kCylinder, {-1.0, 2.0}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { IndenterShape(ShapeKind::kEllipsoid, {1.0, NAN, 1.0}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { IndenterShape(ShapeKind::kRing, {2.0, 3.0, 1.0}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { IndenterShape(ShapeKind::kSphere, {1.0}, BaseDims{1.0, 0.0, 1.0}); }),
            ErrorCode::kInvalidArgument);
}

// ---- conservative bound against an independent surface sampling ----

bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      in = !in;
    }
  }
  return in;
}

bool in_box(const Vec3& p, const Vec3& half) {
  return std::abs(p.x()) < half.x() && std::abs(p.y()) < half.y() && std::abs(p.z()) < half.z();
}

// Point membership written from the parameter table, not from the SDFs.
bool inside(const IndenterShape& s, const Vec3& p) {
  const auto& a = s.params();
  const double rho = std::hypot(p.x(), p.y());
  switch (s.kind()) {
    case ShapeKind::kSphere:
      return p.norm() < a[0];
    case ShapeKind::kHemisphere:
      return p.norm() < a[0] && p.z() > 0.0;
    case ShapeKind::kCylinder:
      return rho < a[0] && std::abs(p.z()) < a[1] / 2;
    case ShapeKind::kCone:
      return std::abs(p.z()) < a[1] / 2 && rho < a[0] * (a[1] / 2 - p.z()) / a[1];
    case ShapeKind::kTruncatedCone:
      return std::abs(p.z()) < a[2] / 2 && rho < a[0] + (a[1] - a[0]) * (p.z() + a[2] / 2) / a[2];
    case ShapeKind::kCube:
      return in_box(p, Vec3::Constant(a[0] / 2));
    case ShapeKind::kRectangularPrism:
      return in_box(p, Vec3(a[0], a[1], a[2]) / 2);
    case ShapeKind::kTriangularPrism: {
      const double height = a[0] * std::sqrt(3.0) / 2;
      return std::abs(p.x()) < a[1] / 2 && p.z() > -height / 3 &&
             std::abs(p.y()) < (a[0] / 2) * (2 * height / 3 - p.z()) / height;
    }
    case ShapeKind::kTorusSegment: {
      const double phi = std::atan2(p.x(), p.y());
      if (std::abs(phi) <= a[2]) return std::hypot(rho - a[0], p.z()) < a[1];
      const Vec3 end(a[0] * std::sin(a[2]), a[0] * std::cos(a[2]), 0.0);
      const Vec3 mirrored(-end.x(), end.y(), 0.0);
      return std::min((p - end).norm(), (p - mirrored).norm()) < a[1];
    }
    case ShapeKind::kRing:
      return rho < a[0] && rho > a[1] && std::abs(p.z()) < a[2] / 2;
    case ShapeKind::kCross:
      return in_box(p, Vec3(a[0], a[1], a[2]) / 2) || in_box(p, Vec3(a[1], a[0], a[2]) / 2);
    case ShapeKind::kStar5: {
      std::vector<Vec2> poly;
      for (int k = 0; k < 10; ++k) {
        const double ang = kPi / 2 + k * kPi / 5;
        const double r = (k % 2 == 0) ? a[0] : a[1];
        poly.emplace_back(r * std::cos(ang), r * std::sin(ang));
      }
      return std::abs(p.z()) < a[2] / 2 && point_in_polygon(poly, Vec2(p.x(), p.y()));
    }
    case ShapeKind::kHexagon: {
      const double ax = std::abs(p.x());
      const double ay = std::abs(p.y());
      return std::abs(p.z()) < a[1] / 2 && ay < a[0] &&
             0.5 * ay + std::sqrt(3.0) / 2 * ax < a[0];
    }
    case ShapeKind::kEllipsoid:
      return std::pow(p.x() / a[0], 2) + std::pow(p.y() / a[1], 2) + std::pow(p.z() / a[2], 2) <
             1.0;
  }
  return false;
}

// Surface points found by bisecting every grid edge whose ends disagree on
// membership. Each point is on the surface to 1e-10 mm.
std::vector<Vec3> sample_surface(const IndenterShape& s, double h) {
  const IndenterShape bare(s.kind(), s.params(), std::nullopt);
  Eigen::AlignedBox3d box = bare.local_bounds();
  box.min().array() -= 2 * h;
  box.max().array() += 2 * h;
  const Eigen::Vector3i n = ((box.max() - box.min()) / h).array().ceil().cast<int>();
  const auto node = [&](int i, int j, int k) {
    // Offset so that grid planes avoid the symmetry planes of the shapes.
    return Vec3(box.min() + Vec3(i + 0.137, j + 0.291, k + 0.413) * h);
  };
  std::vector<Vec3> out;
  const auto bisect = [&](Vec3 a, Vec3 b) {
    const bool ia = inside(s, a);
    for (int it = 0; it < 40; ++it) {
      const Vec3 m = 0.5 * (a + b);
      (inside(s, m) == ia ? a : b) = m;
    }
    out.push_back(0.5 * (a + b));
  };
  for (int i = 0; i < n.x(); ++i) {
    for (int j = 0; j < n.y(); ++j) {
      for (int k = 0; k < n.z(); ++k) {
        const Vec3 p = node(i, j, k);
        const bool ip = inside(s, p);
        for (const Vec3& q : {node(i + 1, j, k), node(i, j + 1, k), node(i, j, k + 1)}) {
          if (inside(s, q) != ip) bisect(p, q);
        }
      }
    }
  }
  return out;
}

double nearest(const std::vector<Vec3>& pts, const Vec3& p) {
  double best = INFINITY;
  for (const Vec3& q : pts) best = std::min(best, (q - p).squaredNorm());
  return std::sqrt(best);
}

class ConservativeBound : public ::testing::TestWithParam<ShapeKind> {};

TEST_P(ConservativeBound, NeverExceedsDistanceToSampledSurface) {
  const IndenterShape shape = IndenterShape::standard(GetParam());
  const double h = 0.2;
  const auto surface = sample_surface(shape, h);
  ASSERT_GT(surface.size(), 500u);
  const bool composite = shape.kind() == ShapeKind::kCross || shape.kind() == ShapeKind::kStar5;

  const IndenterShape bare(shape.kind(), shape.params(), std::nullopt);
  Eigen::AlignedBox3d box = bare.local_bounds();
  box.min().array() -= 3.0;
  box.max().array() += 3.0;
  Rng rng(static_cast<std::uint64_t>(shape.kind()) + 101);
  int checked_inside = 0;
  for (int t = 0; t < 300; ++t) {
    const Vec3 p(rng.uniform(box.min().x(), box.max().x()),
                 rng.uniform(box.min().y(), box.max().y()),
                 rng.uniform(box.min().z(), box.max().z()));
    const double d = sdf_eval(shape, p);
    const double sampled = nearest(surface, p);
    // Sampled points lie on the surface, so the true distance is at most this.
    EXPECT_LE(std::abs(d), sampled + 1e-6) << shape_kind_name(shape.kind()) << " at "
                                           << p.transpose();
    if (std::abs(d) > 1e-6) {
      EXPECT_EQ(d < 0.0, inside(shape, p)) << shape_kind_name(shape.kind()) << " at "
                                           << p.transpose();
    }
    if (!composite) {
      // Exact kinds also match from below, up to the sampling resolution.
      EXPECT_GE(std::abs(d), sampled - 2 * h) << shape_kind_name(shape.kind()) << " at "
                                              << p.transpose();
    }
    if (d < 0.0) ++checked_inside;
  }
  EXPECT_GT(checked_inside, 0);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, ConservativeBound, ::testing::ValuesIn(all_shape_kinds()),
                         [](const auto& info) {
                           std::string n(shape_kind_name(info.param));
                           std::replace(n.begin(), n.end(), '-', '_');
                           return n;
                         });

TEST(SdfEval, EllipsoidMatchesBruteForceDistance) {
  const Vec3 axes(5.0, 3.5, 2.5);
  const IndenterShape e(ShapeKind::kEllipsoid, {axes.x(), axes.y(), axes.z()}, std::nullopt);
  std::vector<Vec3> pts;
  const int nt = 600;
  const int np = 1200;
  for (int i = 0; i <= nt; ++i) {
    const double th = kPi * i / nt;
    for (int j = 0; j < np; ++j) {
      const double ph = 2 * kPi * j / np;
      pts.emplace_back(axes.x() * std::sin(th) * std::cos(ph), axes.y() * std::sin(th) * std::sin(ph),
                       axes.z() * std::cos(th));
    }
  }
  Rng rng(7);
  for (int t = 0; t < 40; ++t) {
    const Vec3 p(rng.uniform(-8, 8), rng.uniform(-6, 6), rng.uniform(-5, 5));
    const double d = sdf_eval(e, p);
    const double brute = nearest(pts, p);
    EXPECT_LE(std::abs(d), brute + 1e-9) << p.transpose();
    EXPECT_NEAR(std::abs(d), brute, 0.01) << p.transpose();
  }
  EXPECT_NEAR(sdf_eval(e, Vec3(0, 0, 0)), -2.5, 1e-9);
  EXPECT_NEAR(sdf_eval(e, Vec3(9, 0, 0)), 4.0, 1e-9);
}

// ---- poses ----

TEST(TransformPoint, Examples) {
  const Vec3 p(1, 2, 3);
  EXPECT_TRUE(transform_point(Pose::identity(), p).isApprox(p, 1e-15));
  EXPECT_LT((transform_point(Pose::from_translation(Vec3(1, 0, 0)), Vec3::Zero()) -
             Vec3(1, 0, 0)).norm(), 1e-15);
  const Pose quarter = Pose::from_axis_angle(Vec3::UnitZ(), kPi / 2);
  EXPECT_LT((transform_point(quarter, Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(TransformPoint, PreservesPairwiseDistances) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const Pose pose = random_pose(rng);
    const Vec3 a(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9));
    const Vec3 b(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9));
    const double before = (a - b).norm();
    const double after = (transform_point(pose, a) - transform_point(pose, b)).norm();
    EXPECT_NEAR(after, before, 1e-9 * std::max(before, 1.0));
  }
}

TEST(RelativePose, Examples) {
  Rng rng(5);
  const Pose a = random_pose(rng);
  EXPECT_LT(pose_gap(relative_pose(a, a), Pose::identity()), 1e-12);
  const Pose r = relative_pose(Pose::identity(), Pose::from_translation(Vec3(0, 0, 10)));
  EXPECT_LT(pose_gap(r, Pose::from_translation(Vec3(0, 0, 10))), 1e-15);
}

TEST(RelativePose, ComposeRoundTripOnThousandPairs) {
  Rng rng(2026);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    worst = std::max(worst, pose_gap(compose(a, relative_pose(a, b)), b));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Pose, QuaternionIsUnitAndCanonical) {
  Rng rng(9);
  for (int t = 0; t < 500; ++t) {
    const Quat q(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    const Pose p(Vec3::Zero(), q);
    const auto wxyz = p.quaternion_wxyz();
    EXPECT_NEAR(std::sqrt(wxyz[0] * wxyz[0] + wxyz[1] * wxyz[1] + wxyz[2] * wxyz[2] +
                          wxyz[3] * wxyz[3]),
                1.0, 1e-9);
    EXPECT_GE(wxyz[0], 0.0);
  }
  EXPECT_EQ(code_of([] { Pose(Vec3::Zero(), Quat(0, 0, 0, 0)); }), ErrorCode::kInvalidArgument);
}

TEST(Canonicalize, IsIdempotentAndPicksNonNegativeW) {
  Rng rng(13);
  for (int t = 0; t < 500; ++t) {
    const Quat q =
        Quat(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1))
            .normalized();
    const Quat c = canonicalize(q);
    const Quat cc = canonicalize(c);
    EXPECT_GE(c.w(), 0.0);
    EXPECT_EQ(c.coeffs(), cc.coeffs());
    EXPECT_TRUE(c.coeffs().isApprox(q.coeffs()) || c.coeffs().isApprox(-q.coeffs()));
  }
  const Quat neg(-0.5, 0.5, 0.5, 0.5);
  EXPECT_EQ(canonicalize(neg).coeffs(), Quat(0.5, -0.5, -0.5, -0.5).coeffs());
}

}  // namespace
}  // namespace vtsim
