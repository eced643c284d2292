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

#include "vtsim/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vtsim/error.hpp"

namespace vtsim {

namespace {

constexpr double kSnapZero = 1e-9;

Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

int reflect(int k, int n) {
  while (k < 0 || k >= n) {
    if (k < 0) k = -k - 1;
    if (k >= n) k = 2 * n - k - 1;
  }
  return k;
}

std::vector<double> gaussian_kernel(double sigma_px) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_px)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    k[t + radius] = std::exp(-0.5 * (t * t) / (sigma_px * sigma_px));
    sum += k[t + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

struct PixelRect {
  int i0 = 0, i1 = -1, j0 = 0, j1 = -1;  // inclusive
  bool empty() const { return i1 < i0 || j1 < j0; }
};

PixelRect nonzero_rect(const DepthMap& d) {
  PixelRect r{d.grid.width, -1, d.grid.height, -1};
  for (int j = 0; j < d.grid.height; ++j) {
    for (int i = 0; i < d.grid.width; ++i) {
      if (d.at(i, j) != 0.0) {
        r.i0 = std::min(r.i0, i);
        r.i1 = std::max(r.i1, i);
        r.j0 = std::min(r.j0, j);
        r.j1 = std::max(r.j1, j);
      }
    }
  }
  return r;
}

}  // namespace

// ----- DepthMap / MarkerField -----

DepthMap DepthMap::zeros(const PixelGrid& grid) {
  return DepthMap{grid, std::vector<double>(grid.size(), 0.0)};
}

double DepthMap::max() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

double DepthMap::sample(const Vec2& gel) const {
  const double u = std::clamp(gel.x() / grid.mm_per_px_x + 0.5 * grid.width - 0.5, 0.0,
                              static_cast<double>(grid.width - 1));
  const double v = std::clamp(gel.y() / grid.mm_per_px_y + 0.5 * grid.height - 0.5, 0.0,
                              static_cast<double>(grid.height - 1));
  const int i0 = std::min(static_cast<int>(u), grid.width - 1);
  const int j0 = std::min(static_cast<int>(v), grid.height - 1);
  const int i1 = std::min(i0 + 1, grid.width - 1);
  const int j1 = std::min(j0 + 1, grid.height - 1);
  const double fu = u - i0;
  const double fv = v - j0;
  return (1 - fu) * (1 - fv) * at(i0, j0) + fu * (1 - fv) * at(i1, j0) +
         (1 - fu) * fv * at(i0, j1) + fu * fv * at(i1, j1);
}

Vec2 DepthMap::gradient(const Vec2& gel) const {
  const double hx = grid.mm_per_px_x;
  const double hy = grid.mm_per_px_y;
  return Vec2((sample(gel + Vec2(hx, 0)) - sample(gel - Vec2(hx, 0))) / (2 * hx),
              (sample(gel + Vec2(0, hy)) - sample(gel - Vec2(0, hy))) / (2 * hy));
}

MarkerField MarkerField::at_rest(std::vector<Vec2> rest) {
  MarkerField f;
  f.displaced = rest;
  f.stuck.assign(rest.size(), 1);
  f.contact.assign(rest.size(), 0);
  f.rest = std::move(rest);
  return f;
}

void ContactParams::validate() const {
  const auto bad = [](const char* what) {
    throw Error(ErrorCode::kInvalidArgument, std::string("contact params: ") + what);
  };
  if (!(k_bulge >= 0.0)) bad("k_bulge must be non-negative");
  if (!(k_press > 0.0)) bad("k_press must be positive");
  if (!(decay_length > 0.0)) bad("decay_length must be positive");
  if (!(max_marker_disp > 0.0)) bad("max_marker_disp must be positive");
  if (!(raymarch_tol > 0.0)) bad("raymarch_tol must be positive");
  if (!(raymarch_min_step > 0.0)) bad("raymarch_min_step must be positive");
  if (!(raymarch_margin >= 0.0)) bad("raymarch_margin must be non-negative");
  if (raymarch_max_steps < 1) bad("raymarch_max_steps must be at least 1");
}

// ----- raw penetration -----

namespace {

constexpr double kSurfaceEps = 1e-9;

// Illinois false position on a bracket with fa > 0 >= fb.
template <typename F>
double refine_crossing(const F& f, double a, double fa, double b, double fb,
                       const ContactParams& params) {
  double wa = fa, wb = fb;
  int side = 0;
  for (int it = 0; it < 100 && b - a > params.raymarch_tol; ++it) {
    double mid = a + wa / (wa - wb) * (b - a);
    if (!(mid > a && mid < b)) mid = 0.5 * (a + b);
    const double fm = f(mid);
    if (std::abs(fm) <= kSurfaceEps) return mid;
    if (fm < 0.0) {
      b = mid, fb = wb = fm;
      if (side == -1) wa *= 0.5;
      side = -1;
    } else {
      a = mid, fa = wa = fm;
      if (side == 1) wb *= 0.5;
      side = 1;
    }
  }
  return std::clamp(a + fa / (fa - fb) * (b - a), a, b);
}

}  // namespace

DepthMap raw_penetration(const SensorProfile& profile, const SceneObject& object,
                         const Pose& sensor_pose, const ContactParams& params) {
  const PixelGrid grid = PixelGrid::from_profile(profile);
  DepthMap out = DepthMap::zeros(grid);
  const double m = profile.max_indent;
  const double z_lo = -(m + params.raymarch_margin);

  // Object-in-sensor pose and the map back into the shape frame.
  const Pose obj_in_sensor = relative_pose(sensor_pose, object.pose);
  const Pose sensor_to_local = obj_in_sensor.inverse();
  const IndenterShape& shape = object.shape;

  // Candidate pixel rectangle from the parts that reach the rest plane.
  std::vector<Eigen::AlignedBox3d> parts;
  parts.push_back(IndenterShape(shape.kind(), shape.params(), std::nullopt).local_bounds());
  if (shape.base()) {
    const double zmin = shape.mount_height();
    const auto& b = *shape.base();
    parts.emplace_back(Vec3(-b.width / 2, -b.depth / 2, zmin - b.height),
                       Vec3(b.width / 2, b.depth / 2, zmin));
  }
  PixelRect rect{grid.width, -1, grid.height, -1};
  for (const auto& box : parts) {
    Eigen::AlignedBox3d s;
    for (int c = 0; c < 8; ++c) {
      s.extend(transform_point(obj_in_sensor,
                               box.corner(static_cast<Eigen::AlignedBox3d::CornerType>(c))));
    }
    if (s.min().z() > 0.0) continue;
    const Vec2 lo = grid.to_pixel_unchecked(s.min().head<2>());
    const Vec2 hi = grid.to_pixel_unchecked(s.max().head<2>());
    rect.i0 = std::min(rect.i0, std::max(0, static_cast<int>(std::floor(lo.x() - 0.5))));
    rect.i1 = std::max(rect.i1, std::min(grid.width - 1, static_cast<int>(std::ceil(hi.x()))));
    rect.j0 = std::min(rect.j0, std::max(0, static_cast<int>(std::floor(lo.y() - 0.5))));
    rect.j1 = std::max(rect.j1, std::min(grid.height - 1, static_cast<int>(std::ceil(hi.y()))));
  }
  if (rect.empty()) return out;

  const double half_span = -0.5 * z_lo;
  constexpr int kTile = 8;
  const double tile_radius = 0.5 * kTile * std::hypot(grid.mm_per_px_x, grid.mm_per_px_y);
  std::vector<std::uint8_t> live(grid.size(), 0);
  for (int tj = rect.j0; tj <= rect.j1; tj += kTile) {
    for (int ti = rect.i0; ti <= rect.i1; ti += kTile) {
      const int i1 = std::min(ti + kTile - 1, rect.i1);
      const int j1 = std::min(tj + kTile - 1, rect.j1);
      const Vec2 c = 0.5 * (grid.pixel_center(ti, tj) + grid.pixel_center(i1, j1));
      const Vec3 p(c.x(), c.y(), -half_span);
      if (indenter_sdf(shape, transform_point(sensor_to_local, p)) > half_span + tile_radius) {
        continue;
      }
      for (int j = tj; j <= j1; ++j) {
        for (int i = ti; i <= i1; ++i) live[static_cast<std::size_t>(j) * grid.width + i] = 1;
      }
    }
  }
  for (int j = rect.j0; j <= rect.j1; ++j) {
    for (int i = rect.i0; i <= rect.i1; ++i) {
      if (!live[static_cast<std::size_t>(j) * grid.width + i]) continue;
      const Vec2 xy = grid.pixel_center(i, j);
      const auto f = [&](double z) {
        return indenter_sdf(shape, transform_point(sensor_to_local, Vec3(xy.x(), xy.y(), z)));
      };
      if (f(-half_span) > half_span) continue;

      double z = z_lo;
      double fz = f(z);
      if (fz <= 0.0) {
        out.at(i, j) = m;
        continue;
      }
      double z_hit = 0.0;
      bool hit = false;
      for (int step = 0;; ++step) {
        if (step >= params.raymarch_max_steps) {
          throw Error(ErrorCode::kNonconvergentRaymarch,
                      "ray march exceeded " + std::to_string(params.raymarch_max_steps) +
                          " steps at pixel (" + std::to_string(i) + ", " + std::to_string(j) +
                          ")");
        }
        const double z_next = std::min(z + std::max(fz, params.raymarch_min_step), 0.0);
        const double f_next = f(z_next);
        if (f_next <= kSurfaceEps) {
          hit = true;
          z_hit = f_next >= -kSurfaceEps ? z_next : refine_crossing(f, z, fz, z_next, f_next, params);
          break;
        }
        if (z_next >= 0.0) break;
        z = z_next;
        fz = f_next;
      }
      if (!hit) continue;
      const double pen = std::clamp(-z_hit, 0.0, m);
      out.at(i, j) = pen < kSnapZero ? 0.0 : pen;
    }
  }
  return out;
}

// ----- elastic smoothing -----

DepthMap elastic_smooth(const SensorProfile& profile, const DepthMap& raw) {
  const PixelGrid& g = raw.grid;
  const PixelRect nz = nonzero_rect(raw);
  if (nz.empty()) return raw;

  const auto kx = gaussian_kernel(profile.elastic_sigma / g.mm_per_px_x);
  const auto ky = gaussian_kernel(profile.elastic_sigma / g.mm_per_px_y);
  const int rx = static_cast<int>(kx.size() / 2);
  const int ry = static_cast<int>(ky.size() / 2);
  const PixelRect ex{std::max(0, nz.i0 - rx), std::min(g.width - 1, nz.i1 + rx),
                     std::max(0, nz.j0 - ry), std::min(g.height - 1, nz.j1 + ry)};

  // Rows outside [nz.j0, nz.j1] are identically zero after the row pass.
  std::vector<double> tmp(g.size(), 0.0);
  for (int j = nz.j0; j <= nz.j1; ++j) {
    for (int i = ex.i0; i <= ex.i1; ++i) {
      double acc = 0.0;
      for (int t = -rx; t <= rx; ++t) acc += kx[t + rx] * raw.at(reflect(i + t, g.width), j);
      tmp[static_cast<std::size_t>(j) * g.width + i] = acc;
    }
  }
  DepthMap out = DepthMap::zeros(g);
  const double m = profile.max_indent;
  for (int j = ex.j0; j <= ex.j1; ++j) {
    for (int i = ex.i0; i <= ex.i1; ++i) {
      double acc = 0.0;
      for (int t = -ry; t <= ry; ++t) {
        acc += ky[t + ry] * tmp[static_cast<std::size_t>(reflect(j + t, g.height)) * g.width + i];
      }
      const double v = std::clamp(acc, 0.0, m);
      out.at(i, j) = v < kSnapZero ? 0.0 : v;
    }
  }
  return out;
}

std::optional<Vec2> depth_centroid(const DepthMap& depth) {
  double w = 0.0;
  Vec2 acc = Vec2::Zero();
  for (int j = 0; j < depth.grid.height; ++j) {
    for (int i = 0; i < depth.grid.width; ++i) {
      const double d = depth.at(i, j);
      if (d > 0.0) {
        w += d;
        acc += d * depth.grid.pixel_center(i, j);
      }
    }
  }
  if (w <= 0.0) return std::nullopt;
  return acc / w;
}

// ----- markers -----

MarkerField marker_displace(const SensorProfile& profile, const DepthMap& depth,
                            const Vec2& tangential, double spin,
                            const std::optional<Vec2>& centroid, const ContactParams& params) {
  MarkerField f = MarkerField::at_rest(rest_markers(profile));
  const std::size_t n = f.size();
  std::vector<double> local_depth(n);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    local_depth[i] = depth.sample(f.rest[i]);
    f.contact[i] = local_depth[i] > 0.0 ? 1 : 0;
    any = any || f.contact[i];
  }
  if (!any) return f;

  const Vec2 c = centroid ? *centroid : depth_centroid(depth).value_or(Vec2::Zero());
  std::vector<Vec2> disp(n, Vec2::Zero());
  for (std::size_t i = 0; i < n; ++i) {
    if (!f.contact[i]) continue;
    const Vec2 g = tangential + spin * perp(f.rest[i] - c);
    const double cap = profile.friction_mu * params.k_press * local_depth[i];
    const double gn = g.norm();
    const Vec2 shear = gn > cap ? Vec2(g * (cap / gn)) : g;
    f.stuck[i] = gn <= cap ? 1 : 0;
    disp[i] = -params.k_bulge * depth.gradient(f.rest[i]) + shear;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (f.contact[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (f.contact[k]) best = std::min(best, (f.rest[k] - f.rest[i]).norm());
    }
    // Average over equidistant neighbors keeps symmetric fields symmetric.
    Vec2 acc = Vec2::Zero();
    int count = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (f.contact[k] && (f.rest[k] - f.rest[i]).norm() <= best + 1e-9) {
        acc += disp[k];
        ++count;
      }
    }
    disp[i] = std::exp(-best / params.decay_length) * acc / count;
  }

  const double hw = 0.5 * depth.grid.gel_width();
  const double hh = 0.5 * depth.grid.gel_height();
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 d = disp[i];
    const double dn = d.norm();
    if (dn > params.max_marker_disp) d *= params.max_marker_disp / dn;
    Vec2 p = f.rest[i] + d;
    p.x() = std::clamp(p.x(), -hw, hw);
    p.y() = std::clamp(p.y(), -hh, hh);
    f.displaced[i] = p;
  }
  return f;
}

ContactState contact_summary(const SensorProfile& profile, const DepthMap& depth,
                             const MarkerField& markers) {
  ContactState s;
  s.depth = depth;
  s.markers = markers;
  s.d_min = profile.d_max - depth.max();
  s.centroid = depth_centroid(depth);
  std::size_t count = 0;
  for (double v : depth.values) count += v > 0.0 ? 1 : 0;
  s.contact_area_mm2 = count * depth.grid.pixel_area_mm2();
  return s;
}

double slip_metric(const MarkerField& prev, const MarkerField& cur, const Vec2& commanded) {
  return slip_metric(prev, cur, commanded, 0.0, Vec2::Zero());
}

double slip_metric(const MarkerField& prev, const MarkerField& cur, const Vec2& commanded,
                   double spin, const Vec2& centroid) {
  if (prev.size() != cur.size() || prev.displaced.size() != cur.displaced.size() ||
      cur.contact.size() != cur.size()) {
    throw Error(ErrorCode::kMarkerCountMismatch,
                "slip_metric: marker counts differ (" + std::to_string(prev.size()) + " vs " +
                    std::to_string(cur.size()) + ")");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (!cur.contact[i]) continue;
    const Vec2 expected = commanded + spin * perp(cur.rest[i] - centroid);
    sum += ((cur.displaced[i] - prev.displaced[i]) - expected).norm();
    ++count;
  }
  return count == 0 ? 0.0 : sum / count;
}

ContactState sense(const SensorProfile& profile, const SceneObject& object,
                   const Pose& sensor_pose, const Vec2& tangential, double spin,
                   const ContactParams& params) {
  const DepthMap depth = elastic_smooth(profile, raw_penetration(profile, object, sensor_pose, params));
  const auto c = depth_centroid(depth);
  return contact_summary(profile, depth, marker_displace(profile, depth, tangential, spin, c, params));
}

}  // namespace vtsim
