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

#include "vtsim/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "vtsim/error.hpp"

namespace vtsim {

// ----- gains and the feedback law -----

ControlGains ControlGains::for_profile(const SensorProfile& profile) {
  ControlGains g;
  g.d_max = profile.d_max;
  g.delta_th = profile.d_max - 0.5 * profile.max_indent;
  return g;
}

void ControlGains::validate() const {
  const auto bad = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "control gains: " + what);
  };
  if (!(v_slow > 0.0 && v_slow <= v_fast)) bad("need 0 < v_slow <= v_fast");
  if (!(d_max > 0.0)) bad("d_max must be positive");
  if (!(delta_th > 0.0 && delta_th < d_max)) bad("need 0 < delta_th < d_max");
  if (!(dt > 0.0)) bad("dt must be positive");
}

double grasp_velocity(const ControlGains& gains, double d_min) {
  if (!(d_min >= 0.0) || d_min > gains.d_max + 1e-9) {
    throw Error(ErrorCode::kDomain, "grasp_velocity: d_min " + std::to_string(d_min) +
                                        " outside [0, " + std::to_string(gains.d_max) + "]");
  }
  if (std::abs(d_min - gains.d_max) <= 1e-9) return gains.v_fast;
  return std::min(std::abs(d_min - gains.delta_th), gains.v_slow);
}

// ----- action records -----

std::string_view action_kind_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::kGrasp: return "grasp";
    case ActionKind::kMove: return "move";
    case ActionKind::kPlace: return "place";
    case ActionKind::kProbe: return "probe";
    case ActionKind::kRotate: return "rotate";
  }
  return "unknown";
}

std::size_t action_param_count(ActionKind kind) {
  switch (kind) {
    case ActionKind::kGrasp: return 4;
    case ActionKind::kMove: return 6;
    case ActionKind::kPlace: return 2;
    case ActionKind::kProbe: return 7;
    case ActionKind::kRotate: return 8;
  }
  throw Error(ErrorCode::kCorruptRecord, "unknown action kind");
}

void GripperConfig::validate() const {
  if (!(aperture_max > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gripper: aperture_max must be positive");
  }
  if (max_steps < 1) throw Error(ErrorCode::kInvalidArgument, "gripper: max_steps must be >= 1");
  if (settle_tol && !(*settle_tol >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gripper: settle_tol must be non-negative");
  }
}

// ----- gripper -----

namespace {

ContactState empty_contact(const SensorProfile& profile) {
  const DepthMap depth = DepthMap::zeros(PixelGrid::from_profile(profile));
  return contact_summary(profile, depth, MarkerField::at_rest(rest_markers(profile)));
}

double yaw_of(const Quat& q) {
  const Eigen::Matrix3d r = q.toRotationMatrix();
  return std::atan2(r(1, 0), r(0, 0));
}

}  // namespace

GripperSim::GripperSim(SensorProfile profile, ContactParams contact, ControlGains gains,
                       GripperConfig config, GripperState initial)
    : profile_(std::move(profile)),
      contact_params_(contact),
      gains_(gains),
      config_(config),
      state_(initial) {
  profile_.validate();
  contact_params_.validate();
  gains_.validate();
  config_.validate();
  if (!(state_.aperture >= 0.0 && state_.aperture <= config_.aperture_max)) {
    throw Error(ErrorCode::kInvalidArgument, "gripper: aperture outside [0, aperture_max]");
  }
  refresh();
}

void GripperSim::set_object(const SceneObject& object, bool anchored) {
  object_ = object;
  anchored_ = anchored;
  holding_ = false;
  shear_ = {};
  refresh();
}

void GripperSim::clear_object() {
  object_.reset();
  anchored_ = false;
  holding_ = false;
  shear_ = {};
  refresh();
}

Pose GripperSim::finger_pose(int finger, const Pose& wrist, double aperture) const {
  const double side = finger == 0 ? 1.0 : -1.0;
  const Pose mount(Vec3(0.0, side * 0.5 * aperture, 0.0),
                   Quat(Eigen::AngleAxisd(side * std::numbers::pi / 2, Vec3::UnitX())));
  return compose(wrist, mount);
}

Pose GripperSim::sensor_pose(int finger) const {
  return finger_pose(finger, state_.wrist_pose, state_.aperture);
}

double GripperSim::d_min() const { return std::min(contacts_[0].d_min, contacts_[1].d_min); }

double GripperSim::settle_tol() const {
  return config_.settle_tol ? *config_.settle_tol : gains_.v_slow * gains_.dt;
}

void GripperSim::refresh() {
  for (int k = 0; k < 2; ++k) {
    if (object_) {
      contacts_[k] = sense(profile_, *object_, sensor_pose(k), shear_[k].demand, shear_[k].spin,
                           contact_params_);
    } else {
      contacts_[k] = empty_contact(profile_);
    }
    if (contacts_[k].contact_area_mm2 <= 0.0) shear_[k] = Shear{};
  }
}

StepReading GripperSim::reading(double speed, double slip) const {
  StepReading r;
  r.time = state_.time;
  r.aperture = state_.aperture;
  r.speed = speed;
  r.d_min = d_min();
  r.centroid = contacts_[0].centroid;
  r.contact_area_mm2 = contacts_[0].contact_area_mm2;
  r.slip = slip;
  return r;
}

void GripperSim::record(ActionKind kind, std::vector<double> params, double t_start) {
  if (params.size() != action_param_count(kind)) {
    throw Error(ErrorCode::kInvariantViolation, "action parameter count mismatch");
  }
  actions_.push_back(ActionRecord{kind, std::move(params), t_start, state_.time});
}

GripperSim::WristStep GripperSim::step_wrist(const Pose& new_wrist) {
  WristStep out;
  const Pose old_wrist = state_.wrist_pose;
  const std::array<Pose, 2> old_sensor = {sensor_pose(0), sensor_pose(1)};
  state_.wrist_pose = new_wrist;

  std::array<double, 2> excess = {-1.0, -1.0};
  std::array<Vec3, 2> lag_world = {Vec3::Zero(), Vec3::Zero()};
  for (int k = 0; k < 2; ++k) {
    const Pose new_sensor = sensor_pose(k);
    const Pose rel = relative_pose(old_sensor[k], new_sensor);
    const Vec2 cmd = -rel.translation().head<2>();
    const double spin = -yaw_of(rel.rotation());
    if (k == 0) {
      out.cmd = cmd;
      out.spin = spin;
    }
    const ContactState& c = contacts_[k];
    if (!object_ || c.contact_area_mm2 <= 0.0) continue;
    Shear& s = shear_[k];
    s.demand += cmd;
    s.spin += spin;
    const double cap = profile_.friction_mu * contact_params_.k_press * c.depth.max();
    const double n = s.demand.norm();
    excess[k] = std::max(0.0, n - cap);
    if (excess[k] > 0.0) {
      const Vec2 dir = s.demand / n;
      s.demand = dir * cap;
      lag_world[k] = new_sensor.rotation() * Vec3(dir.x(), dir.y(), 0.0);
    }
    const double rho = std::sqrt(c.contact_area_mm2 / std::numbers::pi);
    const double spin_cap = cap / std::max(rho, 1e-9);
    s.spin = std::clamp(s.spin, -spin_cap, spin_cap);
  }

  if (object_ && holding_ && !anchored_) {
    Pose follow = compose(compose(new_wrist, old_wrist.inverse()), object_->pose);
    int contacting = 0, slipping = 0, worst = -1;
    for (int k = 0; k < 2; ++k) {
      if (excess[k] < 0.0) continue;
      ++contacting;
      if (excess[k] > 0.0) {
        ++slipping;
        if (worst < 0 || excess[k] < excess[worst]) worst = k;
      }
    }
    if (contacting > 0 && slipping == contacting) {
      follow = Pose(follow.translation() + excess[worst] * lag_world[worst], follow.rotation());
    }
    object_->pose = follow;
  }
  refresh();
  return out;
}

Trajectory GripperSim::feedback_loop(double delta_th, const Vec3* advance_axis,
                                     double* travelled, int* steps_taken) {
  ControlGains g = gains_;
  g.delta_th = delta_th;
  g.validate();
  const double tol = settle_tol();
  Trajectory traj;
  double moved = 0.0;
  int steps = 0;
  for (;;) {
    const double dmin = d_min();
    const bool in_contact = dmin < g.d_max;
    if (in_contact && dmin <= delta_th + tol) break;
    if (steps >= config_.max_steps) {
      if (!in_contact) {
        throw Error(ErrorCode::kNoContactTimeout,
                    "no contact after " + std::to_string(steps) + " control steps");
      }
      break;
    }
    const double v = grasp_velocity(g, dmin);
    if (advance_axis) {
      const Vec3 t = state_.wrist_pose.translation() + v * g.dt * *advance_axis;
      state_.wrist_pose = Pose(t, state_.wrist_pose.rotation());
      moved += v * g.dt;
    } else {
      const double next = std::max(0.0, state_.aperture - v * g.dt);
      moved += state_.aperture - next;
      state_.aperture = next;
    }
    state_.time += g.dt;
    ++steps;
    refresh();
    traj.push_back(reading(v, 0.0));
  }
  *travelled = moved;
  *steps_taken = steps;
  return traj;
}

Trajectory GripperSim::run_grasp(double delta_th) {
  const double t0 = state_.time;
  double moved = 0.0;
  int steps = 0;
  Trajectory traj = feedback_loop(delta_th, nullptr, &moved, &steps);
  holding_ = object_ && !anchored_ && contacts_[0].contact_area_mm2 > 0.0 &&
             contacts_[1].contact_area_mm2 > 0.0;
  record(ActionKind::kGrasp, {delta_th, state_.aperture, d_min(), static_cast<double>(steps)}, t0);
  return traj;
}

Trajectory GripperSim::probe(const Vec3& approach_axis, double delta_th) {
  const double n = approach_axis.norm();
  if (!(n > 1e-12)) throw Error(ErrorCode::kInvalidArgument, "probe: zero approach axis");
  const Vec3 axis = approach_axis / n;
  const double t0 = state_.time;
  double moved = 0.0;
  int steps = 0;
  Trajectory traj = feedback_loop(delta_th, &axis, &moved, &steps);
  record(ActionKind::kProbe,
         {axis.x(), axis.y(), axis.z(), delta_th, d_min(), static_cast<double>(steps), moved}, t0);
  return traj;
}

Trajectory GripperSim::move(const Vec3& delta, int steps) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "move: steps must be >= 1");
  const double t0 = state_.time;
  const Vec3 start = state_.wrist_pose.translation();
  const Quat rot = state_.wrist_pose.rotation();
  Trajectory traj;
  Vec2 cmd_total = Vec2::Zero();
  for (int s = 1; s <= steps; ++s) {
    const MarkerField prev = contacts_[0].markers;
    const WristStep w = step_wrist(Pose(start + delta * (static_cast<double>(s) / steps), rot));
    cmd_total += w.cmd;
    state_.time += gains_.dt;
    const auto& cur = contacts_[0];
    const double slip =
        slip_metric(prev, cur.markers, w.cmd, w.spin, cur.centroid.value_or(Vec2::Zero()));
    traj.push_back(reading(delta.norm() / (steps * gains_.dt), slip));
  }
  record(ActionKind::kMove,
         {delta.x(), delta.y(), delta.z(), static_cast<double>(steps), cmd_total.x(),
          cmd_total.y()},
         t0);
  return traj;
}

Trajectory GripperSim::rotate(const Vec3& axis, double angle, int steps) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "rotate: steps must be >= 1");
  const double n = axis.norm();
  if (!(std::abs(n - 1.0) <= 1e-6)) {
    throw Error(ErrorCode::kInvalidArgument, "rotate: axis must be a unit vector");
  }
  const Vec3 u = axis / n;
  const double t0 = state_.time;
  const Vec3 t = state_.wrist_pose.translation();
  const Quat r0 = state_.wrist_pose.rotation();
  Trajectory traj;
  Vec2 cmd_total = Vec2::Zero();
  double spin_total = 0.0;
  for (int s = 1; s <= steps; ++s) {
    const MarkerField prev = contacts_[0].markers;
    const Quat r = Quat(Eigen::AngleAxisd(angle * (static_cast<double>(s) / steps), u)) * r0;
    const WristStep w = step_wrist(Pose(t, r));
    cmd_total += w.cmd;
    spin_total += w.spin;
    state_.time += gains_.dt;
    const auto& cur = contacts_[0];
    const double slip =
        slip_metric(prev, cur.markers, w.cmd, w.spin, cur.centroid.value_or(Vec2::Zero()));
    traj.push_back(reading(std::abs(angle) / (steps * gains_.dt), slip));
  }
  record(ActionKind::kRotate,
         {u.x(), u.y(), u.z(), angle, static_cast<double>(steps), cmd_total.x(), cmd_total.y(),
          spin_total},
         t0);
  return traj;
}

Trajectory GripperSim::place(double descend) {
  if (!holding_ || !object_) throw Error(ErrorCode::kInvalidArgument, "place: no object held");
  if (!(descend >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "place: descend must be >= 0");
  const double t0 = state_.time;
  const double gap = std::max(0.0, lowest_point_z(*object_));
  const double lowered = std::min(descend, gap);
  const double drop = gap - lowered;
  const Vec3 down(0.0, 0.0, -lowered);
  state_.wrist_pose = Pose(state_.wrist_pose.translation() + down, state_.wrist_pose.rotation());
  object_->pose = Pose(object_->pose.translation() + down - Vec3(0.0, 0.0, drop),
                       object_->pose.rotation());
  state_.aperture = config_.aperture_max;
  holding_ = false;
  shear_ = {};
  state_.time += gains_.dt;
  refresh();
  Trajectory traj{reading(lowered / gains_.dt, 0.0)};
  record(ActionKind::kPlace, {descend, drop}, t0);
  return traj;
}

double lowest_point_z(const SceneObject& object, double spacing) {
  const auto box = object.world_bounds();
  const Vec2 c = object.pose.translation().head<2>();
  const double reach = std::max({std::abs(box.min().x() - c.x()), std::abs(box.max().x() - c.x()),
                                 std::abs(box.min().y() - c.y()), std::abs(box.max().y() - c.y())});
  const int half = static_cast<int>(std::ceil(reach / spacing));
  const double z_start = box.min().z() - 1e-3;
  const double z_stop = box.max().z() + 1e-3;
  double lowest = std::numeric_limits<double>::infinity();
  for (int a = -half; a <= half; ++a) {
    for (int b = -half; b <= half; ++b) {
      const double x = c.x() + a * spacing;
      const double y = c.y() + b * spacing;
      const auto f = [&](double z) { return object.sdf_world(Vec3(x, y, z)); };
      double z = z_start;
      double fz = f(z);
      if (fz <= 0.0) {
        lowest = std::min(lowest, z);
        continue;
      }
      while (z < std::min(z_stop, lowest)) {
        const double zn = z + std::max(fz, 1e-4);
        const double fn = f(zn);
        if (fn <= 0.0) {
          double lo = z, hi = zn;
          for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
            const double mid = 0.5 * (lo + hi);
            (f(mid) <= 0.0 ? hi : lo) = mid;
          }
          lowest = std::min(lowest, hi);
          break;
        }
        z = zn;
        fz = fn;
      }
    }
  }
  return std::isfinite(lowest) ? lowest : box.min().z();
}

}  // namespace vtsim
