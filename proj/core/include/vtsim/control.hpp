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
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "vtsim/contact.hpp"
#include "vtsim/geometry.hpp"
#include "vtsim/sensor.hpp"

namespace vtsim {

struct ControlGains {
  double v_fast = 3.0;    // mm/s
  double v_slow = 1.5;    // mm/s
  double delta_th = 2.0;  // mm, target depth reading
  double dt = 0.1;        // s
  double d_max = 3.0;     // mm

  static ControlGains for_profile(const SensorProfile& profile);
  void validate() const;
};

// Closing speed for the current minimum depth reading: v_fast with no contact,
// otherwise min(|d_min - delta_th|, v_slow). Throws kDomain outside [0, d_max].
double grasp_velocity(const ControlGains& gains, double d_min);

enum class ActionKind : std::uint8_t {
  kGrasp = 0,
  kMove = 1,
  kPlace = 2,
  kProbe = 3,
  kRotate = 4,
};

std::string_view action_kind_name(ActionKind kind);
// Per-kind parameter layouts:
//   grasp  [delta_th, final_aperture, final_d_min, steps]
//   move   [dx, dy, dz, steps, cmd_u, cmd_v]
//   place  [descend, drop]
//   probe  [ax, ay, az, delta_th, final_d_min, steps, advance]
//   rotate [ax, ay, az, angle, steps, cmd_u, cmd_v, cmd_spin]
// cmd_* is the in-plane marker motion the action commands on finger 0, in
// gel mm and radians.
std::size_t action_param_count(ActionKind kind);

struct ActionRecord {
  ActionKind kind = ActionKind::kMove;
  std::vector<double> params;
  double t_start = 0.0;
  double t_end = 0.0;

  bool operator==(const ActionRecord&) const = default;
};

struct GripperState {
  double aperture = 0.0;  // mm between the two gel planes
  Pose wrist_pose;
  double time = 0.0;      // s
};

// Lightweight per-step reading; full contact maps stay inside GripperSim.
struct StepReading {
  double time = 0.0;
  double aperture = 0.0;
  double speed = 0.0;  // closing or advance speed used for this step, mm/s
  double d_min = 0.0;  // pooled over both fingers
  std::optional<Vec2> centroid;  // finger 0, gel mm
  double contact_area_mm2 = 0.0;  // finger 0
  double slip = 0.0;  // finger 0 slip_metric against the commanded motion
};

using Trajectory = std::vector<StepReading>;

struct GripperConfig {
  double aperture_max = 40.0;
  int max_steps = 400;
  // Stop band above delta_th; defaults to v_slow * dt.
  std::optional<double> settle_tol;

  void validate() const;
};

// Two-finger parallel gripper with gel sensors on both fingers.
//
// Finger 0 sits at +y/2 * aperture in the wrist frame with its gel normal
// along -y; finger 1 mirrors it. Closing splits the aperture change equally.
// Tangential wrist motion loads each contacting gel with a shear demand that
// is capped by mu * k_press * peak depth; the excess slips. A held object
// follows the wrist unless every contacting finger slips, in which case it
// lags by the smallest excess. Anchored objects never move.
class GripperSim {
 public:
  GripperSim(SensorProfile profile, ContactParams contact, ControlGains gains,
             GripperConfig config, GripperState initial);

  void set_object(const SceneObject& object, bool anchored);
  void clear_object();

  const SensorProfile& profile() const { return profile_; }
  const ControlGains& gains() const { return gains_; }
  const GripperState& state() const { return state_; }
  const std::optional<SceneObject>& object() const { return object_; }
  bool holding() const { return holding_; }
  bool anchored() const { return anchored_; }
  const std::vector<ActionRecord>& actions() const { return actions_; }

  Pose sensor_pose(int finger) const;
  const ContactState& contact(int finger) const { return contacts_[finger]; }
  double d_min() const;

  // Closes until the pooled d_min enters the stop band above delta_th.
  // Throws kNoContactTimeout if the budget runs out without any contact.
  Trajectory run_grasp(double delta_th);
  Trajectory move(const Vec3& delta, int steps);
  // Rotates the wrist about `axis` (world frame) through its own origin.
  Trajectory rotate(const Vec3& axis, double angle, int steps);
  // Advances the wrist along `approach_axis` under the same feedback law.
  Trajectory probe(const Vec3& approach_axis, double delta_th);
  // Lowers the held object onto z = 0, opens, and releases it.
  Trajectory place(double descend);

 private:
  struct Shear {
    Vec2 demand = Vec2::Zero();
    double spin = 0.0;
  };
  struct WristStep {
    Vec2 cmd = Vec2::Zero();  // finger 0
    double spin = 0.0;        // finger 0
  };

  Pose finger_pose(int finger, const Pose& wrist, double aperture) const;
  void refresh();
  double settle_tol() const;
  WristStep step_wrist(const Pose& new_wrist);
  StepReading reading(double speed, double slip) const;
  void record(ActionKind kind, std::vector<double> params, double t_start);
  Trajectory feedback_loop(double delta_th, const Vec3* advance_axis, double* travelled,
                           int* steps_taken);

  SensorProfile profile_;
  ContactParams contact_params_;
  ControlGains gains_;
  GripperConfig config_;
  GripperState state_;
  std::optional<SceneObject> object_;
  bool anchored_ = false;
  bool holding_ = false;
  std::array<Shear, 2> shear_{};
  std::array<ContactState, 2> contacts_;
  std::vector<ActionRecord> actions_;
};

// Lowest world z of the object surface, by column marching over its footprint.
double lowest_point_z(const SceneObject& object, double spacing = 0.25);

}  // namespace vtsim
