#pragma once

// Manual (egocentric) command mapping and the PID position autopilot.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "blimpsim/actuation.hpp"
#include "blimpsim/errors.hpp"
#include "blimpsim/frames.hpp"
#include "blimpsim/vehicle.hpp"

namespace blimpsim {

enum class YawLaw {
  kSigned,  // K_psi * atan2(f_y, f_x): zero when aligned, carries turn direction
  kArccos,  // K_psi * acos(f_y / |f|): literal form, nonzero when aligned
};

struct PidGains {
  Vec3 kp{0.05, 0.05, 0.05};  // diagonal of K_p
  Vec3 kd{0.08, 0.08, 0.08};  // diagonal of K_d
  Vec3 ki{0.005, 0.005, 0.005};
  double k_yaw = 0.01;          // K_psi, N m / rad
  double integral_limit = 0.02; // N, bound on each axis of K_i * integral
  double k_roll = 0.005;        // N m / rad
  double k_roll_d = 0.002;      // N m s / rad
  double k_yaw_d = 0.01;        // N m s / rad, yaw-rate damping
  double yaw_fade_force = 0.01; // N; yaw authority fades below this horizontal force, 0 disables
  double heave_fraction = 0.5;  // share of total thrust the vertical channel may use
  YawLaw yaw_law = YawLaw::kSigned;

  bool operator==(const PidGains&) const = default;
};

inline void validate(const PidGains& g) {
  auto nonneg = [](const Vec3& v) { return v.allFinite() && v.minCoeff() >= 0.0; };
  if (!nonneg(g.kp) || !nonneg(g.kd) || !nonneg(g.ki))
    throw InvalidArgument("gains: kp, kd, ki entries must be >= 0");
  for (double v : {g.k_yaw, g.k_roll, g.k_roll_d, g.k_yaw_d, g.yaw_fade_force})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument("gains: k_yaw, k_roll, k_roll_d, k_yaw_d, yaw_fade_force must be >= 0");
  if (!(g.heave_fraction > 0.0 && g.heave_fraction <= 1.0))
    throw InvalidArgument("gains: heave_fraction must be in (0, 1]");
  if (!(g.integral_limit > 0.0) || !std::isfinite(g.integral_limit))
    throw InvalidArgument("gains: integral_limit must be > 0");
}

struct AutopilotState {
  Vec3 integral_error = Vec3::Zero();  // running integral of (r_d - r), m s
  Vec3 goal = Vec3::Zero();
  Vec3 goal_velocity = Vec3::Zero();

  bool operator==(const AutopilotState&) const = default;
};

// ---- manual ---------------------------------------------------------------

inline constexpr double kStickDeadZone = 0.05;

struct ManualInput {
  double axis_surge = 0.0;
  double axis_heave = 0.0;
  double axis_yaw = 0.0;
  double axis_roll = 0.0;

  bool operator==(const ManualInput&) const = default;
};

struct ManualLimits {
  double max_fx = 0.06;
  double max_fz = 0.06;
  double max_tau_x = 0.003;
  double max_tau_z = 0.003;

  bool operator==(const ManualLimits&) const = default;
};

inline void validate(const ManualInput& in) {
  for (double a : {in.axis_surge, in.axis_heave, in.axis_yaw, in.axis_roll})
    if (!(a >= -1.0 && a <= 1.0)) throw InvalidArgument("manual input axis outside [-1, 1]");
}

inline double apply_dead_zone(double axis) { return std::abs(axis) <= kStickDeadZone ? 0.0 : axis; }

inline WrenchSetpoint manual_map(const ManualInput& in, const ManualLimits& lim) {
  validate(in);
  return {apply_dead_zone(in.axis_surge) * lim.max_fx, apply_dead_zone(in.axis_heave) * lim.max_fz,
          apply_dead_zone(in.axis_roll) * lim.max_tau_x, apply_dead_zone(in.axis_yaw) * lim.max_tau_z};
}

// ---- autopilot ------------------------------------------------------------

// Integral advances by the rectangle rule before use; each axis is clamped
// so that |K_i * integral| <= integral_limit.
inline std::pair<Vec3, AutopilotState> pid_force(const BlimpState& state, const AutopilotState& ap,
                                                 const PidGains& gains, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("pid_force: dt must be > 0");
  const Vec3 error = ap.goal - state.position;
  AutopilotState next = ap;
  next.integral_error += error * dt;
  for (int i = 0; i < 3; ++i) {
    if (gains.ki[i] > 0.0) {
      const double bound = gains.integral_limit / gains.ki[i];
      next.integral_error[i] = std::clamp(next.integral_error[i], -bound, bound);
    }
  }
  const Vec3 force = gains.kp.cwiseProduct(error) +
                     gains.kd.cwiseProduct(ap.goal_velocity - state.velocity) +
                     gains.ki.cwiseProduct(next.integral_error);
  return {force, next};
}

inline Vec3 desired_force_body(const Vec3& f_desired_world, const EulerAngles& attitude) {
  return rotation_from_euler(attitude).transpose() * f_desired_world;
}

inline constexpr double kMinYawForce = 1e-6;

inline double yaw_compensation(const Vec3& f_body, const PidGains& gains) {
  const double norm = f_body.norm();
  if (!(norm > kMinYawForce)) return 0.0;
  if (gains.yaw_law == YawLaw::kArccos)
    return gains.k_yaw * std::acos(std::clamp(f_body.y() / norm, -1.0, 1.0));
  return gains.k_yaw * std::atan2(f_body.y(), f_body.x());
}

// Shrinks the horizontal part to the combined rotor thrust and the vertical
// part to the heave share, so a far-away goal does not tilt the body-frame
// command toward whichever channel saturates last.
inline Vec3 limit_to_thrust_envelope(const Vec3& f_world, const BlimpParams& params,
                                     double heave_fraction) {
  const double total = 2.0 * params.thrust_max;
  Vec3 f = f_world;
  const double horizontal = f.head<2>().norm();
  if (horizontal > total) f.head<2>() *= total / horizontal;
  f.z() = std::clamp(f.z(), -total * heave_fraction, total * heave_fraction);
  return f;
}

struct AutopilotOutput {
  ActuatorCommand command;
  AutopilotState state;
  WrenchSetpoint requested;  // before feasibility projection
  WrenchSetpoint applied;    // what the allocator was asked for
  Vec3 force_world = Vec3::Zero();
};

inline AutopilotOutput autopilot_step(const BlimpState& state, const AutopilotState& ap,
                                      const PidGains& gains, const BlimpParams& params, double dt) {
  AutopilotOutput out;
  std::tie(out.force_world, out.state) = pid_force(state, ap, gains, dt);
  const Vec3 f_body = desired_force_body(
      limit_to_thrust_envelope(out.force_world, params, gains.heave_fraction), state.attitude);

  double heading_torque = yaw_compensation(f_body, gains);
  if (gains.yaw_fade_force > 0.0)
    heading_torque *= std::min(1.0, f_body.head<2>().norm() / gains.yaw_fade_force);

  const Vec3& w = state.angular_velocity;
  out.requested.fx = f_body.x();
  out.requested.fz = f_body.z();
  out.requested.tau_z = heading_torque - gains.k_yaw_d * w.z();
  out.requested.tau_x = -gains.k_roll * state.attitude.phi - gains.k_roll_d * w.x();

  out.applied = project_to_feasible(out.requested, params, gains.heave_fraction);
  out.command = allocate(out.applied, params).command;
  return out;
}

}  // namespace blimpsim
