#pragma once

// Mapping between actuator space (two rotor thrusts, two servo angles) and the
// egocentric wrench command space.
//
// Evaluating the thruster torque sum with p1 = (0, -d, l_b), p2 = (0, d, l_b)
// gives
//   tau_x = d (f2z - f1z),   tau_y = l_b fx,   tau_z = d (f1x - f2x)
// so the inverse splits the torque shares as
//   f1x = (fx + tau_z/d)/2,  f2x = (fx - tau_z/d)/2,
//   f1z = (fz - tau_x/d)/2,  f2z = (fz + tau_x/d)/2.
// The commonly quoted form with the opposite torque signs negates tau_x and
// tau_z on the round trip; actuation_test demonstrates that by sampling.

#include <algorithm>
#include <cmath>
#include <string>

#include "blimpsim/frames.hpp"
#include "blimpsim/vehicle.hpp"

namespace blimpsim {

struct ActuatorCommand {
  double f1 = 0.0;      // N
  double f2 = 0.0;      // N
  double theta1 = 0.0;  // rad
  double theta2 = 0.0;  // rad

  bool operator==(const ActuatorCommand&) const = default;
};

// Egocentric command, all in {B}.
struct WrenchSetpoint {
  double fx = 0.0;
  double fz = 0.0;
  double tau_x = 0.0;
  double tau_z = 0.0;

  bool operator==(const WrenchSetpoint&) const = default;

  WrenchSetpoint scaled(double k) const { return {fx * k, fz * k, tau_x * k, tau_z * k}; }
};

struct BodyWrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
};

inline Vec3 thrust_direction(double theta) { return {std::cos(theta), 0.0, std::sin(theta)}; }

inline BodyWrench forward_mix(const ActuatorCommand& cmd, const BlimpParams& params) {
  const double f[2] = {cmd.f1, cmd.f2};
  const double th[2] = {cmd.theta1, cmd.theta2};
  BodyWrench w;
  for (int i = 0; i < 2; ++i) {
    const Vec3 dir = thrust_direction(th[i]);
    w.force += f[i] * dir;
    w.torque += f[i] * params.thruster_position(i).cross(dir);
  }
  return w;
}

inline WrenchSetpoint to_setpoint(const BodyWrench& w) {
  return {w.force.x(), w.force.z(), w.torque.x(), w.torque.z()};
}

inline ActuatorCommand saturate(const ActuatorCommand& cmd, const BlimpParams& params) {
  const auto [lo, hi] = params.servo_range;
  return {std::clamp(cmd.f1, 0.0, params.thrust_max), std::clamp(cmd.f2, 0.0, params.thrust_max),
          std::clamp(cmd.theta1, lo, hi), std::clamp(cmd.theta2, lo, hi)};
}

struct AllocationResult {
  ActuatorCommand command;   // saturated, always safe to apply
  ActuatorCommand unclamped; // exact inverse before saturation
  bool feasible = true;
  // requested minus what the saturated command actually produces
  WrenchSetpoint residual{};
  std::string reason;
};

// Per-rotor (x, z) force components that realize the setpoint.
struct RotorComponents {
  double f1x, f2x, f1z, f2z;
};

inline RotorComponents rotor_components(const WrenchSetpoint& w, double d) {
  const double yaw_share = w.tau_z / d;
  const double roll_share = w.tau_x / d;
  return {0.5 * (w.fx + yaw_share), 0.5 * (w.fx - yaw_share), 0.5 * (w.fz - roll_share),
          0.5 * (w.fz + roll_share)};
}

inline AllocationResult allocate(const WrenchSetpoint& w, const BlimpParams& params) {
  if (!std::isfinite(w.fx) || !std::isfinite(w.fz) || !std::isfinite(w.tau_x) ||
      !std::isfinite(w.tau_z))
    throw InvalidArgument("allocate: non-finite wrench setpoint");
  if (!(params.thruster_offset_lateral > 0.0))
    throw InvalidArgument("allocate: thruster_offset_lateral must be > 0");

  const RotorComponents c = rotor_components(w, params.thruster_offset_lateral);
  auto polar = [](double fx, double fz, double& f, double& theta) {
    f = std::hypot(fx, fz);
    theta = f == 0.0 ? 0.0 : std::atan2(fz, fx);
  };

  AllocationResult r;
  polar(c.f1x, c.f1z, r.unclamped.f1, r.unclamped.theta1);
  polar(c.f2x, c.f2z, r.unclamped.f2, r.unclamped.theta2);

  constexpr double kSlack = 1e-12;
  const double fmax = params.thrust_max * (1.0 + kSlack);
  const auto [lo, hi] = params.servo_range;
  auto angle_ok = [&](double th) { return th >= lo - kSlack && th <= hi + kSlack; };
  if (r.unclamped.f1 > fmax || r.unclamped.f2 > fmax) {
    r.feasible = false;
    r.reason = "rotor thrust exceeds thrust_max";
  } else if (!angle_ok(r.unclamped.theta1) || !angle_ok(r.unclamped.theta2)) {
    r.feasible = false;
    r.reason = "servo angle outside servo_range";
  }

  r.command = saturate(r.unclamped, params);
  const WrenchSetpoint got = to_setpoint(forward_mix(r.command, params));
  r.residual = {w.fx - got.fx, w.fz - got.fz, w.tau_x - got.tau_x, w.tau_z - got.tau_z};
  return r;
}

// Closest setpoint the two unidirectional rotors can produce exactly, with
// priority roll > heave > yaw > surge. Surge is raised to at least
// |tau_z|/d when needed, since yaw torque can only come from forward thrust
// differences. heave_fraction caps the share of the total thrust the
// vertical channel may claim so surge and yaw keep some authority during
// large altitude corrections. Assumes the servos reach +-pi/2.
inline WrenchSetpoint project_to_feasible(const WrenchSetpoint& w, const BlimpParams& params,
                                          double heave_fraction = 1.0) {
  const double d = params.thruster_offset_lateral;
  const double t_max = params.thrust_max;

  const double roll_share = std::clamp(w.tau_x / d, -2.0 * t_max, 2.0 * t_max);
  const double heave_room =
      std::min(2.0 * t_max - std::abs(roll_share), 2.0 * t_max * heave_fraction);
  const double fz = std::clamp(w.fz, -heave_room, heave_room);
  const double f1z = 0.5 * (fz - roll_share);
  const double f2z = 0.5 * (fz + roll_share);

  // horizontal budget left on each rotor
  const double b1 = std::sqrt(std::max(0.0, t_max * t_max - f1z * f1z));
  const double b2 = std::sqrt(std::max(0.0, t_max * t_max - f2z * f2z));

  const double yaw_share = std::clamp(w.tau_z / d, -b2, b1);
  const double surge_hi = std::max(std::abs(yaw_share), std::min(2.0 * b1 - yaw_share, 2.0 * b2 + yaw_share));
  const double fx = std::clamp(w.fx, std::abs(yaw_share), surge_hi);

  return {fx, fz, roll_share * d, yaw_share * d};
}

}  // namespace blimpsim
