#pragma once

// Newton-Euler rigid-body dynamics of the blimp with buoyancy, gravity and
// optional quadratic drag, plus fixed-step integration.
//
//   m r_ddot               = R f + f_e + f_drag
//   J w_dot + w x (J w)    = tau + tau_e
//
// f and tau are the thruster wrench in {B}; f_e = (0, 0, f_b - m g) in {W}.
// The buoyancy torque is evaluated in {B}: arm (0, 0, l) crossed with the
// buoyant force rotated into the body, R^T (0, 0, f_b). This equals
// R^T ((R (0,0,l)) x (0,0,f_b)).

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "blimpsim/actuation.hpp"
#include "blimpsim/frames.hpp"
#include "blimpsim/vehicle.hpp"

namespace blimpsim {

inline constexpr double kDefaultDragCoefficient = 0.4;
inline constexpr double kMaxTimeStep = 0.05;

enum class IntegratorKind { kSemiImplicitEuler, kRk4 };

class NonFiniteStateError : public std::runtime_error {
 public:
  explicit NonFiniteStateError(const BlimpState& last_good)
      : std::runtime_error("state became non-finite at t = " + std::to_string(last_good.time)),
        last_good_(last_good) {}
  const BlimpState& last_good() const noexcept { return last_good_; }

 private:
  BlimpState last_good_;
};

struct StateDerivative {
  Vec3 d_position = Vec3::Zero();
  Vec3 d_velocity = Vec3::Zero();
  Vec3 d_attitude = Vec3::Zero();  // (phi_dot, theta_dot, psi_dot)
  Vec3 d_angular_velocity = Vec3::Zero();
};

// Air the vehicle moves through during one step.
struct Ambient {
  Vec3 wind_velocity = Vec3::Zero();  // {W}
  bool drag_enabled = false;
  double drag_coefficient = kDefaultDragCoefficient;
  double air_density = kSeaLevelAirDensity;
  Vec3 extra_force = Vec3::Zero();  // {W}, e.g. test disturbances
};

struct ExternalWrench {
  Vec3 force_world = Vec3::Zero();
  Vec3 torque_body = Vec3::Zero();
};

inline ExternalWrench external_wrench(const BlimpState& state, const BlimpParams& params) {
  const Mat3 r = rotation_from_euler(state.attitude);
  const Vec3 lift{0.0, 0.0, params.buoyancy_force};
  const Vec3 arm{0.0, 0.0, params.buoyancy_offset};
  ExternalWrench w;
  w.force_world = {0.0, 0.0, params.buoyancy_force - params.mass_total * params.gravity};
  w.torque_body = arm.cross(r.transpose() * lift);
  return w;
}

// Projected areas of the envelope normal to each world axis.
inline Vec3 envelope_cross_sections(const BlimpParams& params) {
  const Vec3& s = params.envelope_semi_axes;
  return std::numbers::pi * Vec3{s.y() * s.z(), s.x() * s.z(), s.x() * s.y()};
}

inline Vec3 drag_force(const BlimpState& state, const Vec3& wind_velocity,
                       const BlimpParams& params, double drag_coefficient = kDefaultDragCoefficient,
                       double air_density = kSeaLevelAirDensity) {
  const Vec3 v_rel = state.velocity - wind_velocity;
  const Vec3 area = envelope_cross_sections(params);
  Vec3 f;
  for (int i = 0; i < 3; ++i)
    f[i] = -0.5 * air_density * drag_coefficient * area[i] * std::abs(v_rel[i]) * v_rel[i];
  return f;
}

inline StateDerivative derivative(const BlimpState& state, const BodyWrench& actuator,
                                  const Ambient& ambient, const BlimpParams& params) {
  const Mat3 r = rotation_from_euler(state.attitude);
  const ExternalWrench ext = external_wrench(state, params);
  Vec3 force = r * actuator.force + ext.force_world + ambient.extra_force;
  if (ambient.drag_enabled)
    force += drag_force(state, ambient.wind_velocity, params, ambient.drag_coefficient,
                        ambient.air_density);

  const Vec3& w = state.angular_velocity;
  const Vec3 torque = actuator.torque + ext.torque_body - w.cross(params.inertia * w);

  StateDerivative d;
  d.d_position = state.velocity;
  d.d_velocity = force / params.mass_total;
  d.d_attitude = euler_rate_map(state.attitude) * w;
  d.d_angular_velocity = params.inertia.ldlt().solve(torque);
  return d;
}

namespace detail {

using StateVector = Eigen::Matrix<double, 12, 1>;

inline StateVector pack(const BlimpState& s) {
  StateVector v;
  v << s.position, s.velocity, s.attitude.as_vector(), s.angular_velocity;
  return v;
}

inline BlimpState unpack(const StateVector& v, double time) {
  BlimpState s;
  s.position = v.segment<3>(0);
  s.velocity = v.segment<3>(3);
  s.attitude = EulerAngles::from_vector(v.segment<3>(6));
  s.angular_velocity = v.segment<3>(9);
  s.time = time;
  return s;
}

inline StateVector pack(const StateDerivative& d) {
  StateVector v;
  v << d.d_position, d.d_velocity, d.d_attitude, d.d_angular_velocity;
  return v;
}

}  // namespace detail

// Advances one fixed step. Actuator command and ambient air are held over the step.
inline BlimpState step(const BlimpState& state, const ActuatorCommand& cmd, const Ambient& ambient,
                       double dt, IntegratorKind kind, const BlimpParams& params) {
  if (!(dt > 0.0 && dt <= kMaxTimeStep))
    throw InvalidArgument("step: dt must be in (0, " + std::to_string(kMaxTimeStep) + "]");
  if (near_gimbal_lock(state.attitude.phi)) throw GimbalLockError(state.attitude.phi);

  const BodyWrench wrench = forward_mix(cmd, params);
  BlimpState next;

  if (kind == IntegratorKind::kRk4) {
    using detail::pack;
    const detail::StateVector x0 = pack(state);
    auto f = [&](const detail::StateVector& x, double t) {
      return pack(derivative(detail::unpack(x, t), wrench, ambient, params));
    };
    const double t = state.time;
    const detail::StateVector k1 = f(x0, t);
    const detail::StateVector k2 = f(x0 + 0.5 * dt * k1, t + 0.5 * dt);
    const detail::StateVector k3 = f(x0 + 0.5 * dt * k2, t + 0.5 * dt);
    const detail::StateVector k4 = f(x0 + dt * k3, t + dt);
    next = detail::unpack(x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t + dt);
  } else {
    // velocities first, then positions/attitude with the updated rates
    const StateDerivative d = derivative(state, wrench, ambient, params);
    next = state;
    next.velocity += dt * d.d_velocity;
    next.angular_velocity += dt * d.d_angular_velocity;
    next.position += dt * next.velocity;
    next.attitude = EulerAngles::from_vector(
        state.attitude.as_vector() + dt * euler_rate_map(state.attitude) * next.angular_velocity);
    next.time = state.time + dt;
  }

  if (!next.finite()) throw NonFiniteStateError(state);
  if (near_gimbal_lock(next.attitude.phi)) throw GimbalLockError(next.attitude.phi);
  return next;
}

}  // namespace blimpsim
