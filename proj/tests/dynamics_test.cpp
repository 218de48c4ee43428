#include "blimpsim/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_util.hpp"

namespace blimpsim {
namespace {

using namespace test;

constexpr double kPi = std::numbers::pi;
const ActuatorCommand kIdle{0, 0, 0, 0};

BlimpState simulate(BlimpState s, const ActuatorCommand& cmd, const Ambient& amb, double dt,
                    int steps, IntegratorKind kind, const BlimpParams& p) {
  for (int i = 0; i < steps; ++i) s = step(s, cmd, amb, dt, kind, p);
  return s;
}

// Potential of the offset buoyancy about the COM; translation is neutral.
double rotational_energy(const BlimpState& s, const BlimpParams& p) {
  const double ke = 0.5 * s.angular_velocity.dot(p.inertia * s.angular_velocity);
  const double cz = std::cos(s.attitude.phi) * std::cos(s.attitude.theta);
  return ke - p.buoyancy_force * p.buoyancy_offset * cz;
}

TEST(Derivative, HoverIsAnEquilibrium) {
  const BlimpParams p = default_params();
  BlimpState s;
  s.position = {1, 2, 3};
  s.attitude.psi = 0.7;
  const StateDerivative d = derivative(s, forward_mix(kIdle, p), Ambient{}, p);
  EXPECT_LE(d.d_velocity.norm(), 1e-15);
  EXPECT_LE(d.d_angular_velocity.norm(), 1e-15);
}

TEST(Derivative, PitchedBodyFeelsRestoringTorque) {
  const BlimpParams p = default_params();
  BlimpState s;
  s.attitude.theta = 0.1;
  const Vec3 tau = external_wrench(s, p).torque_body;
  // arm (0, 0, l) in the body, lift f_b straight up in the world
  const Vec3 lift_body = rot_y(0.1).transpose() * Vec3(0, 0, p.buoyancy_force);
  const Vec3 expected = Vec3(0, 0, p.buoyancy_offset).cross(lift_body);
  EXPECT_NEAR((tau - expected).norm(), 0.0, 1e-15);
  EXPECT_NEAR(tau.y(), -p.buoyancy_offset * p.buoyancy_force * std::sin(0.1), 1e-15);
  EXPECT_NEAR(tau.y(), -9.55e-3, 1e-5);
}

TEST(Derivative, RestoringTorqueOpposesTilt) {
  const BlimpParams p = default_params();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> tilt(-1.2, 1.2);
  for (int i = 0; i < 1000; ++i) {
    BlimpState s;
    s.attitude = {tilt(rng), tilt(rng), 0.0};
    const Vec3 tau = external_wrench(s, p).torque_body;
    // torque does negative work against a small rotation that increases tilt
    ASSERT_LE(tau.x() * std::sin(s.attitude.phi), 1e-15);
    ASSERT_LE(tau.y() * std::sin(s.attitude.theta), 1e-15);
  }
}

TEST(Derivative, TiltAcceleratesBackTowardUpright) {
  const BlimpParams p = default_params();
  for (double tilt : {0.05, -0.05, 0.5}) {
    BlimpState pitched, rolled;
    pitched.attitude.theta = tilt;
    rolled.attitude.phi = tilt;
    const ActuatorCommand idle{0, 0, 0, 0};
    const Vec3 a_pitch = derivative(pitched, forward_mix(idle, p), Ambient{}, p).d_angular_velocity;
    const Vec3 a_roll = derivative(rolled, forward_mix(idle, p), Ambient{}, p).d_angular_velocity;
    EXPECT_LT(a_pitch.y() * tilt, 0.0);
    EXPECT_LT(a_roll.x() * tilt, 0.0);
  }
}

TEST(Derivative, BodyForceIsRotatedIntoTheWorld) {
  BlimpParams p = default_params();
  BlimpState s;
  s.attitude.psi = kPi / 2;
  const StateDerivative d = derivative(s, forward_mix({0.01, 0.01, 0, 0}, p), Ambient{}, p);
  EXPECT_NEAR((d.d_velocity - Vec3(0, 0.02 / p.mass_total, 0)).norm(), 0.0, 1e-15);
}

TEST(Step, HoverStaysPutForTenSeconds) {
  const BlimpParams p = default_params();
  BlimpState s0;
  s0.position = {0, 0, 1.5};
  for (auto kind : {IntegratorKind::kRk4, IntegratorKind::kSemiImplicitEuler}) {
    const BlimpState s = simulate(s0, kIdle, Ambient{}, 0.01, 1000, kind, p);
    EXPECT_LE((s.position - s0.position).norm(), 1e-9);
    EXPECT_LE(s.velocity.norm(), 1e-9);
    EXPECT_LE(s.angular_velocity.norm(), 1e-9);
    EXPECT_NEAR(s.time, 10.0, 1e-9);
  }
}

TEST(Step, ConstantVelocityCoast) {
  const BlimpParams p = default_params();
  BlimpState s0;
  s0.velocity = {0.3, -0.2, 0.1};
  BlimpState s = s0;
  for (int i = 0; i < 500; ++i) {
    const BlimpState next = step(s, kIdle, Ambient{}, 0.01, IntegratorKind::kRk4, p);
    ASSERT_LE((next.velocity - s.velocity).norm(), 1e-9);
    s = next;
  }
  EXPECT_NEAR((s.position - 5.0 * s0.velocity).norm(), 0.0, 1e-12);
}

TEST(Step, FreeFallIsExactUnderRk4) {
  BlimpParams p = default_params();
  p.buoyancy_force = 0.0;
  BlimpState s0;
  s0.position = {0, 0, 100};
  s0.velocity = {1, 0, 2};
  const int n = 400;
  const double dt = 0.01, t = n * dt;
  const BlimpState s = simulate(s0, kIdle, Ambient{}, dt, n, IntegratorKind::kRk4, p);
  const Vec3 expected = s0.position + s0.velocity * t + 0.5 * Vec3(0, 0, -p.gravity) * t * t;
  EXPECT_NEAR((s.position - expected).norm(), 0.0, 1e-12 * expected.norm());
  EXPECT_NEAR((s.velocity - (s0.velocity + Vec3(0, 0, -p.gravity * t))).norm(), 0.0, 1e-12);
}

TEST(Step, PureYawSpin) {
  const BlimpParams p = default_params();
  BlimpState s0;
  s0.angular_velocity = {0, 0, 0.5};
  const BlimpState s = simulate(s0, kIdle, Ambient{}, 0.01, 200, IntegratorKind::kRk4, p);
  EXPECT_NEAR(s.attitude.psi, 1.0, 1e-12);
  EXPECT_NEAR(s.attitude.phi, 0.0, 1e-15);
  EXPECT_NEAR(s.attitude.theta, 0.0, 1e-15);
  EXPECT_NEAR((s.angular_velocity - s0.angular_velocity).norm(), 0.0, 1e-15);
}

TEST(Step, PitchPendulumPeriod) {
  const BlimpParams p = default_params();
  const double expected =
      2.0 * kPi * std::sqrt(p.inertia(1, 1) / (p.buoyancy_offset * p.buoyancy_force));
  BlimpState s;
  s.attitude.theta = 0.02;
  std::vector<double> crossings;
  const double dt = 1e-3;
  for (int i = 0; i < 10000 && crossings.size() < 5; ++i) {
    const BlimpState next = step(s, kIdle, Ambient{}, dt, IntegratorKind::kRk4, p);
    if (s.attitude.theta > 0 && next.attitude.theta <= 0) {
      const double frac = s.attitude.theta / (s.attitude.theta - next.attitude.theta);
      crossings.push_back(s.time + frac * dt);
    }
    s = next;
  }
  ASSERT_GE(crossings.size(), 3u);
  const double period = (crossings.back() - crossings.front()) / (crossings.size() - 1);
  EXPECT_NEAR(period, expected, 0.05 * expected);
  EXPECT_NEAR(period, expected, 1e-3 * expected);
}

TEST(Step, Rk4DriftsFarLessThanSemiImplicitEuler) {
  const BlimpParams p = default_params();
  BlimpState s0;
  s0.attitude = {0.3, 0.2, 0.0};
  s0.angular_velocity = {0.1, -0.2, 0.3};
  const double e0 = rotational_energy(s0, p);
  auto max_drift = [&](IntegratorKind kind) {
    BlimpState s = s0;
    double worst = 0.0;
    for (int i = 0; i < 6000; ++i) {
      s = step(s, kIdle, Ambient{}, 0.01, kind, p);
      worst = std::max(worst, std::abs(rotational_energy(s, p) - e0));
    }
    return worst;
  };
  const double rk4 = max_drift(IntegratorKind::kRk4);
  const double euler = max_drift(IntegratorKind::kSemiImplicitEuler);
  EXPECT_LT(10.0 * rk4, euler);
}

TEST(Step, AngularMomentumIsConservedWithoutTorque) {
  BlimpParams p = default_params();
  p.buoyancy_offset = 0.0;
  BlimpState s;
  s.angular_velocity = {0.05, 2.0, 0.05};  // near the major axis, stays clear of the roll band
  auto world_momentum = [&](const BlimpState& x) {
    return Vec3(rotation_from_euler(x.attitude) * (p.inertia * x.angular_velocity));
  };
  const Vec3 l0 = world_momentum(s);
  for (int i = 0; i < 10000; ++i) {
    s = step(s, kIdle, Ambient{}, 1e-3, IntegratorKind::kRk4, p);
    ASSERT_LE((world_momentum(s) - l0).norm(), 1e-3 * l0.norm()) << s.time;
  }
}

TEST(Step, DeterministicAcrossRuns) {
  const BlimpParams p = default_params();
  BlimpState s0;
  s0.attitude = {0.1, 0.2, 0.3};
  s0.angular_velocity = {0.3, 0.1, -0.2};
  const ActuatorCommand cmd{0.02, 0.01, 0.4, -0.3};
  Ambient amb;
  amb.drag_enabled = true;
  amb.wind_velocity = {0.2, 0.1, 0};
  const BlimpState a = simulate(s0, cmd, amb, 0.01, 500, IntegratorKind::kRk4, p);
  const BlimpState b = simulate(s0, cmd, amb, 0.01, 500, IntegratorKind::kRk4, p);
  EXPECT_EQ(a.position, b.position);
  EXPECT_EQ(a.angular_velocity, b.angular_velocity);
}

TEST(Step, RejectsBadTimeStep) {
  const BlimpParams p = default_params();
  for (double dt : {0.0, -0.01, 0.06, std::nan("")})
    EXPECT_THROW(step(BlimpState{}, kIdle, Ambient{}, dt, IntegratorKind::kRk4, p), InvalidArgument);
}

TEST(Step, GimbalLockIsReported) {
  const BlimpParams p = default_params();
  BlimpState s;
  s.attitude.phi = kPi / 2 - 5e-4;
  try {
    step(s, kIdle, Ambient{}, 0.01, IntegratorKind::kRk4, p);
    FAIL() << "expected GimbalLockError";
  } catch (const GimbalLockError& e) {
    EXPECT_DOUBLE_EQ(e.phi(), s.attitude.phi);
  }
}

TEST(Step, NonFiniteStateKeepsLastGood) {
  const BlimpParams p = default_params();
  BlimpState s;
  s.position = {1, 2, 3};
  s.time = 4.0;
  Ambient amb;
  amb.extra_force = {std::numeric_limits<double>::infinity(), 0, 0};
  try {
    step(s, kIdle, amb, 0.01, IntegratorKind::kRk4, p);
    FAIL() << "expected NonFiniteStateError";
  } catch (const NonFiniteStateError& e) {
    EXPECT_EQ(e.last_good().position, s.position);
    EXPECT_EQ(e.last_good().time, 4.0);
  }
}

TEST(Drag, OpposesRelativeVelocityAndVanishesInStillAir) {
  const BlimpParams p = default_params();
  BlimpState s;
  EXPECT_TRUE(drag_force(s, Vec3::Zero(), p).isZero(0.0));
  s.velocity = {0.5, -0.2, 0.1};
  const Vec3 wind{0.5, -0.2, 0.1};
  EXPECT_TRUE(drag_force(s, wind, p).isZero(0.0));
  std::mt19937_64 rng(32);
  for (int i = 0; i < 1000; ++i) {
    s.velocity = random_vec(rng, 2.0);
    const Vec3 w = random_vec(rng, 1.0);
    const Vec3 f = drag_force(s, w, p);
    const Vec3 rel = s.velocity - w;
    for (int k = 0; k < 3; ++k) ASSERT_LE(f[k] * rel[k], 0.0);
  }
}

TEST(Drag, MagnitudeMatchesQuadraticLaw) {
  const BlimpParams p = default_params();
  BlimpState s;
  s.velocity = {1.0, 0, 0};
  const Vec3& ax = p.envelope_semi_axes;
  const double area = kPi * ax.y() * ax.z();
  EXPECT_NEAR(drag_force(s, Vec3::Zero(), p).x(), -0.5 * 1.225 * 0.4 * area, 1e-15);
}

TEST(Drag, TerminalVelocityUnderConstantForce) {
  const BlimpParams p = default_params();
  Ambient amb;
  amb.drag_enabled = true;
  amb.extra_force = {0.01, 0, 0};
  const double area = envelope_cross_sections(p).x();
  const double v_term = std::sqrt(2.0 * 0.01 / (amb.air_density * amb.drag_coefficient * area));
  const BlimpState s = simulate(BlimpState{}, kIdle, amb, 0.02, 15000, IntegratorKind::kRk4, p);
  EXPECT_NEAR(s.velocity.x(), v_term, 0.01);
}

TEST(Drag, DriftsWithSteadyWind) {
  const BlimpParams p = default_params();
  Ambient amb;
  amb.drag_enabled = true;
  amb.wind_velocity = {0.3, -0.2, 0};
  const BlimpState s = simulate(BlimpState{}, kIdle, amb, 0.02, 15000, IntegratorKind::kRk4, p);
  EXPECT_NEAR((s.velocity - amb.wind_velocity).norm(), 0.0, 0.01);
}

}  // namespace
}  // namespace blimpsim
