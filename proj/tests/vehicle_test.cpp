#include "blimpsim/vehicle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace blimpsim {
namespace {

TEST(NetBuoyancy, GrossLiftOfReferenceEnvelope) {
  // 0.125 m^3 * (1.225 - 0.1786) kg/m^3 * 9.81 m/s^2
  const double gross = net_buoyancy(0.125, 1.225, 0.1786, 0.0, 9.81);
  EXPECT_NEAR(gross, 1.283148, 1e-9);
}

TEST(NetBuoyancy, EnvelopeMassLeaves65Grams) {
  const double gross = net_buoyancy(0.125, 1.225, 0.1786, 0.0, 9.81);
  const double envelope_mass = gross / 9.81 - 0.065;
  EXPECT_NEAR(net_buoyancy(0.125, 1.225, 0.1786, envelope_mass, 9.81), 0.065 * 9.81, 1e-12);
  EXPECT_NEAR(0.065 * 9.81, 0.638, 1e-3);
}

TEST(NetBuoyancy, LinearInVolumeAndDensityDifference) {
  const double base = net_buoyancy(0.1, 1.2, 0.2, 0.0, 9.81);
  EXPECT_NEAR(net_buoyancy(0.2, 1.2, 0.2, 0.0, 9.81), 2.0 * base, 1e-12);
  EXPECT_NEAR(net_buoyancy(0.1, 2.2, 0.2, 0.0, 9.81), 2.0 * base, 1e-12);
}

TEST(NetBuoyancy, RejectsDegenerateInputs) {
  EXPECT_THROW(net_buoyancy(0.125, 1.0, 1.0, 0.0, 9.81), InvalidArgument);
  EXPECT_THROW(net_buoyancy(0.125, 0.1, 0.2, 0.0, 9.81), InvalidArgument);
  EXPECT_THROW(net_buoyancy(0.0, 1.225, 0.1786, 0.0, 9.81), InvalidArgument);
  EXPECT_THROW(net_buoyancy(-1.0, 1.225, 0.1786, 0.0, 9.81), InvalidArgument);
  EXPECT_THROW(net_buoyancy(0.125, -1.0, 0.1786, 0.0, 9.81), InvalidArgument);
}

TEST(DefaultParams, SatisfiesInvariants) {
  const BlimpParams p = default_params();
  EXPECT_NO_THROW(validate(p));
  EXPECT_LE(p.buoyancy_force, 0.638);
  EXPECT_DOUBLE_EQ(p.buoyancy_force, p.mass_total * p.gravity);
  EXPECT_NEAR(ellipsoid_volume(p.envelope_semi_axes), 0.125, 1e-3);
  EXPECT_EQ(p.thruster_position(0), Vec3(0, -0.10, -0.15));
  EXPECT_EQ(p.thruster_position(1), Vec3(0, 0.10, -0.15));
  EXPECT_TRUE(p.inertia.isDiagonal(0.0));
}

TEST(DefaultParams, ThrustersSitInsideTheHull) {
  const BlimpParams p = default_params();
  for (int i = 0; i < 2; ++i) EXPECT_LT(p.thruster_position(i).norm(), p.hull_radius());
}

// Midpoint quadrature of the thin homoeoid layer between scale (1 - eps) and 1.
double quadrature_jyy(double mass, const Vec3& axes, double eps) {
  const int n_s = 4, n_pol = 400, n_az = 400;
  const double a = axes.x(), b = axes.y(), c = axes.z();
  double moment = 0.0, volume = 0.0;
  for (int i = 0; i < n_s; ++i) {
    const double s = 1.0 - eps + (i + 0.5) * eps / n_s;
    for (int j = 0; j < n_pol; ++j) {
      const double pol = (j + 0.5) * std::numbers::pi / n_pol;
      for (int k = 0; k < n_az; ++k) {
        const double az = (k + 0.5) * 2.0 * std::numbers::pi / n_az;
        const double x = s * a * std::sin(pol) * std::cos(az);
        const double z = s * c * std::cos(pol);
        const double dv = a * b * c * s * s * std::sin(pol);
        moment += (x * x + z * z) * dv;
        volume += dv;
      }
    }
  }
  (void)b;
  return mass * moment / volume;
}

TEST(DefaultParams, PitchInertiaMatchesMassIntegral) {
  const BlimpParams p = default_params();
  const double shell = quadrature_jyy(kDefaultEnvelopeMass, p.envelope_semi_axes, 1e-4);
  const double lb = p.thruster_offset_below_com;
  const double expected = shell + kDefaultChassisMass * lb * lb;
  EXPECT_NEAR(p.inertia(1, 1), expected, 1e-3 * expected);
}

TEST(Validate, RejectsBrokenParams) {
  auto broken = [](auto mutate) {
    BlimpParams p = default_params();
    mutate(p);
    return p;
  };
  EXPECT_THROW(validate(broken([](BlimpParams& p) { p.mass_total = 0; })), InvalidArgument);
  EXPECT_THROW(validate(broken([](BlimpParams& p) { p.inertia(0, 1) = 1.0; })), InvalidArgument);
  EXPECT_THROW(validate(broken([](BlimpParams& p) { p.inertia(2, 2) = -1.0; })), InvalidArgument);
  EXPECT_THROW(validate(broken([](BlimpParams& p) { p.thruster_offset_lateral = 0; })), InvalidArgument);
  EXPECT_THROW(validate(broken([](BlimpParams& p) { p.thrust_max = 0; })), InvalidArgument);
  EXPECT_THROW(validate(broken([](BlimpParams& p) { p.servo_range = {1.0, 1.0}; })), InvalidArgument);
}

}  // namespace
}  // namespace blimpsim
