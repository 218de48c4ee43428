#include "blimpsim/frames.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "test_util.hpp"

namespace blimpsim {
namespace {

using test::rot_x;
using test::rot_y;
using test::rot_z;

TEST(RotationFromEuler, ZeroIsIdentity) {
  EXPECT_TRUE(rotation_from_euler({0, 0, 0}).isIdentity(0.0));
}

TEST(RotationFromEuler, QuarterYaw) {
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((rotation_from_euler({0, 0, std::numbers::pi / 2}) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RotationFromEuler, MatchesZXYProduct) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const EulerAngles e = test::random_attitude(rng);
    const Mat3 product = rot_z(e.psi) * rot_x(e.phi) * rot_y(e.theta);
    ASSERT_LT((rotation_from_euler(e) - product).cwiseAbs().maxCoeff(), 1e-12) << i;
  }
}

TEST(RotationFromEuler, OrthonormalAndProper) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = rotation_from_euler(test::random_attitude(rng));
    ASSERT_LT((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-10);
    ASSERT_NEAR(r.determinant(), 1.0, 1e-10);
  }
}

TEST(RotationFromEuler, RejectsNonFinite) {
  EXPECT_THROW(rotation_from_euler({std::numeric_limits<double>::quiet_NaN(), 0, 0}), InvalidArgument);
  EXPECT_THROW(rotation_from_euler({0, std::numeric_limits<double>::infinity(), 0}), InvalidArgument);
}

TEST(Hat, Basics) {
  EXPECT_TRUE(hat(Vec3::Zero()).isZero(0.0));
  EXPECT_EQ(hat(Vec3::UnitX()) * Vec3::UnitY(), Vec3::UnitZ());
}

TEST(Hat, MatchesCrossProductFormula) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v = test::random_vec(rng, 5), w = test::random_vec(rng, 5);
    const Vec3 cross{v.y() * w.z() - v.z() * w.y(), v.z() * w.x() - v.x() * w.z(),
                     v.x() * w.y() - v.y() * w.x()};
    ASSERT_LT((hat(v) * w - cross).cwiseAbs().maxCoeff(), 1e-14);
    ASSERT_TRUE((hat(v).transpose() + hat(v)).isZero(0.0));
  }
}

TEST(EulerRateMap, IdentityAtZeroAttitude) {
  // R = I: R_dot = hat(w), and the Rz Rx Ry factorization reads phi_dot = wx,
  // theta_dot = wy, psi_dot = wz.
  EXPECT_TRUE(euler_rate_map({0, 0, 0}).isIdentity(1e-15));
}

TEST(EulerRateMap, ZeroRateGivesZeroEulerRates) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100; ++i)
    EXPECT_TRUE((euler_rate_map(test::random_attitude(rng)) * Vec3::Zero()).isZero(0.0));
}

// R(e + M w h) against R(e) exp(hat(w) h): local error is O(h^2).
TEST(EulerRateMap, FiniteDifferenceAgainstExponential) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 200; ++i) {
    const EulerAngles e = test::random_attitude(rng, 1.3);
    const Vec3 w = test::random_vec(rng, 2.0);
    const Mat3 m = euler_rate_map(e);
    auto err = [&](double h) {
      const EulerAngles stepped = EulerAngles::from_vector(e.as_vector() + m * w * h);
      const Mat3 exact = rotation_from_euler(e) * test::so3_exp(w * h);
      return (rotation_from_euler(stepped) - exact).cwiseAbs().maxCoeff();
    };
    const double e3 = err(1e-3), e4 = err(1e-4);
    const double order = std::log10(e3 / e4);
    ASSERT_GE(order, 1.9) << "sample " << i << " e3=" << e3 << " e4=" << e4;
    ASSERT_LT(e3, 50.0 * 1e-6);
  }
}

TEST(EulerRateMap, SingularNearGimbalLock) {
  const double phi = std::numbers::pi / 2 - 5e-4;
  try {
    euler_rate_map({phi, 0.1, 0.2});
    FAIL() << "expected GimbalLockError";
  } catch (const GimbalLockError& e) {
    EXPECT_DOUBLE_EQ(e.phi(), phi);
  }
  EXPECT_THROW(euler_rate_map({-phi, 0, 0}), GimbalLockError);
  EXPECT_NO_THROW(euler_rate_map({std::numbers::pi / 2 - 2e-3, 0, 0}));
}

}  // namespace
}  // namespace blimpsim
