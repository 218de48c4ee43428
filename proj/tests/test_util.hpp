#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "blimpsim/frames.hpp"

namespace blimpsim::test {

// Elementary rotations, written out independently of rotation_from_euler.
inline Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}
inline Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}
inline Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

// exp(hat(w)) via Rodrigues.
inline Mat3 so3_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Mat3::Identity();
  const Vec3 k = w / angle;
  Mat3 K;
  K << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Mat3::Identity() + std::sin(angle) * K + (1 - std::cos(angle)) * K * K;
}

inline EulerAngles random_attitude(std::mt19937_64& rng, double roll_limit = 1.5) {
  std::uniform_real_distribution<double> roll(-roll_limit, roll_limit);
  std::uniform_real_distribution<double> any(-std::numbers::pi, std::numbers::pi);
  return {roll(rng), any(rng), any(rng)};
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace blimpsim::test
