#pragma once

// Rotation and frame algebra.
//
// Attitude is roll-pitch-yaw (phi, theta, psi) about the world x, y, z axes.
// The rotation matrix used throughout factors as
//
//     R = Rz(psi) * Rx(phi) * Ry(theta)
//
// which is what makes the third row (-c(phi)s(theta), s(phi), c(phi)c(theta))
// independent of yaw. frames_test checks the closed form below against this
// product entry by entry.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "blimpsim/errors.hpp"

namespace blimpsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Roll-band half-width excluded around +-pi/2.
inline constexpr double kGimbalMargin = 1e-3;

struct EulerAngles {
  double phi = 0.0;    // roll
  double theta = 0.0;  // pitch
  double psi = 0.0;    // yaw

  bool operator==(const EulerAngles&) const = default;

  Vec3 as_vector() const { return {phi, theta, psi}; }
  static EulerAngles from_vector(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

inline bool all_finite(const EulerAngles& e) {
  return std::isfinite(e.phi) && std::isfinite(e.theta) && std::isfinite(e.psi);
}

inline Mat3 rotation_from_euler(const EulerAngles& e) {
  if (!all_finite(e)) throw InvalidArgument("rotation_from_euler: non-finite Euler angles");
  const double cph = std::cos(e.phi), sph = std::sin(e.phi);
  const double cth = std::cos(e.theta), sth = std::sin(e.theta);
  const double cps = std::cos(e.psi), sps = std::sin(e.psi);
  Mat3 r;
  r << cps * cth - sph * sps * sth, -cph * sps, cps * sth + cth * sph * sps,
       cth * sps + cps * sph * sth,  cph * cps, sps * sth - cps * cth * sph,
      -cph * sth,                    sph,       cph * cth;
  return r;
}

inline Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

inline bool near_gimbal_lock(double phi) {
  return !(std::abs(phi) < std::numbers::pi / 2.0 - kGimbalMargin);
}

// Maps body angular velocity to Euler-angle rates for the Rz*Rx*Ry order:
//   phi_dot   =  c(th) wx + s(th) wz
//   theta_dot =  wy + t(ph) (s(th) wx - c(th) wz)
//   psi_dot   = (-s(th) wx + c(th) wz) / c(ph)
inline Mat3 euler_rate_map(const EulerAngles& e) {
  if (!all_finite(e)) throw InvalidArgument("euler_rate_map: non-finite Euler angles");
  if (near_gimbal_lock(e.phi)) throw GimbalLockError(e.phi);
  const double cph = std::cos(e.phi), tph = std::tan(e.phi);
  const double cth = std::cos(e.theta), sth = std::sin(e.theta);
  Mat3 m;
  m << cth, 0.0, sth,
       sth * tph, 1.0, -cth * tph,
      -sth / cph, 0.0, cth / cph;
  return m;
}

}  // namespace blimpsim
