#pragma once

// Physical parameterization of one blimp and its integrated state.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "blimpsim/errors.hpp"
#include "blimpsim/frames.hpp"

namespace blimpsim {

inline constexpr double kStandardGravity = 9.81;
inline constexpr double kSeaLevelAirDensity = 1.225;
inline constexpr double kHeliumDensity = 0.1786;

struct BlimpParams {
  double mass_total = 0.0;                // m, kg
  Mat3 inertia = Mat3::Zero();            // J, body frame, kg m^2
  double thruster_offset_lateral = 0.0;   // d, m
  double thruster_offset_below_com = 0.0; // l_b, m; negative when the arm hangs below the COM
  double buoyancy_offset = 0.0;           // l, m, COM to centre of buoyancy along +z_B
  double buoyancy_force = 0.0;            // f_b, N
  double gravity = kStandardGravity;      // g, m/s^2
  double thrust_max = 0.0;                // N per rotor
  std::array<double, 2> servo_range{0.0, 0.0};
  Vec3 envelope_semi_axes = Vec3::Zero();

  // Thruster mounting points in {B}.
  Vec3 thruster_position(int i) const {
    const double y = (i == 0 ? -1.0 : 1.0) * thruster_offset_lateral;
    return {0.0, y, thruster_offset_below_com};
  }

  // Bounding-sphere radius used for contact.
  double hull_radius() const { return envelope_semi_axes.maxCoeff(); }

  bool operator==(const BlimpParams&) const = default;
};

struct BlimpState {
  Vec3 position = Vec3::Zero();          // r in {W}
  Vec3 velocity = Vec3::Zero();          // r_dot in {W}
  EulerAngles attitude{};
  Vec3 angular_velocity = Vec3::Zero();  // omega in {B}
  double time = 0.0;

  bool operator==(const BlimpState&) const = default;

  bool finite() const {
    return position.allFinite() && velocity.allFinite() && all_finite(attitude) &&
           angular_velocity.allFinite() && std::isfinite(time);
  }
};

inline double ellipsoid_volume(const Vec3& semi_axes) {
  return 4.0 / 3.0 * std::numbers::pi * semi_axes.prod();
}

// Lift left over for chassis and payload once the envelope's own weight is paid.
inline double net_buoyancy(double envelope_volume, double air_density, double gas_density,
                           double envelope_mass, double g) {
  if (!(envelope_volume > 0.0)) throw InvalidArgument("net_buoyancy: envelope volume must be > 0");
  if (!(air_density > 0.0) || !(gas_density > 0.0))
    throw InvalidArgument("net_buoyancy: densities must be > 0");
  if (!(air_density > gas_density))
    throw InvalidArgument("net_buoyancy: air density must exceed gas density");
  return envelope_volume * (air_density - gas_density) * g - envelope_mass * g;
}

// Thin homoeoid shell (the layer between two similar ellipsoids) about its centre.
// The thin limit of the solid ellipsoid gives m/3 (b^2 + c^2) etc.
inline Mat3 homoeoid_shell_inertia(double mass, const Vec3& semi_axes) {
  const Vec3 sq = semi_axes.cwiseProduct(semi_axes);
  return Vec3{mass / 3.0 * (sq.y() + sq.z()), mass / 3.0 * (sq.x() + sq.z()),
              mass / 3.0 * (sq.x() + sq.y())}
      .asDiagonal();
}

// Reference vehicle mass split used only to build the default inertia.
inline constexpr double kDefaultEnvelopeMass = 0.035;
inline constexpr double kDefaultChassisMass = 0.030;

inline BlimpParams default_params() {
  BlimpParams p;
  p.mass_total = kDefaultEnvelopeMass + kDefaultChassisMass;
  p.thruster_offset_lateral = 0.10;
  p.thruster_offset_below_com = -0.15;
  p.buoyancy_offset = 0.15;
  p.gravity = kStandardGravity;
  p.buoyancy_force = p.mass_total * p.gravity;  // neutral
  p.thrust_max = 0.03;
  p.servo_range = {-std::numbers::pi / 2.0, std::numbers::pi / 2.0};
  p.envelope_semi_axes = {0.40, 0.30, 0.25};  // ~0.1257 m^3
  const double lb = p.thruster_offset_below_com;
  p.inertia = homoeoid_shell_inertia(kDefaultEnvelopeMass, p.envelope_semi_axes);
  // chassis as a point mass at (0, 0, l_b)
  p.inertia(0, 0) += kDefaultChassisMass * lb * lb;
  p.inertia(1, 1) += kDefaultChassisMass * lb * lb;
  return p;
}

// Throws InvalidArgument naming the first violated invariant.
inline void validate(const BlimpParams& p) {
  auto fail = [](const std::string& what) { throw InvalidArgument("vehicle: " + what); };
  if (!(p.mass_total > 0.0)) fail("mass_total must be > 0");
  if (!p.inertia.allFinite()) fail("inertia must be finite");
  if ((p.inertia - p.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12 * p.inertia.norm())
    fail("inertia must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> eig(p.inertia);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) fail("inertia must be positive definite");
  if (!(p.thruster_offset_lateral > 0.0)) fail("thruster_offset_lateral must be > 0");
  if (!std::isfinite(p.thruster_offset_below_com)) fail("thruster_offset_below_com must be finite");
  if (!std::isfinite(p.buoyancy_offset)) fail("buoyancy_offset must be finite");
  if (!(p.buoyancy_force >= 0.0) || !std::isfinite(p.buoyancy_force))
    fail("buoyancy_force must be finite and >= 0");
  if (!(p.gravity > 0.0) || !std::isfinite(p.gravity)) fail("gravity must be > 0");
  if (!(p.thrust_max > 0.0) || !std::isfinite(p.thrust_max)) fail("thrust_max must be > 0");
  if (!(p.servo_range[0] < p.servo_range[1])) fail("servo_range requires min < max");
  if (!(p.envelope_semi_axes.minCoeff() > 0.0) || !p.envelope_semi_axes.allFinite())
    fail("envelope_semi_axes must be > 0");
}

}  // namespace blimpsim
