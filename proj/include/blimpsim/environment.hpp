#pragma once

// Wind/turbulence and static obstacles.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "blimpsim/errors.hpp"
#include "blimpsim/frames.hpp"
#include "blimpsim/rng.hpp"
#include "blimpsim/vehicle.hpp"

namespace blimpsim {

// Per-axis rms so that the gust vector rms magnitude is 0.4 m/s.
inline const double kDefaultTurbulenceRms = 0.4 / std::sqrt(3.0);

struct WindModel {
  Vec3 mean_wind = Vec3::Zero();
  double turbulence_rms = kDefaultTurbulenceRms;  // sigma per axis, m/s
  double correlation_time = 2.0;                  // s

  bool operator==(const WindModel&) const = default;
};

inline void validate(const WindModel& w) {
  if (!w.mean_wind.allFinite()) throw InvalidArgument("wind: mean_wind must be finite");
  if (!(w.turbulence_rms >= 0.0) || !std::isfinite(w.turbulence_rms))
    throw InvalidArgument("wind: turbulence_rms must be >= 0");
  if (!(w.correlation_time > 0.0) || !std::isfinite(w.correlation_time))
    throw InvalidArgument("wind: correlation_time must be > 0");
}

struct WindSample {
  Vec3 wind;
  Vec3 gust;
};

// Exact discretization of a per-axis Ornstein-Uhlenbeck gust:
//   g' = g a + sigma sqrt(1 - a^2) xi,  a = exp(-dt / tau_c)
// Stationary per-axis standard deviation is sigma for any dt.
inline WindSample sample_wind(const WindModel& model, const Vec3& previous_gust, double dt,
                              Xoshiro256& rng) {
  if (!(dt > 0.0)) throw InvalidArgument("sample_wind: dt must be > 0");
  if (model.turbulence_rms == 0.0) return {model.mean_wind, Vec3::Zero()};
  const double a = std::exp(-dt / model.correlation_time);
  const double b = model.turbulence_rms * std::sqrt(1.0 - a * a);
  Vec3 gust;
  for (int i = 0; i < 3; ++i) gust[i] = previous_gust[i] * a + b * rng.normal();
  return {model.mean_wind + gust, gust};
}

struct BoxObstacle {
  Vec3 min_corner;
  Vec3 max_corner;
  bool operator==(const BoxObstacle&) const = default;
};

// Solid half-space {x : normal . x < offset}.
struct PlaneObstacle {
  Vec3 normal;
  double offset = 0.0;
  bool operator==(const PlaneObstacle&) const = default;
};

struct Obstacle {
  std::variant<BoxObstacle, PlaneObstacle> shape;
  double restitution = 0.2;

  bool operator==(const Obstacle&) const = default;

  static Obstacle box(const Vec3& lo, const Vec3& hi, double restitution) {
    return {BoxObstacle{lo, hi}, restitution};
  }
  static Obstacle plane(const Vec3& normal, double offset, double restitution) {
    return {PlaneObstacle{normal, offset}, restitution};
  }
};

inline void validate(const Obstacle& o) {
  if (!(o.restitution >= 0.0 && o.restitution <= 1.0))
    throw InvalidArgument("obstacle: restitution must be in [0, 1]");
  if (const auto* b = std::get_if<BoxObstacle>(&o.shape)) {
    if (!b->min_corner.allFinite() || !b->max_corner.allFinite() ||
        !((b->max_corner - b->min_corner).minCoeff() > 0.0))
      throw InvalidArgument("obstacle: box extents must be > 0");
  } else {
    const auto& p = std::get<PlaneObstacle>(o.shape);
    if (!p.normal.allFinite() || std::abs(p.normal.norm() - 1.0) > 1e-9 || !std::isfinite(p.offset))
      throw InvalidArgument("obstacle: plane normal must be unit length");
  }
}

struct Penetration {
  Vec3 normal;  // outward from the obstacle
  double depth;
};

// Sphere (centre, radius) against one obstacle; nullopt when separated.
inline std::optional<Penetration> penetration(const Obstacle& o, const Vec3& centre, double radius) {
  if (const auto* b = std::get_if<BoxObstacle>(&o.shape)) {
    const Vec3 closest = centre.cwiseMax(b->min_corner).cwiseMin(b->max_corner);
    const Vec3 diff = centre - closest;
    const double dist = diff.norm();
    if (dist > 0.0) {
      if (dist >= radius) return std::nullopt;
      return Penetration{diff / dist, radius - dist};
    }
    // centre inside the box: leave through the nearest face
    double best = std::numeric_limits<double>::infinity();
    Vec3 n = Vec3::Zero();
    for (int i = 0; i < 3; ++i) {
      const double to_min = centre[i] - b->min_corner[i];
      const double to_max = b->max_corner[i] - centre[i];
      if (to_min < best) { best = to_min; n = -Vec3::Unit(i); }
      if (to_max < best) { best = to_max; n = Vec3::Unit(i); }
    }
    return Penetration{n, radius + best};
  }
  const auto& p = std::get<PlaneObstacle>(o.shape);
  const double s = p.normal.dot(centre) - p.offset;
  if (s >= radius) return std::nullopt;
  return Penetration{p.normal, radius - s};
}

inline constexpr double kContactSlop = 1e-12;
inline constexpr double kMaxResidualPenetration = 1e-6;
inline constexpr double kDefaultTangentialRetention = 0.9;

struct ContactResult {
  BlimpState state;
  bool contact = false;
  double depth_in = 0.0;   // deepest penetration before resolution
  double depth_out = 0.0;  // deepest penetration after resolution
};

inline double max_penetration(const std::vector<Obstacle>& obstacles, const Vec3& centre,
                              double radius) {
  double worst = 0.0;
  for (const auto& o : obstacles)
    if (auto p = penetration(o, centre, radius)) worst = std::max(worst, p->depth);
  return worst;
}

// Projects the hull sphere out of every obstacle. Approaching normal velocity
// is reflected and scaled by restitution, tangential velocity is multiplied by
// tangential_retention.
inline ContactResult resolve_collisions(const BlimpState& pre, const BlimpState& post,
                                        const std::vector<Obstacle>& obstacles,
                                        const BlimpParams& params,
                                        double tangential_retention = kDefaultTangentialRetention) {
  const double radius = params.hull_radius();
  if (max_penetration(obstacles, pre.position, radius) > 0.5 * radius)
    throw ScenarioError("vehicle starts deeply inside an obstacle");

  ContactResult out{post};
  out.depth_in = max_penetration(obstacles, post.position, radius);
  if (out.depth_in <= kContactSlop) {
    out.depth_out = out.depth_in;
    return out;
  }

  BlimpState& s = out.state;
  // corners and wall/box pairs can need a few sweeps
  for (int sweep = 0; sweep < 16; ++sweep) {
    bool moved = false;
    for (const auto& o : obstacles) {
      const auto p = penetration(o, s.position, radius);
      if (!p || p->depth <= kContactSlop) continue;
      moved = true;
      out.contact = true;
      s.position += p->depth * p->normal;
      const double vn = s.velocity.dot(p->normal);
      if (vn <= 0.0) {
        const Vec3 tangential = s.velocity - vn * p->normal;
        s.velocity = tangential_retention * tangential - o.restitution * vn * p->normal;
      }
    }
    if (!moved) break;
  }
  out.depth_out = max_penetration(obstacles, s.position, radius);
  return out;
}

inline double kinetic_energy(const BlimpState& s, const BlimpParams& p) {
  return 0.5 * p.mass_total * s.velocity.squaredNorm() +
         0.5 * s.angular_velocity.dot(p.inertia * s.angular_velocity);
}

}  // namespace blimpsim
