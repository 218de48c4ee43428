#pragma once

// Headless simulation loop, trajectory logging and run metrics.
//
// One step of the loop:
//   control -> allocate -> wind -> dynamics (mix inside) -> collisions -> log

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blimpsim/actuation.hpp"
#include "blimpsim/control.hpp"
#include "blimpsim/dynamics.hpp"
#include "blimpsim/environment.hpp"
#include "blimpsim/rng.hpp"
#include "blimpsim/scenario.hpp"

namespace blimpsim {

struct LogRow {
  BlimpState state;
  ActuatorCommand command;  // held during the step that produced state
  Vec3 wind = Vec3::Zero();
  bool contact = false;

  bool operator==(const LogRow&) const = default;
};

using TrajectoryLog = std::vector<LogRow>;

struct ContactEvent {
  double t = 0.0;
  double energy_in = 0.0;
  double energy_out = 0.0;
  double depth_in = 0.0;
  double depth_out = 0.0;
};

struct RunMetrics {
  bool reached_goal = false;  // inside goal_tolerance when the run ended
  double time_to_goal = 0.0;
  double path_length = 0.0;
  double max_altitude = 0.0;
  int collision_count = 0;
  double max_penetration = 0.0;
  double final_error = 0.0;
};

struct RunResult {
  TrajectoryLog log;
  RunMetrics metrics;
  std::vector<ContactEvent> contacts;
  std::optional<std::string> abort_reason;
};

// Owns the mutable state of one simulated flight. Used by the headless
// runner and by the live bridge.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig config) : config_(std::move(config)) {
    validate(config_);
    reset();
  }

  void reset() {
    state_ = config_.initial_state;
    autopilot_ = AutopilotState{};
    mode_ = config_.mode;
    manual_ = ManualInput{};
    targets_ = config_.waypoints;
    if (config_.goal) targets_.push_back(*config_.goal);
    target_index_ = 0;
    autopilot_.goal = targets_.empty() ? state_.position : targets_.front();
    gust_ = Vec3::Zero();
    rng_.reseed(config_.seed);
    last_ = LogRow{state_, ActuatorCommand{}, config_.wind.mean_wind, false};
    last_contact_ = std::nullopt;
  }

  const ScenarioConfig& config() const { return config_; }
  const BlimpState& state() const { return state_; }
  const LogRow& last_row() const { return last_; }
  ControlMode mode() const { return mode_; }
  const ManualInput& manual_input() const { return manual_; }
  const std::optional<ContactEvent>& last_contact() const { return last_contact_; }

  void set_mode(ControlMode m) {
    if (m == ControlMode::kAutopilot && mode_ != m) autopilot_.integral_error.setZero();
    mode_ = m;
  }
  void set_manual_input(const ManualInput& in) {
    validate(in);
    manual_ = in;
  }
  // Replaces any remaining route with a single goal.
  void set_goal(const Vec3& goal) {
    targets_ = {goal};
    target_index_ = 0;
    autopilot_.goal = goal;
    autopilot_.integral_error.setZero();
  }

  std::optional<Vec3> final_goal() const {
    if (targets_.empty()) return std::nullopt;
    return targets_.back();
  }
  bool on_final_leg() const { return target_index_ + 1 >= targets_.size(); }

  double goal_error() const {
    const auto g = final_goal();
    return g ? (state_.position - *g).norm() : 0.0;
  }
  bool at_goal() const {
    return final_goal() && on_final_leg() && goal_error() <= config_.goal_tolerance;
  }

  // Advances one fixed step and returns the new log row.
  const LogRow& advance() {
    const double dt = config_.dt;
    const BlimpParams& params = config_.params;

    if (!on_final_leg() &&
        (state_.position - targets_[target_index_]).norm() <= config_.waypoint_tolerance) {
      ++target_index_;
      autopilot_.goal = targets_[target_index_];
      autopilot_.integral_error.setZero();
    }

    ActuatorCommand cmd;
    if (mode_ == ControlMode::kAutopilot) {
      const AutopilotOutput out = autopilot_step(state_, autopilot_, config_.gains, params, dt);
      autopilot_ = out.state;
      cmd = out.command;
    } else {
      cmd = allocate(manual_map(manual_, config_.manual_limits), params).command;
    }

    const WindSample wind = sample_wind(config_.wind, gust_, dt, rng_);
    gust_ = wind.gust;
    Ambient ambient;
    ambient.wind_velocity = wind.wind;
    ambient.drag_enabled = config_.aero.drag;
    ambient.drag_coefficient = config_.aero.drag_coefficient;
    ambient.air_density = config_.aero.air_density;

    const BlimpState pre = state_;
    const BlimpState post = step(pre, cmd, ambient, dt, config_.integrator, params);
    const ContactResult contact =
        resolve_collisions(pre, post, config_.obstacles, params, config_.tangential_retention);
    state_ = contact.state;

    last_contact_ = std::nullopt;
    if (contact.contact)
      last_contact_ = ContactEvent{state_.time, kinetic_energy(post, params),
                                   kinetic_energy(state_, params), contact.depth_in,
                                   contact.depth_out};
    last_ = LogRow{state_, cmd, wind.wind, contact.contact};
    return last_;
  }

 private:
  ScenarioConfig config_;
  BlimpState state_;
  AutopilotState autopilot_;
  ControlMode mode_ = ControlMode::kAutopilot;
  ManualInput manual_;
  std::vector<Vec3> targets_;
  std::size_t target_index_ = 0;
  Vec3 gust_ = Vec3::Zero();
  Xoshiro256 rng_;
  LogRow last_;
  std::optional<ContactEvent> last_contact_;
};

namespace detail {

struct MetricsTracker {
  RunMetrics m;
  bool in_contact = false;

  void start(const BlimpState& s) { m.max_altitude = s.position.z(); }

  void record(const LogRow& prev, const LogRow& row, const Simulation& sim,
              std::vector<ContactEvent>& contacts) {
    m.path_length += (row.state.position - prev.state.position).norm();
    m.max_altitude = std::max(m.max_altitude, row.state.position.z());
    if (row.contact && !in_contact) ++m.collision_count;
    in_contact = row.contact;
    if (const auto& c = sim.last_contact()) {
      m.max_penetration = std::max(m.max_penetration, c->depth_out);
      contacts.push_back(*c);
    }
  }
};

template <typename BeforeStep>
RunResult run_loop(Simulation& sim, bool stop_at_goal, BeforeStep&& before_step) {
  RunResult result;
  detail::MetricsTracker tracker;
  tracker.start(sim.state());
  result.log.push_back(sim.last_row());

  // time_to_goal marks the start of the final stay inside goal_tolerance
  bool inside = false;
  const auto reached = [&] {
    const bool now = sim.at_goal();
    if (now && !inside) result.metrics.time_to_goal = sim.state().time - sim.config().initial_state.time;
    inside = now;
    return inside;
  };

  const auto steps = static_cast<long>(std::llround(sim.config().max_duration / sim.config().dt));
  if (!(reached() && stop_at_goal)) {
    try {
      for (long k = 0; k < steps; ++k) {
        before_step(sim);
        const LogRow prev = result.log.back();
        const LogRow& row = sim.advance();
        result.log.push_back(row);
        tracker.record(prev, row, sim, result.contacts);
        if (reached() && stop_at_goal) break;
      }
    } catch (const GimbalLockError& e) {
      result.abort_reason = e.what();
    } catch (const NonFiniteStateError& e) {
      result.abort_reason = e.what();
    }
  }
  result.metrics.collision_count = tracker.m.collision_count;
  result.metrics.path_length = tracker.m.path_length;
  result.metrics.max_altitude = tracker.m.max_altitude;
  result.metrics.max_penetration = tracker.m.max_penetration;
  result.metrics.reached_goal = inside;
  if (!inside) result.metrics.time_to_goal = 0.0;
  result.metrics.final_error = sim.goal_error();
  return result;
}

}  // namespace detail

// Autopilot run until the goal is within goal_tolerance or max_duration elapses.
inline RunResult run(const ScenarioConfig& config) {
  Simulation sim(config);
  sim.set_mode(ControlMode::kAutopilot);
  return detail::run_loop(sim, true, [](Simulation&) {});
}

// Manual replay over the whole max_duration with zero-order hold between samples.
inline RunResult replay_commands(const ScenarioConfig& config, const CommandTrace& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (!(trace[i].t >= trace[i - 1].t))
      throw ScenarioError("trace timestamps must be non-decreasing");
  Simulation sim(config);
  sim.set_mode(ControlMode::kManualReplay);
  std::size_t next = 0;
  return detail::run_loop(sim, false, [&](Simulation& s) {
    while (next < trace.size() && trace[next].t <= s.state().time) {
      s.set_manual_input(trace[next].input);
      ++next;
    }
  });
}

inline constexpr std::string_view kLogHeader =
    "t,x,y,z,vx,vy,vz,phi,theta,psi,wx,wy,wz,f1,f2,theta1,theta2,wind_x,wind_y,wind_z,contact";

inline void write_csv(std::ostream& out, const TrajectoryLog& log) {
  out << kLogHeader << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g,", v);
    out << buf;
  };
  for (const auto& r : log) {
    const BlimpState& s = r.state;
    put(s.time);
    for (int i = 0; i < 3; ++i) put(s.position[i]);
    for (int i = 0; i < 3; ++i) put(s.velocity[i]);
    put(s.attitude.phi);
    put(s.attitude.theta);
    put(s.attitude.psi);
    for (int i = 0; i < 3; ++i) put(s.angular_velocity[i]);
    put(r.command.f1);
    put(r.command.f2);
    put(r.command.theta1);
    put(r.command.theta2);
    for (int i = 0; i < 3; ++i) put(r.wind[i]);
    out << (r.contact ? 1 : 0) << '\n';
  }
}

inline nlohmann::json to_json(const RunMetrics& m) {
  return {{"reached_goal", m.reached_goal},       {"time_to_goal", m.time_to_goal},
          {"path_length", m.path_length},         {"max_altitude", m.max_altitude},
          {"collision_count", m.collision_count}, {"max_penetration", m.max_penetration},
          {"final_error", m.final_error}};
}

}  // namespace blimpsim
