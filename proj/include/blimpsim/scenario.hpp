#pragma once

// Scenario files: YAML with strict key checking. Every key is optional and
// falls back to the reference vehicle and default gains; unknown keys are
// rejected with their line number.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "blimpsim/control.hpp"
#include "blimpsim/dynamics.hpp"
#include "blimpsim/environment.hpp"
#include "blimpsim/errors.hpp"
#include "blimpsim/vehicle.hpp"

namespace blimpsim {

enum class ControlMode { kManualReplay, kAutopilot };

struct AeroConfig {
  bool drag = true;
  double drag_coefficient = kDefaultDragCoefficient;
  double air_density = kSeaLevelAirDensity;
  bool operator==(const AeroConfig&) const = default;
};

struct ScenarioConfig {
  std::string name = "unnamed";
  BlimpParams params = default_params();
  WindModel wind{};
  AeroConfig aero{};
  std::vector<Obstacle> obstacles;
  double tangential_retention = kDefaultTangentialRetention;
  BlimpState initial_state{};
  ControlMode mode = ControlMode::kAutopilot;
  std::optional<Vec3> goal;
  std::vector<Vec3> waypoints;  // visited in order before goal
  double waypoint_tolerance = 1.0;
  std::string trace;            // manual-replay command trace
  PidGains gains{};
  ManualLimits manual_limits{};
  double dt = 0.01;
  IntegratorKind integrator = IntegratorKind::kRk4;
  double max_duration = 60.0;
  double goal_tolerance = 0.5;
  std::uint64_t seed = 0;

  bool operator==(const ScenarioConfig&) const = default;
};

// Throws ScenarioError naming the violated invariant.
inline void validate(const ScenarioConfig& c) {
  try {
    validate(c.params);
    validate(c.wind);
    validate(c.gains);
    for (const auto& o : c.obstacles) validate(o);
  } catch (const InvalidArgument& e) {
    throw ScenarioError(e.what());
  }
  if (!(c.dt > 0.0 && c.dt <= kMaxTimeStep)) throw ScenarioError("dt must be in (0, 0.05]");
  if (!(c.max_duration > 0.0)) throw ScenarioError("max_duration must be > 0");
  if (!(c.goal_tolerance > 0.0)) throw ScenarioError("goal_tolerance must be > 0");
  if (!(c.waypoint_tolerance > 0.0)) throw ScenarioError("waypoint_tolerance must be > 0");
  if (!(c.tangential_retention >= 0.0 && c.tangential_retention <= 1.0))
    throw ScenarioError("contact.tangential_retention must be in [0, 1]");
  if (!(c.aero.drag_coefficient >= 0.0) || !(c.aero.air_density > 0.0))
    throw ScenarioError("aero: drag_coefficient >= 0 and air_density > 0 required");
  if (!c.initial_state.finite()) throw ScenarioError("initial_state must be finite");
  if (near_gimbal_lock(c.initial_state.attitude.phi))
    throw ScenarioError("initial_state: |phi| must be < pi/2 - 1e-3");
  if (c.mode == ControlMode::kAutopilot && !c.goal) throw ScenarioError("autopilot mode requires goal");
  if (!c.waypoints.empty() && !c.goal) throw ScenarioError("waypoints require goal");
  if (c.goal && !c.goal->allFinite()) throw ScenarioError("goal must be finite");
}

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

inline void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                       std::string_view where) {
  if (!map.IsMap()) throw ScenarioError(std::string(where) + " must be a mapping", line_of(map));
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known)
      throw ScenarioError("unknown key '" + key + "' in " + std::string(where), line_of(kv.first));
  }
}

template <typename T>
T scalar(const YAML::Node& n, std::string_view key) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ScenarioError("bad value for '" + std::string(key) + "'", line_of(n));
  }
}

template <typename T>
void read(const YAML::Node& map, const char* key, T& out) {
  if (const auto n = map[key]) out = scalar<T>(n, key);
}

inline Vec3 vec3(const YAML::Node& n, std::string_view key) {
  if (!n.IsSequence() || n.size() != 3)
    throw ScenarioError("'" + std::string(key) + "' must be a list of 3 numbers", line_of(n));
  return {scalar<double>(n[0], key), scalar<double>(n[1], key), scalar<double>(n[2], key)};
}

inline void read_vec3(const YAML::Node& map, const char* key, Vec3& out) {
  if (const auto n = map[key]) out = vec3(n, key);
}

inline void read_vehicle(const YAML::Node& n, BlimpParams& p) {
  check_keys(n,
             {"mass_total", "inertia", "thruster_offset_lateral", "thruster_offset_below_com",
              "buoyancy_offset", "buoyancy_force", "gravity", "thrust_max", "servo_range",
              "envelope_semi_axes"},
             "vehicle");
  read(n, "mass_total", p.mass_total);
  if (const auto j = n["inertia"]) {
    if (!j.IsSequence() || j.size() != 3) throw ScenarioError("inertia must be 3 rows", line_of(j));
    for (int r = 0; r < 3; ++r) p.inertia.row(r) = vec3(j[r], "inertia").transpose();
  }
  read(n, "thruster_offset_lateral", p.thruster_offset_lateral);
  read(n, "thruster_offset_below_com", p.thruster_offset_below_com);
  read(n, "buoyancy_offset", p.buoyancy_offset);
  read(n, "buoyancy_force", p.buoyancy_force);
  read(n, "gravity", p.gravity);
  read(n, "thrust_max", p.thrust_max);
  if (const auto s = n["servo_range"]) {
    if (!s.IsSequence() || s.size() != 2)
      throw ScenarioError("servo_range must be [min, max]", line_of(s));
    p.servo_range = {scalar<double>(s[0], "servo_range"), scalar<double>(s[1], "servo_range")};
  }
  read_vec3(n, "envelope_semi_axes", p.envelope_semi_axes);
}

inline Obstacle read_obstacle(const YAML::Node& n) {
  if (!n.IsMap() || !n["kind"]) throw ScenarioError("obstacle needs a 'kind'", line_of(n));
  const auto kind = scalar<std::string>(n["kind"], "kind");
  Obstacle o;
  read(n, "restitution", o.restitution);
  if (kind == "box") {
    check_keys(n, {"kind", "min", "max", "restitution"}, "box obstacle");
    if (!n["min"] || !n["max"]) throw ScenarioError("box obstacle needs min and max", line_of(n));
    o.shape = BoxObstacle{vec3(n["min"], "min"), vec3(n["max"], "max")};
  } else if (kind == "plane") {
    check_keys(n, {"kind", "normal", "offset", "restitution"}, "plane obstacle");
    if (!n["normal"]) throw ScenarioError("plane obstacle needs normal", line_of(n));
    PlaneObstacle p{vec3(n["normal"], "normal"), 0.0};
    read(n, "offset", p.offset);
    o.shape = p;
  } else {
    throw ScenarioError("unknown obstacle kind '" + kind + "'", line_of(n["kind"]));
  }
  return o;
}

inline void read_gains(const YAML::Node& n, PidGains& g) {
  check_keys(n,
             {"kp", "kd", "ki", "k_yaw", "integral_limit", "k_roll", "k_roll_d", "k_yaw_d",
              "yaw_fade_force", "yaw_law"},
             "gains");
  read_vec3(n, "kp", g.kp);
  read_vec3(n, "kd", g.kd);
  read_vec3(n, "ki", g.ki);
  read(n, "k_yaw", g.k_yaw);
  read(n, "integral_limit", g.integral_limit);
  read(n, "k_roll", g.k_roll);
  read(n, "k_roll_d", g.k_roll_d);
  read(n, "k_yaw_d", g.k_yaw_d);
  read(n, "yaw_fade_force", g.yaw_fade_force);
  if (const auto y = n["yaw_law"]) {
    const auto s = scalar<std::string>(y, "yaw_law");
    if (s == "signed") g.yaw_law = YawLaw::kSigned;
    else if (s == "arccos") g.yaw_law = YawLaw::kArccos;
    else throw ScenarioError("yaw_law must be 'signed' or 'arccos'", line_of(y));
  }
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text) {
  using namespace detail;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ScenarioError("parse error: " + e.msg, e.mark.line + 1);
  }
  if (!root.IsMap()) throw ScenarioError("scenario must be a mapping at top level");
  check_keys(root,
             {"name", "vehicle", "wind", "aero", "contact", "obstacles", "initial_state", "mode",
              "goal", "waypoints", "waypoint_tolerance", "trace", "gains", "manual_limits", "dt",
              "integrator", "max_duration", "goal_tolerance", "seed"},
             "scenario");

  ScenarioConfig c;
  read(root, "name", c.name);
  if (const auto v = root["vehicle"]) read_vehicle(v, c.params);
  if (const auto w = root["wind"]) {
    check_keys(w, {"mean", "turbulence_rms", "correlation_time"}, "wind");
    read_vec3(w, "mean", c.wind.mean_wind);
    read(w, "turbulence_rms", c.wind.turbulence_rms);
    read(w, "correlation_time", c.wind.correlation_time);
  }
  if (const auto a = root["aero"]) {
    check_keys(a, {"drag", "drag_coefficient", "air_density"}, "aero");
    read(a, "drag", c.aero.drag);
    read(a, "drag_coefficient", c.aero.drag_coefficient);
    read(a, "air_density", c.aero.air_density);
  }
  if (const auto k = root["contact"]) {
    check_keys(k, {"tangential_retention"}, "contact");
    read(k, "tangential_retention", c.tangential_retention);
  }
  if (const auto obs = root["obstacles"]) {
    if (!obs.IsSequence()) throw ScenarioError("obstacles must be a list", line_of(obs));
    for (const auto& o : obs) c.obstacles.push_back(read_obstacle(o));
  }
  if (const auto s = root["initial_state"]) {
    check_keys(s, {"position", "velocity", "attitude", "angular_velocity", "time"}, "initial_state");
    read_vec3(s, "position", c.initial_state.position);
    read_vec3(s, "velocity", c.initial_state.velocity);
    if (const auto att = s["attitude"]) c.initial_state.attitude = EulerAngles::from_vector(vec3(att, "attitude"));
    read_vec3(s, "angular_velocity", c.initial_state.angular_velocity);
    read(s, "time", c.initial_state.time);
  }
  if (const auto m = root["mode"]) {
    const auto s = scalar<std::string>(m, "mode");
    if (s == "autopilot") c.mode = ControlMode::kAutopilot;
    else if (s == "manual-replay") c.mode = ControlMode::kManualReplay;
    else throw ScenarioError("mode must be 'autopilot' or 'manual-replay'", line_of(m));
  }
  if (const auto g = root["goal"]) c.goal = vec3(g, "goal");
  if (const auto wps = root["waypoints"]) {
    if (!wps.IsSequence()) throw ScenarioError("waypoints must be a list", line_of(wps));
    for (const auto& w : wps) c.waypoints.push_back(vec3(w, "waypoints"));
  }
  read(root, "waypoint_tolerance", c.waypoint_tolerance);
  read(root, "trace", c.trace);
  if (const auto g = root["gains"]) read_gains(g, c.gains);
  if (const auto m = root["manual_limits"]) {
    check_keys(m, {"max_fx", "max_fz", "max_tau_x", "max_tau_z"}, "manual_limits");
    read(m, "max_fx", c.manual_limits.max_fx);
    read(m, "max_fz", c.manual_limits.max_fz);
    read(m, "max_tau_x", c.manual_limits.max_tau_x);
    read(m, "max_tau_z", c.manual_limits.max_tau_z);
  }
  if (const auto dt = root["dt"]) c.dt = scalar<double>(dt, "dt");
  if (const auto i = root["integrator"]) {
    const auto s = scalar<std::string>(i, "integrator");
    if (s == "rk4") c.integrator = IntegratorKind::kRk4;
    else if (s == "semi-implicit-euler") c.integrator = IntegratorKind::kSemiImplicitEuler;
    else throw ScenarioError("integrator must be 'rk4' or 'semi-implicit-euler'", line_of(i));
  }
  read(root, "max_duration", c.max_duration);
  read(root, "goal_tolerance", c.goal_tolerance);
  read(root, "seed", c.seed);

  if (const auto dt = root["dt"]; dt && !(c.dt > 0.0 && c.dt <= kMaxTimeStep))
    throw ScenarioError("dt must be in (0, 0.05]", line_of(dt));
  validate(c);
  return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  ScenarioConfig c = parse_scenario(buf.str());
  return c;
}

inline std::string serialize(const ScenarioConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  auto vec = [&](const Vec3& v) {
    out << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << v.z() << YAML::EndSeq;
  };
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.name;

  const BlimpParams& p = c.params;
  out << YAML::Key << "vehicle" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mass_total" << YAML::Value << p.mass_total;
  out << YAML::Key << "inertia" << YAML::Value << YAML::BeginSeq;
  for (int r = 0; r < 3; ++r) vec(p.inertia.row(r).transpose());
  out << YAML::EndSeq;
  out << YAML::Key << "thruster_offset_lateral" << YAML::Value << p.thruster_offset_lateral;
  out << YAML::Key << "thruster_offset_below_com" << YAML::Value << p.thruster_offset_below_com;
  out << YAML::Key << "buoyancy_offset" << YAML::Value << p.buoyancy_offset;
  out << YAML::Key << "buoyancy_force" << YAML::Value << p.buoyancy_force;
  out << YAML::Key << "gravity" << YAML::Value << p.gravity;
  out << YAML::Key << "thrust_max" << YAML::Value << p.thrust_max;
  out << YAML::Key << "servo_range" << YAML::Value << YAML::Flow << YAML::BeginSeq
      << p.servo_range[0] << p.servo_range[1] << YAML::EndSeq;
  out << YAML::Key << "envelope_semi_axes" << YAML::Value;
  vec(p.envelope_semi_axes);
  out << YAML::EndMap;

  out << YAML::Key << "wind" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mean" << YAML::Value;
  vec(c.wind.mean_wind);
  out << YAML::Key << "turbulence_rms" << YAML::Value << c.wind.turbulence_rms;
  out << YAML::Key << "correlation_time" << YAML::Value << c.wind.correlation_time;
  out << YAML::EndMap;

  out << YAML::Key << "aero" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "drag" << YAML::Value << c.aero.drag;
  out << YAML::Key << "drag_coefficient" << YAML::Value << c.aero.drag_coefficient;
  out << YAML::Key << "air_density" << YAML::Value << c.aero.air_density;
  out << YAML::EndMap;

  out << YAML::Key << "contact" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tangential_retention" << YAML::Value << c.tangential_retention;
  out << YAML::EndMap;

  out << YAML::Key << "obstacles" << YAML::Value << YAML::BeginSeq;
  for (const auto& o : c.obstacles) {
    out << YAML::BeginMap;
    if (const auto* b = std::get_if<BoxObstacle>(&o.shape)) {
      out << YAML::Key << "kind" << YAML::Value << "box";
      out << YAML::Key << "min" << YAML::Value;
      vec(b->min_corner);
      out << YAML::Key << "max" << YAML::Value;
      vec(b->max_corner);
    } else {
      const auto& pl = std::get<PlaneObstacle>(o.shape);
      out << YAML::Key << "kind" << YAML::Value << "plane";
      out << YAML::Key << "normal" << YAML::Value;
      vec(pl.normal);
      out << YAML::Key << "offset" << YAML::Value << pl.offset;
    }
    out << YAML::Key << "restitution" << YAML::Value << o.restitution;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  const BlimpState& s = c.initial_state;
  out << YAML::Key << "initial_state" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "position" << YAML::Value;
  vec(s.position);
  out << YAML::Key << "velocity" << YAML::Value;
  vec(s.velocity);
  out << YAML::Key << "attitude" << YAML::Value;
  vec(s.attitude.as_vector());
  out << YAML::Key << "angular_velocity" << YAML::Value;
  vec(s.angular_velocity);
  out << YAML::Key << "time" << YAML::Value << s.time;
  out << YAML::EndMap;

  out << YAML::Key << "mode" << YAML::Value
      << (c.mode == ControlMode::kAutopilot ? "autopilot" : "manual-replay");
  if (c.goal) {
    out << YAML::Key << "goal" << YAML::Value;
    vec(*c.goal);
  }
  out << YAML::Key << "waypoints" << YAML::Value << YAML::BeginSeq;
  for (const auto& w : c.waypoints) vec(w);
  out << YAML::EndSeq;
  out << YAML::Key << "waypoint_tolerance" << YAML::Value << c.waypoint_tolerance;
  if (!c.trace.empty()) out << YAML::Key << "trace" << YAML::Value << c.trace;

  const PidGains& g = c.gains;
  out << YAML::Key << "gains" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kp" << YAML::Value;
  vec(g.kp);
  out << YAML::Key << "kd" << YAML::Value;
  vec(g.kd);
  out << YAML::Key << "ki" << YAML::Value;
  vec(g.ki);
  out << YAML::Key << "k_yaw" << YAML::Value << g.k_yaw;
  out << YAML::Key << "integral_limit" << YAML::Value << g.integral_limit;
  out << YAML::Key << "k_roll" << YAML::Value << g.k_roll;
  out << YAML::Key << "k_roll_d" << YAML::Value << g.k_roll_d;
  out << YAML::Key << "k_yaw_d" << YAML::Value << g.k_yaw_d;
  out << YAML::Key << "yaw_fade_force" << YAML::Value << g.yaw_fade_force;
  out << YAML::Key << "yaw_law" << YAML::Value << (g.yaw_law == YawLaw::kSigned ? "signed" : "arccos");
  out << YAML::EndMap;

  const ManualLimits& m = c.manual_limits;
  out << YAML::Key << "manual_limits" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "max_fx" << YAML::Value << m.max_fx;
  out << YAML::Key << "max_fz" << YAML::Value << m.max_fz;
  out << YAML::Key << "max_tau_x" << YAML::Value << m.max_tau_x;
  out << YAML::Key << "max_tau_z" << YAML::Value << m.max_tau_z;
  out << YAML::EndMap;

  out << YAML::Key << "dt" << YAML::Value << c.dt;
  out << YAML::Key << "integrator" << YAML::Value
      << (c.integrator == IntegratorKind::kRk4 ? "rk4" : "semi-implicit-euler");
  out << YAML::Key << "max_duration" << YAML::Value << c.max_duration;
  out << YAML::Key << "goal_tolerance" << YAML::Value << c.goal_tolerance;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---- manual command traces --------------------------------------------------
// CSV, header "t,surge,heave,yaw,roll", timestamps non-decreasing.

struct TraceSample {
  double t = 0.0;
  ManualInput input;
  bool operator==(const TraceSample&) const = default;
};

using CommandTrace = std::vector<TraceSample>;

inline constexpr std::string_view kTraceHeader = "t,surge,heave,yaw,roll";

inline CommandTrace parse_trace(std::istream& in) {
  CommandTrace trace;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kTraceHeader) throw ScenarioError("trace header must be '" + std::string(kTraceHeader) + "'", lineno);
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    double v[5];
    for (int i = 0; i < 5; ++i) {
      if (!std::getline(ss, cell, ',')) throw ScenarioError("trace row needs 5 columns", lineno);
      try {
        std::size_t used = 0;
        v[i] = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ScenarioError("bad number '" + cell + "' in trace", lineno);
      }
    }
    TraceSample s{v[0], {v[1], v[2], v[3], v[4]}};
    try {
      validate(s.input);
    } catch (const InvalidArgument& e) {
      throw ScenarioError(e.what(), lineno);
    }
    if (!trace.empty() && !(s.t >= trace.back().t))
      throw ScenarioError("trace timestamps must be non-decreasing", lineno);
    trace.push_back(s);
  }
  return trace;
}

inline CommandTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open trace file '" + path + "'");
  return parse_trace(in);
}

inline void write_trace(std::ostream& out, const CommandTrace& trace) {
  out << kTraceHeader << '\n';
  char buf[160];
  for (const auto& s : trace) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.input.axis_surge,
                  s.input.axis_heave, s.input.axis_yaw, s.input.axis_roll);
    out << buf;
  }
}

}  // namespace blimpsim
