#pragma once

// Teleop wire protocol: one JSON object per line, tagged by "type".
//
//   {"type":"hello","version":1,"scenario":"transit60"}
//   {"type":"state","t":..,"position":[x,y,z],"velocity":[..],"attitude":[phi,theta,psi],
//    "angular_velocity":[..],"command":{"f1":..,"f2":..,"theta1":..,"theta2":..},
//    "wind":[..],"mode":"manual"|"autopilot","contact":false}
//   {"type":"cmd","surge":..,"heave":..,"yaw":..,"roll":..}
//   {"type":"mode","value":"manual"|"autopilot"}
//   {"type":"goal","position":[x,y,z]}
//   {"type":"reset"}
//
// Units are SI; angles in radians. Doubles are written in shortest
// round-trip form, so decode(encode(m)) == m exactly.

#include <nlohmann/json.hpp>

#include <string>
#include <variant>

#include "blimpsim/actuation.hpp"
#include "blimpsim/control.hpp"
#include "blimpsim/errors.hpp"
#include "blimpsim/frames.hpp"
#include "blimpsim/scenario.hpp"

namespace blimpsim::protocol {

inline constexpr int kVersion = 1;

struct Hello {
  int version = kVersion;
  std::string scenario;
  bool operator==(const Hello&) const = default;
};

struct State {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  EulerAngles attitude{};
  Vec3 angular_velocity = Vec3::Zero();
  ActuatorCommand command{};
  Vec3 wind = Vec3::Zero();
  ControlMode mode = ControlMode::kManualReplay;
  bool contact = false;
  bool operator==(const State&) const = default;
};

struct Cmd {
  ManualInput input;
  bool operator==(const Cmd&) const = default;
};

struct Mode {
  ControlMode mode = ControlMode::kManualReplay;
  bool operator==(const Mode&) const = default;
};

struct Goal {
  Vec3 position = Vec3::Zero();
  bool operator==(const Goal&) const = default;
};

struct Reset {
  bool operator==(const Reset&) const = default;
};

using Message = std::variant<Hello, State, Cmd, Mode, Goal, Reset>;

// Well-formed line whose type this build does not know.
class UnknownType : public ProtocolError {
 public:
  explicit UnknownType(const std::string& type)
      : ProtocolError("unknown message type '" + type + "'"), type_(type) {}
  const std::string& type() const noexcept { return type_; }

 private:
  std::string type_;
};

namespace detail {

using nlohmann::json;

inline json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw ProtocolError(std::string("'") + key + "' must be [x,y,z]");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline const char* mode_name(ControlMode m) {
  return m == ControlMode::kAutopilot ? "autopilot" : "manual";
}

inline ControlMode parse_mode(const std::string& s) {
  if (s == "autopilot") return ControlMode::kAutopilot;
  if (s == "manual") return ControlMode::kManualReplay;
  throw ProtocolError("mode must be 'manual' or 'autopilot', got '" + s + "'");
}

struct Encoder {
  json operator()(const Hello& m) const {
    return {{"type", "hello"}, {"version", m.version}, {"scenario", m.scenario}};
  }
  json operator()(const State& m) const {
    return {{"type", "state"},
            {"t", m.t},
            {"position", vec(m.position)},
            {"velocity", vec(m.velocity)},
            {"attitude", vec(m.attitude.as_vector())},
            {"angular_velocity", vec(m.angular_velocity)},
            {"command",
             {{"f1", m.command.f1}, {"f2", m.command.f2}, {"theta1", m.command.theta1},
              {"theta2", m.command.theta2}}},
            {"wind", vec(m.wind)},
            {"mode", mode_name(m.mode)},
            {"contact", m.contact}};
  }
  json operator()(const Cmd& m) const {
    return {{"type", "cmd"},
            {"surge", m.input.axis_surge},
            {"heave", m.input.axis_heave},
            {"yaw", m.input.axis_yaw},
            {"roll", m.input.axis_roll}};
  }
  json operator()(const Mode& m) const { return {{"type", "mode"}, {"value", mode_name(m.mode)}}; }
  json operator()(const Goal& m) const { return {{"type", "goal"}, {"position", vec(m.position)}}; }
  json operator()(const Reset&) const { return {{"type", "reset"}}; }
};

}  // namespace detail

inline std::string encode(const Message& m) { return std::visit(detail::Encoder{}, m).dump(); }

inline Message decode(const std::string& line) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed line: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ProtocolError("message must be an object with a string 'type'");

  const auto type = j["type"].get<std::string>();
  try {
    if (type == "hello") return Hello{j.at("version").get<int>(), j.at("scenario").get<std::string>()};
    if (type == "state") {
      State s;
      s.t = j.at("t").get<double>();
      s.position = detail::vec(j, "position");
      s.velocity = detail::vec(j, "velocity");
      s.attitude = EulerAngles::from_vector(detail::vec(j, "attitude"));
      s.angular_velocity = detail::vec(j, "angular_velocity");
      const auto& c = j.at("command");
      s.command = {c.at("f1").get<double>(), c.at("f2").get<double>(), c.at("theta1").get<double>(),
                   c.at("theta2").get<double>()};
      s.wind = detail::vec(j, "wind");
      s.mode = detail::parse_mode(j.at("mode").get<std::string>());
      s.contact = j.at("contact").get<bool>();
      return s;
    }
    if (type == "cmd") {
      auto axis = [&](const char* k) { return j.contains(k) ? j[k].get<double>() : 0.0; };
      Cmd c{{axis("surge"), axis("heave"), axis("yaw"), axis("roll")}};
      try {
        validate(c.input);
      } catch (const InvalidArgument& e) {
        throw ProtocolError(e.what());
      }
      return c;
    }
    if (type == "mode") return Mode{detail::parse_mode(j.at("value").get<std::string>())};
    if (type == "goal") {
      Goal g{detail::vec(j, "position")};
      if (!g.position.allFinite()) throw ProtocolError("goal must be finite");
      return g;
    }
    if (type == "reset") return Reset{};
  } catch (const json::exception& e) {
    throw ProtocolError("bad '" + type + "' message: " + e.what());
  }
  throw UnknownType(type);
}

}  // namespace blimpsim::protocol
