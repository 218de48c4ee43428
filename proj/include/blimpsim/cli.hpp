#pragma once

// blimpsim command line:
//   run <scenario> [--log out.csv] [--seed N] [--metrics out.json]
//   replay <scenario> <trace> [--log out.csv] [--seed N] [--metrics out.json]
//   serve <scenario> [--port P] [--host H] [--speed S] [--record trace.csv]
//   validate <scenario>
// Exit codes: 0 success, 1 goal not reached or run aborted, 2 usage/config error.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "blimpsim/bridge.hpp"
#include "blimpsim/runner.hpp"
#include "blimpsim/scenario.hpp"

namespace blimpsim {

enum ExitCode : int { kExitOk = 0, kExitScenarioFailed = 1, kExitUsage = 2 };

namespace detail {

inline std::atomic<bool> g_interrupted{false};

inline void on_signal(int) { g_interrupted = true; }

struct OutputPaths {
  std::string log;
  std::string metrics;
};

inline int report(const RunResult& r, const OutputPaths& paths, bool goal_required,
                  std::ostream& out, std::ostream& err) {
  if (!paths.log.empty()) {
    std::ofstream f(paths.log);
    if (!f) {
      err << "error: cannot write log '" << paths.log << "'\n";
      return kExitUsage;
    }
    write_csv(f, r.log);
  }
  const auto metrics = to_json(r.metrics);
  if (!paths.metrics.empty()) {
    std::ofstream f(paths.metrics);
    if (!f) {
      err << "error: cannot write metrics '" << paths.metrics << "'\n";
      return kExitUsage;
    }
    f << metrics.dump(2) << '\n';
  }
  out << metrics.dump() << '\n';
  if (r.abort_reason) {
    err << "run aborted: " << *r.abort_reason << '\n';
    return kExitScenarioFailed;
  }
  if (goal_required && !r.metrics.reached_goal) {
    err << "goal not reached (final error " << r.metrics.final_error << " m)\n";
    return kExitScenarioFailed;
  }
  return kExitOk;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Blimp simulator: headless runs, command replay and live teleop bridge"};
  app.require_subcommand(1);

  std::string scenario_path, trace_path, record_path, host = "127.0.0.1";
  std::optional<std::uint64_t> seed;
  detail::OutputPaths paths;
  int port = 7878;
  double speed = 1.0;

  auto* run_cmd = app.add_subcommand("run", "Fly the scenario with the autopilot");
  run_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  run_cmd->add_option("--log", paths.log, "Write the trajectory CSV here");
  run_cmd->add_option("--seed", seed, "Override the scenario seed");
  run_cmd->add_option("--metrics", paths.metrics, "Write metrics JSON here");

  auto* replay_cmd = app.add_subcommand("replay", "Replay a manual command trace");
  replay_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  replay_cmd->add_option("trace", trace_path,
                         "Command trace CSV (t,surge,heave,yaw,roll); defaults to the scenario's trace");
  replay_cmd->add_option("--log", paths.log, "Write the trajectory CSV here");
  replay_cmd->add_option("--seed", seed, "Override the scenario seed");
  replay_cmd->add_option("--metrics", paths.metrics, "Write metrics JSON here");

  auto* serve_cmd = app.add_subcommand("serve", "Run the live teleop bridge");
  serve_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  serve_cmd->add_option("--port", port, "TCP port (0 picks a free one)");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--speed", speed, "Simulated seconds per wall-clock second");
  serve_cmd->add_option("--record", record_path, "Write the applied manual commands here on exit");

  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a scenario");
  validate_cmd->add_option("scenario", scenario_path, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    ScenarioConfig config = load_scenario(scenario_path);
    if (seed) config.seed = *seed;

    if (*validate_cmd) {
      out << "ok: " << config.name << '\n';
      return kExitOk;
    }
    if (*run_cmd) return detail::report(run(config), paths, true, out, err);
    if (*replay_cmd) {
      if (trace_path.empty()) {
        if (config.trace.empty()) throw ScenarioError("no trace given and the scenario names none");
        trace_path = (std::filesystem::path(scenario_path).parent_path() / config.trace).string();
      }
      const CommandTrace trace = load_trace(trace_path);
      return detail::report(replay_commands(config, trace), paths, config.goal.has_value(), out, err);
    }
    if (*serve_cmd) {
      BridgeOptions options;
      options.host = host;
      options.port = port;
      options.time_scale = speed;
      BridgeServer server(config, options);
      try {
        server.start();
      } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
      }
      err << "serving '" << config.name << "' on " << host << ':' << server.port() << '\n';
      detail::g_interrupted = false;
      std::signal(SIGINT, detail::on_signal);
      std::signal(SIGTERM, detail::on_signal);
      while (!detail::g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(50));
      server.stop();
      if (!record_path.empty()) {
        std::ofstream f(record_path);
        write_trace(f, server.recorded_trace());
      }
      return kExitOk;
    }
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace blimpsim
