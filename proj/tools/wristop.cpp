// wristop: command-line front end.
//
//   wristop simulate --scenario slalom --seed 7 [--log run.jsonl]
//   wristop replay   trace.jsonl [--scenario building]
//   wristop train    trace.jsonl epochs.jsonl [-o templates.json]
//   wristop match    trace.jsonl [--at-us T]
//   wristop score    run.jsonl
//   wristop serve    [--port 7600] [--static-dir console/dist]
//
// Reports go to stdout as JSON. Exit codes: 0 ok, 1 usage, 2 data, 3 protocol.

#include <signal.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wristop/config.hpp"
#include "wristop/errors.hpp"
#include "wristop/gesture.hpp"
#include "wristop/harness.hpp"
#include "wristop/scenario.hpp"
#include "wristop/service.hpp"
#include "wristop/template_store.hpp"
#include "wristop/trace.hpp"

namespace {

using namespace wristop;

constexpr std::uint16_t kDefaultPort = 7600;

struct Common {
  std::string scenario{"slalom"};
  std::string config;
  std::string templates;
  std::uint64_t seed{1};
  double tick_hz{50.0};
};

Config load_config(const Common& c) { return c.config.empty() ? Config{} : load_config_file(c.config); }

std::vector<GestureTemplate> load_templates_or_default(const Common& c, const Config& cfg) {
  if (!c.templates.empty()) return load_templates_file(c.templates);
  return synthetic_templates(60, kCalibratedNoiseSigma, 0x7e3a11, cfg.sample_rate_hz);
}

std::vector<ImuSample> load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace '" + path + "'");
  return read_trace(in, path);
}

void print(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << std::endl; }

int run_simulate(const Common& c, const std::string& log_path, double max_seconds) {
  RunOptions opts;
  opts.config = load_config(c);
  opts.seed = c.seed;
  opts.tick_hz = c.tick_hz;
  opts.max_seconds = max_seconds;
  const Scenario sc = resolve_scenario(c.scenario);
  const RunResult r = run_scenario(sc, load_templates_or_default(c, opts.config), opts);
  if (!log_path.empty()) {
    std::ofstream out(log_path);
    if (!out) throw DataError("cannot write event log '" + log_path + "'");
    write_event_log(out, r.log);
  }
  auto j = report_to_json(r.report);
  nlohmann::ordered_json pins = nlohmann::ordered_json::array();
  for (const auto& p : r.world.pins) pins.push_back(p.knocked);
  j["pins_knocked"] = pins;
  print(j);
  return 0;
}

int run_replay(const Common& c, const std::string& trace_path) {
  const Config cfg = load_config(c);
  const auto samples = load_trace_file(trace_path);
  const ReplayResult r = replay(samples, load_templates_or_default(c, cfg), cfg, resolve_scenario(c.scenario));
  print(report_to_json(r.report));
  return 0;
}

int run_train(const Common& c, const std::string& trace_path, const std::string& epochs_path,
              const std::string& output) {
  const Config cfg = load_config(c);
  const auto samples = load_trace_file(trace_path);
  std::ifstream side(epochs_path);
  if (!side) throw DataError("cannot open epoch sidecar '" + epochs_path + "'");
  const auto templates = train(samples, read_epoch_sidecar(side, epochs_path), cfg);
  if (output.empty()) {
    save_templates(std::cout, templates);
    return 0;
  }
  std::ofstream out(output);
  if (!out) throw DataError("cannot write templates '" + output + "'");
  save_templates(out, templates);
  nlohmann::ordered_json j;
  j["output"] = output;
  auto& classes = j["templates"] = nlohmann::ordered_json::array();
  for (const auto& t : templates) {
    classes.push_back({{"class", std::string(to_string(t.gesture))}, {"training_count", t.training_count},
                       {"length", t.epoch.length()}});
  }
  print(j);
  return 0;
}

int run_match(const Common& c, const std::string& trace_path, std::optional<Micros> at_us) {
  const Config cfg = load_config(c);
  const auto samples = load_trace_file(trace_path);
  const auto templates = load_templates_or_default(c, cfg);
  SignalWindow window(kMatchChannels, cfg.window_capacity, cfg.sample_rate_hz);
  for (const auto& s : samples) {
    if (at_us && s.timestamp_us > *at_us) break;
    window.push_sample(s);
  }
  const MatchDecision d = match_window(window, templates, cfg.match_settings(), std::nullopt);
  nlohmann::ordered_json j;
  j["gesture"] = d.gesture ? nlohmann::ordered_json(std::string(to_string(*d.gesture))) : nlohmann::ordered_json();
  j["score"] = d.score;
  j["t_us"] = d.timestamp_us;
  j["window_samples"] = window.size();
  print(j);
  return 0;
}

int run_score(const std::string& log_path) {
  std::ifstream in(log_path);
  if (!in) throw DataError("cannot open event log '" + log_path + "'");
  print(report_to_json(report_from_log(read_event_log(in, log_path))));
  return 0;
}

int run_serve(const Common& c, std::optional<std::uint16_t> port, std::optional<std::uint16_t> bridge_port,
              bool no_bridge, const std::string& static_dir, int latency_ms, double duration_s) {
  service::ServiceOptions opts;
  opts.config = load_config(c);
  opts.templates = load_templates_or_default(c, opts.config);
  opts.scenario = resolve_scenario(c.scenario);
  opts.tick_hz = c.tick_hz;
  opts.static_dir = static_dir;
  if (latency_ms < 0) throw ArgumentError("--latency-ms must be non-negative");
  opts.latency = std::chrono::milliseconds(latency_ms);
  if (!port) {
    if (const char* env = std::getenv("WRISTOP_PORT")) {
      try {
        const int p = std::stoi(env);
        if (p < 0 || p > 65535) throw std::out_of_range("port");
        port = static_cast<std::uint16_t>(p);
      } catch (const std::exception&) {
        throw ArgumentError(std::string("WRISTOP_PORT is not a port number: '") + env + "'");
      }
    }
  }
  opts.port = port.value_or(kDefaultPort);
  if (!no_bridge) {
    opts.bridge_port = bridge_port ? *bridge_port : (opts.port == 0 ? 0 : static_cast<std::uint16_t>(opts.port + 1));
  }

  // Block termination signals before any thread starts so only sigtimedwait sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  service::Service svc(std::move(opts));
  svc.start();
  nlohmann::ordered_json hello = {{"port", svc.tcp_port()}};
  hello["bridge_port"] = no_bridge ? nlohmann::ordered_json() : nlohmann::ordered_json(svc.bridge_port());
  std::cout << hello.dump() << std::endl;

  const auto until = duration_s > 0.0 ? std::optional(service::Clock::now() + std::chrono::duration_cast<service::Clock::duration>(
                                                                                  std::chrono::duration<double>(duration_s)))
                                      : std::nullopt;
  while (!until || service::Clock::now() < *until) {
    timespec poll_interval{0, 200'000'000};
    if (sigtimedwait(&stop_signals, nullptr, &poll_interval) > 0) break;
  }
  svc.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wristop: wrist-gesture teleoperation stack"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", common.scenario, "built-in scenario (slalom, targets, building) or JSON file");
    sub->add_option("--config", common.config, "configuration JSON file");
    sub->add_option("--templates", common.templates, "template store (default: synthetic templates)");
    sub->add_option("--seed", common.seed, "random seed");
    sub->add_option("--tick-hz", common.tick_hz, "simulator tick rate")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "headless autopilot run");
  add_common(simulate);
  std::string log_path;
  double max_seconds = 300.0;
  simulate->add_option("--log", log_path, "write the event log here");
  simulate->add_option("--max-seconds", max_seconds, "give up after this much simulated time")
      ->check(CLI::PositiveNumber);

  auto* replay_cmd = app.add_subcommand("replay", "feed a recorded trace through the pipeline");
  add_common(replay_cmd);
  std::string trace_path;
  replay_cmd->add_option("trace", trace_path, "trace file")->required();

  auto* train_cmd = app.add_subcommand("train", "build templates from a trace and an epoch sidecar");
  add_common(train_cmd);
  std::string epochs_path, output;
  train_cmd->add_option("trace", trace_path, "trace file")->required();
  train_cmd->add_option("epochs", epochs_path, "epoch sidecar")->required();
  train_cmd->add_option("-o,--output", output, "template store to write (default: stdout)");

  auto* match_cmd = app.add_subcommand("match", "match the window ending at a trace position");
  add_common(match_cmd);
  std::optional<Micros> at_us;
  match_cmd->add_option("trace", trace_path, "trace file")->required();
  match_cmd->add_option("--at-us", at_us, "last sample time to include (default: end of trace)");

  auto* score_cmd = app.add_subcommand("score", "recompute a report from an event log");
  score_cmd->add_option("log", log_path, "event log")->required();

  auto* serve = app.add_subcommand("serve", "network service with live simulator");
  add_common(serve);
  std::optional<std::uint16_t> port, bridge_port;
  bool no_bridge = false;
  std::string static_dir;
  int latency_ms = 0;
  double duration_s = 0.0;
  serve->add_option("--port", port, "TCP port (env WRISTOP_PORT, default 7600; 0 picks one)");
  serve->add_option("--bridge-port", bridge_port, "HTTP bridge port (default: port + 1)");
  serve->add_flag("--no-bridge", no_bridge, "disable the HTTP bridge");
  serve->add_option("--static-dir", static_dir, "serve console assets from this directory");
  serve->add_option("--latency-ms", latency_ms, "delay every outbound frame");
  serve->add_option("--duration-s", duration_s, "stop after this long (default: until SIGINT)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return run_simulate(common, log_path, max_seconds);
    if (*replay_cmd) return run_replay(common, trace_path);
    if (*train_cmd) return run_train(common, trace_path, epochs_path, output);
    if (*match_cmd) return run_match(common, trace_path, at_us);
    if (*score_cmd) return run_score(log_path);
    if (*serve) return run_serve(common, port, bridge_port, no_bridge, static_dir, latency_ms, duration_s);
  } catch (const ArgumentError& e) {
    std::cerr << "wristop: " << e.what() << '\n';
    return 1;
  } catch (const ProtocolError& e) {
    std::cerr << "wristop: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "wristop: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
