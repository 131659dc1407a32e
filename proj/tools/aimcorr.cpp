#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "aim/scenario.hpp"
#include "aim/tss_io.hpp"
#include "aim/wire.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

std::string default_cache_dir(const aim::ScenarioConfig& config) {
  return config.pass1_dir.empty() ? "pass1" : config.pass1_dir;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  aim::ScenarioConfig config = aim::load_scenario_config(config_path);
  aim::ScenarioReport rep = aim::run_scenario(config, out_dir);
  for (const aim::VehicleReport& v : rep.vehicles) {
    if (v.ok) {
      std::printf("%-10s granted %s  exit window [%.4f, %.4f]\n", v.id.c_str(),
                  v.reservation_id.c_str(), v.exit_t0, v.exit_t1);
      if (v.rolled_out) {
        std::printf("%-10s rollout: %s, worst corridor value %.4f over %zu steps\n",
                    v.id.c_str(), v.exited ? "exited" : "did not exit",
                    v.max_trace_value, v.trace_steps);
      } else {
        std::printf("%-10s rollout skipped (%s)\n", v.id.c_str(), v.rollout_error.c_str());
      }
    } else {
      std::printf("%-10s rejected (%s, margin %.4f)\n", v.id.c_str(),
                  v.error_code.c_str(), v.margin);
    }
  }
  std::printf("min corridor-vs-danger separation value: %.4f (empty above %.4f)\n",
              rep.separation_min, -rep.epsilon_empty);
  std::printf("report: %s/report.json\n", rep.out_dir.c_str());
  return 0;
}

int cmd_precompute(const std::string& config_path, std::string cache_dir) {
  aim::ScenarioConfig config = aim::load_scenario_config(config_path);
  if (cache_dir.empty()) cache_dir = default_cache_dir(config);
  std::size_t n = aim::precompute_pass1(config, cache_dir);
  std::printf("cached offline tubes for %zu route(s) in %s\n", n, cache_dir.c_str());
  return 0;
}

int cmd_serve(const std::string& config_path, int port, std::string cache_dir) {
  aim::ScenarioConfig config = aim::load_scenario_config(config_path);
  if (cache_dir.empty()) cache_dir = default_cache_dir(config);
  auto pipeline = aim::make_pipeline(config, cache_dir);
  aim::ReservationManager manager(pipeline, config.manager);

  aim::WireServer server(manager, port);
  std::printf("listening on port %d (line-delimited JSON; ctrl-c to stop)\n",
              server.port());
  std::fflush(stdout);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  server.stop();
  return 0;
}

int cmd_slice(const std::string& tss_path, const std::string& kind, double at,
              const std::string& out_path) {
  aim::TimeStateSet tss = aim::read_tss(tss_path);
  aim::SliceKind k;
  if (kind == "xy") {
    k = aim::SliceKind::XyAtT;
  } else if (kind == "xt") {
    k = aim::SliceKind::XtAtY;
  } else {
    std::fprintf(stderr, "unknown slice kind '%s' (expected xy or xt)\n", kind.c_str());
    return 1;
  }
  std::string csv = aim::export_slice(tss, k, at);
  if (out_path.empty() || out_path == "-") {
    std::fwrite(csv.data(), 1, csv.size(), stdout);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
      return 1;
    }
    out << csv;
    std::printf("wrote %s\n", out_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety-corridor engine for a four-way intersection"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", cache_dir;
  auto* run = app.add_subcommand("run", "Run a scenario and write its evidence bundle");
  run->add_option("config", config_path, "Scenario config JSON")->required();
  run->add_option("--out", out_dir, "Output directory");

  std::string pre_config, pre_cache;
  auto* pre = app.add_subcommand("precompute", "Fill the offline-pass corridor cache");
  pre->add_option("config", pre_config, "Scenario config JSON")->required();
  pre->add_option("--cache", pre_cache, "Cache directory (default from config)");

  std::string srv_config, srv_cache;
  int port = 0;
  auto* srv = app.add_subcommand("serve", "Serve the reservation API over TCP");
  srv->add_option("config", srv_config, "Scenario config JSON")->required();
  srv->add_option("--port", port, "TCP port (0 = ephemeral)");
  srv->add_option("--cache", srv_cache, "Offline-pass cache directory");

  std::string tss_path, kind = "xt", slice_out;
  double at = 0.0;
  auto* slc = app.add_subcommand("slice", "Export a plot slice from a corridor file");
  slc->add_option("corridor", tss_path, "Corridor .tss file")->required();
  slc->add_option("--kind", kind, "xy (x-y at time) or xt (x-t at y)");
  slc->add_option("--at", at, "Slice coordinate (time for xy, y for xt)")->required();
  slc->add_option("--out", slice_out, "Output CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out_dir);
    if (*pre) return cmd_precompute(pre_config, pre_cache);
    if (*srv) return cmd_serve(srv_config, port, srv_cache);
    if (*slc) return cmd_slice(tss_path, kind, at, slice_out);
  } catch (const aim::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
