#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aim/manager.hpp"

namespace aim {

// Nominal rollout controller: proportional speed tracking toward a cruise
// speed (dropping to exit_speed near the route's end) with pure-pursuit
// steering along the route centerline. Exists to exercise the limits filter.
struct ControllerParams {
  double cruise = 0.47;
  double exit_speed = 0.18;
  double gain = 1.5;
  double slow_radius = 0.4;  // remaining arclength that triggers the slowdown
  double lookahead = 0.3;
};

struct VehicleRequest {
  std::string id;
  std::string entry;
  std::string exit;
  double entry_t0 = 0.0;
  double entry_t1 = 0.0;
  double delta = 2.0;
  ControllerParams controller;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::array<int, 4> grid_shape{31, 31, 25, 7};
  std::array<double, 2> bounds_x{-1.5, 1.5};
  std::array<double, 2> bounds_y{-1.5, 1.5};
  std::array<double, 2> bounds_v{0.0, 0.8};
  VehicleModel model;
  double horizon = 10.0;
  double cfl = 0.8;
  IntersectionLayout layout;
  ManagerOptions manager;
  std::vector<VehicleRequest> vehicles;
  std::vector<double> export_xy_times;
  std::optional<double> export_xt_y;
  bool export_phi2 = false;
  std::string pass1_dir;  // offline-pass cache; default <out_dir>/pass1
  double rollout_divisor = 5.0;  // integration step = dt / divisor
};

ScenarioConfig load_scenario_config(const std::string& path);

using Controller = std::function<Control(double t, const State& z)>;

Controller make_nominal_controller(const IntersectionLayout& layout,
                                   const VehicleModel& model, const Route& route,
                                   const ControllerParams& params);

struct RolloutStep {
  double t = 0.0;
  State z{};
  Control requested{0.0, 0.0};
  Control applied{0.0, 0.0};
  double value = 0.0;  // corridor value at (z, t)
  bool feasible = false;
  double accel_min = 0.0;
  double accel_max = 0.0;
};

struct RolloutTrace {
  std::string reservation_id;
  std::vector<RolloutStep> steps;
  bool exited = false;      // captured by the exit region within its window
  double exit_time = 0.0;
  double max_value = 0.0;   // worst corridor value along the trace
  bool left_domain = false;
};

// Closed-loop rollout of one reservation under the limits filter, integrated
// with explicit 4th-order steps and zero-order-hold controls. Starts at the
// entry box center at the granted entry start unless a state/time is supplied.
// Throws InfeasibleAtStart when the very first limits query is infeasible.
RolloutTrace rollout_vehicle(const ReservationManager& manager,
                             const std::string& reservation_id,
                             const Controller& controller, double step,
                             std::optional<State> start = std::nullopt,
                             std::optional<double> start_time = std::nullopt);

enum class SliceKind { XyAtT, XtAtY };

// CSV table of the tube reduced over theta and v: (x, y, value) at the slice
// nearest t, or (x, t, value) at the y row nearest the coordinate.
std::string export_slice(const TimeStateSet& tss, SliceKind kind, double at);

struct VehicleReport {
  std::string id;
  bool ok = false;
  std::string reservation_id;
  std::string error_code;  // admission rejection
  double margin = 0.0;
  double entry_t0 = 0.0, entry_t1 = 0.0;
  double exit_t0 = 0.0, exit_t1 = 0.0;
  double nest21 = 0.0, nest32 = 0.0, nest43 = 0.0;  // pointwise nesting excess
  PassTimings timings;
  bool rolled_out = false;
  std::string rollout_error;
  bool exited = false;
  double exit_time = 0.0;
  double max_trace_value = 0.0;
  std::size_t trace_steps = 0;
};

struct ScenarioReport {
  std::string name;
  double dt = 0.0;
  double horizon = 0.0;
  double epsilon_empty = 0.0;
  std::vector<VehicleReport> vehicles;
  // Min over granted pairs of min-value of (corridor_j intersect danger_i);
  // above -epsilon_empty means no granted corridor meets a foreign danger set.
  double separation_min = kEmptyValue;
  std::string out_dir;
};

// Admits the configured vehicles in order, rolls each out, and writes corridor
// files, trace CSVs, slice exports, timing.csv, and report.json into out_dir.
// Wall-clock timings go only to timing.csv, so reports and corridor files are
// byte-reproducible run to run.
ScenarioReport run_scenario(const ScenarioConfig& config, const std::string& out_dir);

// Fills the offline-pass cache for every distinct route in the config.
// Returns the number of distinct routes.
std::size_t precompute_pass1(const ScenarioConfig& config, const std::string& cache_dir);

std::shared_ptr<const CorridorPipeline> make_pipeline(const ScenarioConfig& config,
                                                      const std::string& cache_dir);

}  // namespace aim
