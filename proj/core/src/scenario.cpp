#include "aim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "aim/shapes.hpp"
#include "aim/tss_io.hpp"

namespace fs = std::filesystem;

namespace aim {
namespace {

using nlohmann::json;

std::array<double, 2> pair_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError(std::string(what) + " must be a [lo, hi] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

void parse_controller(const json& j, ControllerParams& p) {
  p.cruise = j.value("cruise", p.cruise);
  p.exit_speed = j.value("exit_speed", p.exit_speed);
  p.gain = j.value("gain", p.gain);
  p.slow_radius = j.value("slow_radius", p.slow_radius);
  p.lookahead = j.value("lookahead", p.lookahead);
}

std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void write_trace_csv(const fs::path& path, const RolloutTrace& trace) {
  std::string text =
      "t,x,y,theta,v,steer_req,accel_req,steer,accel,value,feasible,accel_min,accel_max\n";
  for (const RolloutStep& s : trace.steps) {
    text += format_num(s.t);
    for (double c : s.z) {
      text += ',';
      text += format_num(c);
    }
    for (double c : {s.requested.steer, s.requested.accel, s.applied.steer,
                     s.applied.accel, s.value}) {
      text += ',';
      text += format_num(c);
    }
    text += s.feasible ? ",1," : ",0,";
    text += format_num(s.accel_min);
    text += ',';
    text += format_num(s.accel_max);
    text += '\n';
  }
  write_text_file(path, text);
}

State box_center(const BoxSpec& box) {
  State z{0.0, 0.0, 0.0, 0.0};
  if (box.x) z[kDimX] = 0.5 * (box.x->lo + box.x->hi);
  if (box.y) z[kDimY] = 0.5 * (box.y->lo + box.y->hi);
  if (box.theta) z[kDimTheta] = box.theta->lo;  // lo = center
  if (box.v) z[kDimV] = 0.5 * (box.v->lo + box.v->hi);
  return z;
}

State rk4_step(const VehicleModel& model, const StateGrid& grid, const State& z,
               const Control& u, double h) {
  const State k1 = flow(model, z, u);
  State s{};
  for (int d = 0; d < 4; ++d) s[d] = z[d] + 0.5 * h * k1[d];
  const State k2 = flow(model, s, u);
  for (int d = 0; d < 4; ++d) s[d] = z[d] + 0.5 * h * k2[d];
  const State k3 = flow(model, s, u);
  for (int d = 0; d < 4; ++d) s[d] = z[d] + h * k3[d];
  const State k4 = flow(model, s, u);
  State out{};
  for (int d = 0; d < 4; ++d) {
    out[d] = z[d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
  }
  out[kDimTheta] = wrap_angle(out[kDimTheta]);
  out[kDimV] = std::clamp(out[kDimV], grid.lower()[kDimV], grid.upper()[kDimV]);
  return out;
}

// min over the contiguous (theta, v) block at one (ix, iy).
float reduce_block(const LevelSetField& f, const StateGrid& g, int ix, int iy) {
  const std::size_t inner = g.strides()[1];  // n_theta * n_v
  const float* base = f.values().data() + g.index(ix, iy, 0, 0);
  float m = base[0];
  for (std::size_t i = 1; i < inner; ++i) m = std::min(m, base[i]);
  return m;
}

}  // namespace

ScenarioConfig load_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }

  ScenarioConfig c;
  try {
    c.name = j.value("name", c.name);
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      if (g.contains("shape")) {
        const json& s = g.at("shape");
        if (!s.is_array() || s.size() != 4) throw ConfigError("grid.shape must have 4 entries");
        for (int d = 0; d < 4; ++d) c.grid_shape[d] = s[d].get<int>();
      }
      if (g.contains("x")) c.bounds_x = pair_of(g.at("x"), "grid.x");
      if (g.contains("y")) c.bounds_y = pair_of(g.at("y"), "grid.y");
      if (g.contains("v")) c.bounds_v = pair_of(g.at("v"), "grid.v");
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      c.model.wheel_base = m.value("wheel_base", c.model.wheel_base);
      if (m.contains("steer")) {
        auto b = pair_of(m.at("steer"), "model.steer");
        c.model.steer_min = b[0];
        c.model.steer_max = b[1];
      }
      if (m.contains("accel")) {
        auto b = pair_of(m.at("accel"), "model.accel");
        c.model.accel_min = b[0];
        c.model.accel_max = b[1];
      }
      c.model.speed_limit = m.value("speed_limit", c.model.speed_limit);
    }
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      c.horizon = s.value("horizon", c.horizon);
      c.cfl = s.value("cfl", c.cfl);
    }
    if (j.contains("layout")) {
      const json& l = j.at("layout");
      IntersectionLayout& lay = c.layout;
      lay.half_extent = l.value("half_extent", lay.half_extent);
      lay.road_half_width = l.value("road_half_width", lay.road_half_width);
      lay.lane_offset = l.value("lane_offset", lay.lane_offset);
      lay.entry_outer_inset = l.value("entry_outer_inset", lay.entry_outer_inset);
      lay.entry_depth = l.value("entry_depth", lay.entry_depth);
      lay.entry_lane_halfwidth = l.value("entry_lane_halfwidth", lay.entry_lane_halfwidth);
      lay.entry_theta_halfwidth = l.value("entry_theta_halfwidth", lay.entry_theta_halfwidth);
      if (l.contains("entry_v")) {
        auto b = pair_of(l.at("entry_v"), "layout.entry_v");
        lay.entry_v_low = b[0];
        lay.entry_v_high = b[1];
      }
      lay.exit_center = l.value("exit_center", lay.exit_center);
      lay.exit_halflen = l.value("exit_halflen", lay.exit_halflen);
      lay.exit_lane_halfwidth = l.value("exit_lane_halfwidth", lay.exit_lane_halfwidth);
      lay.exit_theta_halfwidth = l.value("exit_theta_halfwidth", lay.exit_theta_halfwidth);
      if (l.contains("exit_v")) {
        auto b = pair_of(l.at("exit_v"), "layout.exit_v");
        lay.exit_v_low = b[0];
        lay.exit_v_high = b[1];
      }
      lay.speed_band_upper_slope = l.value("speed_band_upper_slope", lay.speed_band_upper_slope);
    }
    if (j.contains("manager")) {
      const json& m = j.at("manager");
      c.manager.footprint_radius = m.value("footprint_radius", c.manager.footprint_radius);
      c.manager.scheduling_horizon = m.value("scheduling_horizon", c.manager.scheduling_horizon);
    }
    for (const json& v : j.value("vehicles", json::array())) {
      VehicleRequest r;
      r.id = v.at("id").get<std::string>();
      r.entry = v.at("entry").get<std::string>();
      r.exit = v.at("exit").get<std::string>();
      auto w = pair_of(v.at("entry_window"), "vehicle.entry_window");
      r.entry_t0 = w[0];
      r.entry_t1 = w[1];
      r.delta = v.value("delta", r.delta);
      if (v.contains("controller")) parse_controller(v.at("controller"), r.controller);
      c.vehicles.push_back(std::move(r));
    }
    if (j.contains("exports")) {
      const json& e = j.at("exports");
      c.export_xy_times = e.value("xy_times", c.export_xy_times);
      if (e.contains("xt_y")) c.export_xt_y = e.at("xt_y").get<double>();
      c.export_phi2 = e.value("phi2", c.export_phi2);
    }
    c.pass1_dir = j.value("pass1_dir", c.pass1_dir);
    c.rollout_divisor = j.value("rollout_divisor", c.rollout_divisor);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }

  c.model.validate();
  if (c.horizon <= 0.0) throw ConfigError("solver.horizon must be positive");
  if (c.rollout_divisor < 1.0) throw ConfigError("rollout_divisor must be >= 1");
  std::set<std::string> ids;
  for (const VehicleRequest& r : c.vehicles) {
    if (!ids.insert(r.id).second) throw ConfigError("duplicate vehicle id " + r.id);
  }
  return c;
}

Controller make_nominal_controller(const IntersectionLayout& layout,
                                   const VehicleModel& model, const Route& route,
                                   const ControllerParams& params) {
  auto pts = layout.route_polyline(route.entry, route.exit, model);
  if (pts.size() < 2) throw UnknownRouteError("route polyline is degenerate");
  std::vector<double> arc(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    arc[i] = arc[i - 1] + std::hypot(pts[i][0] - pts[i - 1][0], pts[i][1] - pts[i - 1][1]);
  }
  const double total = arc.back();

  return [pts = std::move(pts), arc = std::move(arc), total, model,
          params](double /*t*/, const State& z) -> Control {
    // Project onto the polyline to get the current arclength.
    double best_d2 = std::numeric_limits<double>::infinity();
    double s_here = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double ax = pts[i][0], ay = pts[i][1];
      const double vx = pts[i + 1][0] - ax, vy = pts[i + 1][1] - ay;
      const double len2 = vx * vx + vy * vy;
      double u = 0.0;
      if (len2 > 0.0) {
        u = std::clamp(((z[kDimX] - ax) * vx + (z[kDimY] - ay) * vy) / len2, 0.0, 1.0);
      }
      const double dx = z[kDimX] - (ax + u * vx);
      const double dy = z[kDimY] - (ay + u * vy);
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2) {
        best_d2 = d2;
        s_here = arc[i] + u * std::sqrt(len2);
      }
    }

    // Pure pursuit toward the point one lookahead further along.
    const double s_target = std::min(s_here + params.lookahead, total);
    std::size_t seg = 0;
    while (seg + 2 < arc.size() && arc[seg + 1] < s_target) ++seg;
    const double span = std::max(arc[seg + 1] - arc[seg], 1e-12);
    const double u = std::clamp((s_target - arc[seg]) / span, 0.0, 1.0);
    const double tx = pts[seg][0] + u * (pts[seg + 1][0] - pts[seg][0]);
    const double ty = pts[seg][1] + u * (pts[seg + 1][1] - pts[seg][1]);
    const double alpha =
        wrap_angle(std::atan2(ty - z[kDimY], tx - z[kDimX]) - z[kDimTheta]);
    const double ld = std::max(params.lookahead, 1e-3);
    double steer = std::atan2(2.0 * model.wheel_base * std::sin(alpha), ld);
    steer = std::clamp(steer, model.steer_min, model.steer_max);

    const double v_target = (total - s_here) < params.slow_radius ? params.exit_speed
                                                                  : params.cruise;
    const double accel =
        std::clamp(params.gain * (v_target - z[kDimV]), model.accel_min, model.accel_max);
    return Control{steer, accel};
  };
}

RolloutTrace rollout_vehicle(const ReservationManager& manager,
                             const std::string& reservation_id,
                             const Controller& controller, double step,
                             std::optional<State> start,
                             std::optional<double> start_time) {
  if (step <= 0.0) throw ConfigError("rollout step must be positive");
  auto record = manager.find(reservation_id);
  if (!record || record->status != ReservationStatus::Active) {
    throw UnknownReservationError("no active reservation " + reservation_id);
  }
  const CorridorPipeline& pipeline = manager.pipeline();
  const VehicleModel& model = pipeline.model();
  const StateGrid& grid = pipeline.grid();
  const BoxSpec exit_box = pipeline.layout().exit_box(record->route.exit);

  State z = start ? *start : box_center(pipeline.layout().entry_box(record->route.entry));
  double t = start_time ? *start_time : record->entry_t0;

  RolloutTrace trace;
  trace.reservation_id = reservation_id;
  trace.max_value = -std::numeric_limits<double>::infinity();

  const double t_stop = record->exit_t1 + pipeline.dt();
  const double capture_tol = 0.5 * step;
  const double dt_la = pipeline.dt();
  const double creep = grid.spacing()[kDimV];  // slowest speed node inside the band
  bool first = true;

  auto in_domain = [&](const State& p) {
    return p[kDimX] >= grid.lower()[kDimX] && p[kDimX] <= grid.upper()[kDimX] &&
           p[kDimY] >= grid.lower()[kDimY] && p[kDimY] <= grid.upper()[kDimY];
  };

  while (t <= t_stop + 1e-9) {
    if (!in_domain(z)) {
      trace.left_domain = true;
      break;
    }
    const Control req = controller(t, z);
    const double steer = std::clamp(req.steer, model.steer_min, model.steer_max);
    const HalfSpaceLimit lim = manager.query_limits(reservation_id, z, steer, t);
    if (first && !lim.feasible) {
      throw InfeasibleAtStartError("driving limits infeasible at the rollout start");
    }
    first = false;

    // The one-step limit linearisation cannot see a full braking distance, so
    // approaching a still-closed frontier at speed would overshoot it. Cap the
    // accel at the largest candidate whose continuation (one lattice step,
    // brake to creep, short hold) stays inside the corridor.
    auto stoppable = [&](double u) {
      State p = rk4_step(model, grid, z, Control{steer, u}, dt_la);
      double tt = t + dt_la;
      int held = 0;
      for (int i = 0; i < 80 && held < 6; ++i) {
        if (tt >= record->exit_t1) break;
        if (!in_domain(p)) return false;
        if (record->corridor.value_at(p, tt) > 0.0) return false;
        if (p[kDimV] <= creep + 1e-9) ++held;
        const double brake = std::max(model.accel_min, (creep - p[kDimV]) / dt_la);
        p = rk4_step(model, grid, p, Control{steer, brake}, dt_la);
        tt += dt_la;
      }
      return true;
    };

    double accel = std::clamp(req.accel, model.accel_min, model.accel_max);
    if (lim.feasible) {
      accel = std::clamp(accel, lim.accel_min, lim.accel_max);
    }
    bool safe = false;
    for (double u : {accel, 0.0, model.accel_min}) {
      if (u > accel + 1e-12) continue;
      if (stoppable(u)) {
        accel = u;
        safe = true;
        break;
      }
    }
    if (!safe) {
      // Squeezed between a receding tail and a swept frontier nothing braked
      // survives; chase whichever one-step continuation lands deepest.
      double best = std::numeric_limits<double>::infinity();
      for (double u : {model.accel_min, 0.0, model.accel_max}) {
        const State zn = rk4_step(model, grid, z, Control{steer, u}, dt_la);
        const double vn = record->corridor.value_at(zn, t + dt_la);
        if (vn < best) {
          best = vn;
          accel = u;
        }
      }
    }

    RolloutStep rec;
    rec.t = t;
    rec.z = z;
    rec.requested = req;
    rec.applied = Control{steer, accel};
    rec.value = record->corridor.value_at(z, t);
    rec.feasible = lim.feasible;
    rec.accel_min = lim.accel_min;
    rec.accel_max = lim.accel_max;
    if (rec.value < 0.5 * kEmptyValue) {
      trace.max_value = std::max(trace.max_value, rec.value);
    }
    trace.steps.push_back(rec);

    if (t >= record->exit_t0 - capture_tol && t <= record->exit_t1 + capture_tol &&
        box_value(exit_box, z) <= 0.0) {
      trace.exited = true;
      trace.exit_time = t;
      break;
    }

    z = rk4_step(model, grid, z, rec.applied, step);
    t += step;
  }
  return trace;
}

std::string export_slice(const TimeStateSet& tss, SliceKind kind, double at) {
  if (tss.slice_count() == 0) throw ConfigError("empty tube");
  const StateGrid& g = tss.grid();
  const auto& shape = g.shape();
  std::string out;

  if (kind == SliceKind::XyAtT) {
    if (!tss.covers(at)) {
      throw OutOfBoundsError("slice time outside the stored range");
    }
    const LevelSetField& f = tss.slice(tss.nearest_slice(at));
    out = "x,y,value\n";
    for (int ix = 0; ix < shape[0]; ++ix) {
      for (int iy = 0; iy < shape[1]; ++iy) {
        out += format_num(g.coord(kDimX, ix));
        out += ',';
        out += format_num(g.coord(kDimY, iy));
        out += ',';
        out += format_num(reduce_block(f, g, ix, iy));
        out += '\n';
      }
    }
  } else {
    int iy = 0;
    double frac = 0.0;
    g.locate(kDimY, at, iy, frac);
    if (frac > 0.5 && iy + 1 < shape[1]) ++iy;
    out = "x,t,value\n";
    for (std::size_t k = 0; k < tss.slice_count(); ++k) {
      const LevelSetField& f = tss.slice(k);
      for (int ix = 0; ix < shape[0]; ++ix) {
        out += format_num(g.coord(kDimX, ix));
        out += ',';
        out += format_num(tss.time_of(k));
        out += ',';
        out += format_num(reduce_block(f, g, ix, iy));
        out += '\n';
      }
    }
  }
  return out;
}

std::shared_ptr<const CorridorPipeline> make_pipeline(const ScenarioConfig& config,
                                                      const std::string& cache_dir) {
  auto grid = std::make_shared<const StateGrid>(config.bounds_x, config.bounds_y,
                                                config.bounds_v, config.grid_shape);
  config.model.validate();
  SolveOptions opts;
  opts.cfl = config.cfl;
  TimeStateSet constraint =
      make_drivable_constraint(grid, config.model, config.layout, config.horizon, opts);
  std::shared_ptr<Pass1Cache> cache;
  if (!cache_dir.empty()) cache = std::make_shared<Pass1Cache>(cache_dir);
  return std::make_shared<const CorridorPipeline>(grid, config.model, config.layout,
                                                  std::move(constraint), opts, cache);
}

std::size_t precompute_pass1(const ScenarioConfig& config, const std::string& cache_dir) {
  auto pipeline = make_pipeline(config, cache_dir);
  std::set<std::pair<std::string, std::string>> routes;
  for (const VehicleRequest& r : config.vehicles) routes.insert({r.entry, r.exit});
  for (const auto& [entry, exit] : routes) {
    pipeline->pass1_offline(Route{side_from_string(entry), side_from_string(exit)});
  }
  return routes.size();
}

ScenarioReport run_scenario(const ScenarioConfig& config, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string cache_dir =
      config.pass1_dir.empty() ? (fs::path(out_dir) / "pass1").string() : config.pass1_dir;
  auto pipeline = make_pipeline(config, cache_dir);
  ReservationManager manager(pipeline, config.manager);

  ScenarioReport rep;
  rep.name = config.name;
  rep.dt = pipeline->dt();
  rep.horizon = pipeline->horizon();
  rep.epsilon_empty = pipeline->grid().epsilon_empty();
  rep.out_dir = out_dir;

  json jrep;
  jrep["name"] = rep.name;
  jrep["dt"] = rep.dt;
  jrep["horizon"] = rep.horizon;
  jrep["epsilon_empty"] = rep.epsilon_empty;
  jrep["grid_shape"] = config.grid_shape;
  if (!config.export_xy_times.empty()) jrep["export_xy_times"] = config.export_xy_times;
  json jvehicles = json::array();

  std::string timing_csv = "vehicle,pass2,pass3,pass4,total\n";

  for (const VehicleRequest& vr : config.vehicles) {
    VehicleReport v;
    v.id = vr.id;
    ReserveOutcome outcome =
        manager.reserve(vr.id, vr.entry, vr.entry_t0, vr.entry_t1, vr.exit, vr.delta);
    v.ok = outcome.ok;
    v.timings = outcome.timings;

    json jv;
    jv["id"] = vr.id;
    jv["ok"] = outcome.ok;
    jv["route"] = vr.entry + "->" + vr.exit;

    timing_csv += vr.id;
    for (double s : {outcome.timings.pass2, outcome.timings.pass3, outcome.timings.pass4,
                     outcome.timings.total}) {
      timing_csv += ',';
      timing_csv += format_num(s);
    }
    timing_csv += '\n';

    if (!outcome.ok) {
      v.error_code = outcome.error_code;
      v.margin = outcome.margin;
      jv["error"] = outcome.error_code;
      jv["margin"] = outcome.margin;
      jvehicles.push_back(jv);
      rep.vehicles.push_back(v);
      continue;
    }

    v.reservation_id = outcome.reservation_id;
    v.entry_t0 = outcome.entry_t0;
    v.entry_t1 = outcome.entry_t1;
    v.exit_t0 = outcome.exit_t0;
    v.exit_t1 = outcome.exit_t1;

    const PassResult& passes = *outcome.passes;
    v.nest21 = value_excess(passes.phi1, passes.phi2);
    v.nest32 = value_excess(passes.phi2, passes.phi3);
    v.nest43 = value_excess(passes.phi3, passes.phi4);

    write_tss((fs::path(out_dir) / (vr.id + "_phi4.tss")).string(), passes.phi4);
    if (config.export_phi2) {
      write_tss((fs::path(out_dir) / (vr.id + "_phi2.tss")).string(), passes.phi2);
      if (config.export_xt_y) {
        write_text_file(fs::path(out_dir) / (vr.id + "_phi2_xt.csv"),
                        export_slice(passes.phi2, SliceKind::XtAtY, *config.export_xt_y));
      }
    }

    // Deterministic start pick: entry box center pose at the earliest
    // granted lattice time with a corridor-feasible speed (best value among
    // speeds at that time). Late starts would squeeze the exit window.
    const Route route{side_from_string(vr.entry), side_from_string(vr.exit)};
    const BoxSpec entry_box = pipeline->layout().entry_box(route.entry);
    State start = box_center(entry_box);
    double start_t = outcome.entry_t0;
    double best = std::numeric_limits<double>::infinity();
    const double v_lo = std::max(entry_box.v ? entry_box.v->lo : 0.0,
                                 pipeline->grid().lower()[kDimV]);
    const double v_hi = std::min(entry_box.v ? entry_box.v->hi : 0.0,
                                 pipeline->grid().upper()[kDimV]);
    for (std::size_t ka = pipeline->slice_index(outcome.entry_t0),
                     kb = pipeline->slice_index(outcome.entry_t1), k = ka;
         k <= kb; ++k) {
      const double tk = pipeline->constraint().time_of(k);
      double best_here = std::numeric_limits<double>::infinity();
      double v_here = start[kDimV];
      for (int i = 0; i <= 8; ++i) {
        State cand = start;
        cand[kDimV] = v_lo + (v_hi - v_lo) * i / 8.0;
        const double val = passes.phi4.value_at(cand, tk);
        if (val < best_here) {
          best_here = val;
          v_here = cand[kDimV];
        }
      }
      if (best_here <= 0.0) {
        best = best_here;
        start[kDimV] = v_here;
        start_t = tk;
        break;
      }
      if (best_here < best) {
        best = best_here;
        start[kDimV] = v_here;
        start_t = tk;
      }
    }

    if (best <= 0.0) {
      try {
        Controller ctrl =
            make_nominal_controller(pipeline->layout(), pipeline->model(), route, vr.controller);
        RolloutTrace trace =
            rollout_vehicle(manager, outcome.reservation_id, ctrl,
                            pipeline->dt() / config.rollout_divisor, start, start_t);
        v.rolled_out = true;
        v.exited = trace.exited;
        v.exit_time = trace.exit_time;
        v.max_trace_value = trace.max_value;
        v.trace_steps = trace.steps.size();
        write_trace_csv(fs::path(out_dir) / (vr.id + "_trace.csv"), trace);
      } catch (const Error& e) {
        v.rollout_error = e.code();
      }
    } else {
      v.rollout_error = "no_feasible_start";
    }

    jv["reservation_id"] = v.reservation_id;
    jv["entry_window"] = {v.entry_t0, v.entry_t1};
    jv["exit_window"] = {v.exit_t0, v.exit_t1};
    jv["nesting"] = {{"phi2_in_phi1", v.nest21},
                     {"phi3_in_phi2", v.nest32},
                     {"phi4_in_phi3", v.nest43}};
    jv["rolled_out"] = v.rolled_out;
    if (!v.rollout_error.empty()) jv["rollout_error"] = v.rollout_error;
    if (v.rolled_out) {
      jv["exited"] = v.exited;
      if (v.exited) jv["exit_time"] = v.exit_time;
      jv["max_trace_value"] = v.max_trace_value;
      jv["trace_steps"] = v.trace_steps;
    }
    jvehicles.push_back(jv);
    rep.vehicles.push_back(v);
  }

  // Pairwise separation: every granted corridor against every other granted
  // vehicle's inflated danger set.
  const auto records = manager.active();
  const auto dangers = manager.active_dangers();
  double sep = kEmptyValue;
  for (const auto& rec : records) {
    for (const auto& d : dangers) {
      if (d->source_id == rec->reservation_id) continue;
      sep = std::min(sep, intersection_min(rec->corridor, d->occupancy));
    }
  }
  rep.separation_min = sep;
  jrep["separation_min"] = sep;

  for (const auto& rec : records) {
    if (config.export_xt_y) {
      write_text_file(fs::path(out_dir) / (rec->vehicle_id + "_phi4_xt.csv"),
                      export_slice(rec->corridor, SliceKind::XtAtY, *config.export_xt_y));
    }
    for (std::size_t i = 0; i < config.export_xy_times.size(); ++i) {
      write_text_file(
          fs::path(out_dir) / (rec->vehicle_id + "_phi4_xy" + std::to_string(i) + ".csv"),
          export_slice(rec->corridor, SliceKind::XyAtT, config.export_xy_times[i]));
    }
  }

  jrep["vehicles"] = jvehicles;
  write_text_file(fs::path(out_dir) / "timing.csv", timing_csv);
  write_text_file(fs::path(out_dir) / "report.json", jrep.dump(2) + "\n");
  return rep;
}

}  // namespace aim
