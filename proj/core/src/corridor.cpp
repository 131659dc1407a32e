#include "aim/corridor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "aim/tss_io.hpp"

namespace aim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Index of t on the lattice (t0, dt), or -1 when t is not a lattice point in
// range.
long lattice_index(double t, double t0, double dt, std::size_t count) {
  double s = (t - t0) / dt;
  long k = std::lround(s);
  if (std::abs(s - k) > 1e-6) return -1;
  if (k < 0 || k >= static_cast<long>(count)) return -1;
  return k;
}

std::string hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace

Pass1Cache::Pass1Cache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
  }
}

std::string Pass1Cache::stem(const Key& key) const {
  std::uint64_t h = fnv1a64(&key.grid_hash, sizeof key.grid_hash);
  h = fnv1a64(&key.model_hash, sizeof key.model_hash, h);
  h = fnv1a64(&key.layout_hash, sizeof key.layout_hash, h);
  h = fnv1a64(&key.horizon, sizeof key.horizon, h);
  h = fnv1a64(&key.dt, sizeof key.dt, h);
  return "pass1_" + key.entry_loc + "_" + key.exit_loc + "_" + hex16(h);
}

std::optional<TimeStateSet> Pass1Cache::load(const Key& key) {
  const std::string name = stem(key);
  std::lock_guard<std::mutex> lock(mutex_);
  if (auto it = memo_.find(name); it != memo_.end()) return it->second;

  const auto manifest_path = dir_ / (name + ".json");
  const auto tube_path = dir_ / (name + ".tss");
  if (!std::filesystem::exists(manifest_path) || !std::filesystem::exists(tube_path)) {
    return std::nullopt;
  }
  try {
    std::ifstream in(manifest_path);
    nlohmann::json m = nlohmann::json::parse(in);
    if (m.at("entry_loc").get<std::string>() != key.entry_loc ||
        m.at("exit_loc").get<std::string>() != key.exit_loc ||
        m.at("grid_hash").get<std::uint64_t>() != key.grid_hash ||
        m.at("model_hash").get<std::uint64_t>() != key.model_hash ||
        m.at("layout_hash").get<std::uint64_t>() != key.layout_hash ||
        m.at("horizon").get<double>() != key.horizon ||
        m.at("dt").get<double>() != key.dt) {
      return std::nullopt;
    }
    TimeStateSet tube = read_tss(tube_path.string());
    memo_.emplace(name, tube);
    return tube;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are recomputed
  }
}

void Pass1Cache::store(const Key& key, const TimeStateSet& tube) {
  const std::string name = stem(key);
  const auto manifest_path = dir_ / (name + ".json");
  const auto tube_path = dir_ / (name + ".tss");
  const auto tube_tmp = dir_ / (name + ".tss.tmp");
  const auto manifest_tmp = dir_ / (name + ".json.tmp");

  std::lock_guard<std::mutex> lock(mutex_);
  write_tss(tube_tmp.string(), tube);
  nlohmann::json m{{"entry_loc", key.entry_loc},     {"exit_loc", key.exit_loc},
                   {"grid_hash", key.grid_hash},     {"model_hash", key.model_hash},
                   {"layout_hash", key.layout_hash}, {"horizon", key.horizon},
                   {"dt", key.dt}};
  {
    std::ofstream out(manifest_tmp);
    if (!out) throw IoError("cannot write " + manifest_tmp.string());
    out << m.dump() << "\n";
  }
  std::filesystem::rename(tube_tmp, tube_path);
  std::filesystem::rename(manifest_tmp, manifest_path);
  memo_[name] = tube;
}

CorridorPipeline::CorridorPipeline(GridPtr grid, VehicleModel model,
                                   IntersectionLayout layout, TimeStateSet constraint,
                                   SolveOptions opts, std::shared_ptr<Pass1Cache> cache)
    : grid_(std::move(grid)),
      model_(model),
      layout_(layout),
      constraint_(std::move(constraint)),
      opts_(opts),
      cache_(std::move(cache)) {
  model_.validate();
  if (constraint_.slice_count() == 0) {
    throw ConfigError("corridor pipeline needs a constraint with at least one slice");
  }
  if (!constraint_.grid().same_as(*grid_)) {
    throw GridMismatchError("constraint grid differs from the pipeline grid");
  }
}

LevelSetField CorridorPipeline::entry_region(Side entry) const {
  return box_field(grid_, layout_.entry_box(entry));
}

LevelSetField CorridorPipeline::exit_region(Side exit) const {
  return box_field(grid_, layout_.exit_box(exit));
}

EntryExitSpec CorridorPipeline::make_spec(const Route& route, double entry_t0,
                                          double entry_t1, double delta) const {
  if (!layout_.route_exists(route.entry, route.exit)) {
    throw UnknownRouteError("no route " + side_to_string(route.entry) + " -> " +
                            side_to_string(route.exit));
  }
  if (!(entry_t0 < entry_t1)) {
    throw ConfigError("entry window must satisfy t0 < t1");
  }
  if (!(delta > 0.0)) {
    throw ConfigError("exit window length must be positive");
  }
  const double t0 = constraint_.t0();
  const double dt = constraint_.dt();
  const long n = static_cast<long>(constraint_.slice_count());
  long ka = static_cast<long>(std::ceil((entry_t0 - t0) / dt - 1e-9));
  long kb = static_cast<long>(std::floor((entry_t1 - t0) / dt + 1e-9));
  if (ka < 0) ka = 0;
  if (kb > n - 1) {
    std::ostringstream os;
    os << "entry window end " << entry_t1 << " beyond horizon " << horizon();
    throw HorizonExceededError(os.str());
  }
  if (ka > kb) {
    throw ConfigError("entry window narrower than one slice step");
  }

  EntryExitSpec spec;
  spec.entry_region = entry_region(route.entry);
  spec.exit_region = exit_region(route.exit);
  spec.entry_t0 = constraint_.time_of(static_cast<std::size_t>(ka));
  spec.entry_t1 = constraint_.time_of(static_cast<std::size_t>(kb));
  spec.delta = delta;
  if (spec.entry_region.is_empty() || spec.exit_region.is_empty()) {
    throw ConfigError("entry/exit region has no interior grid node; grid too coarse");
  }
  return spec;
}

Pass1Cache::Key CorridorPipeline::cache_key(const Route& route) const {
  Pass1Cache::Key key;
  key.entry_loc = side_to_string(route.entry);
  key.exit_loc = side_to_string(route.exit);
  key.grid_hash = grid_->hash();
  key.model_hash = model_.hash();
  key.layout_hash = layout_.hash();
  key.horizon = horizon();
  key.dt = dt();
  return key;
}

TimeStateSet CorridorPipeline::pass1_offline(const Route& route) const {
  if (!layout_.route_exists(route.entry, route.exit)) {
    throw UnknownRouteError("no route " + side_to_string(route.entry) + " -> " +
                            side_to_string(route.exit));
  }
  Pass1Cache::Key key;
  if (cache_) {
    key = cache_key(route);
    if (auto hit = cache_->load(key)) return *std::move(hit);
  }
  TimeStateSet goal = TimeStateSet::broadcast(exit_region(route.exit), constraint_.t0(),
                                              dt(), constraint_.slice_count());

  // Static constraints for this route: the shared drivable set restricted to
  // the route's lane-keeping region. Later passes inherit the restriction by
  // masking against this tube.
  const LevelSetField strip =
      layout_.route_region(grid_, route.entry, route.exit, model_);
  std::vector<LevelSetField> slices(constraint_.slice_count());
  for (std::size_t k = 0; k < constraint_.slice_count(); ++k) {
    slices[k] = set_intersection(constraint_.slice(k), strip);
  }
  TimeStateSet route_constraint(constraint_.t0(), dt(), std::move(slices));

  TimeStateSet tube = backward_tube(goal, route_constraint, model_, opts_);
  if (cache_) cache_->store(key, tube);
  return tube;
}

TimeStateSet CorridorPipeline::pass2_online(const TimeStateSet& phi1,
                                            const LevelSetField& exit_region,
                                            const TimeStateSet& dangers, double window_t0,
                                            double window_t1) const {
  const std::size_t n = constraint_.slice_count();
  const double t0 = constraint_.t0();
  const double step = dt();
  if (phi1.slice_count() != n || std::abs(phi1.t0() - t0) > 1e-9 ||
      std::abs(phi1.dt() - step) > 1e-12) {
    throw TimeRangeMismatchError("pass2: phi1 is not on the pipeline lattice");
  }
  if (dangers.slice_count() == 0 || is_empty(dangers)) return phi1;
  if (!dangers.grid().same_as(*grid_)) {
    throw GridMismatchError("pass2: danger set grid differs from the pipeline grid");
  }
  if (std::abs(dangers.dt() - step) > 1e-12) {
    throw TimeRangeMismatchError("pass2: danger set time step differs from the lattice");
  }
  (void)window_t0;  // dangers are empty before the window; only the end matters

  long k_end = static_cast<long>(std::ceil((window_t1 - t0) / step - 1e-9));
  k_end = std::clamp<long>(k_end, 0, static_cast<long>(n) - 1);
  const std::size_t ke = static_cast<std::size_t>(k_end);

  // Constraint inside the window: the offline corridor minus the dangers.
  // Using phi1 itself as the base (it already carries the drivable set) keeps
  // the refined tube nested inside it by construction, independent of any
  // numerical property of the solver. Slices with no danger mass share phi1's.
  std::vector<LevelSetField> cons(ke + 1);
  for (std::size_t k = 0; k <= ke; ++k) {
    const LevelSetField& base = phi1.slice(k);
    long dk = lattice_index(constraint_.time_of(k), dangers.t0(), dangers.dt(),
                            dangers.slice_count());
    if (dk < 0 || dangers.slice(static_cast<std::size_t>(dk)).is_empty()) {
      cons[k] = base;
      continue;
    }
    const auto& dv = dangers.slice(static_cast<std::size_t>(dk)).values();
    const auto& bv = base.values();
    std::vector<float> buf(bv.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = std::max(bv[i], -dv[i]);
    cons[k] = LevelSetField(grid_, std::move(buf));
  }

  // Goal inside the window: the exit region as usual, except at the window's
  // end where phi1's slice becomes the terminal condition. That stitches the
  // re-solve continuously onto the untouched tail.
  std::vector<LevelSetField> goal(ke + 1, exit_region);
  goal[ke] = phi1.slice(ke);

  TimeStateSet low = backward_tube(TimeStateSet(t0, step, std::move(goal)),
                                   TimeStateSet(t0, step, std::move(cons)), model_, opts_);

  std::vector<LevelSetField> out(n);
  for (std::size_t k = 0; k <= ke; ++k) out[k] = low.slice(k);
  for (std::size_t k = ke + 1; k < n; ++k) out[k] = phi1.slice(k);
  return TimeStateSet(t0, step, std::move(out));
}

TimeStateSet CorridorPipeline::pass3_entry(const TimeStateSet& phi2,
                                           const EntryExitSpec& spec) const {
  const std::size_t ka = slice_index(spec.entry_t0);
  const std::size_t kb = slice_index(spec.entry_t1);
  TimeStateSet entry = TimeStateSet::broadcast(spec.entry_region, constraint_.time_of(ka),
                                               dt(), kb - ka + 1);
  double margin = containment_margin(phi2, entry);
  if (margin > 0.0) {
    std::ostringstream os;
    os << "entry set not contained in the verified tube (margin " << margin << ")";
    throw EntryInfeasibleError(os.str(), margin);
  }
  return forward_tube(entry, phi2, model_, opts_);
}

std::pair<double, double> CorridorPipeline::select_exit_window(
    const TimeStateSet& phi3, const LevelSetField& exit_region, double delta) const {
  const std::size_t n = phi3.slice_count();
  const double step = phi3.dt();
  const double eps = grid_->epsilon_empty();
  const long m = static_cast<long>(std::floor(delta / step + 1e-9));

  // Candidate nodes: strictly interior to the exit region.
  std::vector<std::size_t> cand;
  const auto& gv = exit_region.values();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (gv[i] < 0.0f) cand.push_back(i);
  }

  // Emptiness profile of E_k = phi3_k intersected with the exit region.
  std::vector<double> emin(n, kEmptyValue);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& pv = phi3.slice(k).values();
    double best = kEmptyValue;
    for (std::size_t i : cand) {
      best = std::min(best, static_cast<double>(std::max(pv[i], gv[i])));
    }
    emin[k] = best;
  }

  auto occupied = [&](std::size_t k) { return emin[k] <= -eps; };

  const long last_start = static_cast<long>(n) - 1 - m;
  for (long k = 0; k <= last_start; ++k) {
    bool all = true;
    for (long j = k; j <= k + m; ++j) {
      if (!occupied(static_cast<std::size_t>(j))) {
        all = false;
        break;
      }
    }
    if (all) {
      double t = phi3.time_of(static_cast<std::size_t>(k));
      return {t, t + delta};
    }
  }

  double margin = kEmptyValue;
  for (long k = 0; k <= last_start; ++k) {
    double worst = -std::numeric_limits<double>::infinity();
    for (long j = k; j <= k + m; ++j) {
      worst = std::max(worst, emin[static_cast<std::size_t>(j)]);
    }
    margin = std::min(margin, worst);
  }
  std::ostringstream os;
  os << "no exit window of length " << delta << " fits (margin " << margin << ")";
  throw ExitInfeasibleError(os.str(), margin);
}

TimeStateSet CorridorPipeline::pass4_exit(const TimeStateSet& phi3,
                                          const LevelSetField& exit_region,
                                          std::pair<double, double> exit_window,
                                          double entry_t0) const {
  const std::size_t n = phi3.slice_count();
  const double step = phi3.dt();
  const std::size_t ka = phi3.nearest_slice(entry_t0);
  const std::size_t ks = phi3.nearest_slice(exit_window.first);
  const long m = static_cast<long>(std::floor((exit_window.second - exit_window.first) / step + 1e-9));
  const std::size_t ke = std::min(n - 1, ks + static_cast<std::size_t>(std::max<long>(m, 0)));
  if (ka > ks) {
    throw TimeRangeMismatchError("pass4: exit window starts before the entry time");
  }

  // The goal is the reachable part of the exit region at each window slice,
  // the same set the window selector proved occupied. Demanding the whole
  // region would reject any vehicle that cannot cover every exit state at
  // once, which the exit promise never asks for.
  std::vector<LevelSetField> goal_slices(ke - ks + 1);
  for (std::size_t k = ks; k <= ke; ++k) {
    goal_slices[k - ks] = set_intersection(exit_region, phi3.slice(k));
  }
  TimeStateSet goal(phi3.time_of(ks), step, std::move(goal_slices));

  std::vector<LevelSetField> cons(phi3.slices().begin() + static_cast<long>(ka),
                                  phi3.slices().begin() + static_cast<long>(ke) + 1);
  TimeStateSet tube = backward_tube(goal, TimeStateSet(phi3.time_of(ka), step, std::move(cons)),
                                    model_, opts_);

  LevelSetField pad = LevelSetField::constant(grid_, kEmptyValue);
  std::vector<LevelSetField> out(n, pad);
  for (std::size_t k = ka; k <= ke; ++k) out[k] = tube.slice(k - ka);
  return TimeStateSet(phi3.t0(), step, std::move(out));
}

PassResult CorridorPipeline::run(const Route& route, const EntryExitSpec& spec,
                                 const TimeStateSet& dangers, double window_t0,
                                 double window_t1) const {
  PassResult r;
  r.phi1 = pass1_offline(route);

  auto mark = Clock::now();
  r.phi2 = pass2_online(r.phi1, spec.exit_region, dangers, window_t0, window_t1);
  r.timings.pass2 = seconds_since(mark);

  mark = Clock::now();
  r.phi3 = pass3_entry(r.phi2, spec);
  r.timings.pass3 = seconds_since(mark);

  mark = Clock::now();
  auto window = select_exit_window(r.phi3, spec.exit_region, spec.delta);
  r.exit_t0 = window.first;
  r.exit_t1 = window.second;
  r.phi4 = pass4_exit(r.phi3, spec.exit_region, window, spec.entry_t0);
  r.timings.pass4 = seconds_since(mark);

  r.timings.total = r.timings.pass2 + r.timings.pass3 + r.timings.pass4;
  return r;
}

TimeStateSet make_drivable_constraint(const GridPtr& grid, const VehicleModel& model,
                                      const IntersectionLayout& layout, double horizon,
                                      const SolveOptions& opts) {
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  double bound = cfl_time_step(model, *grid, opts.cfl);
  auto steps = static_cast<std::size_t>(std::ceil(horizon / bound - 1e-9));
  if (steps < 1) steps = 1;
  double dt = horizon / static_cast<double>(steps);
  LevelSetField field = layout.drivable(grid, model);
  return TimeStateSet::broadcast(field, 0.0, dt, steps + 1);
}

}  // namespace aim
