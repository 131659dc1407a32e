#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "aim/layout.hpp"
#include "aim/reach.hpp"

namespace aim {

struct Route {
  Side entry;
  Side exit;
};

// Entry/exit contract for one vehicle: where and when it may enter, where it
// wants to leave, and how long its exit window must be.
struct EntryExitSpec {
  LevelSetField entry_region;  // G<-
  double entry_t0 = 0.0;       // T<- = [entry_t0, entry_t1], on the slice lattice
  double entry_t1 = 0.0;
  LevelSetField exit_region;   // G->
  double delta = 2.0;          // exit window length
};

struct PassTimings {
  double pass2 = 0.0;  // seconds, wall clock
  double pass3 = 0.0;
  double pass4 = 0.0;  // includes exit-window selection
  double total = 0.0;
};

struct PassResult {
  TimeStateSet phi1;
  TimeStateSet phi2;
  TimeStateSet phi3;
  TimeStateSet phi4;
  double exit_t0 = 0.0;  // T-> = [exit_t0, exit_t1]
  double exit_t1 = 0.0;
  PassTimings timings;
};

// Disk-backed lookup table for offline-pass tubes. Each entry is a corridor
// file plus a manifest JSON naming the route, grid, model, horizon and step,
// so stale entries are recomputed rather than trusted. Loads are memoized.
class Pass1Cache {
public:
  struct Key {
    std::string entry_loc;
    std::string exit_loc;
    std::uint64_t grid_hash = 0;
    std::uint64_t model_hash = 0;
    std::uint64_t layout_hash = 0;
    double horizon = 0.0;
    double dt = 0.0;
  };

  explicit Pass1Cache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  std::optional<TimeStateSet> load(const Key& key);
  void store(const Key& key, const TimeStateSet& tube);

private:
  std::string stem(const Key& key) const;

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, TimeStateSet> memo_;
};

// The four-pass corridor pipeline. Holds the scenario-wide pieces (grid,
// model, layout, static constraint over the horizon); per-vehicle inputs
// arrive through the pass arguments. All methods are const and safe to call
// concurrently; admission ordering is the manager's concern.
class CorridorPipeline {
public:
  CorridorPipeline(GridPtr grid, VehicleModel model, IntersectionLayout layout,
                   TimeStateSet constraint, SolveOptions opts = {},
                   std::shared_ptr<Pass1Cache> cache = nullptr);

  const StateGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const VehicleModel& model() const { return model_; }
  const IntersectionLayout& layout() const { return layout_; }
  const TimeStateSet& constraint() const { return constraint_; }
  double dt() const { return constraint_.dt(); }
  double horizon() const { return constraint_.t_end(); }

  LevelSetField entry_region(Side entry) const;
  LevelSetField exit_region(Side exit) const;

  // Builds the per-vehicle spec from the layout catalog, snapping the entry
  // window inward onto the slice lattice.
  EntryExitSpec make_spec(const Route& route, double entry_t0, double entry_t1,
                          double delta) const;

  // Offline pass: backward tube from the exit region over the full horizon,
  // served from the cache when one is attached.
  TimeStateSet pass1_offline(const Route& route) const;

  // Online re-solve against the danger sets on [0, window_t1], stitched to
  // phi1 at the window end; phi1's slices are reused beyond it. Empty dangers
  // short-circuit to phi1.
  TimeStateSet pass2_online(const TimeStateSet& phi1, const LevelSetField& exit_region,
                            const TimeStateSet& dangers, double window_t0,
                            double window_t1) const;

  // Forward tube from the entry set through phi2. Throws EntryInfeasible with
  // the violating margin when the entry set is not contained in phi2.
  TimeStateSet pass3_entry(const TimeStateSet& phi2, const EntryExitSpec& spec) const;

  // Earliest slice-lattice time t such that every slice in [t, t+delta] has a
  // nonempty intersection of phi3 with the exit region. Throws ExitInfeasible
  // with the least-violating window margin when no window fits the horizon.
  std::pair<double, double> select_exit_window(const TimeStateSet& phi3,
                                               const LevelSetField& exit_region,
                                               double delta) const;

  // Backward tube from the exit window through phi3, solved on
  // [entry_t0, exit_t1] and padded empty outside. Throws ExitInfeasible when
  // the exit set is not contained in phi3 over the window.
  TimeStateSet pass4_exit(const TimeStateSet& phi3, const LevelSetField& exit_region,
                          std::pair<double, double> exit_window, double entry_t0) const;

  // Full per-vehicle pipeline with wall-clock timings.
  PassResult run(const Route& route, const EntryExitSpec& spec,
                 const TimeStateSet& dangers, double window_t0,
                 double window_t1) const;

  // Lattice index of t on the solve lattice (nearest; throws TimeRangeMismatch
  // outside the horizon).
  std::size_t slice_index(double t) const { return constraint_.nearest_slice(t); }

private:
  Pass1Cache::Key cache_key(const Route& route) const;

  GridPtr grid_;
  VehicleModel model_;
  IntersectionLayout layout_;
  TimeStateSet constraint_;
  SolveOptions opts_;
  std::shared_ptr<Pass1Cache> cache_;
};

// Drivable set broadcast over [0, horizon] on a CFL-stable lattice. The step
// divides the horizon evenly and respects the stability bound, so the last
// lattice time equals the requested horizon.
TimeStateSet make_drivable_constraint(const GridPtr& grid, const VehicleModel& model,
                                      const IntersectionLayout& layout, double horizon,
                                      const SolveOptions& opts = {});

}  // namespace aim
