#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "aim/corridor.hpp"
#include "aim/limits.hpp"

namespace aim {

enum class ReservationStatus { Pending, Active, Released };

// One granted corridor. Records are immutable snapshots: the manager swaps a
// fresh copy in when the status changes, so concurrent readers never observe
// a half-updated reservation.
struct CorridorReservation {
  std::string reservation_id;
  std::string vehicle_id;
  std::uint64_t rank = 0;  // monotone admission counter
  Route route{Side::Left, Side::Right};
  double entry_t0 = 0.0;  // T<- as granted (lattice-snapped)
  double entry_t1 = 0.0;
  double exit_t0 = 0.0;  // T->
  double exit_t1 = 0.0;
  TimeStateSet corridor;  // phi4
  ReservationStatus status = ReservationStatus::Pending;
};

// Footprint-inflated occupancy of one reservation, on the full state grid.
struct DangerSet {
  std::string source_id;
  TimeStateSet occupancy;
};

// Per-slice construction: project the corridor onto (x, y) by minimizing over
// theta and v, inflate the projected set by the footprint radius (exact
// nodal distance transform, value = signed distance - radius), and broadcast
// the result back over theta and v.
DangerSet build_danger_set(const CorridorReservation& reservation,
                           double footprint_radius);

struct ManagerOptions {
  double footprint_radius = 0.10;
  double scheduling_horizon = 15.0;
};

struct ReserveOutcome {
  bool ok = false;
  std::string reservation_id;  // set when ok
  double exit_t0 = 0.0;
  double exit_t1 = 0.0;
  double entry_t0 = 0.0;  // granted (snapped) entry window
  double entry_t1 = 0.0;
  std::string error_code;  // set when !ok
  std::string message;
  double margin = 0.0;  // violating margin for infeasible rejections
  PassTimings timings;
  // Full pipeline output, for diagnostics and exports. Null on rejection.
  std::shared_ptr<const PassResult> passes;
};

// FCFS intersection coordinator. Admissions are serialized (priority order is
// the admission order); limits queries and snapshot reads run concurrently
// against immutable reservation records.
class ReservationManager {
public:
  explicit ReservationManager(std::shared_ptr<const CorridorPipeline> pipeline,
                              ManagerOptions opts = {});

  // Runs the four-pass pipeline against the union of active danger sets.
  // Admission failures (unknown route, infeasibility, horizon) are reported
  // in the outcome, not thrown.
  ReserveOutcome reserve(const std::string& vehicle_id, const std::string& entry_loc,
                         double entry_t0, double entry_t1, const std::string& exit_loc,
                         double delta);

  // Driving limits against the stored corridor of an active reservation.
  HalfSpaceLimit query_limits(const std::string& reservation_id, const State& z,
                              double steer, double t) const;

  // Marks the reservation released; idempotent for known ids.
  void release(const std::string& reservation_id);

  std::shared_ptr<const CorridorReservation> find(const std::string& reservation_id) const;
  std::vector<std::shared_ptr<const CorridorReservation>> active() const;
  std::vector<std::shared_ptr<const DangerSet>> active_dangers() const;

  const CorridorPipeline& pipeline() const { return *pipeline_; }
  const ManagerOptions& options() const { return opts_; }

private:
  struct Entry {
    std::shared_ptr<const CorridorReservation> record;
    std::shared_ptr<const DangerSet> danger;
  };

  std::shared_ptr<const CorridorPipeline> pipeline_;
  ManagerOptions opts_;

  std::mutex admit_mutex_;  // serializes whole admissions
  mutable std::mutex store_mutex_;  // guards the record map
  std::map<std::string, Entry> entries_;
  std::uint64_t next_rank_ = 0;
};

}  // namespace aim
