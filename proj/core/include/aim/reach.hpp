#pragma once

#include "aim/dynamics.hpp"
#include "aim/grid.hpp"

namespace aim {

struct SolveOptions {
  double cfl = 0.8;
};

// Largest stable time step for the explicit scheme on this grid/model.
double cfl_time_step(const VehicleModel& model, const StateGrid& grid, double cfl = 0.8);

// Backward reachable tube: states from which some admissible control reaches
// the goal during its time window while staying inside the constraint. The
// result shares the constraint's time lattice; the goal's lattice must align
// with it. Realized as a first-order upwind Lax-Friedrichs integration of the
// Hamilton-Jacobi variational inequality, stepping backward with the
// minimizing Hamiltonian; each step takes the running minimum with the goal
// (inside its window) and then the maximum with the constraint.
TimeStateSet backward_tube(const TimeStateSet& goal, const TimeStateSet& constraint,
                           const VehicleModel& model, const SolveOptions& opts = {});

// Forward reachable tube: states some trajectory from the initial set can
// occupy while staying inside the constraint. Slices before the initial set's
// window are empty padding.
TimeStateSet forward_tube(const TimeStateSet& initial, const TimeStateSet& constraint,
                          const VehicleModel& model, const SolveOptions& opts = {});

}  // namespace aim
