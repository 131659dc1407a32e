#pragma once

#include <vector>

#include "aim/dynamics.hpp"
#include "aim/grid.hpp"

namespace aim {

// Least-restrictive acceleration constraint at one query: the half-space
// a + b * accel <= 0 intersected with the physical bounds. accel_min/accel_max
// describe the admissible closed interval and are meaningful only when
// feasible is true (the interval is empty otherwise).
struct HalfSpaceLimit {
  double a = 0.0;
  double b = 0.0;
  bool feasible = false;
  double accel_min = 0.0;
  double accel_max = 0.0;
};

// First-order driving limits from the corridor value function:
//   a = V(z,t) + D_t V * dt_pred + D_z V . f(z, (steer, 0)) * dt_pred
//   b = dV/dv * dt_pred
// V is the conservative two-slice interpolant, D_z uses central differences of
// interpolated values at half-spacing probes (clamped to the domain, divided
// by the actual separation), D_t a forward difference between the bracketing
// slices. dt_pred <= 0 selects the corridor's native step. Queries outside the
// corridor's stored time range throw OutOfCorridorTime; on-grid queries outside
// its spatial support come back infeasible.
HalfSpaceLimit driving_limits(const TimeStateSet& corridor, const VehicleModel& model,
                              const State& z, double steer, double t,
                              double dt_pred = 0.0);

// driving_limits mapped over speeds at a fixed pose and time.
std::vector<HalfSpaceLimit> limits_profile(const TimeStateSet& corridor,
                                           const VehicleModel& model, double x, double y,
                                           double theta, double t,
                                           const std::vector<double>& v_samples,
                                           double steer = 0.0, double dt_pred = 0.0);

}  // namespace aim
