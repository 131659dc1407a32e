#pragma once

#include <array>
#include <cstdint>

#include "aim/grid.hpp"

namespace aim {

struct Control {
  double steer;
  double accel;
};

// Reduced 4-state kinematic bicycle: z = [x, y, theta, v], u = [steer, accel],
//   zdot = [v cos(theta), v sin(theta), v tan(steer) / L, accel].
// Control-affine in the acceleration channel only.
struct VehicleModel {
  double wheel_base = 0.32;
  double steer_min = -kPi / 5.0;
  double steer_max = kPi / 5.0;
  double accel_min = -0.5;
  double accel_max = 0.5;
  double speed_limit = 0.6;

  void validate() const;
  std::uint64_t hash() const;
};

State flow(const VehicleModel& model, const State& z, const Control& u);

struct HamiltonianExtremes {
  double lo;  // min over admissible u of p . zdot
  double hi;  // max over admissible u of p . zdot
};

HamiltonianExtremes hamiltonian_extremes(const VehicleModel& model, const State& z,
                                         const std::array<double, 4>& p);

// Largest per-dimension |zdot| over all grid nodes and admissible controls;
// the per-axis values feed the Lax-Friedrichs dissipation and the CFL bound.
std::array<double, 4> axis_speed_bounds(const VehicleModel& model, const StateGrid& grid);
double max_speed_over_grid(const VehicleModel& model, const StateGrid& grid);

}  // namespace aim
