#include "aim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace aim {

void VehicleModel::validate() const {
  if (!(wheel_base > 0.0)) throw ConfigError("wheel_base must be positive");
  if (!(steer_min <= steer_max) || !(accel_min <= accel_max)) {
    throw ConfigError("control bounds must be nonempty intervals");
  }
  if (std::max(std::abs(steer_min), std::abs(steer_max)) >= kPi / 2.0) {
    throw ConfigError("steer bound must stay below pi/2 (tan blows up)");
  }
  if (accel_min > 0.0 || accel_max < 0.0) {
    throw ConfigError("accel bounds must contain 0 (coasting)");
  }
  if (!(speed_limit > 0.0)) throw ConfigError("speed_limit must be positive");
}

std::uint64_t VehicleModel::hash() const {
  double fields[6] = {wheel_base, steer_min, steer_max, accel_min, accel_max,
                      speed_limit};
  return fnv1a64(fields, sizeof(fields));
}

State flow(const VehicleModel& model, const State& z, const Control& u) {
  const double tol = 1e-12;
  if (u.steer < model.steer_min - tol || u.steer > model.steer_max + tol ||
      u.accel < model.accel_min - tol || u.accel > model.accel_max + tol) {
    std::ostringstream os;
    os << "control (" << u.steer << ", " << u.accel << ") outside bounds";
    throw ControlOutOfBoundsError(os.str());
  }
  double v = z[kDimV];
  return {v * std::cos(z[kDimTheta]), v * std::sin(z[kDimTheta]),
          v * std::tan(u.steer) / model.wheel_base, u.accel};
}

HamiltonianExtremes hamiltonian_extremes(const VehicleModel& model, const State& z,
                                         const std::array<double, 4>& p) {
  double v = z[kDimV];
  double drift = p[kDimX] * v * std::cos(z[kDimTheta]) +
                 p[kDimY] * v * std::sin(z[kDimTheta]);
  // p_theta * v tan(steer) / L is monotone in tan(steer); v >= 0 in-domain but
  // take abs-safe endpoints anyway.
  double c = p[kDimTheta] * v / model.wheel_base;
  double s0 = c * std::tan(model.steer_min);
  double s1 = c * std::tan(model.steer_max);
  double a0 = p[kDimV] * model.accel_min;
  double a1 = p[kDimV] * model.accel_max;
  return {drift + std::min(s0, s1) + std::min(a0, a1),
          drift + std::max(s0, s1) + std::max(a0, a1)};
}

std::array<double, 4> axis_speed_bounds(const VehicleModel& model, const StateGrid& grid) {
  double vmax = std::max(std::abs(grid.lower()[kDimV]), std::abs(grid.upper()[kDimV]));
  double tmax = std::max(std::abs(std::tan(model.steer_min)),
                         std::abs(std::tan(model.steer_max)));
  double amax = std::max(std::abs(model.accel_min), std::abs(model.accel_max));
  return {vmax, vmax, vmax * tmax / model.wheel_base, amax};
}

double max_speed_over_grid(const VehicleModel& model, const StateGrid& grid) {
  auto b = axis_speed_bounds(model, grid);
  return *std::max_element(b.begin(), b.end());
}

}  // namespace aim
