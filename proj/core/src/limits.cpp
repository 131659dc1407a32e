#include "aim/limits.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace aim {

namespace {

constexpr double kEpsB = 1e-9;

}  // namespace

HalfSpaceLimit driving_limits(const TimeStateSet& corridor, const VehicleModel& model,
                              const State& z, double steer, double t, double dt_pred) {
  model.validate();
  if (corridor.slice_count() == 0 || !corridor.covers(t)) {
    std::ostringstream os;
    os << "query time " << t << " outside the corridor's stored range";
    throw OutOfCorridorTimeError(os.str());
  }
  const double step = dt_pred > 0.0 ? dt_pred : corridor.dt();
  const StateGrid& grid = corridor.grid();

  std::size_t k0, k1;
  double w;
  corridor.bracket(t, k0, k1, w);
  const double v_lo = corridor.slice(k0).interpolate(z);
  const double v_hi = k1 == k0 ? v_lo : corridor.slice(k1).interpolate(z);
  const double value = std::max(v_lo, v_hi);
  const double dt_value = k1 == k0 ? 0.0 : (v_hi - v_lo) / corridor.dt();

  std::array<double, 4> grad{};
  for (int d = 0; d < 4; ++d) {
    const double h = 0.5 * grid.spacing()[d];
    State zp = z;
    State zm = z;
    zp[d] += h;
    zm[d] -= h;
    double sep = 2.0 * h;
    if (d != kDimTheta) {
      zp[d] = std::min(zp[d], grid.upper()[d]);
      zm[d] = std::max(zm[d], grid.lower()[d]);
      sep = zp[d] - zm[d];
    }
    grad[d] = (corridor.value_at(zp, t) - corridor.value_at(zm, t)) / sep;
  }

  const State f = flow(model, z, Control{steer, 0.0});
  double drift = 0.0;
  for (int d = 0; d < 4; ++d) drift += grad[d] * f[d];

  HalfSpaceLimit out;
  out.a = value + dt_value * step + drift * step;
  out.b = grad[kDimV] * step;

  double lo = model.accel_min;
  double hi = model.accel_max;
  if (std::abs(out.b) <= kEpsB) {
    if (out.a <= 0.0) {
      out.feasible = true;
      out.accel_min = lo;
      out.accel_max = hi;
    }
  } else if (out.b > 0.0) {
    hi = std::min(hi, -out.a / out.b);
    if (lo <= hi) {
      out.feasible = true;
      out.accel_min = lo;
      out.accel_max = hi;
    }
  } else {
    lo = std::max(lo, -out.a / out.b);
    if (lo <= hi) {
      out.feasible = true;
      out.accel_min = lo;
      out.accel_max = hi;
    }
  }
  return out;
}

std::vector<HalfSpaceLimit> limits_profile(const TimeStateSet& corridor,
                                           const VehicleModel& model, double x, double y,
                                           double theta, double t,
                                           const std::vector<double>& v_samples,
                                           double steer, double dt_pred) {
  std::vector<HalfSpaceLimit> out;
  out.reserve(v_samples.size());
  for (double v : v_samples) {
    out.push_back(driving_limits(corridor, model, State{x, y, theta, v}, steer, t, dt_pred));
  }
  return out;
}

}  // namespace aim
