#include "aim/reach.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aim/parallel.hpp"

namespace aim {

namespace {

// Per-solve precomputed kinematics and scheme coefficients. The trig tables
// make the per-node Hamiltonian a handful of multiply-adds.
struct Stencil {
  const StateGrid* g;
  int nx, ny, nt, nv;
  std::size_t sx, sy, st;
  std::array<double, 4> inv_h;
  std::vector<double> vcos, vsin;    // indexed it * nv + iv
  std::vector<double> vtl_lo, vtl_hi;  // indexed iv: v * tan(steer) / L endpoints
  std::vector<double> ath;             // indexed iv: |theta-dot| bound
  double amin, amax, aabs;
  double dt;
  bool backward;
};

Stencil make_stencil(const StateGrid& g, const VehicleModel& m, double dt,
                     bool backward) {
  Stencil s;
  s.g = &g;
  s.nx = g.shape()[0];
  s.ny = g.shape()[1];
  s.nt = g.shape()[2];
  s.nv = g.shape()[3];
  s.sx = g.strides()[0];
  s.sy = g.strides()[1];
  s.st = g.strides()[2];
  for (int d = 0; d < 4; ++d) s.inv_h[d] = 1.0 / g.spacing()[d];
  s.vcos.resize(static_cast<std::size_t>(s.nt) * s.nv);
  s.vsin.resize(s.vcos.size());
  s.vtl_lo.resize(s.nv);
  s.vtl_hi.resize(s.nv);
  s.ath.resize(s.nv);
  double t0 = std::tan(m.steer_min) / m.wheel_base;
  double t1 = std::tan(m.steer_max) / m.wheel_base;
  for (int iv = 0; iv < s.nv; ++iv) {
    double v = g.coord(kDimV, iv);
    s.vtl_lo[iv] = std::min(v * t0, v * t1);
    s.vtl_hi[iv] = std::max(v * t0, v * t1);
    s.ath[iv] = std::max(std::abs(s.vtl_lo[iv]), std::abs(s.vtl_hi[iv]));
    for (int it = 0; it < s.nt; ++it) {
      double th = g.coord(kDimTheta, it);
      s.vcos[static_cast<std::size_t>(it) * s.nv + iv] = v * std::cos(th);
      s.vsin[static_cast<std::size_t>(it) * s.nv + iv] = v * std::sin(th);
    }
  }
  s.amin = m.accel_min;
  s.amax = m.accel_max;
  s.aabs = std::max(std::abs(m.accel_min), std::abs(m.accel_max));
  s.dt = dt;
  s.backward = backward;
  return s;
}

inline double minmod(double a, double b) {
  if (a > 0.0 && b > 0.0) return std::min(a, b);
  if (a < 0.0 && b < 0.0) return std::max(a, b);
  return 0.0;
}

// Second-order ENO one-sided derivatives from raw neighbor values. dd terms
// are undivided second differences; absent ones (domain edge) enter as zero,
// which degrades gracefully to the first-order upwind difference there.
inline void eno2(double vm2, double vm1, double v0, double vp1, double vp2,
                 bool has_m1, bool has_m2, bool has_p1, bool has_p2, double inv_h,
                 double& pm, double& pp) {
  const double dd_c = (has_m1 && has_p1) ? (vp1 - 2.0 * v0 + vm1) : 0.0;
  if (has_m1) {
    const double dd_m = has_m2 ? (v0 - 2.0 * vm1 + vm2) : 0.0;
    pm = (v0 - vm1) * inv_h + 0.5 * inv_h * minmod(dd_m, dd_c);
  }
  if (has_p1) {
    const double dd_p = has_p2 ? (vp2 - 2.0 * vp1 + v0) : 0.0;
    pp = (vp1 - v0) * inv_h - 0.5 * inv_h * minmod(dd_c, dd_p);
  }
  if (!has_m1) pm = pp;
  if (!has_p1) pp = pm;
}

// One explicit Euler substep of the local Lax-Friedrichs scheme with ENO2
// derivatives: out = in advanced by dt against the minimizing (backward) or
// maximizing (forward) Hamiltonian. The Hamiltonian is linear in the costate,
// so the per-node dissipation coefficients |dH/dp| are exact (|v cos theta|
// and friends), which keeps fronts far sharper than global coefficients.
void advance(const Stencil& s, const std::vector<float>& in, std::vector<float>& out) {
  const float* src = in.data();
  float* dst = out.data();
  const std::size_t nxs = static_cast<std::size_t>(s.nx);
  parallel_for(0, nxs, [&](std::size_t bx, std::size_t ex) {
    for (std::size_t ix = bx; ix < ex; ++ix) {
      const bool xm1 = ix >= 1, xm2 = ix >= 2;
      const bool xp1 = ix + 1 < nxs, xp2 = ix + 2 < nxs;
      for (int iy = 0; iy < s.ny; ++iy) {
        const bool ym1 = iy >= 1, ym2 = iy >= 2;
        const bool yp1 = iy + 1 < s.ny, yp2 = iy + 2 < s.ny;
        for (int it = 0; it < s.nt; ++it) {
          const std::size_t base = ix * s.sx + static_cast<std::size_t>(iy) * s.sy +
                                   static_cast<std::size_t>(it) * s.st;
          // theta wraps: all four neighbors always exist
          const std::size_t tm1 = base + (static_cast<std::size_t>((it - 1 + s.nt) % s.nt) -
                                          static_cast<std::size_t>(it)) * s.st;
          const std::size_t tm2 = base + (static_cast<std::size_t>((it - 2 + s.nt) % s.nt) -
                                          static_cast<std::size_t>(it)) * s.st;
          const std::size_t tp1 = base + (static_cast<std::size_t>((it + 1) % s.nt) -
                                          static_cast<std::size_t>(it)) * s.st;
          const std::size_t tp2 = base + (static_cast<std::size_t>((it + 2) % s.nt) -
                                          static_cast<std::size_t>(it)) * s.st;
          const double* trig = &s.vcos[(static_cast<std::size_t>(it) * s.nv)];
          const double* trigs = &s.vsin[(static_cast<std::size_t>(it) * s.nv)];
          for (int iv = 0; iv < s.nv; ++iv) {
            const std::size_t idx = base + iv;
            const double v0 = src[idx];

            double pxm, pxp;
            eno2(xm2 ? src[idx - 2 * s.sx] : 0.0, xm1 ? src[idx - s.sx] : 0.0, v0,
                 xp1 ? src[idx + s.sx] : 0.0, xp2 ? src[idx + 2 * s.sx] : 0.0, xm1,
                 xm2, xp1, xp2, s.inv_h[0], pxm, pxp);

            double pym, pyp;
            eno2(ym2 ? src[idx - 2 * s.sy] : 0.0, ym1 ? src[idx - s.sy] : 0.0, v0,
                 yp1 ? src[idx + s.sy] : 0.0, yp2 ? src[idx + 2 * s.sy] : 0.0, ym1,
                 ym2, yp1, yp2, s.inv_h[1], pym, pyp);

            double ptm, ptp;
            eno2(src[tm2 + iv], src[tm1 + iv], v0, src[tp1 + iv], src[tp2 + iv], true,
                 true, true, true, s.inv_h[2], ptm, ptp);

            const bool vm1 = iv >= 1, vm2 = iv >= 2;
            const bool vp1 = iv + 1 < s.nv, vp2 = iv + 2 < s.nv;
            double pvm, pvp;
            eno2(vm2 ? src[idx - 2] : 0.0, vm1 ? src[idx - 1] : 0.0, v0,
                 vp1 ? src[idx + 1] : 0.0, vp2 ? src[idx + 2] : 0.0, vm1, vm2, vp1,
                 vp2, s.inv_h[3], pvm, pvp);

            const double pbx = 0.5 * (pxm + pxp);
            const double pby = 0.5 * (pym + pyp);
            const double pbt = 0.5 * (ptm + ptp);
            const double pbv = 0.5 * (pvm + pvp);

            const double drift = pbx * trig[iv] + pby * trigs[iv];
            const double th0 = pbt * s.vtl_lo[iv];
            const double th1 = pbt * s.vtl_hi[iv];
            const double ac0 = pbv * s.amin;
            const double ac1 = pbv * s.amax;

            double ham;
            if (s.backward) {
              ham = drift + std::min(th0, th1) + std::min(ac0, ac1);
            } else {
              ham = -(drift + std::max(th0, th1) + std::max(ac0, ac1));
            }
            const double diss =
                0.5 * (std::abs(trig[iv]) * (pxp - pxm) + std::abs(trigs[iv]) * (pyp - pym) +
                       s.ath[iv] * (ptp - ptm) + s.aabs * (pvp - pvm));
            dst[idx] = static_cast<float>(v0 + s.dt * (ham + diss));
          }
        }
      }
    }
  });
}

// Two-stage TVD Runge-Kutta (Heun) step built from two Euler substeps.
void rk2_step(const Stencil& s, const std::vector<float>& in, std::vector<float>& stage,
              std::vector<float>& out) {
  advance(s, in, stage);
  advance(s, stage, out);
  float* dst = out.data();
  const float* a = in.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    dst[i] = 0.5f * (a[i] + dst[i]);
  }
}

// Index of t on the lattice (t0, dt), or -1 when t is not covered.
long lattice_index(double t, double t0, double dt, std::size_t count) {
  double s = (t - t0) / dt;
  long k = std::lround(s);
  if (std::abs(s - k) > 1e-6) return -1;
  if (k < 0 || k >= static_cast<long>(count)) return -1;
  return k;
}

void check_inputs(const TimeStateSet& given, const TimeStateSet& constraint,
                  const VehicleModel& model, const SolveOptions& opts,
                  const char* what) {
  model.validate();
  if (!given.grid().same_as(constraint.grid())) {
    throw GridMismatchError(std::string(what) + ": grids differ");
  }
  if (std::abs(given.dt() - constraint.dt()) > 1e-12) {
    throw TimeRangeMismatchError(std::string(what) + ": time steps differ");
  }
  double bound = cfl_time_step(model, constraint.grid(), opts.cfl);
  if (constraint.dt() > bound * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << what << ": dt " << constraint.dt() << " exceeds CFL bound " << bound;
    throw CflViolationError(os.str());
  }
  if (lattice_index(given.t0(), constraint.t0(), constraint.dt(),
                    constraint.slice_count()) < 0 ||
      lattice_index(given.t_end(), constraint.t0(), constraint.dt(),
                    constraint.slice_count()) < 0) {
    throw TimeRangeMismatchError(std::string(what) +
                                 ": goal/initial window not on the constraint lattice");
  }
}

LevelSetField masked_max(const LevelSetField& a, const LevelSetField& b) {
  return set_intersection(a, b);
}

}  // namespace

double cfl_time_step(const VehicleModel& model, const StateGrid& grid, double cfl) {
  auto alpha = axis_speed_bounds(model, grid);
  double sum = 0.0;
  for (int d = 0; d < 4; ++d) sum += alpha[d] / grid.spacing()[d];
  return cfl / sum;
}

TimeStateSet backward_tube(const TimeStateSet& goal, const TimeStateSet& constraint,
                           const VehicleModel& model, const SolveOptions& opts) {
  check_inputs(goal, constraint, model, opts, "backward_tube");
  const std::size_t n = constraint.slice_count();
  const double dt = constraint.dt();
  Stencil sten = make_stencil(constraint.grid(), model, dt, /*backward=*/true);

  auto goal_slice = [&](std::size_t k) -> const LevelSetField* {
    long gk = lattice_index(constraint.time_of(k), goal.t0(), goal.dt(),
                            goal.slice_count());
    return gk >= 0 ? &goal.slice(static_cast<std::size_t>(gk)) : nullptr;
  };

  std::vector<LevelSetField> out(n);
  const LevelSetField* g_end = goal_slice(n - 1);
  LevelSetField terminal =
      g_end ? *g_end : LevelSetField::constant(constraint.grid_ptr(), kEmptyValue);
  out[n - 1] = masked_max(terminal, constraint.slice(n - 1));

  std::vector<float> stage(constraint.grid().size());
  std::vector<float> buf(constraint.grid().size());
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t k = n - 1 - step;
    rk2_step(sten, out[k + 1].values(), stage, buf);
    const LevelSetField* gk = goal_slice(k);
    const auto& cv = constraint.slice(k).values();
    if (gk) {
      const auto& gv = gk->values();
      for (std::size_t i = 0; i < buf.size(); ++i) {
        buf[i] = std::max(std::min(buf[i], gv[i]), cv[i]);
      }
    } else {
      for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = std::max(buf[i], cv[i]);
    }
    out[k] = LevelSetField(constraint.grid_ptr(), buf);
  }
  return TimeStateSet(constraint.t0(), dt, std::move(out));
}

TimeStateSet forward_tube(const TimeStateSet& initial, const TimeStateSet& constraint,
                          const VehicleModel& model, const SolveOptions& opts) {
  check_inputs(initial, constraint, model, opts, "forward_tube");
  const std::size_t n = constraint.slice_count();
  const double dt = constraint.dt();
  Stencil sten = make_stencil(constraint.grid(), model, dt, /*backward=*/false);

  auto seed_slice = [&](std::size_t k) -> const LevelSetField* {
    long sk = lattice_index(constraint.time_of(k), initial.t0(), initial.dt(),
                            initial.slice_count());
    return sk >= 0 ? &initial.slice(static_cast<std::size_t>(sk)) : nullptr;
  };

  std::size_t start = static_cast<std::size_t>(
      lattice_index(initial.t0(), constraint.t0(), dt, n));

  std::vector<LevelSetField> out(n);
  LevelSetField pad = LevelSetField::constant(constraint.grid_ptr(), kEmptyValue);
  for (std::size_t k = 0; k < start; ++k) out[k] = pad;
  out[start] = masked_max(initial.slice(0), constraint.slice(start));

  std::vector<float> stage(constraint.grid().size());
  std::vector<float> buf(constraint.grid().size());
  for (std::size_t k = start + 1; k < n; ++k) {
    rk2_step(sten, out[k - 1].values(), stage, buf);
    const LevelSetField* sk = seed_slice(k);
    const auto& cv = constraint.slice(k).values();
    if (sk) {
      const auto& sv = sk->values();
      for (std::size_t i = 0; i < buf.size(); ++i) {
        buf[i] = std::max(std::min(buf[i], sv[i]), cv[i]);
      }
    } else {
      for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = std::max(buf[i], cv[i]);
    }
    out[k] = LevelSetField(constraint.grid_ptr(), buf);
  }
  return TimeStateSet(constraint.t0(), dt, std::move(out));
}

}  // namespace aim
