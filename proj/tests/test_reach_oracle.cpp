#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "doctest.h"

#include "aim/reach.hpp"
#include "aim/shapes.hpp"

using namespace aim;

namespace {

// Degenerate 4-D embedding of the 2-D double integrator: steer pinned to 0,
// so theta never moves and each theta sheet evolves independently (the theta
// dissipation coefficient is zero, and the data below is uniform in y). On
// the theta=0 sheet the dynamics reduce to xdot = v, vdot = accel. The
// brute-force oracle runs graph reachability over (x, v) nodes with a dense
// control set and exact macro-step integration, independent of any PDE
// machinery.
struct DoubleIntegrator {
  GridPtr grid;
  VehicleModel model;
  int sheet_theta;  // index of the theta = 0 sheet
  int sheet_y;      // center y index

  DoubleIntegrator() {
    grid = std::make_shared<const StateGrid>(
        std::array<double, 2>{-2.0, 2.0}, std::array<double, 2>{-0.1, 0.1},
        std::array<double, 2>{-1.0, 1.0}, std::array<int, 4>{101, 3, 4, 41});
    model.wheel_base = 0.32;
    model.steer_min = 0.0;
    model.steer_max = 0.0;
    model.accel_min = -1.0;
    model.accel_max = 1.0;
    model.speed_limit = 1.0;
    sheet_theta = 2;  // nodes at -pi, -pi/2, 0, pi/2
    REQUIRE(grid->coord(kDimTheta, sheet_theta) == doctest::Approx(0.0).epsilon(1e-12));
    sheet_y = 1;
  }

  LevelSetField lift(const std::function<double(double, double)>& fn) const {
    return LevelSetField::from_function(
        grid, [&](const State& z) { return fn(z[kDimX], z[kDimV]); });
  }

  std::vector<char> sheet_mask(const LevelSetField& f) const {
    const auto& sh = grid->shape();
    std::vector<char> inside(static_cast<std::size_t>(sh[0]) * sh[3]);
    for (int ix = 0; ix < sh[0]; ++ix) {
      for (int iv = 0; iv < sh[3]; ++iv) {
        inside[static_cast<std::size_t>(ix) * sh[3] + iv] =
            f[grid->index(ix, sheet_y, sheet_theta, iv)] <= 0.0f;
      }
    }
    return inside;
  }
};

double jaccard(const std::vector<char>& a, const std::vector<char>& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// One exact macro step of the double integrator per control; endpoints snap
// to the nearest node, the usual unbiased graph abstraction.
struct GraphOracle {
  int nx = 101, nv = 41;
  double x0 = -2.0, v0 = -1.0, hx = 0.04, hv = 0.05;
  double macro = 0.1;
  std::vector<double> controls;

  GraphOracle() {
    for (int i = 0; i <= 8; ++i) controls.push_back(-1.0 + 0.25 * i);
  }

  bool in_domain(double x, double v) const {
    return x >= x0 && x <= x0 + hx * (nx - 1) && v >= v0 && v <= v0 + hv * (nv - 1);
  }

  template <typename Visit>
  void nodes_near(double x, double v, Visit&& visit) const {
    int jx = static_cast<int>(std::lround((x - x0) / hx));
    int jv = static_cast<int>(std::lround((v - v0) / hv));
    if (jx < 0 || jx >= nx || jv < 0 || jv >= nv) return;
    visit(static_cast<std::size_t>(jx) * nv + jv);
  }

  // Nodes that can land in `target` after one macro step.
  std::vector<char> pre(const std::vector<char>& target) const {
    std::vector<char> out(target.size(), 0);
    for (int ix = 0; ix < nx; ++ix) {
      for (int iv = 0; iv < nv; ++iv) {
        const double x = x0 + ix * hx, v = v0 + iv * hv;
        bool hit = false;
        for (double a : controls) {
          const double v1 = v + a * macro;
          const double x1 = x + v * macro + 0.5 * a * macro * macro;
          if (!in_domain(x1, v1)) continue;
          nodes_near(x1, v1, [&](std::size_t j) { hit = hit || target[j]; });
          if (hit) break;
        }
        if (hit) out[static_cast<std::size_t>(ix) * nv + iv] = 1;
      }
    }
    return out;
  }

  // Nodes coverable from `from` after one macro step.
  std::vector<char> post(const std::vector<char>& from) const {
    std::vector<char> out(from.size(), 0);
    for (int ix = 0; ix < nx; ++ix) {
      for (int iv = 0; iv < nv; ++iv) {
        if (!from[static_cast<std::size_t>(ix) * nv + iv]) continue;
        const double x = x0 + ix * hx, v = v0 + iv * hv;
        for (double a : controls) {
          const double v1 = v + a * macro;
          const double x1 = x + v * macro + 0.5 * a * macro * macro;
          if (!in_domain(x1, v1)) continue;
          nodes_near(x1, v1, [&](std::size_t j) { out[j] = 1; });
        }
      }
    }
    return out;
  }
};

}  // namespace

TEST_CASE("backward tube matches graph reachability on the double integrator") {
  DoubleIntegrator di;
  const double dt = 0.0125;
  REQUIRE(dt <= cfl_time_step(di.model, *di.grid));
  const std::size_t steps_per_macro = 8;
  const std::size_t n_macro = 16;  // 1.6 s horizon
  const std::size_t n = n_macro * steps_per_macro + 1;

  // Box edges sit between grid nodes; on-node edges would make whole boundary
  // rows knife-edge (exactly 0) and the inside test ill-posed for both sides.
  LevelSetField goal = di.lift([](double x, double v) {
    return std::max(std::abs(x - 0.3) - 0.35, std::abs(v) - 0.475);
  });
  LevelSetField free_space = di.lift([](double x, double v) {
    return std::max(std::abs(x) - 1.95, std::abs(v) - 0.98);
  });

  TimeStateSet constraint = TimeStateSet::broadcast(free_space, 0.0, dt, n);
  // Goal available over the whole horizon: reach-within-window semantics,
  // exactly how the corridor passes use the solver.
  TimeStateSet goal_tss = TimeStateSet::broadcast(goal, 0.0, dt, n);
  TimeStateSet tube = backward_tube(goal_tss, constraint, di.model);
  REQUIRE(tube.slice_count() == n);

  GraphOracle oracle;
  std::vector<char> allowed = di.sheet_mask(free_space);
  std::vector<char> reach = di.sheet_mask(goal);
  for (std::size_t i = 0; i < reach.size(); ++i) reach[i] = reach[i] && allowed[i];

  double worst = 1.0;
  for (std::size_t m = 1; m <= n_macro; ++m) {
    std::vector<char> prev = oracle.pre(reach);
    for (std::size_t i = 0; i < reach.size(); ++i) {
      reach[i] = (reach[i] || prev[i]) && allowed[i];
    }
    std::vector<char> solver = di.sheet_mask(tube.slice(n - 1 - m * steps_per_macro));
    const double j = jaccard(solver, reach);
    CAPTURE(m);
    CHECK(j >= 0.9);
    worst = std::min(worst, j);
  }
  MESSAGE("worst backward Jaccard overlap: ", worst);
}

TEST_CASE("forward tube matches graph reachability on the double integrator") {
  DoubleIntegrator di;
  const double dt = 0.0125;
  const std::size_t steps_per_macro = 8;
  const std::size_t n_macro = 16;
  const std::size_t n = n_macro * steps_per_macro + 1;

  // v-halfwidth keeps the box edges between grid nodes (see backward case).
  LevelSetField seed = di.lift([](double x, double v) {
    return std::max(std::abs(x + 0.8) - 0.3, std::abs(v - 0.1) - 0.325);
  });
  LevelSetField free_space = di.lift([](double x, double v) {
    return std::max(std::abs(x) - 1.95, std::abs(v) - 0.98);
  });

  TimeStateSet constraint = TimeStateSet::broadcast(free_space, 0.0, dt, n);
  TimeStateSet seed_tss = TimeStateSet::broadcast(seed, 0.0, dt, 1);
  TimeStateSet tube = forward_tube(seed_tss, constraint, di.model);
  REQUIRE(tube.slice_count() == n);

  GraphOracle oracle;
  std::vector<char> allowed = di.sheet_mask(free_space);
  // At-time occupancy: no accumulation step to step.
  std::vector<char> occ = di.sheet_mask(seed);
  for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = occ[i] && allowed[i];

  double worst = 1.0;
  for (std::size_t m = 1; m <= n_macro; ++m) {
    std::vector<char> next = oracle.post(occ);
    for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = next[i] && allowed[i];
    std::vector<char> solver = di.sheet_mask(tube.slice(m * steps_per_macro));
    const double j = jaccard(solver, occ);
    CAPTURE(m);
    CHECK(j >= 0.9);
    worst = std::min(worst, j);
  }
  MESSAGE("worst forward Jaccard overlap: ", worst);
}

TEST_CASE("hamiltonian extremes match a dense control-grid oracle") {
  VehicleModel model;
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> ux(-1.5, 1.5), uth(-kPi, kPi), uv(0.0, 0.8),
      up(-3.0, 3.0);

  for (int trial = 0; trial < 200; ++trial) {
    State z{ux(rng), ux(rng), uth(rng), uv(rng)};
    std::array<double, 4> p{up(rng), up(rng), up(rng), up(rng)};

    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < 51; ++i) {
      const double steer =
          model.steer_min + (model.steer_max - model.steer_min) * i / 50.0;
      for (int j = 0; j < 51; ++j) {
        const double accel =
            model.accel_min + (model.accel_max - model.accel_min) * j / 50.0;
        const State f = flow(model, z, Control{steer, accel});
        double dot = 0.0;
        for (int d = 0; d < 4; ++d) dot += p[d] * f[d];
        lo = std::min(lo, dot);
        hi = std::max(hi, dot);
      }
    }
    // The Hamiltonian is affine in accel and monotone in tan(steer), so the
    // dense grid hits the exact extremizers at the corners.
    HamiltonianExtremes he = hamiltonian_extremes(model, z, p);
    CHECK(he.lo == doctest::Approx(lo).epsilon(1e-9));
    CHECK(he.hi == doctest::Approx(hi).epsilon(1e-9));
  }
}

TEST_CASE("backward tube with whole-horizon goal grows monotonically") {
  DoubleIntegrator di;
  const double dt = 0.0125;
  const std::size_t n = 41;
  LevelSetField goal = di.lift([](double x, double v) {
    return std::max(std::abs(x) - 0.4, std::abs(v) - 0.4);
  });
  LevelSetField free_space = di.lift([](double x, double v) {
    return std::max(std::abs(x) - 1.95, std::abs(v) - 0.98);
  });
  TimeStateSet constraint = TimeStateSet::broadcast(free_space, 0.0, dt, n);
  TimeStateSet goal_tss = TimeStateSet::broadcast(goal, 0.0, dt, n);
  TimeStateSet tube = backward_tube(goal_tss, constraint, di.model);

  // More remaining time only grows the tube (values never rise backward).
  // The second-order scheme admits small non-monotone transients, so the
  // bound is a few percent of a cell rather than exact.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto& earlier = tube.slice(k).values();
    const auto& later = tube.slice(k + 1).values();
    float max_up = -1e9f;
    for (std::size_t i = 0; i < earlier.size(); ++i) {
      max_up = std::max(max_up, earlier[i] - later[i]);
    }
    CHECK(max_up <= 2e-3f);
  }
  // Never dips below the constraint.
  for (std::size_t k = 0; k < n; ++k) {
    const auto& tv = tube.slice(k).values();
    const auto& cv = constraint.slice(k).values();
    float worst = 1e9f;
    for (std::size_t i = 0; i < tv.size(); ++i) worst = std::min(worst, tv[i] - cv[i]);
    CHECK(worst >= 0.0f);
  }
}
