#include <benchmark/benchmark.h>

#include <random>

#include "aim/corridor.hpp"
#include "aim/limits.hpp"
#include "aim/reach.hpp"
#include "aim/shapes.hpp"

namespace {

struct Fixture {
  aim::GridPtr grid = aim::StateGrid::make_default();
  aim::VehicleModel model;
  aim::IntersectionLayout layout;
  aim::LevelSetField drivable = layout.drivable(grid, model);
  aim::LevelSetField goal = aim::box_field(grid, layout.exit_box(aim::Side::Right));
  double dt = aim::cfl_time_step(model, *grid);
  // Short backward tube used by the interpolation and limits benchmarks.
  aim::TimeStateSet tube = aim::backward_tube(
      aim::TimeStateSet::broadcast(goal, 0.0, dt, 21),
      aim::TimeStateSet::broadcast(drivable, 0.0, dt, 21), model);
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_SolverStep(benchmark::State& state) {
  Fixture& f = fixture();
  const aim::TimeStateSet goal = aim::TimeStateSet::broadcast(f.goal, 0.0, f.dt, 2);
  const aim::TimeStateSet constraint =
      aim::TimeStateSet::broadcast(f.drivable, 0.0, f.dt, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aim::backward_tube(goal, constraint, f.model));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.grid->size()));
}
BENCHMARK(BM_SolverStep)->Unit(benchmark::kMillisecond);

void BM_ValueAt(benchmark::State& state) {
  Fixture& f = fixture();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ux(-1.4, 1.4), uth(-3.1, 3.1), uv(0.0, 0.8),
      ut(0.0, f.tube.t_end());
  for (auto _ : state) {
    aim::State z{ux(rng), ux(rng), uth(rng), uv(rng)};
    benchmark::DoNotOptimize(f.tube.value_at(z, ut(rng)));
  }
}
BENCHMARK(BM_ValueAt);

void BM_DrivingLimits(benchmark::State& state) {
  Fixture& f = fixture();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ux(-1.4, 1.4), uth(-3.1, 3.1), uv(0.0, 0.8),
      ut(0.0, f.tube.t_end()), us(f.model.steer_min, f.model.steer_max);
  for (auto _ : state) {
    aim::State z{ux(rng), ux(rng), uth(rng), uv(rng)};
    benchmark::DoNotOptimize(
        aim::driving_limits(f.tube, f.model, z, us(rng), ut(rng)));
  }
}
BENCHMARK(BM_DrivingLimits);

}  // namespace

BENCHMARK_MAIN();
