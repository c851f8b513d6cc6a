#include <benchmark/benchmark.h>

#include "sgdlab/ensemble.hpp"
#include "sgdlab/landscapes.hpp"
#include "sgdlab/optimizers.hpp"
#include "sgdlab/theory.hpp"

using namespace sgdlab;

static void BM_SgdStepQuadratic(benchmark::State& state) {
  const QuadraticObjective obj(-1.0);
  HyperParams hp;
  hp.lr = 0.8;
  RngStream rng(1);
  OptimizerState s = OptimizerState::initial(make_vector({0.5}));
  for (auto _ : state) {
    s = step(s, obj, hp, BoxConstraint::none(), rng);
    if (s.w(0) == 0.0 || std::abs(s.w(0)) < 1e-200) s = OptimizerState::initial(make_vector({0.5}));
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_SgdStepQuadratic);

static void BM_AmsgradStep(benchmark::State& state) {
  const QuadraticObjective obj(-0.1);
  HyperParams hp{UpdateRule::amsgrad, 0.2, 0.9, 0.999};
  const BoxConstraint box = BoxConstraint::uniform(1, -1.0, 1.0);
  RngStream rng(2);
  OptimizerState s = OptimizerState::initial(make_vector({0.5}));
  for (auto _ : state) {
    s = step(s, obj, hp, box, rng);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_AmsgradStep);

static void BM_ToyNetStep(benchmark::State& state) {
  const ToyNetObjective obj;
  HyperParams hp;
  hp.lr = 0.01;
  RngStream rng(3);
  OptimizerState s = OptimizerState::initial(make_vector({0.5, 0.5}));
  for (auto _ : state) {
    s = step(s, obj, hp, BoxConstraint::none(), rng);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_ToyNetStep);

static void BM_Ensemble(benchmark::State& state) {
  const QuadraticObjective obj(-1.0);
  HyperParams hp;
  hp.lr = 0.25;
  EnsembleConfig cfg;
  cfg.n_runs = 200;
  cfg.n_steps = 100;
  cfg.snapshot_steps = {0, 100};
  cfg.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    auto res = run_ensemble(obj, hp, BoxConstraint::none(), cfg);
    benchmark::DoNotOptimize(res);
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_runs * cfg.n_steps);
}
BENCHMARK(BM_Ensemble)->Arg(1)->Arg(4);

static void BM_FpDensity(benchmark::State& state) {
  const auto grid = symmetric_grid();
  FPStationaryParams p{-1.0, 1.0, 0.1, 0.1, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(fp_stationary_density(p, FPKind::additive, grid));
}
BENCHMARK(BM_FpDensity);
BENCHMARK_MAIN();
