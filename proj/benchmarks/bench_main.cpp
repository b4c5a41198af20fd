#include <benchmark/benchmark.h>

#include <random>

#include "mcgt/builtin.hpp"
#include "mcgt/power.hpp"
#include "mcgt/solver.hpp"
#include "mcgt/topology.hpp"

namespace {

using namespace mcgt;

void BM_MetropolisAndSigma(benchmark::State& state) {
  const auto graph = UndirectedGraph::random_connected(static_cast<int>(state.range(0)), 0.4, 1);
  for (auto _ : state) {
    const WeightMatrix w = metropolis_weights(graph);
    benchmark::DoNotOptimize(contraction_sigma(w));
  }
}
BENCHMARK(BM_MetropolisAndSigma)->Arg(16)->Arg(50);

void BM_ProjectMicrogridSet(benchmark::State& state) {
  const FlagshipScenario flagship = make_flagship_scenario();
  const CompiledScenario compiled = build_game(flagship.specs, flagship.pricing, flagship.horizon);
  const FeasibleSet& set = compiled.sets()[static_cast<std::size_t>(state.range(0))];
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd u = set.feasible_point();
  for (auto _ : state) {
    state.PauseTiming();
    Eigen::VectorXd probe = u;
    for (int d = 0; d < probe.size(); ++d) probe[d] += 0.05 * unit(rng);
    state.ResumeTiming();
    benchmark::DoNotOptimize(set.project(probe));
  }
}
BENCHMARK(BM_ProjectMicrogridSet)->Arg(0)->Arg(3);  // generator-heavy and battery-only grids

void BM_SolverStepTg1(benchmark::State& state) {
  const MultiClusterGame game = make_tg1_game();
  const auto sets = make_tg1_sets(true);
  const CommTopology topo = make_tg1_topology();
  SolverConfig config;
  config.alpha = 0.01;
  SolverState current = initialize(game, sets, topo, std::uint64_t{1});
  for (auto _ : state) {
    current = step(current, game, sets, topo, config);
    benchmark::DoNotOptimize(current.tracking);
  }
}
BENCHMARK(BM_SolverStepTg1);

void BM_SolverStepFlagship(benchmark::State& state) {
  const FlagshipScenario flagship = make_flagship_scenario();
  const CompiledScenario compiled = build_game(flagship.specs, flagship.pricing, flagship.horizon);
  const CommTopology topo = make_random_topology(compiled.game().dims(), 0.7, 2024);
  SolverConfig config;
  config.alpha = 0.02;
  SolverState current = initialize(compiled.game(), compiled.sets(), topo, std::uint64_t{1});
  for (auto _ : state) {
    current = step(current, compiled.game(), compiled.sets(), topo, config);
    benchmark::DoNotOptimize(current.tracking);
  }
}
BENCHMARK(BM_SolverStepFlagship)->Unit(benchmark::kMillisecond)->Iterations(20);

}  // namespace

BENCHMARK_MAIN();
