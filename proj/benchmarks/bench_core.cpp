#include <benchmark/benchmark.h>

#include <random>

#include "agcoop/convex_core.hpp"
#include "agcoop/pipeline.hpp"

namespace {

using namespace agcoop;

struct Fixture {
  Scenario scenario;
  RadioMap map;
  TrajectorySet traj;
  Schedule schedule;
  PowerProfile power;

  explicit Fixture(int slots) {
    SystemParams p;
    p.num_slots = slots;
    scenario = make_synthetic_scenario(1, p);
    map = generate_synthetic_map(scenario, scenario.propagation, 1);
    traj = initial_trajectory(scenario);
    schedule = round_robin_schedule(p.num_uavs, p.num_ugvs, slots);
    power = PowerProfile(p.num_ugvs, slots, 0.5 * p.max_power);
  }
};

void BM_SolveSumOfLogs(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  ConcaveProgram prog(n);
  AffineExpr budget(-1.0 * n);
  for (int i = 0; i < n; ++i) {
    prog.set_bounds(i, 0.0, 4.0);
    prog.objective.add_log(u(rng), AffineExpr(u(rng)).add(i, 1.0));
    budget.add(i, u(rng));
  }
  prog.affine_le.push_back(budget);
  for (auto _ : state) benchmark::DoNotOptimize(solve(prog).objective);
}
BENCHMARK(BM_SolveSumOfLogs)->Arg(10)->Arg(80)->Arg(320);

void BM_MinAvgSumRate(benchmark::State& state) {
  const Fixture f(20);
  const double noise = f.scenario.params.noise_watts();
  for (auto _ : state)
    benchmark::DoNotOptimize(min_avg_sum_rate(f.map, f.schedule, f.power, f.traj, noise).min_average);
}
BENCHMARK(BM_MinAvgSumRate);

void BM_Fitness(benchmark::State& state) {
  const Fixture f(20);
  const FitnessContext ctx{f.map, f.schedule, f.power, f.scenario};
  for (auto _ : state) benchmark::DoNotOptimize(fitness(f.traj, ctx).value);
}
BENCHMARK(BM_Fitness);

void BM_SwarmIteration(benchmark::State& state) {
  const Fixture f(20);
  SwarmConfig cfg = SwarmConfig::from_params(f.scenario.params, 1);
  cfg.iterations = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(run_baseline(SwarmKind::pso_cm, f.scenario, f.map, f.schedule, f.power, cfg).terms.value);
}
BENCHMARK(BM_SwarmIteration)->Unit(benchmark::kMillisecond);

void BM_SolveP1(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_P1(f.map, f.power, f.traj, f.scenario.params, f.schedule).mu);
}
BENCHMARK(BM_SolveP1)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_SolveP2(benchmark::State& state) {
  const Fixture f(20);
  const SchedulingResult s = solve_P1(f.map, f.power, f.traj, f.scenario.params, f.schedule);
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_P2(f.map, s.schedule, f.traj, f.scenario.params, f.power).mu);
}
BENCHMARK(BM_SolveP2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
