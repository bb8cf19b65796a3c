#include "agcoop/pipeline.hpp"

#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

namespace agcoop {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t round_seed(std::uint64_t seed, int round) {
  // splitmix64 finalizer: decorrelates the per-round swarm streams
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(round + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_inputs(const Scenario& scenario, const RadioMap& map) {
  scenario.validate();
  const SystemParams& p = scenario.params;
  if (map.transmitters() != p.num_ugvs) throw PreconditionError("radio map has a different UGV count than the scenario");
  if (map.slots() != p.num_slots) throw PreconditionError("radio map has a different slot count than the scenario");
  if (!(map.grid() == scenario.grid())) throw PreconditionError("radio map grid does not match the scenario extent");
}

const char* mode_label(const PipelineConfig& c) {
  if (c.schedule_mode == ScheduleMode::round_robin) return "rr";
  if (!c.optimize_power) return "fp";
  if (c.trajectory_kind != SwarmKind::ws_pso_cm) return to_string(c.trajectory_kind);
  return "algorithm1";
}

}  // namespace

nlohmann::json PipelineResult::config_snapshot() const {
  nlohmann::json j;
  j["params"] = params;
  j["seed"] = seed;
  j["max_outer_rounds"] = config.max_outer_rounds;
  j["schedule_mode"] = config.schedule_mode == ScheduleMode::optimize ? "optimize" : "round_robin";
  j["trajectory"] = to_string(config.trajectory_kind);
  j["optimize_power"] = config.optimize_power;
  j["power_trim"] = config.power.trim;
  j["scheduling_max_iterations"] = config.scheduling.max_iterations;
  j["power_max_iterations"] = config.power.max_iterations;
  j["warm_start_max_rounds"] = config.warm_start.max_rounds;
  return j;
}

PipelineResult run_algorithm1(const Scenario& scenario, const RadioMap& map, const PipelineConfig& config) {
  check_inputs(scenario, map);
  const auto t_total = Clock::now();
  SystemParams params = scenario.params;
  if (config.swarm_iterations) params.swarm_iterations = *config.swarm_iterations;
  const int M = params.num_uavs;
  const int N = params.num_ugvs;
  const int T = params.num_slots;
  const double noise = params.noise_watts();

  PipelineResult res;
  res.label = mode_label(config);
  res.seed = config.seed;
  res.params = params;
  res.config = config;

  PowerProfile power(N, T, 0.5 * params.max_power);
  Schedule schedule = round_robin_schedule(M, N, T);
  TrajectorySet traj = initial_trajectory(scenario);
  double mu = min_avg_sum_rate(map, schedule, power, traj, noise).min_average;
  res.outer_trace.push_back({0, mu, mu, 0.0, true});

  bool stage_failed = false;
  try {
    for (int round = 1; round <= config.max_outer_rounds; ++round) {
      Schedule next_schedule = schedule;
      auto t0 = Clock::now();
      if (config.schedule_mode == ScheduleMode::optimize) {
        SchedulingResult sr = solve_P1(map, power, traj, params, schedule, config.scheduling);
        next_schedule = sr.schedule;
        res.scheduling_traces.push_back(std::move(sr.trace));
        for (auto& d : sr.diagnostics) res.diagnostics.push_back("round " + std::to_string(round) + ": " + d);
      }
      res.timings.scheduling_s += seconds_since(t0);
      const double scheduling_mu = min_avg_sum_rate(map, next_schedule, power, traj, noise).min_average;

      SwarmConfig swarm = SwarmConfig::from_params(params, round_seed(config.seed, round));
      t0 = Clock::now();
      SwarmResult sw;
      if (config.trajectory_kind == SwarmKind::ws_pso_cm) {
        sw = run_ws_pso_cm(scenario, map, next_schedule, power, swarm, traj, config.warm_start);
        if (sw.warm.fell_back) res.diagnostics.push_back("round " + std::to_string(round) + ": warm start fell back");
      } else {
        sw = run_baseline(config.trajectory_kind, scenario, map, next_schedule, power, swarm);
      }
      const double swarm_s = seconds_since(t0);
      res.timings.swarm_s += swarm_s;
      res.warm_start_traces.push_back(sw.warm.trace);
      res.swarm_traces.push_back(sw.trace);

      // the swarm's best is projected onto the flight constraints; if that
      // loses to the incumbent trajectory under the new schedule, keep the
      // incumbent
      TrajectorySet next_traj = repair_trajectory(sw.best, scenario);
      double next_mu = min_avg_sum_rate(map, next_schedule, power, next_traj, noise).min_average;
      if (scheduling_mu > next_mu) {
        next_traj = traj;
        next_mu = scheduling_mu;
      }
      const double best_fitness = sw.trace.empty() ? 0.0 : sw.trace.back().best.value;
      if (next_mu < mu) {
        res.outer_trace.push_back({round, next_mu, scheduling_mu, best_fitness, false});
        break;
      }
      const double gain = (next_mu - mu) / std::max(std::abs(mu), 1e-12);
      schedule = std::move(next_schedule);
      traj = std::move(next_traj);
      mu = next_mu;
      res.outer_trace.push_back({round, mu, scheduling_mu, best_fitness, true});
      if (gain < params.sca_tolerance) break;
    }
  } catch (const Error& e) {
    // the last accepted triple is still reported, flagged as failed
    stage_failed = true;
    res.diagnostics.push_back(std::string(e.kind()) + ": " + e.what());
  }

  if (config.optimize_power && !stage_failed) {
    const auto t0 = Clock::now();
    try {
      PowerResult pr = solve_P2(map, schedule, traj, params, power, config.power);
      power = pr.power;
      res.power_trace = std::move(pr.trace);
      for (auto& d : pr.diagnostics) res.diagnostics.push_back("power: " + d);
    } catch (const Error& e) {
      stage_failed = true;
      res.diagnostics.push_back(std::string("power: ") + e.kind() + ": " + e.what());
    }
    res.timings.power_s += seconds_since(t0);
  } else {
    const double mean = power.mean();
    res.power_trace.push_back({0, mu, mean, 1.0 - mean / params.max_power});
  }

  res.schedule = schedule;
  res.power = power;
  res.trajectory = traj;
  res.rates = min_avg_sum_rate(map, schedule, power, traj, noise);
  res.mu = res.rates.min_average;
  res.fitness = fitness(traj, FitnessContext{map, schedule, power, scenario});
  Scenario checked = scenario;
  checked.params = params;
  res.violations = check_kinematics(traj, checked);
  res.ok = !stage_failed && res.violations.empty() && schedule.binary() && schedule.satisfies_assignment(0.0);
  if (!res.violations.empty()) res.diagnostics.push_back("final trajectory violates flight constraints");
  res.timings.total_s = seconds_since(t_total);
  return res;
}

PipelineResult run_rr_baseline(const Scenario& scenario, const RadioMap& map, PipelineConfig config) {
  config.schedule_mode = ScheduleMode::round_robin;
  return run_algorithm1(scenario, map, config);
}

PipelineResult run_fp_baseline(const Scenario& scenario, const RadioMap& map, PipelineConfig config) {
  config.optimize_power = false;
  return run_algorithm1(scenario, map, config);
}

PipelineResult run_swarm_baseline(SwarmKind kind, const Scenario& scenario, const RadioMap& map,
                                  PipelineConfig config) {
  config.trajectory_kind = kind;
  return run_algorithm1(scenario, map, config);
}

std::vector<SweepRow> sweep_max_power(const Scenario& scenario, const RadioMap& map,
                                      const std::vector<double>& max_powers, const PipelineConfig& config) {
  std::vector<SweepRow> rows;
  for (double pm : max_powers) {
    Scenario s = scenario;
    s.params.max_power = pm;
    const PipelineResult r = run_algorithm1(s, map, config);
    const double mean = r.power.mean();
    rows.push_back({pm, r.mu, mean, 1.0 - mean / pm});
  }
  return rows;
}

}  // namespace agcoop
