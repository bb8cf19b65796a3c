#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "agcoop/link_model.hpp"
#include "agcoop/power_sca.hpp"
#include "agcoop/radio_map.hpp"
#include "agcoop/scenario.hpp"
#include "agcoop/scheduling_sca.hpp"
#include "agcoop/trajectory_opt.hpp"

namespace agcoop {

enum class ScheduleMode { optimize, round_robin };

struct PipelineConfig {
  std::uint64_t seed{1};
  int max_outer_rounds{20};
  ScheduleMode schedule_mode{ScheduleMode::optimize};
  SwarmKind trajectory_kind{SwarmKind::ws_pso_cm};
  bool optimize_power{true};
  std::optional<int> swarm_iterations;  // overrides P_iter
  SchedulingOptions scheduling{};
  PowerOptions power{};
  WarmStartOptions warm_start{};
};

struct OuterTraceRow {
  int round{0};
  double mu{0.0};
  double scheduling_mu{0.0};  // after the scheduling stage of this round
  double best_fitness{0.0};
  bool accepted{true};
};

struct StageTimings {
  double scheduling_s{0.0};
  double swarm_s{0.0};  // includes the warm start
  double power_s{0.0};
  double total_s{0.0};
};

struct PipelineResult {
  std::string label;
  bool ok{true};
  std::vector<std::string> diagnostics;

  Schedule schedule;
  PowerProfile power;
  TrajectorySet trajectory;
  RateReport rates;
  double mu{0.0};
  FitnessTerms fitness{};
  KinematicsReport violations;

  std::vector<OuterTraceRow> outer_trace;
  std::vector<std::vector<SchedulingTraceRow>> scheduling_traces;  // one per outer round
  std::vector<std::vector<WarmStartTraceRow>> warm_start_traces;
  std::vector<std::vector<SwarmTraceRow>> swarm_traces;
  std::vector<PowerTraceRow> power_trace;

  StageTimings timings;
  std::uint64_t seed{0};
  nlohmann::json config_snapshot() const;
  SystemParams params;
  PipelineConfig config;
};

// Block-coordinate loop: {scheduling, warm start + swarm} until the relative
// gain in mu drops below epsilon or a round makes mu worse (that round is
// discarded), then power control. Throws PreconditionError when the map and
// scenario disagree.
PipelineResult run_algorithm1(const Scenario& scenario, const RadioMap& map, const PipelineConfig& config = {});

// Fixed round-robin schedule, every other stage as above.
PipelineResult run_rr_baseline(const Scenario& scenario, const RadioMap& map, PipelineConfig config = {});

// Powers pinned at P_max / 2, every other stage as above.
PipelineResult run_fp_baseline(const Scenario& scenario, const RadioMap& map, PipelineConfig config = {});

// The planner with the trajectory stage replaced by a cold-start swarm
// (PSO-CM, PSO or GA).
PipelineResult run_swarm_baseline(SwarmKind kind, const Scenario& scenario, const RadioMap& map,
                                  PipelineConfig config = {});

struct SweepRow {
  double max_power{0.0};
  double mu{0.0};
  double mean_power{0.0};
  double power_saving{0.0};
};

// The full planner once per P_max value.
std::vector<SweepRow> sweep_max_power(const Scenario& scenario, const RadioMap& map,
                                      const std::vector<double>& max_powers, const PipelineConfig& config = {});

// Writes rates.csv, the per-stage trace CSVs, trajectory.json, summary.json,
// fitness.dat and timings.json into dir (created on demand). Everything but
// timings.json is a pure function of the result's deterministic content.
void emit_report(const PipelineResult& result, const std::filesystem::path& dir);
void write_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

nlohmann::json summary_json(const PipelineResult& result);

}  // namespace agcoop
