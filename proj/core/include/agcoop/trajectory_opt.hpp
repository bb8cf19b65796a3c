#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "agcoop/convex_core.hpp"
#include "agcoop/link_model.hpp"
#include "agcoop/radio_map.hpp"
#include "agcoop/scenario.hpp"

namespace agcoop {

// ---- feasibility helpers -------------------------------------------------

// First trajectory of the outer loop: straight lines at mid altitude between
// declared endpoints, otherwise hovering above the scene center with the
// UAVs 2 * d_min apart. The result is passed through repair_trajectory.
TrajectorySet initial_trajectory(const Scenario& scenario);

// Slot-by-slot projection onto the flight constraints: box clamp, building
// escape, speed scaling and turn-angle rotation. A UAV whose projected
// waypoint still fails falls back to hovering at its previous waypoint; a
// separation conflict makes every UAV hover for that slot. The output
// always passes check_kinematics when the first slot can be separated.
TrajectorySet repair_trajectory(const TrajectorySet& traj, const Scenario& scenario);

// ---- LoS warm start ------------------------------------------------------

struct LosChannelModel {
  double ref_gain{1e-3};  // L_0, linear
};

// min over UGVs of (1/T) sum_t sum_m a log2(1 + a P L_0 / (N_0 d^2)): the
// interference-free line-of-sight surrogate the warm start maximizes.
double los_min_rate(const Scenario& scenario, const Schedule& a, const PowerProfile& power,
                    const TrajectorySet& traj, const LosChannelModel& los);

struct WarmStartTraceRow {
  int round{0};
  char block{'-'};  // 'H' horizontal, 'V' vertical, '-' initial
  double mu{0.0};
};

struct WarmStartOptions {
  int max_rounds{30};
  double speed_margin{0.99};       // fraction of V_max * tau allowed per block
  double separation_margin{1.01};  // fraction of d_min required per block
  SolveOptions solver{};
};

struct WarmStartResult {
  TrajectorySet trajectory;  // repaired, ready to seed the swarm
  TrajectorySet raw;         // last accepted block iterate before repair
  std::vector<WarmStartTraceRow> trace;
  bool fell_back{false};
  std::string note;
};

WarmStartResult warm_start_P3(const Scenario& scenario, const Schedule& schedule, const PowerProfile& power,
                              const TrajectorySet& traj_init, const WarmStartOptions& options = {});

// ---- swarm ---------------------------------------------------------------

struct SwarmConfig {
  int size{100};
  int iterations{100};
  double inertia{0.7};
  double cognitive{1.5};
  double social{1.5};
  double cross_rate{0.1};
  double mutation_rate{0.1};
  double velocity_cap{20.0};
  double init_jitter{10.0};  // half-width of the uniform spread around a warm start
  std::uint64_t seed{1};

  static SwarmConfig from_params(const SystemParams& params, std::uint64_t seed);
  void validate() const;
};

struct Particle {
  TrajectorySet position;
  std::vector<double> velocity;  // same layout as position.coords()
  TrajectorySet best;
  double fitness{-std::numeric_limits<double>::infinity()};
  double best_fitness{-std::numeric_limits<double>::infinity()};
  FitnessTerms best_terms{};
};

struct Swarm {
  std::vector<Particle> particles;
  TrajectorySet gbest;
  double gbest_fitness{-std::numeric_limits<double>::infinity()};
  FitnessTerms gbest_terms{};
  Vec3 lower{};
  Vec3 upper{};
};

// V <- w V + h1 r1 (pBest - Q) + h2 r2 (gBest - Q), clamped to +-v_max per
// coordinate; Q <- Q + V, clamped to the search box. One (r1, r2) pair per
// particle, drawn in particle order.
void pso_step(Swarm& swarm, const SwarmConfig& config, std::mt19937_64& rng);

// With probability sigma_c, Q_k <- r3 Q_k + (1 - r3) Q_j for a uniformly drawn
// partner j != k. Partners are read from the pre-crossing positions.
void cross(Swarm& swarm, double sigma_c, std::mt19937_64& rng);

// With probability sigma_m, Q_k <- Q_k + U[-1, 1]^(M x T x 3) * v_max, then
// clamped to the search box.
void mutate(Swarm& swarm, double sigma_m, double v_max, std::mt19937_64& rng);

// Fitness of every particle (in parallel), then elitist pBest / gBest update.
void evaluate(Swarm& swarm, const FitnessContext& ctx);

struct SwarmTraceRow {
  int iteration{0};
  FitnessTerms best{};
};

struct SwarmResult {
  TrajectorySet best;
  FitnessTerms terms{};
  std::vector<SwarmTraceRow> trace;  // gBest after each iteration; row 0 is the initial swarm
  WarmStartResult warm;              // populated by the warm-started variant only
};

enum class SwarmKind { ws_pso_cm, pso_cm, pso, ga };

const char* to_string(SwarmKind kind);

// Warm start from traj_init, then P_iter rounds of
// {pso_step, evaluate, cross, mutate}.
SwarmResult run_ws_pso_cm(const Scenario& scenario, const RadioMap& map, const Schedule& schedule,
                          const PowerProfile& power, const SwarmConfig& config, const TrajectorySet& traj_init,
                          const WarmStartOptions& warm_options = {});

// Cold-start variants: PSO-CM (uniform random swarm), PSO (no cross or
// mutation) and GA (binary tournaments, one elite, cross and mutate only).
// kind == ws_pso_cm warm-starts from initial_trajectory(scenario).
SwarmResult run_baseline(SwarmKind kind, const Scenario& scenario, const RadioMap& map, const Schedule& schedule,
                         const PowerProfile& power, const SwarmConfig& config);

}  // namespace agcoop
