#pragma once

#include <string>
#include <vector>

#include "agcoop/convex_core.hpp"
#include "agcoop/link_model.hpp"
#include "agcoop/radio_map.hpp"
#include "agcoop/scenario.hpp"

namespace agcoop {

// psi(A) = eta * sum (a^2 - a); <= 0 on [0, 1], zero exactly at binary points.
double penalty(const Schedule& a, double eta);

// Supporting affine minorant of psi at a_prev:
// eta * sum (-(a_prev)^2 + (2 a_prev - 1) a).
double penalty_lb(const Schedule& a, const Schedule& a_prev, double eta);

// Inside the scheduling and power subproblems the interference seen on link
// (m, n) counts only the other UAVs' assignments:
//   I'_{m,n}[t] = sum_{p != n} (sum_{q != m} a_{q,p}[t]) h_{p,t}(w_m) P_p[t].
// For binary schedules this equals the link-model interference on every
// scheduled link.
double interference_excluding(const GainTable& gains, const Schedule& a, const PowerProfile& power, int m, int n,
                              int t);

// R^ = log2(a h P + I' + N0) and R~ = log2(I' + N0); R = R^ - R~.
double rate_hat(const GainTable& gains, const Schedule& a, const PowerProfile& power, double noise, int m, int n,
                int t);
double rate_tilde(const GainTable& gains, const Schedule& a, const PowerProfile& power, double noise, int m, int n,
                  int t);

// Tangent of R~ in the schedule at a_prev, evaluated at a. R~ is concave in a,
// so R~(a) <= B^ub(a) with equality at a = a_prev.
double linearize_Bub(const GainTable& gains, const Schedule& a, const Schedule& a_prev, const PowerProfile& power,
                     double noise, int m, int n, int t);

// min over UGVs of (1/T) sum_t sum_m (R^ - R~), the quantity the scheduling
// iterations increase.
double relaxed_min_rate(const GainTable& gains, const Schedule& a, const PowerProfile& power, double noise);

struct SchedulingTraceRow {
  int iteration{0};
  double objective{0.0};  // mu + weighted psi at the accepted iterate
  double mu{0.0};
  double penalty{0.0};
  double max_binary_gap{0.0};
};

struct SchedulingOptions {
  int max_iterations{40};
  double round_threshold{0.5};
  // Objective mu + sum_{t,n,m} psi^lb, i.e. psi^lb counted once per entry
  // (weight eta * M * N * T). false: mu + psi^lb, which leaves many entries
  // fractional at eta = 0.5 because a small share of a high-SNR link is worth
  // nearly its full rate.
  bool entrywise_penalty_sum{true};
  bool local_search{true};  // improve_schedule after rounding
  SolveOptions solver{};
};

struct SchedulingResult {
  Schedule schedule;   // binary, assignment-feasible, QoS-feasible
  Schedule relaxed;    // last accepted relaxed iterate, before rounding
  std::vector<SchedulingTraceRow> trace;
  double mu{0.0};      // link-model mu of `schedule`
  bool converged{false};
  bool kept_initial{false};  // rounding did not beat the (repaired) initial schedule
  std::vector<std::string> diagnostics;
};

// Penalty-SCA scheduling. a_init must satisfy the assignment constraint and
// lie in [0, 1]; otherwise PreconditionError.
SchedulingResult solve_P1(const RadioMap& map, const PowerProfile& power, const TrajectorySet& traj,
                          const SystemParams& params, const Schedule& a_init, const SchedulingOptions& options = {});

// Zeroes links that miss the QoS target (rate < a * R_min), worst first,
// until every remaining link meets it. Returns the dropped (m, n, t) labels.
std::vector<std::string> enforce_qos(const GainTable& gains, Schedule& a, const PowerProfile& power, double noise,
                                     double min_rate);

// Threshold rounding followed by greedy assignment repair (highest relaxed
// link rate first) and QoS repair.
Schedule round_schedule(const GainTable& gains, const Schedule& relaxed, const PowerProfile& power, double noise,
                        double min_rate, double threshold = 0.5);

// Local search on a binary schedule: per (m, t), reassign the UAV to another
// UGV (swapping with the UAV that holds it) or idle it, keeping any move that
// raises the sorted per-UGV averages lexicographically and leaves every
// scheduled link in the slot at or above R_min. Returns the number of moves.
int improve_schedule(const GainTable& gains, Schedule& a, const PowerProfile& power, double noise, double min_rate,
                     int max_passes = 200);

}  // namespace agcoop
