#pragma once

#include <string>
#include <vector>

#include "agcoop/convex_core.hpp"
#include "agcoop/link_model.hpp"
#include "agcoop/radio_map.hpp"
#include "agcoop/scenario.hpp"

namespace agcoop {

// Tangent of R~ = log2(I' + N0) in the powers at P_prev, evaluated at P.
// R~ is concave in P, so R~(P) <= C^ub(P) with equality at P = P_prev.
double linearize_Cub(const GainTable& gains, const PowerProfile& power, const PowerProfile& power_prev,
                     const Schedule& a, double noise, int m, int n, int t);

struct PowerTraceRow {
  int iteration{0};
  double mu{0.0};
  double mean_power{0.0};
  double power_saving{0.0};  // 1 - mean(P) / P_max
};

struct PowerOptions {
  int max_iterations{40};
  // After the max-min iterations, lower every power as far as the reached
  // mu allows.
  bool trim{true};
  SolveOptions solver{};
};

struct PowerResult {
  PowerProfile power;
  std::vector<PowerTraceRow> trace;
  double mu{0.0};
  bool converged{false};
  bool trimmed{false};
  bool feasible{true};
  std::vector<std::string> diagnostics;
};

// SCA power control for a fixed binary schedule and trajectory. P_init must
// lie in [0, P_max]; the schedule must be binary and assignment-feasible.
// With max_iterations == 0 the initial powers are returned untouched.
PowerResult solve_P2(const RadioMap& map, const Schedule& schedule, const TrajectorySet& traj,
                     const SystemParams& params, const PowerProfile& p_init, const PowerOptions& options = {});

}  // namespace agcoop
