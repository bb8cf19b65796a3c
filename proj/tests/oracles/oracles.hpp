#pragma once

// Exhaustive and dual-decomposition reference solvers used by the tests and
// by `agcoop oracle`. Rates are recomputed here from raw map lookups rather
// than through link_model.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "agcoop/convex_core.hpp"
#include "agcoop/link_model.hpp"
#include "agcoop/radio_map.hpp"
#include "agcoop/scenario.hpp"

namespace agcoop::oracle {

// M = 1, N = 2, T = 2 over a 15 x 15 m scene with H in [10, 20]: 3 x 3 x 2
// voxels, two parked UGVs, no buildings, shadowed gains.
Scenario tiny_scenario();
RadioMap tiny_map(const Scenario& scenario, std::uint64_t seed);

// M = 2, N = 2, T = 1 with both links scheduled: a two-variable power
// problem that still has interference.
Scenario two_link_scenario(std::uint64_t seed);

// min_n (1/T) sum_t sum_m R, or -inf if a scheduled link misses R_min.
double min_rate(const RadioMap& map, const Schedule& a, const PowerProfile& p, const TrajectorySet& q,
                double noise, double min_rate);

struct TinyOptimum {
  double mu{-1.0};
  Schedule schedule;
  PowerProfile power;
  TrajectorySet trajectory;
  long long evaluations{0};
};

// Every binary schedule, every kinematically feasible voxel-center
// trajectory and every power tensor on `levels` evenly spaced values in
// [0, P_max]. Only for instances with a handful of voxels.
TinyOptimum brute_force(const Scenario& scenario, const RadioMap& map, int levels = 5);

struct PowerOptimum {
  double mu{-1.0};
  PowerProfile power;
};

// Grid search over the powers of the scheduled (n, t) entries (at most two),
// with zoom refinement around the best cell. Unscheduled entries are 0.
PowerOptimum power_grid_search(const RadioMap& map, const Schedule& a, const TrajectorySet& q,
                               const SystemParams& params, int cells = 400, int zooms = 6);

// Dense grid plus zoom over the bounding box of a 1- or 2-variable program.
// Returns -inf when no grid point is feasible.
double grid_maximum(const ConcaveProgram& program, int cells = 400, int zooms = 8);

// sum_i f_i(x_i) subject to x in a box and sum_i c_i x_i <= budget, with each
// f_i a single-variable concave expression.
struct SeparableProgram {
  struct Coord {
    double lo{0.0};
    double hi{1.0};
    double linear{0.0};
    std::vector<std::array<double, 3>> logs;     // w ln(c0 + c1 x)
    std::vector<std::array<double, 3>> squares;  // -w (c0 + c1 x)^2
    [[nodiscard]] double eval(double x) const;
  };
  std::vector<Coord> coords;
  std::vector<double> coupling;
  double budget{0.0};

  [[nodiscard]] ConcaveProgram to_program() const;
  // min over lambda >= 0 of the dual function, each inner maximization by
  // golden section.
  [[nodiscard]] double dual_maximum() const;
};

ConcaveProgram random_small_program(std::mt19937_64& rng, int vars);
SeparableProgram random_separable_program(std::mt19937_64& rng, int vars);

}  // namespace agcoop::oracle
