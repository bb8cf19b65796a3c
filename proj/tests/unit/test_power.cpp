#include <gtest/gtest.h>

#include <cmath>

#include "agcoop/link_model.hpp"
#include "agcoop/power_sca.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace agcoop {
namespace {

SystemParams line_params(int uavs, int ugvs, int slots) {
  SystemParams p;
  p.num_uavs = uavs;
  p.num_ugvs = ugvs;
  p.num_slots = slots;
  return p;
}

Schedule diagonal(int n) {
  Schedule a(n, n, 1);
  for (int i = 0; i < n; ++i) a(i, i, 0) = 1.0;
  return a;
}

TEST(Cub, TouchesAndBounds) {
  const RadioMap map = test::line_map({{4e-7, 2e-8}, {3e-8, 6e-7}}, 1);
  const TrajectorySet q = test::place({{test::line_center(map, 0)}, {test::line_center(map, 1)}});
  const GainTable gains(map, q);
  const Schedule a = diagonal(2);
  const PowerProfile prev(2, 1, 0.4);
  const double noise = 1e-15;
  const double at_prev = linearize_Cub(gains, prev, prev, a, noise, 0, 0, 0);
  const double tilde = std::log2(gains(0, 1, 0) * 0.4 + noise);
  EXPECT_NEAR(at_prev, tilde, 1e-12);
  for (double p1 = 0.0; p1 <= 1.0; p1 += 0.125) {
    PowerProfile p(2, 1, 0.4);
    p(1, 0) = p1;
    EXPECT_LE(std::log2(gains(0, 1, 0) * p1 + noise), linearize_Cub(gains, p, prev, a, noise, 0, 0, 0) + 1e-12);
  }
}

TEST(SolveP2, SingleLinkRunsAtFullPower) {
  const RadioMap map = test::line_map({{1e-6}}, 1);
  const TrajectorySet q = test::place({{test::line_center(map, 0)}});
  PowerOptions opt;
  opt.trim = false;
  const PowerResult r = solve_P2(map, Schedule(1, 1, 1, 1.0), q, line_params(1, 1, 1), PowerProfile(1, 1, 0.3), opt);
  EXPECT_NEAR(r.power(0, 0), 1.0, 1e-4);
  EXPECT_TRUE(r.feasible);
}

TEST(SolveP2, ZeroIterationsLeavesPowers) {
  const RadioMap map = test::line_map({{1e-6}}, 1);
  const TrajectorySet q = test::place({{test::line_center(map, 0)}});
  PowerOptions opt;
  opt.max_iterations = 0;
  const PowerProfile init(1, 1, 0.3);
  const PowerResult r = solve_P2(map, Schedule(1, 1, 1, 1.0), q, line_params(1, 1, 1), init, opt);
  EXPECT_TRUE(r.power == init);
  EXPECT_EQ(r.trace.size(), 1u);
}

TEST(SolveP2, StrongLinkBacksOff) {
  // balanced SINRs need 1e-6 P1 / (1e-8 P2) = 1e-5 P2 / (1e-9 P1), i.e. P2 = 0.1 P1; noise is
  // negligible, so only the ratio is pinned down
  const RadioMap map = test::line_map({{1e-6, 1e-9}, {1e-8, 1e-5}}, 1);
  const TrajectorySet q = test::place({{test::line_center(map, 0)}, {test::line_center(map, 1)}});
  PowerOptions opt;
  opt.trim = false;
  const PowerResult r = solve_P2(map, diagonal(2), q, line_params(2, 2, 1), PowerProfile(2, 1, 1.0), opt);
  EXPECT_NEAR(r.power(1, 0) / r.power(0, 0), 0.1, 2e-3);
  EXPECT_GE(r.mu, std::log2(1.0 + 1000.0) - 1e-2);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_GE(r.trace[k].mu, r.trace[k - 1].mu - 1e-9);
}

TEST(SolveP2, TrimKeepsRateAndSavesPower) {
  const RadioMap map = test::line_map({{1e-6, 1e-9}, {1e-8, 1e-5}}, 1);
  const TrajectorySet q = test::place({{test::line_center(map, 0)}, {test::line_center(map, 1)}});
  PowerOptions off;
  off.trim = false;
  const PowerResult plain = solve_P2(map, diagonal(2), q, line_params(2, 2, 1), PowerProfile(2, 1, 1.0), off);
  const PowerResult trimmed = solve_P2(map, diagonal(2), q, line_params(2, 2, 1), PowerProfile(2, 1, 1.0));
  EXPECT_LE(trimmed.power.mean(), plain.power.mean() + 1e-12);
  EXPECT_GE(trimmed.mu, plain.mu - 1e-3);
}

TEST(SolveP2, TwoLinkMatchesGrid) {
  for (std::uint64_t seed : {3u, 5u}) {
    const Scenario two = oracle::two_link_scenario(seed);
    const RadioMap map = generate_synthetic_map(two, two.propagation, seed);
    TrajectorySet q(2, 1);
    q.set_point(0, 0, two.ugv_position(0, 0) + Vec3{0.0, 0.0, 15.0});
    q.set_point(1, 0, two.ugv_position(1, 0) + Vec3{0.0, 0.0, 15.0});
    const PowerResult r = solve_P2(map, diagonal(2), q, two.params, PowerProfile(2, 1, 0.5));
    const oracle::PowerOptimum grid = oracle::power_grid_search(map, diagonal(2), q, two.params);
    EXPECT_NEAR(r.mu, grid.mu, 0.01 * grid.mu) << "seed " << seed;
  }
}

TEST(SolveP2, RestoresQosFromBadStart) {
  // UGV 1 is drowned out at P = (1, 1) but not at P = (0.01, 1)
  const RadioMap map = test::line_map({{1e-6, 1e-6}, {1e-9, 1e-7}}, 1);
  const TrajectorySet q = test::place({{test::line_center(map, 0)}, {test::line_center(map, 1)}});
  Schedule a(2, 2, 1);
  a(0, 0, 0) = 1.0;
  a(1, 1, 0) = 1.0;
  SystemParams params = line_params(2, 2, 1);
  params.min_rate = 2.0;
  const PowerResult r = solve_P2(map, a, q, params, PowerProfile(2, 1, 1.0));
  EXPECT_TRUE(r.feasible);
  EXPECT_GE(link_rate(map, a, r.power, q, params.noise_watts(), 1, 1, 0), params.min_rate - 1e-6);
}

TEST(SolveP2, RejectsOutOfRangePower) {
  const RadioMap map = test::line_map({{1e-6}}, 1);
  const TrajectorySet q = test::place({{test::line_center(map, 0)}});
  EXPECT_THROW((void)solve_P2(map, Schedule(1, 1, 1, 1.0), q, line_params(1, 1, 1), PowerProfile(1, 1, 2.0)),
               PreconditionError);
}

}  // namespace
}  // namespace agcoop
