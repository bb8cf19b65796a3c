#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "agcoop/trajectory_opt.hpp"

namespace agcoop {
namespace {

Swarm one_point_swarm(int particles, const Vec3& at) {
  Swarm s;
  s.lower = {0.0, 0.0, 10.0};
  s.upper = {100.0, 100.0, 60.0};
  for (int k = 0; k < particles; ++k) {
    Particle p;
    p.position = TrajectorySet(1, 1);
    p.position.set_point(0, 0, at + Vec3{10.0 * k, 0.0, 0.0});
    p.best = p.position;
    p.velocity.assign(3, 0.0);
    s.particles.push_back(p);
  }
  s.gbest = s.particles.front().position;
  return s;
}

TEST(PsoStep, AtOwnBestOnlyInertiaActs) {
  Swarm s = one_point_swarm(1, {50.0, 50.0, 30.0});
  s.particles[0].velocity = {2.0, -4.0, 1.0};
  SwarmConfig cfg;
  std::mt19937_64 rng(3);
  pso_step(s, cfg, rng);
  EXPECT_DOUBLE_EQ(s.particles[0].velocity[0], 0.7 * 2.0);
  EXPECT_DOUBLE_EQ(s.particles[0].velocity[1], 0.7 * -4.0);
  const Vec3 p = s.particles[0].position.point(0, 0);
  EXPECT_DOUBLE_EQ(p.x, 50.0 + 1.4);
  EXPECT_DOUBLE_EQ(p.z, 30.0 + 0.7);
}

TEST(PsoStep, VelocityAndBoxClamp) {
  Swarm s = one_point_swarm(1, {95.0, 50.0, 30.0});
  s.particles[0].velocity = {100.0, -100.0, 0.0};
  SwarmConfig cfg;
  cfg.velocity_cap = 20.0;
  std::mt19937_64 rng(3);
  pso_step(s, cfg, rng);
  EXPECT_DOUBLE_EQ(s.particles[0].velocity[0], 20.0);
  EXPECT_DOUBLE_EQ(s.particles[0].velocity[1], -20.0);
  EXPECT_DOUBLE_EQ(s.particles[0].position.point(0, 0).x, 100.0);
}

TEST(PsoStep, PullsTowardGlobalBest) {
  Swarm s = one_point_swarm(1, {20.0, 50.0, 30.0});
  s.gbest.set_point(0, 0, {80.0, 50.0, 30.0});
  SwarmConfig cfg;
  std::mt19937_64 rng(5);
  pso_step(s, cfg, rng);
  EXPECT_GE(s.particles[0].position.point(0, 0).x, 20.0);
  EXPECT_LE(s.particles[0].velocity[0], cfg.velocity_cap);
}

TEST(Cross, ZeroRateIsIdentityAndFullRateBlends) {
  Swarm s = one_point_swarm(2, {20.0, 50.0, 30.0});
  const Swarm before = s;
  std::mt19937_64 rng(1);
  cross(s, 0.0, rng);
  for (int k = 0; k < 2; ++k) EXPECT_TRUE(s.particles[k].position == before.particles[k].position);
  cross(s, 1.0, rng);
  for (int k = 0; k < 2; ++k) {
    const double x = s.particles[k].position.point(0, 0).x;
    EXPECT_GE(x, 20.0);
    EXPECT_LE(x, 30.0);
  }
}

TEST(Mutate, StaysWithinStepAndBox) {
  Swarm s = one_point_swarm(3, {50.0, 50.0, 12.0});
  const Swarm before = s;
  std::mt19937_64 rng(1);
  mutate(s, 0.0, 20.0, rng);
  for (int k = 0; k < 3; ++k) EXPECT_TRUE(s.particles[k].position == before.particles[k].position);
  mutate(s, 1.0, 20.0, rng);
  for (int k = 0; k < 3; ++k) {
    const Vec3 a = s.particles[k].position.point(0, 0);
    const Vec3 b = before.particles[k].position.point(0, 0);
    EXPECT_LE(std::abs(a.x - b.x), 20.0);
    EXPECT_GE(a.z, 10.0);
  }
}

TEST(SwarmConfig, Validation) {
  SwarmConfig cfg;
  cfg.size = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = SwarmConfig{};
  cfg.cross_rate = 1.5;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

class SmallRun : public ::testing::Test {
 protected:
  void SetUp() override {
    SystemParams p;
    p.num_slots = 6;
    s = make_synthetic_scenario(3, p);
    map = generate_synthetic_map(s, s.propagation, 3);
    a = round_robin_schedule(2, 4, 6);
    power = PowerProfile(4, 6, 0.5);
    cfg = SwarmConfig::from_params(s.params, 9);
    cfg.size = 12;
    cfg.iterations = 8;
  }
  Scenario s;
  RadioMap map;
  Schedule a;
  PowerProfile power;
  SwarmConfig cfg;
};

TEST_F(SmallRun, ZeroIterationsKeepsInitialBest) {
  cfg.iterations = 0;
  const SwarmResult r = run_ws_pso_cm(s, map, a, power, cfg, initial_trajectory(s));
  EXPECT_EQ(r.trace.size(), 1u);
}

TEST_F(SmallRun, BestFitnessNeverDrops) {
  for (SwarmKind kind : {SwarmKind::ws_pso_cm, SwarmKind::pso_cm, SwarmKind::pso, SwarmKind::ga}) {
    const SwarmResult r = run_baseline(kind, s, map, a, power, cfg);
    ASSERT_EQ(r.trace.size(), static_cast<std::size_t>(cfg.iterations + 1)) << to_string(kind);
    for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_GE(r.trace[k].best.value, r.trace[k - 1].best.value);
    EXPECT_DOUBLE_EQ(r.terms.value, r.trace.back().best.value);
  }
}

TEST_F(SmallRun, SameSeedSameResult) {
  const SwarmResult x = run_ws_pso_cm(s, map, a, power, cfg, initial_trajectory(s));
  const SwarmResult y = run_ws_pso_cm(s, map, a, power, cfg, initial_trajectory(s));
  EXPECT_TRUE(x.best == y.best);
  EXPECT_EQ(x.terms.value, y.terms.value);
}

TEST_F(SmallRun, RepairedTrajectoriesAreFeasible) {
  EXPECT_TRUE(check_kinematics(initial_trajectory(s), s).empty());
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50.0, 300.0);
  TrajectorySet wild(2, 6);
  for (double& c : wild.coords()) c = u(rng);
  wild.set_point(0, 0, {50.0, 50.0, 30.0});
  wild.set_point(1, 0, {80.0, 50.0, 30.0});
  const TrajectorySet fixed = repair_trajectory(wild, s);
  EXPECT_TRUE(check_kinematics(fixed, s).empty());
}

TEST(WarmStart, MovesTowardParkedUgv) {
  SystemParams p;
  p.num_uavs = 1;
  p.num_ugvs = 1;
  p.num_slots = 8;
  Scenario s = make_synthetic_scenario(2, p);
  s.buildings = BuildingSet{};
  s.ugvs = {UgvPath{std::vector<Vec3>(8, Vec3{60.0, 200.0, 0.0}), 0.0}};
  const TrajectorySet init = initial_trajectory(s);
  const WarmStartResult r = warm_start_P3(s, Schedule(1, 1, 8, 1.0), PowerProfile(1, 8, 1.0), init);
  ASSERT_FALSE(r.fell_back) << r.note;
  const Vec3 last = r.trajectory.point(0, 7);
  const Vec3 first = init.point(0, 7);
  EXPECT_LT(std::hypot(last.x - 60.0, last.y - 200.0), std::hypot(first.x - 60.0, first.y - 200.0));
  EXPECT_NEAR(last.z, p.min_altitude, 1.0);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_GE(r.trace[k].mu, r.trace[k - 1].mu - 1e-9);
  EXPECT_TRUE(check_kinematics(r.trajectory, s).empty());
}

}  // namespace
}  // namespace agcoop
