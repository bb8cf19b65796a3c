// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit code
// 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "agcoop/pipeline.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace agcoop;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

bool below(double lhs, double rhs) { return lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs)); }

// every trajectory produced by a pipeline here, for the feasibility criterion
struct Kept {
  std::string tag;
  Scenario scenario;
  TrajectorySet trajectory;
};
std::vector<Kept> g_results;

void keep(const std::string& tag, const Scenario& s, const PipelineResult& r) {
  g_results.push_back({tag, s, r.trajectory});
}

// ---------------------------------------------------------------------------

Outcome linearization() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Base {
    Scenario scenario;
    RadioMap map;
  };
  std::vector<Base> bases;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    Scenario two = oracle::two_link_scenario(s);
    RadioMap m = generate_synthetic_map(two, two.propagation, s);
    bases.push_back({std::move(two), std::move(m)});
    SystemParams p;
    p.num_uavs = 2;
    p.num_ugvs = 3;
    p.num_slots = 2;
    Scenario three = make_synthetic_scenario(100 + s, p);
    RadioMap m3 = generate_synthetic_map(three, three.propagation, 100 + s);
    bases.push_back({std::move(three), std::move(m3)});
  }

  long long checks = 0;
  double worst_b = -1e300, worst_c = -1e300, touch = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const Base& b = bases[inst % bases.size()];
    const SystemParams& p = b.scenario.params;
    const int M = p.num_uavs, N = p.num_ugvs, T = p.num_slots;
    const double noise = p.noise_watts();
    const VoxelGrid& g = b.map.grid();
    TrajectorySet q(M, T);
    for (int m = 0; m < M; ++m)
      for (int t = 0; t < T; ++t)
        q.set_point(m, t, {g.origin.x + unit(rng) * g.dims[0] * g.cube_side,
                           g.origin.y + unit(rng) * g.dims[1] * g.cube_side,
                           g.origin.z + unit(rng) * g.dims[2] * g.cube_side});
    const GainTable gains(b.map, q);
    Schedule a_prev(M, N, T);
    for (double& v : a_prev.values()) v = unit(rng);
    PowerProfile p_prev(N, T);
    for (double& v : p_prev.values()) v = unit(rng) * p.max_power;

    for (int t = 0; t < T; ++t) {
      for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
          // schedule grid over the entries R~ depends on: a_{q,p} with q != m, p != n
          std::vector<std::size_t> idx;
          for (int qq = 0; qq < M; ++qq)
            for (int pp = 0; pp < N; ++pp)
              if (qq != m && pp != n) idx.push_back(a_prev.index(qq, pp, t));
          const double at_prev_b = linearize_Bub(gains, a_prev, a_prev, p_prev, noise, m, n, t) -
                                   rate_tilde(gains, a_prev, p_prev, noise, m, n, t);
          touch = std::max(touch, std::abs(at_prev_b));
          Schedule a = a_prev;
          std::vector<int> digit(idx.size(), 0);
          while (true) {
            for (std::size_t k = 0; k < idx.size(); ++k) a.values()[idx[k]] = 0.05 * digit[k];
            const double rt = rate_tilde(gains, a, p_prev, noise, m, n, t);
            const double ub = linearize_Bub(gains, a, a_prev, p_prev, noise, m, n, t);
            worst_b = std::max(worst_b, rt - ub);
            if (!below(rt, ub)) return {false, fmt("R~ > B^ub by %.3e (instance %d)", rt - ub, inst)};
            ++checks;
            std::size_t k = 0;
            while (k < digit.size() && ++digit[k] > 20) digit[k++] = 0;
            if (k == digit.size()) break;
          }

          // power grid over P_p, p != n
          std::vector<int> others;
          for (int pp = 0; pp < N; ++pp)
            if (pp != n) others.push_back(pp);
          const double at_prev_c = linearize_Cub(gains, p_prev, p_prev, a_prev, noise, m, n, t) -
                                   rate_tilde(gains, a_prev, p_prev, noise, m, n, t);
          touch = std::max(touch, std::abs(at_prev_c));
          PowerProfile pw = p_prev;
          std::vector<int> pd(others.size(), 0);
          while (true) {
            for (std::size_t k = 0; k < others.size(); ++k) pw(others[k], t) = p.max_power * pd[k] / 100.0;
            const double rt = rate_tilde(gains, a_prev, pw, noise, m, n, t);
            const double ub = linearize_Cub(gains, pw, p_prev, a_prev, noise, m, n, t);
            worst_c = std::max(worst_c, rt - ub);
            if (!below(rt, ub)) return {false, fmt("R~ > C^ub by %.3e (instance %d)", rt - ub, inst)};
            ++checks;
            std::size_t k = 0;
            while (k < pd.size() && ++pd[k] > 100) pd[k++] = 0;
            if (k == pd.size()) break;
          }
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = touch <= 1e-9 && secs < 60.0;
  return {ok, fmt("1000 instances, %lld grid checks, max(R~ - B^ub) %.2e, max(R~ - C^ub) %.2e, touch error %.1e, %.1fs",
                  checks, worst_b, worst_c, touch, secs)};
}

Outcome penalty_minorant() {
  Schedule a(1, 1, 1), prev(1, 1, 1);
  double worst = -1e300, touch = 0.0;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      a(0, 0, 0) = i / 100.0;
      prev(0, 0, 0) = j / 100.0;
      const double lb = penalty_lb(a, prev, 0.5);
      const double pen = penalty(a, 0.5);
      worst = std::max(worst, lb - pen);
      if (i == j) touch = std::max(touch, std::abs(lb - pen));
    }
  }
  return {worst <= 1e-12 && touch <= 1e-12,
          fmt("101x101 grid, max(psi^lb - psi) %.2e, touch error %.1e", worst, touch)};
}

// ---------------------------------------------------------------------------
// shared full-scale runs for criteria 3, 4 and 6

struct SuiteRun {
  std::uint64_t seed{0};
  Scenario scenario;
  RadioMap map;
  TrajectorySet traj;
  PowerProfile power;
  SchedulingResult p1;
};

std::vector<SuiteRun> g_suite;

void build_suite(int count) {
  for (int s = 1; s <= count; ++s) {
    SuiteRun r;
    r.seed = static_cast<std::uint64_t>(s);
    r.scenario = make_synthetic_scenario(r.seed);
    r.map = generate_synthetic_map(r.scenario, r.scenario.propagation, r.seed);
    const SystemParams& p = r.scenario.params;
    r.traj = initial_trajectory(r.scenario);
    r.power = PowerProfile(p.num_ugvs, p.num_slots, 0.5 * p.max_power);
    r.p1 = solve_P1(r.map, r.power, r.traj, p, round_robin_schedule(p.num_uavs, p.num_ugvs, p.num_slots));
    g_suite.push_back(std::move(r));
  }
}

template <class Rows, class Get>
bool non_decreasing(const Rows& rows, Get get, double& worst_drop) {
  bool ok = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double drop = get(rows[i - 1]) - get(rows[i]);
    worst_drop = std::max(worst_drop, drop);
    if (drop > 1e-9) ok = false;
  }
  return ok;
}

Outcome monotonicity() {
  double worst = 0.0;
  int bad = 0, traces = 0;
  for (const SuiteRun& r : g_suite) {
    const SystemParams& p = r.scenario.params;
    ++traces;
    if (!non_decreasing(r.p1.trace, [](const auto& row) { return row.objective; }, worst)) ++bad;
    const PowerResult p2 = solve_P2(r.map, r.p1.schedule, r.traj, p, r.power);
    ++traces;
    if (!non_decreasing(p2.trace, [](const auto& row) { return row.mu; }, worst)) ++bad;
    const WarmStartResult ws = warm_start_P3(r.scenario, r.p1.schedule, r.power, r.traj);
    ++traces;
    if (!non_decreasing(ws.trace, [](const auto& row) { return row.mu; }, worst)) ++bad;
  }
  return {bad == 0, fmt("%zu scenarios, %d traces, %d decreasing, largest drop %.2e", g_suite.size(), traces, bad,
                        worst)};
}

Outcome binary_convergence() {
  double lowest = 1.0;
  int assignment_ok = 0;
  for (const SuiteRun& r : g_suite) {
    int near = 0;
    const auto v = r.p1.relaxed.values();
    for (double x : v)
      if (std::min(std::abs(x), std::abs(1.0 - x)) <= 1e-3) ++near;
    lowest = std::min(lowest, static_cast<double>(near) / static_cast<double>(v.size()));
    if (r.p1.schedule.binary() && r.p1.schedule.satisfies_assignment(0.0)) ++assignment_ok;
  }
  const int runs = static_cast<int>(g_suite.size());
  return {lowest >= 0.95 && assignment_ok == runs,
          fmt("%d runs, lowest near-binary share %.1f%%, assignment exact on %d/%d", runs, 100.0 * lowest,
              assignment_ok, runs)};
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_ratio = 1e300, worst_power = 0.0;
  std::string per_seed;
  for (std::uint64_t seed : {7, 11, 19}) {
    const Scenario tiny = oracle::tiny_scenario();
    const RadioMap map = oracle::tiny_map(tiny, seed);
    PipelineConfig cfg;
    cfg.seed = seed;
    const PipelineResult r = run_algorithm1(tiny, map, cfg);
    keep("tiny seed " + std::to_string(seed), tiny, r);
    const oracle::TinyOptimum best = oracle::brute_force(tiny, map);
    const double ratio = best.mu > 0.0 ? r.mu / best.mu : 0.0;
    worst_ratio = std::min(worst_ratio, ratio);

    const Scenario two = oracle::two_link_scenario(seed);
    const RadioMap two_map = generate_synthetic_map(two, two.propagation, seed);
    Schedule a(2, 2, 1);
    a(0, 0, 0) = 1.0;
    a(1, 1, 0) = 1.0;
    TrajectorySet q(2, 1);
    q.set_point(0, 0, two.ugv_position(0, 0) + Vec3{0.0, 0.0, 15.0});
    q.set_point(1, 0, two.ugv_position(1, 0) + Vec3{0.0, 0.0, 15.0});
    const PowerResult pr =
        solve_P2(two_map, a, q, two.params, PowerProfile(2, 1, 0.5 * two.params.max_power));
    const oracle::PowerOptimum grid = oracle::power_grid_search(two_map, a, q, two.params);
    worst_power = std::max(worst_power, std::abs(pr.mu - grid.mu) / grid.mu);
    per_seed += fmt(" [seed %d: %.4f/%.4f, P2 %.4f vs %.4f]", static_cast<int>(seed), r.mu, best.mu, pr.mu, grid.mu);
  }
  const double secs = seconds_since(t0);
  return {worst_ratio >= 0.95 && worst_power <= 0.05 && secs < 600.0,
          fmt("worst mu ratio %.4f, worst P2 gap %.2f%%, %.1fs;", worst_ratio, 100.0 * worst_power, secs) + per_seed};
}

Outcome warm_start_benefit() {
  std::vector<double> ws_final, cold_final;
  int ws_ge = 0, fast = 0;
  const std::size_t runs = std::min<std::size_t>(10, g_suite.size());
  for (std::size_t i = 0; i < runs; ++i) {
    const SuiteRun& r = g_suite[i];
    SwarmConfig cfg = SwarmConfig::from_params(r.scenario.params, r.seed);
    cfg.iterations = 100;
    const SwarmResult ws = run_ws_pso_cm(r.scenario, r.map, r.p1.schedule, r.power, cfg, r.traj);
    const SwarmResult cold = run_baseline(SwarmKind::pso_cm, r.scenario, r.map, r.p1.schedule, r.power, cfg);
    const double wf = ws.trace.back().best.value;
    const double cf = cold.trace.back().best.value;
    ws_final.push_back(wf);
    cold_final.push_back(cf);
    if (wf >= cf) ++ws_ge;
    int reach = -1;
    for (const auto& row : ws.trace) {
      if (row.best.value >= cf) {
        reach = row.iteration;
        break;
      }
    }
    if (reach >= 0 && reach <= cfg.iterations / 2) ++fast;
  }
  const double mw = median(ws_final), mc = median(cold_final);
  return {mw > mc && ws_ge >= 8 && fast >= 7,
          fmt("median fitness WS-PSO-CM %.3f vs PSO-CM %.3f, WS >= cold in %d/%zu, reached in <= 50%% iterations in %d/%zu",
              mw, mc, ws_ge, runs, fast, runs)};
}

Outcome baseline_ordering() {
  std::vector<double> alg, cold, rr;
  int power_ok = 0, power_applicable = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scenario s = make_synthetic_scenario(seed);
    const RadioMap map = generate_synthetic_map(s, s.propagation, seed);
    PipelineConfig cfg;
    cfg.seed = seed;
    const PipelineResult a1 = run_algorithm1(s, map, cfg);
    const PipelineResult pc = run_swarm_baseline(SwarmKind::pso_cm, s, map, cfg);
    const PipelineResult r = run_rr_baseline(s, map, cfg);
    const PipelineResult fp = run_fp_baseline(s, map, cfg);
    alg.push_back(a1.mu);
    cold.push_back(pc.mu);
    rr.push_back(r.mu);
    if (a1.mu >= fp.mu) {
      ++power_applicable;
      if (a1.power.mean() <= 0.5 * s.params.max_power) ++power_ok;
    }
    const std::string tag = " seed " + std::to_string(seed);
    keep("algorithm1" + tag, s, a1);
    keep("pso-cm" + tag, s, pc);
    keep("rr" + tag, s, r);
    keep("fp" + tag, s, fp);
  }
  const double ma = median(alg), mc = median(cold), mr = median(rr);
  return {ma >= mc && mc >= mr && power_ok == power_applicable,
          fmt("median mu: algorithm1 %.3f, PSO-CM %.3f, RR %.3f; mean power <= P_max/2 in %d/%d runs with mu >= FP",
              ma, mc, mr, power_ok, power_applicable)};
}

Outcome solver_accuracy() {
  std::mt19937_64 rng(99);
  double worst_obj = 0.0, worst_res = 0.0;
  int failures = 0;
  for (int i = 0; i < 100; ++i) {
    ConcaveProgram prog;
    double reference = 0.0;
    if (i < 50) {
      prog = oracle::random_small_program(rng, 1 + i % 2);
      reference = oracle::grid_maximum(prog);
    } else {
      const oracle::SeparableProgram sp = oracle::random_separable_program(rng, 3 + i % 8);
      prog = sp.to_program();
      reference = sp.dual_maximum();
    }
    const SolveResult r = solve(prog);
    const double err = std::abs(r.objective - reference);
    worst_obj = std::max(worst_obj, err);
    worst_res = std::max(worst_res, r.max_violation);
    if (r.status == SolveStatus::infeasible || err > 1e-4 || r.max_violation > 1e-8) ++failures;
  }
  return {failures == 0, fmt("100 programs (50 with 1-2 vars vs grid, 50 with 3-10 vars vs dual), worst |obj - ref| "
                             "%.2e, worst residual %.2e, %d failures",
                             worst_obj, worst_res, failures)};
}

Outcome determinism() {
  const std::uint64_t seed = 3;
  const Scenario s = make_synthetic_scenario(seed);
  const RadioMap map = generate_synthetic_map(s, s.propagation, seed);
  PipelineConfig cfg;
  cfg.seed = seed;
  const fs::path root = fs::temp_directory_path() / "agcoop_acceptance";
  fs::remove_all(root);
  const PipelineResult a = run_algorithm1(s, map, cfg);
  const PipelineResult b = run_algorithm1(s, map, cfg);
  keep("determinism run a", s, a);
  keep("determinism run b", s, b);
  emit_report(a, root / "a");
  emit_report(b, root / "b");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  int files = 0;
  std::string differing;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    const std::string name = e.path().filename().string();
    if (name == "timings.json") continue;
    ++files;
    if (!fs::exists(root / "b" / name) || slurp(e.path()) != slurp(root / "b" / name)) differing += " " + name;
  }
  fs::remove_all(root);
  return {differing.empty() && files > 0,
          fmt("%d output files compared (timings.json excluded)", files) +
              (differing.empty() ? std::string() : "; differ:" + differing)};
}

Outcome feasibility() {
  int bad = 0;
  std::string first;
  for (const Kept& k : g_results) {
    if (check_kinematics(k.trajectory, k.scenario).total() != 0) {
      ++bad;
      if (first.empty()) first = k.tag;
    }
  }
  return {bad == 0 && !g_results.empty(),
          fmt("%zu pipeline results, %d with violations", g_results.size(), bad) +
              (first.empty() ? std::string() : "; first: " + first)};
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    const auto ts = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d %-22s %s  %s (%.0fs)\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                seconds_since(ts));
    std::fflush(stdout);
  };

  report(1, "linearization", linearization);
  report(2, "penalty minorant", penalty_minorant);
  build_suite(20);
  report(3, "sca monotonicity", monotonicity);
  report(4, "binary convergence", binary_convergence);
  report(5, "oracle equivalence", oracle_equivalence);
  report(6, "warm-start benefit", warm_start_benefit);
  report(7, "baseline ordering", baseline_ordering);
  report(8, "convex solver", solver_accuracy);
  report(10, "determinism", determinism);
  // last, so it sees the results of 5, 7 and 10
  report(9, "feasibility", feasibility);

  std::printf("%d criteria failed, %.0fs total\n", failed, seconds_since(t0));
  return failed == 0 ? 0 : 1;
}
