#include "agcoop/power_sca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "agcoop/scheduling_sca.hpp"

namespace agcoop {

double linearize_Cub(const GainTable& gains, const PowerProfile& power, const PowerProfile& power_prev,
                     const Schedule& a, double noise, int m, int n, int t) {
  const double base = interference_excluding(gains, a, power_prev, m, n, t) + noise;
  if (!(base > 0.0)) throw DomainError("C^ub expansion point has a nonpositive log argument");
  const double cur = interference_excluding(gains, a, power, m, n, t) + noise;
  return std::log2(base) + (cur - base) / (base * std::numbers::ln2);
}

namespace {

struct P2Program {
  ConcaveProgram program;
  std::vector<int> var_of;  // per (n, t), -1 when nobody listens to UGV n in slot t
  std::vector<ConcaveExpr> ugv_rate;  // (1/T) sum of link surrogates, per UGV
  std::vector<ConcaveExpr> link_qos;
};

double load_excluding(const Schedule& a, int m, int p, int t) {
  double load = 0.0;
  for (int q = 0; q < a.uavs(); ++q) {
    if (q != m) load += a(q, p, t);
  }
  return load;
}

P2Program build_p2(const GainTable& gains, const Schedule& a, const PowerProfile& pl, const SystemParams& params) {
  const int M = a.uavs();
  const int N = a.ugvs();
  const int T = a.slots();
  const double noise = params.noise_watts();
  P2Program out;
  out.var_of.assign(static_cast<std::size_t>(N) * T, -1);
  ConcaveProgram& prog = out.program;
  for (int n = 0; n < N; ++n) {
    for (int t = 0; t < T; ++t) {
      double load = 0.0;
      for (int m = 0; m < M; ++m) load += a(m, n, t);
      if (load > 0.0) out.var_of[static_cast<std::size_t>(n) * T + t] = prog.add_variable(0.0, params.max_power);
    }
  }
  auto var = [&](int n, int t) { return out.var_of[static_cast<std::size_t>(n) * T + t]; };

  auto surrogate = [&](int m, int n, int t) {
    double x0 = 1.0;
    for (int p = 0; p < N; ++p) {
      if (p != n) x0 += load_excluding(a, m, p, t) * gains(m, p, t) / noise * pl(p, t);
    }
    ConcaveExpr e;
    AffineExpr hat(1.0);
    hat.add(var(n, t), a(m, n, t) * gains(m, n, t) / noise);
    e.linear.constant = -std::log2(x0);
    for (int p = 0; p < N; ++p) {
      if (p == n) continue;
      const double c = load_excluding(a, m, p, t) * gains(m, p, t) / noise;
      if (c == 0.0 || var(p, t) < 0) continue;
      hat.add(var(p, t), c);
      const double w = c / (x0 * std::numbers::ln2);
      e.linear.add(var(p, t), -w);
      e.linear.constant += w * pl(p, t);
    }
    e.add_log(1.0 / std::numbers::ln2, std::move(hat));
    return e;
  };

  for (int n = 0; n < N; ++n) {
    ConcaveExpr sum;
    for (int t = 0; t < T; ++t) {
      for (int m = 0; m < M; ++m) {
        if (a(m, n, t) <= 0.0) continue;
        ConcaveExpr s = surrogate(m, n, t);
        sum.linear.constant += s.linear.constant / T;
        for (const auto& [i, c] : s.linear.terms) sum.linear.add(i, c / T);
        for (auto& l : s.logs) sum.add_log(l.weight / T, std::move(l.arg));
      }
    }
    out.ugv_rate.push_back(std::move(sum));
  }
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n < N; ++n) {
        if (a(m, n, t) <= 0.0) continue;
        ConcaveExpr s = surrogate(m, n, t);
        s.linear.constant -= a(m, n, t) * params.min_rate;
        out.link_qos.push_back(std::move(s));
      }
    }
  }
  return out;
}

std::vector<double> warm_point(const P2Program& p, const PowerProfile& pl, int extra) {
  std::vector<double> warm(p.program.num_vars + extra, 0.0);
  for (std::size_t k = 0; k < p.var_of.size(); ++k) {
    if (p.var_of[k] >= 0) warm[p.var_of[k]] = pl.values()[k];
  }
  return warm;
}

PowerProfile read_powers(const P2Program& p, const PowerProfile& pl, std::span<const double> x, double p_max) {
  PowerProfile out = pl;
  for (std::size_t k = 0; k < p.var_of.size(); ++k) {
    if (p.var_of[k] >= 0) out.values()[k] = std::clamp(x[p.var_of[k]], 0.0, p_max);
  }
  return out;
}

bool qos_holds(const RadioMap& map, const Schedule& a, const PowerProfile& power, const TrajectorySet& traj,
               const SystemParams& params, std::vector<std::string>* failing = nullptr) {
  const RateReport r = min_avg_sum_rate(map, a, power, traj, params.noise_watts());
  bool ok = true;
  for (int t = 0; t < a.slots(); ++t) {
    for (int m = 0; m < a.uavs(); ++m) {
      for (int n = 0; n < a.ugvs(); ++n) {
        if (a(m, n, t) > 0.0 && r.rate(m, n, t) < a(m, n, t) * params.min_rate) {
          ok = false;
          if (failing) {
            failing->push_back("(m=" + std::to_string(m + 1) + ",n=" + std::to_string(n + 1) +
                               ",t=" + std::to_string(t + 1) + ")");
          }
        }
      }
    }
  }
  return ok;
}

// min over scheduled links of (rate - a R_min)
double qos_slack(const RadioMap& map, const Schedule& a, const PowerProfile& power, const TrajectorySet& traj,
                 const SystemParams& params) {
  const RateReport r = min_avg_sum_rate(map, a, power, traj, params.noise_watts());
  double slack = std::numeric_limits<double>::infinity();
  for (int t = 0; t < a.slots(); ++t)
    for (int m = 0; m < a.uavs(); ++m)
      for (int n = 0; n < a.ugvs(); ++n)
        if (a(m, n, t) > 0.0) slack = std::min(slack, r.rate(m, n, t) - a(m, n, t) * params.min_rate);
  return slack;
}

// SCA on max s s.t. every link surrogate - a R_min >= s, until the true slack
// is positive. The tangent bound is loose far from the expansion point, so
// the QoS surrogate at an infeasible start can have an empty feasible set
// even when the true QoS set does not.
bool restore_qos(const RadioMap& map, const GainTable& gains, const Schedule& schedule, const TrajectorySet& traj,
                 const SystemParams& params, const PowerOptions& options, PowerProfile& power, int& used) {
  double slack = qos_slack(map, schedule, power, traj, params);
  for (used = 0; used < options.max_iterations && !(slack > 0.0); ++used) {
    P2Program p = build_p2(gains, schedule, power, params);
    if (p.program.num_vars == 0) return false;
    const int s_index = p.program.add_variable(-1e3, 1e3);
    p.program.objective.linear.add(s_index, 1.0);
    for (auto e : p.link_qos) {
      e.linear.add(s_index, -1.0);
      p.program.concave_ge.push_back(std::move(e));
    }
    std::vector<double> warm = warm_point(p, power, 1);
    warm[s_index] = slack - 1.0;
    const SolveResult sr = solve(p.program, std::span<const double>(warm), options.solver);
    if (sr.status == SolveStatus::infeasible) return false;
    const PowerProfile next = read_powers(p, power, sr.x, params.max_power);
    const double next_slack = qos_slack(map, schedule, next, traj, params);
    if (!(next_slack > slack)) return false;
    power = next;
    slack = next_slack;
  }
  return slack > 0.0;
}

}  // namespace

PowerResult solve_P2(const RadioMap& map, const Schedule& schedule, const TrajectorySet& traj,
                     const SystemParams& params, const PowerProfile& p_init, const PowerOptions& options) {
  if (schedule.ugvs() != p_init.ugvs() || schedule.slots() != p_init.slots() || schedule.uavs() != traj.uavs() ||
      schedule.slots() != traj.slots() || schedule.ugvs() != map.transmitters()) {
    throw PreconditionError("schedule, power, trajectory and map dimensions disagree");
  }
  for (double v : p_init.values()) {
    if (!(v >= 0.0 && v <= params.max_power)) throw PreconditionError("initial power outside [0, P_max]");
  }
  if (!schedule.binary() || !schedule.satisfies_assignment(0.0)) {
    throw PreconditionError("power control needs a binary, assignment-feasible schedule");
  }
  const GainTable gains(map, traj);
  const double noise = params.noise_watts();
  const int N = schedule.ugvs();
  const int T = schedule.slots();

  PowerResult res;
  res.power = p_init;
  auto row = [&](int it) {
    const double mean = res.power.mean();
    res.trace.push_back({it, res.mu, mean, 1.0 - mean / params.max_power});
  };
  if (options.max_iterations <= 0) {
    res.mu = min_avg_sum_rate(map, schedule, p_init, traj, noise).min_average;
    row(0);
    return res;
  }

  // The ascent below needs a QoS-feasible start; restoration iterations may
  // lower mu, so the trace starts where the ascent does.
  std::vector<std::string> failing;
  if (!qos_holds(map, schedule, p_init, traj, params, &failing)) {
    for (const auto& f : failing) res.diagnostics.push_back("initial powers miss the QoS target on " + f);
    int used = 0;
    if (restore_qos(map, gains, schedule, traj, params, options, res.power, used)) {
      res.diagnostics.push_back("QoS restored after " + std::to_string(used) + " iterations");
      failing.clear();
    } else {
      res.power = p_init;
      res.feasible = false;
    }
  }
  res.mu = min_avg_sum_rate(map, schedule, res.power, traj, noise).min_average;
  row(0);

  int it = 1;
  for (; it <= options.max_iterations; ++it) {
    P2Program p = build_p2(gains, schedule, res.power, params);
    const int nv = p.program.num_vars;
    if (nv == 0) {
      res.converged = true;
      break;
    }
    const int mu_index = p.program.add_variable(-1e3, 1e3);
    p.program.objective.linear.add(mu_index, 1.0);
    for (auto e : p.ugv_rate) {
      e.linear.add(mu_index, -1.0);
      p.program.concave_ge.push_back(std::move(e));
    }
    for (const auto& e : p.link_qos) p.program.concave_ge.push_back(e);
    std::vector<double> warm = warm_point(p, res.power, 1);
    warm[mu_index] = res.mu - 1.0;
    const SolveResult sr = solve(p.program, std::span<const double>(warm), options.solver);
    if (sr.status == SolveStatus::infeasible) {
      res.feasible = failing.empty();
      std::string msg = "iteration " + std::to_string(it) + ": power subproblem infeasible";
      if (!failing.empty()) {
        msg += "; binding links";
        for (const auto& f : failing) msg += " " + f;
      }
      res.diagnostics.push_back(msg);
      break;
    }
    const PowerProfile next = read_powers(p, res.power, sr.x, params.max_power);
    const double next_mu = min_avg_sum_rate(map, schedule, next, traj, noise).min_average;
    if (!(next_mu >= res.mu) || !qos_holds(map, schedule, next, traj, params)) {
      res.converged = true;
      break;
    }
    const double gain = (next_mu - res.mu) / std::max(std::abs(res.mu), 1e-12);
    res.power = next;
    res.mu = next_mu;
    row(it);
    if (gain < params.sca_tolerance) {
      res.converged = true;
      ++it;
      break;
    }
  }

  // Nobody listens to an idle UGV, so its power only costs energy.
  for (int n = 0; n < N; ++n) {
    for (int t = 0; t < T; ++t) {
      double load = 0.0;
      for (int m = 0; m < schedule.uavs(); ++m) load += schedule(m, n, t);
      if (load == 0.0) res.power(n, t) = 0.0;
    }
  }

  if (options.trim && res.feasible) {
    P2Program p = build_p2(gains, schedule, res.power, params);
    if (p.program.num_vars > 0) {
      const double floor_mu = res.mu - 1e-10;
      for (int v = 0; v < p.program.num_vars; ++v) p.program.objective.linear.add(v, -1.0 / params.max_power);
      for (int n = 0; n < N; ++n) {
        ConcaveExpr e = p.ugv_rate[n];
        e.linear.constant -= floor_mu;
        if (e.logs.empty() && e.linear.terms.empty()) continue;
        p.program.concave_ge.push_back(std::move(e));
      }
      for (const auto& e : p.link_qos) p.program.concave_ge.push_back(e);
      const std::vector<double> warm = warm_point(p, res.power, 0);
      const SolveResult sr = solve(p.program, std::span<const double>(warm), options.solver);
      if (sr.status != SolveStatus::infeasible) {
        const PowerProfile next = read_powers(p, res.power, sr.x, params.max_power);
        const double next_mu = min_avg_sum_rate(map, schedule, next, traj, noise).min_average;
        if (next_mu >= floor_mu && next.mean() < res.power.mean() && qos_holds(map, schedule, next, traj, params)) {
          res.power = next;
          res.mu = next_mu;
          res.trimmed = true;
          row(it);
        }
      }
    }
  }
  res.mu = min_avg_sum_rate(map, schedule, res.power, traj, noise).min_average;
  return res;
}

}  // namespace agcoop
