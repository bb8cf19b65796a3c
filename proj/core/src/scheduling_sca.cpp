#include "agcoop/scheduling_sca.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace agcoop {

namespace {

std::string link_label(int m, int n, int t) {
  std::ostringstream os;
  os << "(m=" << m + 1 << ",n=" << n + 1 << ",t=" << t + 1 << ")";
  return os.str();
}

void check_dims(const RadioMap& map, const PowerProfile& power, const TrajectorySet& traj, const Schedule& a) {
  if (a.uavs() != traj.uavs() || a.slots() != traj.slots() || a.ugvs() != power.ugvs() ||
      a.slots() != power.slots() || a.ugvs() != map.transmitters() || a.slots() > map.slots()) {
    throw PreconditionError("schedule, power, trajectory and map dimensions disagree");
  }
}

}  // namespace

double penalty(const Schedule& a, double eta) {
  double s = 0.0;
  for (double v : a.values()) s += v * v - v;
  return eta * s;
}

double penalty_lb(const Schedule& a, const Schedule& a_prev, double eta) {
  const auto cur = a.values();
  const auto prev = a_prev.values();
  double s = 0.0;
  for (std::size_t i = 0; i < cur.size(); ++i) s += -prev[i] * prev[i] + (2.0 * prev[i] - 1.0) * cur[i];
  return eta * s;
}

double interference_excluding(const GainTable& gains, const Schedule& a, const PowerProfile& power, int m, int n,
                              int t) {
  double total = 0.0;
  for (int p = 0; p < a.ugvs(); ++p) {
    if (p == n) continue;
    double load = 0.0;
    for (int q = 0; q < a.uavs(); ++q) {
      if (q != m) load += a(q, p, t);
    }
    if (load != 0.0) total += load * gains(m, p, t) * power(p, t);
  }
  return total;
}

double rate_hat(const GainTable& gains, const Schedule& a, const PowerProfile& power, double noise, int m, int n,
                int t) {
  const double i = interference_excluding(gains, a, power, m, n, t);
  return std::log2(a(m, n, t) * gains(m, n, t) * power(n, t) + i + noise);
}

double rate_tilde(const GainTable& gains, const Schedule& a, const PowerProfile& power, double noise, int m, int n,
                  int t) {
  return std::log2(interference_excluding(gains, a, power, m, n, t) + noise);
}

double linearize_Bub(const GainTable& gains, const Schedule& a, const Schedule& a_prev, const PowerProfile& power,
                     double noise, int m, int n, int t) {
  const double base = interference_excluding(gains, a_prev, power, m, n, t) + noise;
  if (!(base > 0.0)) throw DomainError("B^ub expansion point has a nonpositive log argument");
  const double cur = interference_excluding(gains, a, power, m, n, t) + noise;
  return std::log2(base) + (cur - base) / (base * std::numbers::ln2);
}

namespace {

// Exact relaxed link rate R^ - R~, computed as a single log to avoid
// cancellation when the interference term dominates.
double relaxed_rate(const GainTable& gains, const Schedule& a, const PowerProfile& power, double noise, int m,
                    int n, int t) {
  const double share = a(m, n, t);
  if (share == 0.0) return 0.0;
  const double i = interference_excluding(gains, a, power, m, n, t) + noise;
  return std::log2(1.0 + share * gains(m, n, t) * power(n, t) / i);
}

}  // namespace

double relaxed_min_rate(const GainTable& gains, const Schedule& a, const PowerProfile& power, double noise) {
  double mu = std::numeric_limits<double>::infinity();
  for (int n = 0; n < a.ugvs(); ++n) {
    double sum = 0.0;
    for (int t = 0; t < a.slots(); ++t) {
      for (int m = 0; m < a.uavs(); ++m) sum += relaxed_rate(gains, a, power, noise, m, n, t);
    }
    mu = std::min(mu, sum / a.slots());
  }
  return mu;
}

std::vector<std::string> enforce_qos(const GainTable& gains, Schedule& a, const PowerProfile& power, double noise,
                                     double min_rate) {
  std::vector<std::string> dropped;
  while (true) {
    double worst = 0.0;
    int wm = -1, wn = -1, wt = -1;
    for (int t = 0; t < a.slots(); ++t) {
      for (int m = 0; m < a.uavs(); ++m) {
        for (int n = 0; n < a.ugvs(); ++n) {
          const double share = a(m, n, t);
          if (share <= 0.0) continue;
          const double shortfall = share * min_rate - relaxed_rate(gains, a, power, noise, m, n, t);
          if (shortfall > worst) {
            worst = shortfall;
            wm = m;
            wn = n;
            wt = t;
          }
        }
      }
    }
    if (wm < 0) return dropped;
    a(wm, wn, wt) = 0.0;
    dropped.push_back(link_label(wm, wn, wt));
  }
}

Schedule round_schedule(const GainTable& gains, const Schedule& relaxed, const PowerProfile& power, double noise,
                        double min_rate, double threshold) {
  const int M = relaxed.uavs();
  const int N = relaxed.ugvs();
  const int T = relaxed.slots();
  Schedule out(M, N, T);
  struct Candidate {
    double weight;
    int m;
    int n;
  };
  std::vector<Candidate> cands;
  std::vector<char> row_used(M), col_used(N);
  for (int t = 0; t < T; ++t) {
    cands.clear();
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n < N; ++n) {
        if (relaxed(m, n, t) >= threshold) cands.push_back({relaxed_rate(gains, relaxed, power, noise, m, n, t), m, n});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.weight > b.weight; });
    std::fill(row_used.begin(), row_used.end(), 0);
    std::fill(col_used.begin(), col_used.end(), 0);
    for (const auto& c : cands) {
      if (row_used[c.m] || col_used[c.n]) continue;
      row_used[c.m] = 1;
      col_used[c.n] = 1;
      out(c.m, c.n, t) = 1.0;
    }
  }
  enforce_qos(gains, out, power, noise, min_rate);
  if (!out.satisfies_assignment(0.0)) throw Error("schedule rounding left an assignment conflict");
  return out;
}

namespace {

// per-UGV rate sums of one slot
void slot_sums(const GainTable& gains, const Schedule& a, const PowerProfile& power, double noise, int t,
               std::vector<double>& out) {
  out.assign(a.ugvs(), 0.0);
  for (int m = 0; m < a.uavs(); ++m)
    for (int n = 0; n < a.ugvs(); ++n) out[n] += relaxed_rate(gains, a, power, noise, m, n, t);
}

bool slot_meets_qos(const GainTable& gains, const Schedule& a, const PowerProfile& power, double noise, int t,
                    double min_rate) {
  for (int m = 0; m < a.uavs(); ++m)
    for (int n = 0; n < a.ugvs(); ++n)
      if (a(m, n, t) > 0.0 && relaxed_rate(gains, a, power, noise, m, n, t) < a(m, n, t) * min_rate) return false;
  return true;
}

// leximin: compare ascending-sorted vectors
bool better(std::vector<double> x, std::vector<double> y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double tol = 1e-12 * std::max(1.0, std::abs(y[i]));
    if (x[i] > y[i] + tol) return true;
    if (x[i] < y[i] - tol) return false;
  }
  return false;
}

}  // namespace

int improve_schedule(const GainTable& gains, Schedule& a, const PowerProfile& power, double noise, double min_rate,
                     int max_passes) {
  const int M = a.uavs();
  const int N = a.ugvs();
  const int T = a.slots();
  std::vector<std::vector<double>> per_slot(T);
  std::vector<double> totals(N, 0.0);
  for (int t = 0; t < T; ++t) {
    slot_sums(gains, a, power, noise, t, per_slot[t]);
    for (int n = 0; n < N; ++n) totals[n] += per_slot[t][n];
  }
  auto held = [&](int m, int t) {
    for (int n = 0; n < N; ++n)
      if (a(m, n, t) > 0.5) return n;
    return -1;
  };
  auto holder = [&](int n, int t) {
    for (int m = 0; m < M; ++m)
      if (a(m, n, t) > 0.5) return m;
    return -1;
  };

  int moves = 0;
  std::vector<double> trial_slot, trial_totals, best_totals, best_slot;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool found = false;
    int bt = -1;
    Schedule best_a;
    best_totals = totals;
    for (int t = 0; t < T; ++t) {
      for (int m = 0; m < M; ++m) {
        const int cur = held(m, t);
        for (int target = -1; target < N; ++target) {
          if (target == cur) continue;
          Schedule trial = a;
          for (int n = 0; n < N; ++n) trial(m, n, t) = 0.0;
          if (target >= 0) {
            const int other = holder(target, t);
            if (other >= 0) {
              trial(other, target, t) = 0.0;
              if (cur >= 0) trial(other, cur, t) = 1.0;
            }
            trial(m, target, t) = 1.0;
          }
          if (!slot_meets_qos(gains, trial, power, noise, t, min_rate)) continue;
          slot_sums(gains, trial, power, noise, t, trial_slot);
          trial_totals = totals;
          for (int n = 0; n < N; ++n) trial_totals[n] += trial_slot[n] - per_slot[t][n];
          if (better(trial_totals, best_totals)) {
            found = true;
            bt = t;
            best_a = std::move(trial);
            best_totals = trial_totals;
            best_slot = trial_slot;
          }
        }
      }
    }
    if (!found) break;
    a = std::move(best_a);
    per_slot[bt] = best_slot;
    totals = best_totals;
    ++moves;
  }
  return moves;
}

namespace {

// bps/Hz; below this a QoS row would leave the barrier an interior thinner
// than the solver tolerance
constexpr double kQosMargin = 1e-4;

struct P1Program {
  ConcaveProgram program;
  std::vector<int> var_of;  // per schedule entry, -1 when pinned to zero
  int mu_index{-1};
};

P1Program build_p1(const GainTable& gains, const Schedule& al, const PowerProfile& power, const SystemParams& params,
                   double eta) {
  const int M = al.uavs();
  const int N = al.ugvs();
  const int T = al.slots();
  const double noise = params.noise_watts();
  const double inv_ln2 = 1.0 / std::numbers::ln2;
  P1Program out;
  out.var_of.assign(al.values().size(), -1);
  ConcaveProgram& prog = out.program;

  auto g = [&](int m, int p, int t) { return gains(m, p, t) * power(p, t) / noise; };
  auto base = [&](int m, int n, int t) {
    double x = 1.0;
    for (int p = 0; p < N; ++p) {
      if (p == n) continue;
      for (int q = 0; q < M; ++q) {
        if (q != m) x += al(q, p, t) * g(m, p, t);
      }
    }
    return x;
  };

  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n < N; ++n) {
        const std::size_t k = al.index(m, n, t);
        if (al(m, n, t) <= 0.0) {
          // A link that is off and cannot meet the QoS target at any small
          // positive share stays off for this iteration.
          const double slope = g(m, n, t) / base(m, n, t) * inv_ln2;
          if (!(slope > params.min_rate * (1.0 + 1e-9))) continue;
        }
        out.var_of[k] = prog.add_variable(0.0, 1.0);
      }
    }
  }
  double mu_cap = 1.0;
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n < N; ++n) mu_cap = std::max(mu_cap, std::log2(1.0 + g(m, n, t)));
    }
  }
  out.mu_index = prog.add_variable(-1e3, M * mu_cap + 1.0);
  auto var = [&](int m, int n, int t) { return out.var_of[al.index(m, n, t)]; };

  // objective: mu + psi^lb (constant part dropped)
  prog.objective.linear.add(out.mu_index, 1.0);
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n < N; ++n) {
        const int v = var(m, n, t);
        if (v >= 0) prog.objective.linear.add(v, eta * (2.0 * al(m, n, t) - 1.0));
      }
    }
  }

  // assignment rows and columns
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) {
      AffineExpr row(-1.0);
      for (int n = 0; n < N; ++n) {
        if (var(m, n, t) >= 0) row.add(var(m, n, t), 1.0);
      }
      if (row.terms.size() > 1) prog.affine_le.push_back(std::move(row));
    }
    for (int n = 0; n < N; ++n) {
      AffineExpr col(-1.0);
      for (int m = 0; m < M; ++m) {
        if (var(m, n, t) >= 0) col.add(var(m, n, t), 1.0);
      }
      if (col.terms.size() > 1) prog.affine_le.push_back(std::move(col));
    }
  }

  // per-link surrogate R^ - B^ub
  auto surrogate = [&](int m, int n, int t) {
    const double x0 = base(m, n, t);
    ConcaveExpr e;
    AffineExpr hat(1.0);
    hat.add(var(m, n, t), g(m, n, t));
    e.linear.constant = -std::log2(x0) + (x0 - 1.0) / (x0 * std::numbers::ln2);
    for (int p = 0; p < N; ++p) {
      if (p == n) continue;
      for (int q = 0; q < M; ++q) {
        if (q == m) continue;
        const int v = var(q, p, t);
        if (v < 0) continue;
        hat.add(v, g(m, p, t));
        e.linear.add(v, -g(m, p, t) / (x0 * std::numbers::ln2));
      }
    }
    e.add_log(inv_ln2, std::move(hat));
    return e;
  };

  for (int n = 0; n < N; ++n) {
    ConcaveExpr sum;
    sum.linear.add(out.mu_index, -1.0);
    for (int t = 0; t < T; ++t) {
      for (int m = 0; m < M; ++m) {
        if (var(m, n, t) < 0) continue;
        ConcaveExpr s = surrogate(m, n, t);
        sum.linear.constant += s.linear.constant / T;
        for (const auto& [i, c] : s.linear.terms) sum.linear.add(i, c / T);
        for (auto& l : s.logs) sum.add_log(l.weight / T, std::move(l.arg));
      }
    }
    prog.concave_ge.push_back(std::move(sum));
  }
  // QoS rows only for links that meet the target with margin at the
  // expansion point: two idle links that mutually interfere cannot both be
  // strictly feasible at any positive share, which would leave the barrier
  // without an interior. Rounding enforces QoS on the rest.
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n < N; ++n) {
        if (var(m, n, t) < 0) continue;
        const double share = al(m, n, t);
        if (!(share > 0.0)) continue;
        const double margin = std::log2(1.0 + share * g(m, n, t) / base(m, n, t)) - params.min_rate * share;
        if (!(margin > kQosMargin)) continue;
        ConcaveExpr s = surrogate(m, n, t);
        s.linear.add(var(m, n, t), -params.min_rate);
        prog.concave_ge.push_back(std::move(s));
      }
    }
  }
  return out;
}

}  // namespace

SchedulingResult solve_P1(const RadioMap& map, const PowerProfile& power, const TrajectorySet& traj,
                          const SystemParams& params, const Schedule& a_init, const SchedulingOptions& options) {
  check_dims(map, power, traj, a_init);
  if (!a_init.satisfies_assignment(1e-9)) {
    throw PreconditionError("initial schedule violates the one-to-one assignment constraint or [0, 1] bounds");
  }
  const GainTable gains(map, traj);
  const double noise = params.noise_watts();
  double eta = params.penalty_weight;
  if (options.entrywise_penalty_sum) eta *= static_cast<double>(a_init.values().size());

  SchedulingResult res;
  Schedule al = a_init;
  for (double& v : al.values()) v = std::clamp(v, 0.0, 1.0);
  for (auto& d : enforce_qos(gains, al, power, noise, params.min_rate)) {
    res.diagnostics.push_back("initial link " + d + " misses the QoS target; switched off");
  }
  const Schedule start = al;

  double mu = relaxed_min_rate(gains, al, power, noise);
  double obj = mu + penalty(al, eta);
  res.trace.push_back({0, obj, mu, penalty(al, eta), al.max_binary_gap()});

  for (int it = 1; it <= options.max_iterations; ++it) {
    P1Program p = build_p1(gains, al, power, params, eta);
    if (p.mu_index == 0) {
      res.converged = true;
      break;
    }
    std::vector<double> warm(p.program.num_vars, 0.0);
    for (std::size_t k = 0; k < p.var_of.size(); ++k) {
      if (p.var_of[k] >= 0) warm[p.var_of[k]] = al.values()[k];
    }
    warm[p.mu_index] = mu - 1.0;
    const SolveResult sr = solve(p.program, std::span<const double>(warm), options.solver);
    if (sr.status == SolveStatus::infeasible) {
      res.diagnostics.push_back("iteration " + std::to_string(it) + ": subproblem infeasible (" + sr.diagnostic + ")");
      break;
    }
    Schedule next(al.uavs(), al.ugvs(), al.slots());
    for (std::size_t k = 0; k < p.var_of.size(); ++k) {
      if (p.var_of[k] >= 0) next.values()[k] = std::clamp(sr.x[p.var_of[k]], 0.0, 1.0);
    }
    const double next_mu = relaxed_min_rate(gains, next, power, noise);
    const double next_obj = next_mu + penalty(next, eta);
    if (!(next_obj >= obj)) {
      res.converged = true;
      break;
    }
    const double gain = (next_obj - obj) / std::max(std::abs(obj), 1e-12);
    al = next;
    mu = next_mu;
    obj = next_obj;
    res.trace.push_back({it, obj, mu, penalty(al, eta), al.max_binary_gap()});
    if (gain < params.sca_tolerance) {
      res.converged = true;
      break;
    }
  }
  res.relaxed = al;

  Schedule rounded = round_schedule(gains, al, power, noise, params.min_rate, options.round_threshold);
  Schedule fallback =
      start.binary() ? start : round_schedule(gains, start, power, noise, params.min_rate, options.round_threshold);
  if (options.local_search) {
    improve_schedule(gains, rounded, power, noise, params.min_rate);
    improve_schedule(gains, fallback, power, noise, params.min_rate);
  }
  const double mu_rounded = min_avg_sum_rate(map, rounded, power, traj, noise).min_average;
  const double mu_fallback = min_avg_sum_rate(map, fallback, power, traj, noise).min_average;
  if (mu_fallback > mu_rounded) {
    res.schedule = fallback;
    res.mu = mu_fallback;
    res.kept_initial = true;
  } else {
    res.schedule = rounded;
    res.mu = mu_rounded;
  }
  if (!res.schedule.satisfies_assignment(0.0) || !res.schedule.binary()) {
    throw Error("scheduling produced an infeasible binary schedule");
  }
  return res;
}

}  // namespace agcoop
