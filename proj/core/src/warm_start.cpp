#include <algorithm>
#include <cmath>
#include <numbers>

#include "agcoop/trajectory_opt.hpp"

namespace agcoop {

namespace {

// Per-link LoS SNR numerator a P L_0 / N_0 (zero for unscheduled links).
double los_numerator(const Scenario& s, const Schedule& a, const PowerProfile& power, const LosChannelModel& los,
                     int m, int n, int t) {
  return a(m, n, t) * power(n, t) * los.ref_gain / s.params.noise_watts();
}

enum class Block { horizontal, vertical };

struct BlockProgram {
  ConcaveProgram program;
  int mu{-1};
  int slots{0};
  int per_point{0};  // 2 for horizontal (x, y), 1 for vertical (H)
  [[nodiscard]] int var(int m, int t, int k) const { return (m * slots + t) * per_point + k; }
};

BlockProgram build_block(Block block, const Scenario& s, const Schedule& a, const PowerProfile& power,
                         const TrajectorySet& q, const LosChannelModel& los, const WarmStartOptions& opt) {
  const SystemParams& p = s.params;
  const int M = q.uavs();
  const int N = a.ugvs();
  const int T = q.slots();
  const Vec3 lo = s.search_lower();
  const Vec3 hi = s.search_upper();
  BlockProgram b;
  b.slots = T;
  b.per_point = block == Block::horizontal ? 2 : 1;
  ConcaveProgram& prog = b.program;
  for (int m = 0; m < M; ++m) {
    for (int t = 0; t < T; ++t) {
      if (block == Block::horizontal) {
        prog.add_variable(lo.x, hi.x);
        prog.add_variable(lo.y, hi.y);
      } else {
        prog.add_variable(lo.z, hi.z);
      }
    }
  }
  b.mu = prog.add_variable(-1e3, 1e3);
  prog.objective.linear.add(b.mu, 1.0);

  // variable part of w_m[t] - l_n[t] as affine expressions plus the fixed part
  auto offsets = [&](int m, int n, int t, std::vector<AffineExpr>& free_parts, double& fixed_sq) {
    const Vec3 w = q.point(m, t);
    const Vec3 g = s.ugv_position(n, t);
    free_parts.clear();
    if (block == Block::horizontal) {
      free_parts.push_back(AffineExpr(-g.x).add(b.var(m, t, 0), 1.0));
      free_parts.push_back(AffineExpr(-g.y).add(b.var(m, t, 1), 1.0));
      fixed_sq = w.z * w.z;
    } else {
      free_parts.push_back(AffineExpr(0.0).add(b.var(m, t, 0), 1.0));
      fixed_sq = (w.x - g.x) * (w.x - g.x) + (w.y - g.y) * (w.y - g.y);
    }
  };

  std::vector<AffineExpr> parts;
  double fixed_sq = 0.0;
  const double qos_factor = std::exp2(p.min_rate) - 1.0;
  for (int n = 0; n < N; ++n) {
    ConcaveExpr rate;
    rate.linear.add(b.mu, -1.0);
    for (int t = 0; t < T; ++t) {
      for (int m = 0; m < M; ++m) {
        const double c = los_numerator(s, a, power, los, m, n, t);
        if (c <= 0.0) continue;
        const double u0 = (q.point(m, t) - s.ugv_position(n, t)).squared_norm();
        // tangent of the convex map u -> log2(1 + c/u) is a global minorant
        const double f0 = std::log2(1.0 + c / u0);
        const double w = c / (std::numbers::ln2 * u0 * (u0 + c));
        offsets(m, n, t, parts, fixed_sq);
        rate.linear.constant += (f0 + w * u0 - w * fixed_sq) / T;
        for (auto& part : parts) rate.add_neg_square(w / T, part);

        const double u_max = c / qos_factor;
        const double reach = (hi - lo).squared_norm();
        if (u_max < reach) {
          ConcaveExpr qos(AffineExpr(u_max - fixed_sq));
          for (auto& part : parts) qos.add_neg_square(1.0, part);
          prog.concave_ge.push_back(std::move(qos));
        }
      }
    }
    prog.concave_ge.push_back(std::move(rate));
  }

  const double step = opt.speed_margin * p.max_step();
  for (int m = 0; m < M; ++m) {
    for (int t = 1; t < T; ++t) {
      const Vec3 d = q.point(m, t) - q.point(m, t - 1);
      ConcaveExpr speed;
      if (block == Block::horizontal) {
        speed.linear.constant = step * step - d.z * d.z;
        for (int k = 0; k < 2; ++k) {
          speed.add_neg_square(1.0, AffineExpr(0.0).add(b.var(m, t, k), 1.0).add(b.var(m, t - 1, k), -1.0));
        }
      } else {
        speed.linear.constant = step * step - d.x * d.x - d.y * d.y;
        speed.add_neg_square(1.0, AffineExpr(0.0).add(b.var(m, t, 0), 1.0).add(b.var(m, t - 1, 0), -1.0));
      }
      prog.concave_ge.push_back(std::move(speed));
    }
  }

  // ||d||^2 >= r^2 replaced by its tangent at the current separation d0
  const double r = opt.separation_margin * p.min_separation;
  for (int t = 0; t < T; ++t) {
    for (int m = 0; m < M; ++m) {
      for (int o = m + 1; o < M; ++o) {
        const Vec3 d0 = q.point(m, t) - q.point(o, t);
        AffineExpr row(r * r + d0.squared_norm());
        if (block == Block::horizontal) {
          row.add(b.var(m, t, 0), -2.0 * d0.x).add(b.var(o, t, 0), 2.0 * d0.x);
          row.add(b.var(m, t, 1), -2.0 * d0.y).add(b.var(o, t, 1), 2.0 * d0.y);
          row.constant -= 2.0 * d0.z * d0.z;
        } else {
          row.add(b.var(m, t, 0), -2.0 * d0.z).add(b.var(o, t, 0), 2.0 * d0.z);
          row.constant -= 2.0 * (d0.x * d0.x + d0.y * d0.y);
        }
        prog.affine_le.push_back(std::move(row));
      }
    }
  }
  return b;
}

TrajectorySet apply_block(Block block, const BlockProgram& b, const TrajectorySet& q, std::span<const double> x,
                          const Scenario& s) {
  const Vec3 lo = s.search_lower();
  const Vec3 hi = s.search_upper();
  TrajectorySet out = q;
  for (int m = 0; m < q.uavs(); ++m) {
    for (int t = 0; t < q.slots(); ++t) {
      Vec3 w = q.point(m, t);
      if (block == Block::horizontal) {
        w.x = std::clamp(x[b.var(m, t, 0)], lo.x, hi.x);
        w.y = std::clamp(x[b.var(m, t, 1)], lo.y, hi.y);
      } else {
        w.z = std::clamp(x[b.var(m, t, 0)], lo.z, hi.z);
      }
      out.set_point(m, t, w);
    }
  }
  return out;
}

}  // namespace

double los_min_rate(const Scenario& scenario, const Schedule& a, const PowerProfile& power,
                    const TrajectorySet& traj, const LosChannelModel& los) {
  double mu = std::numeric_limits<double>::infinity();
  for (int n = 0; n < a.ugvs(); ++n) {
    double sum = 0.0;
    for (int t = 0; t < a.slots(); ++t) {
      for (int m = 0; m < a.uavs(); ++m) {
        const double c = los_numerator(scenario, a, power, los, m, n, t);
        if (c <= 0.0) continue;
        const double u = std::max((traj.point(m, t) - scenario.ugv_position(n, t)).squared_norm(), 1.0);
        sum += std::log2(1.0 + c / u);
      }
    }
    mu = std::min(mu, sum / a.slots());
  }
  return mu;
}

WarmStartResult warm_start_P3(const Scenario& scenario, const Schedule& schedule, const PowerProfile& power,
                              const TrajectorySet& traj_init, const WarmStartOptions& options) {
  const LosChannelModel los{scenario.params.ref_gain()};
  WarmStartResult res;
  TrajectorySet q = traj_init;
  double mu = los_min_rate(scenario, schedule, power, q, los);
  res.trace.push_back({0, '-', mu});
  bool any = false;
  for (int round = 1; round <= options.max_rounds; ++round) {
    const double round_start = mu;
    bool moved = false;
    for (Block block : {Block::horizontal, Block::vertical}) {
      const BlockProgram b = build_block(block, scenario, schedule, power, q, los, options);
      std::vector<double> warm(b.program.num_vars);
      for (int m = 0; m < q.uavs(); ++m) {
        for (int t = 0; t < q.slots(); ++t) {
          const Vec3 w = q.point(m, t);
          if (block == Block::horizontal) {
            warm[b.var(m, t, 0)] = w.x;
            warm[b.var(m, t, 1)] = w.y;
          } else {
            warm[b.var(m, t, 0)] = w.z;
          }
        }
      }
      warm[b.mu] = mu - 1.0;
      const SolveResult sr = solve(b.program, std::span<const double>(warm), options.solver);
      if (sr.status == SolveStatus::infeasible) {
        if (res.note.empty()) res.note = std::string("block subproblem infeasible: ") + sr.diagnostic;
        continue;
      }
      TrajectorySet next = apply_block(block, b, q, sr.x, scenario);
      const double next_mu = los_min_rate(scenario, schedule, power, next, los);
      if (!(next_mu >= mu)) continue;
      moved = moved || next_mu > mu;
      q = std::move(next);
      mu = next_mu;
      any = true;
      res.trace.push_back({round, block == Block::horizontal ? 'H' : 'V', mu});
    }
    if (!moved) break;
    if ((mu - round_start) / std::max(std::abs(round_start), 1e-12) < scenario.params.sca_tolerance) break;
  }
  res.fell_back = !any;
  res.raw = any ? q : traj_init;
  res.trajectory = repair_trajectory(res.raw, scenario);
  return res;
}

}  // namespace agcoop
