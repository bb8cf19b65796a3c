#include "agcoop/link_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace agcoop {

bool Schedule::binary() const {
  return std::all_of(a_.begin(), a_.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

bool Schedule::satisfies_assignment(double tol) const {
  for (double v : a_) {
    if (!(v >= -tol && v <= 1.0 + tol)) return false;
  }
  for (int t = 0; t < slots_; ++t) {
    for (int m = 0; m < uavs_; ++m) {
      double row = 0.0;
      for (int n = 0; n < ugvs_; ++n) row += (*this)(m, n, t);
      if (row > 1.0 + tol) return false;
    }
    for (int n = 0; n < ugvs_; ++n) {
      double col = 0.0;
      for (int m = 0; m < uavs_; ++m) col += (*this)(m, n, t);
      if (col > 1.0 + tol) return false;
    }
  }
  return true;
}

double Schedule::max_binary_gap() const {
  double gap = 0.0;
  for (double v : a_) gap = std::max(gap, std::min(std::abs(v), std::abs(1.0 - v)));
  return gap;
}

Schedule round_robin_schedule(int uavs, int ugvs, int slots) {
  Schedule a(uavs, ugvs, slots);
  for (int t = 0; t < slots; ++t) {
    for (int m = 0; m < std::min(uavs, ugvs); ++m) a(m, (t * uavs + m) % ugvs, t) = 1.0;
  }
  return a;
}

double PowerProfile::mean() const {
  if (p_.empty()) return 0.0;
  double s = 0.0;
  for (double v : p_) s += v;
  return s / static_cast<double>(p_.size());
}

bool TrajectorySet::finite() const {
  return std::all_of(xyz_.begin(), xyz_.end(), [](double v) { return std::isfinite(v); });
}

GainTable::GainTable(const RadioMap& map, const TrajectorySet& traj)
    : uavs_(traj.uavs()), ugvs_(map.transmitters()) {
  h_.resize(static_cast<std::size_t>(traj.slots()) * uavs_ * ugvs_);
  for (int t = 0; t < traj.slots(); ++t) {
    for (int m = 0; m < uavs_; ++m) {
      const VoxelIndex v = position_to_index(traj.point(m, t), map.grid());
      for (int p = 0; p < ugvs_; ++p) h_[(static_cast<std::size_t>(t) * uavs_ + m) * ugvs_ + p] = map.gain(p, t, v);
    }
  }
}

double interference(const RadioMap& map, const Schedule& a, const PowerProfile& power, const TrajectorySet& traj,
                    int m, int n, int t) {
  const VoxelIndex v = position_to_index(traj.point(m, t), map.grid());
  double total = 0.0;
  for (int p = 0; p < a.ugvs(); ++p) {
    if (p == n) continue;
    double load = 0.0;
    for (int q = 0; q < a.uavs(); ++q) load += a(q, p, t);
    if (load != 0.0) total += load * map.gain(p, t, v) * power(p, t);
  }
  return total;
}

double link_rate(const RadioMap& map, const Schedule& a, const PowerProfile& power, const TrajectorySet& traj,
                 double noise, int m, int n, int t) {
  const double share = a(m, n, t);
  if (share == 0.0) return 0.0;
  const double h = map.gain_at(n, t, traj.point(m, t));
  const double i = interference(map, a, power, traj, m, n, t);
  return std::log2(1.0 + share * h * power(n, t) / (i + noise));
}

RateReport min_avg_sum_rate(const RadioMap& map, const Schedule& a, const PowerProfile& power,
                            const TrajectorySet& traj, double noise) {
  const int M = a.uavs();
  const int N = a.ugvs();
  const int T = a.slots();
  RateReport r;
  r.uavs = M;
  r.ugvs = N;
  r.slots = T;
  r.rates.assign(a.values().size(), 0.0);
  r.sinr.assign(a.values().size(), 0.0);
  r.own_gain.assign(a.values().size(), 0.0);
  r.ugv_average.assign(N, 0.0);
  std::vector<double> load(N);
  for (int t = 0; t < T; ++t) {
    for (int p = 0; p < N; ++p) {
      load[p] = 0.0;
      for (int q = 0; q < M; ++q) load[p] += a(q, p, t);
    }
    for (int m = 0; m < M; ++m) {
      const VoxelIndex v = position_to_index(traj.point(m, t), map.grid());
      for (int n = 0; n < N; ++n) {
        const double h = map.gain(n, t, v);
        double i = 0.0;
        for (int p = 0; p < N; ++p) {
          if (p != n && load[p] != 0.0) i += load[p] * map.gain(p, t, v) * power(p, t);
        }
        const double sinr = h * power(n, t) / (i + noise);
        const std::size_t k = a.index(m, n, t);
        r.own_gain[k] = h;
        r.sinr[k] = sinr;
        r.rates[k] = a(m, n, t) == 0.0 ? 0.0 : std::log2(1.0 + a(m, n, t) * sinr);
        r.ugv_average[n] += r.rates[k];
      }
    }
  }
  r.min_average = std::numeric_limits<double>::infinity();
  for (double& avg : r.ugv_average) {
    avg /= T;
    r.min_average = std::min(r.min_average, avg);
  }
  return r;
}

void write_rate_csv(const RateReport& report, const Schedule& a, const PowerProfile& power,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "t,m,n,a,P,h_dB,SINR_dB,rate\n";
  out << std::setprecision(17);
  for (int t = 0; t < report.slots; ++t) {
    for (int m = 0; m < report.uavs; ++m) {
      for (int n = 0; n < report.ugvs; ++n) {
        const std::size_t k = a.index(m, n, t);
        out << t + 1 << ',' << m + 1 << ',' << n + 1 << ',' << a(m, n, t) << ',' << power(n, t) << ','
            << linear_to_db(report.own_gain[k]) << ','
            << (report.sinr[k] > 0.0 ? linear_to_db(report.sinr[k]) : -std::numeric_limits<double>::infinity())
            << ',' << report.rates[k] << '\n';
      }
    }
  }
}

FitnessTerms fitness(const TrajectorySet& particle, const FitnessContext& ctx) {
  const SystemParams& p = ctx.scenario.params;
  const Schedule& a = ctx.schedule;
  const int M = particle.uavs();
  const int N = a.ugvs();
  const int T = particle.slots();
  const double noise = p.noise_watts();
  const VoxelGrid& grid = ctx.map.grid();
  const Vec3 lo = grid.origin;
  const Vec3 hi = grid.upper();

  FitnessTerms f;
  std::vector<double> ugv_sum(N, 0.0);
  std::vector<double> load(N);
  for (int t = 0; t < T; ++t) {
    for (int q = 0; q < N; ++q) {
      load[q] = 0.0;
      for (int m = 0; m < M; ++m) load[q] += a(m, q, t);
    }
    for (int m = 0; m < M; ++m) {
      Vec3 pos = particle.point(m, t);
      // Swarm positions are kept inside the search box; clamp guards the
      // lookup against round-off at the faces.
      pos = {std::clamp(pos.x, lo.x, hi.x), std::clamp(pos.y, lo.y, hi.y), std::clamp(pos.z, lo.z, hi.z)};
      const VoxelIndex v = position_to_index(pos, grid);
      for (int n = 0; n < N; ++n) {
        const double share = a(m, n, t);
        if (share == 0.0) continue;
        const double h = ctx.map.gain(n, t, v);
        double i = 0.0;
        for (int q = 0; q < N; ++q) {
          if (q != n && load[q] != 0.0) i += load[q] * ctx.map.gain(q, t, v) * ctx.power(q, t);
        }
        ugv_sum[n] += std::log2(1.0 + share * h * ctx.power(n, t) / (i + noise));
      }
    }
  }
  f.min_sum_rate = *std::min_element(ugv_sum.begin(), ugv_sum.end());

  for (int m = 0; m < M; ++m) {
    for (int t = 1; t < T; ++t) {
      const double v = (particle.point(m, t) - particle.point(m, t - 1)).norm() / p.slot_duration;
      f.speed_excess += std::max(0.0, (v - p.max_speed) / p.max_speed);
    }
    for (int t = 1; t < T - 1; ++t) {
      const double theta = turn_angle(particle, m, t);
      f.angle_excess += std::max(0.0, (theta - p.max_turn_angle) / p.max_turn_angle);
    }
    for (int t = 0; t < T - 1; ++t) {
      const Vec3 pos = particle.point(m, t);
      for (const Building& b : ctx.scenario.buildings.prisms()) {
        if (b.footprint_contains(pos.x, pos.y)) f.building_excess += std::max(0.0, b.height - pos.z);
      }
    }
  }
  f.value = p.fitness_rate_weight * f.min_sum_rate - p.fitness_speed_weight * f.speed_excess -
            p.fitness_angle_weight * f.angle_excess - p.fitness_building_weight * f.building_excess;
  return f;
}

}  // namespace agcoop
