#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "agcoop/radio_map.hpp"
#include "agcoop/scenario.hpp"
#include "agcoop/types.hpp"

namespace agcoop {

// Assignment tensor a_{m,n}[t] over M UAVs, N UGVs and T slots. Entries may be
// relaxed to [0, 1]; `binary()` marks a schedule whose entries are all 0 or 1.
class Schedule {
 public:
  Schedule() = default;
  Schedule(int uavs, int ugvs, int slots, double fill = 0.0)
      : uavs_(uavs), ugvs_(ugvs), slots_(slots),
        a_(static_cast<std::size_t>(uavs) * ugvs * slots, fill) {}

  [[nodiscard]] int uavs() const { return uavs_; }
  [[nodiscard]] int ugvs() const { return ugvs_; }
  [[nodiscard]] int slots() const { return slots_; }

  [[nodiscard]] std::size_t index(int m, int n, int t) const {
    return (static_cast<std::size_t>(t) * uavs_ + m) * ugvs_ + n;
  }
  [[nodiscard]] double operator()(int m, int n, int t) const { return a_[index(m, n, t)]; }
  double& operator()(int m, int n, int t) { return a_[index(m, n, t)]; }

  [[nodiscard]] std::span<const double> values() const { return a_; }
  [[nodiscard]] std::span<double> values() { return a_; }

  [[nodiscard]] bool binary() const;
  // Assignment constraint: every row and column sum at every slot is at most 1 + tol, and
  // entries lie in [-tol, 1 + tol].
  [[nodiscard]] bool satisfies_assignment(double tol = 1e-9) const;
  [[nodiscard]] double max_binary_gap() const;

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  int uavs_{0};
  int ugvs_{0};
  int slots_{0};
  std::vector<double> a_;
};

// Round-robin assignment: at slot t UAV m serves UGV (t*M + m) mod N. When
// M > N the surplus UAVs idle so that the assignment constraint still holds.
Schedule round_robin_schedule(int uavs, int ugvs, int slots);

class PowerProfile {
 public:
  PowerProfile() = default;
  PowerProfile(int ugvs, int slots, double fill = 0.0)
      : ugvs_(ugvs), slots_(slots), p_(static_cast<std::size_t>(ugvs) * slots, fill) {}

  [[nodiscard]] int ugvs() const { return ugvs_; }
  [[nodiscard]] int slots() const { return slots_; }
  [[nodiscard]] double operator()(int n, int t) const { return p_[static_cast<std::size_t>(n) * slots_ + t]; }
  double& operator()(int n, int t) { return p_[static_cast<std::size_t>(n) * slots_ + t]; }
  [[nodiscard]] std::span<const double> values() const { return p_; }
  [[nodiscard]] std::span<double> values() { return p_; }
  [[nodiscard]] double mean() const;

  friend bool operator==(const PowerProfile&, const PowerProfile&) = default;

 private:
  int ugvs_{0};
  int slots_{0};
  std::vector<double> p_;
};

// Per-UAV waypoint sequences, stored flat as [M x T x 3] so swarm arithmetic
// can work on the raw coordinates.
class TrajectorySet {
 public:
  TrajectorySet() = default;
  TrajectorySet(int uavs, int slots) : uavs_(uavs), slots_(slots), xyz_(static_cast<std::size_t>(uavs) * slots * 3, 0.0) {}

  [[nodiscard]] int uavs() const { return uavs_; }
  [[nodiscard]] int slots() const { return slots_; }

  [[nodiscard]] Vec3 point(int m, int t) const {
    const std::size_t i = offset(m, t);
    return {xyz_[i], xyz_[i + 1], xyz_[i + 2]};
  }
  void set_point(int m, int t, const Vec3& p) {
    const std::size_t i = offset(m, t);
    xyz_[i] = p.x;
    xyz_[i + 1] = p.y;
    xyz_[i + 2] = p.z;
  }
  [[nodiscard]] std::size_t offset(int m, int t) const { return (static_cast<std::size_t>(m) * slots_ + t) * 3; }

  [[nodiscard]] std::span<const double> coords() const { return xyz_; }
  [[nodiscard]] std::span<double> coords() { return xyz_; }
  [[nodiscard]] bool finite() const;

  friend bool operator==(const TrajectorySet&, const TrajectorySet&) = default;

 private:
  int uavs_{0};
  int slots_{0};
  std::vector<double> xyz_;
};

// h_{p,t}(w_m) for every UAV m, slot t and transmitter p, looked up once per
// waypoint. Throws BoundsError when a waypoint lies outside the map.
class GainTable {
 public:
  GainTable(const RadioMap& map, const TrajectorySet& traj);

  [[nodiscard]] double operator()(int m, int p, int t) const {
    return h_[(static_cast<std::size_t>(t) * uavs_ + m) * ugvs_ + p];
  }

 private:
  int uavs_{0};
  int ugvs_{0};
  std::vector<double> h_;
};

// I_{m,n}[t] = sum_{p != n} (sum_{q=1..M} a_{q,p}[t]) h_{p,t}(w_m) P_p[t].
double interference(const RadioMap& map, const Schedule& a, const PowerProfile& power, const TrajectorySet& traj,
                    int m, int n, int t);

// log2(1 + a_{m,n}[t] h_{n,t}(w_m) P_n[t] / (I_{m,n}[t] + N_0)).
double link_rate(const RadioMap& map, const Schedule& a, const PowerProfile& power, const TrajectorySet& traj,
                 double noise, int m, int n, int t);

struct RateReport {
  int uavs{0};
  int ugvs{0};
  int slots{0};
  std::vector<double> rates;         // R_{m,n}[t], indexed like Schedule
  std::vector<double> sinr;          // h P / (I + N_0) before scheduling
  std::vector<double> own_gain;      // h_{n,t}(w_m)
  std::vector<double> ugv_average;   // (1/T) sum_t sum_m R_{m,n}[t]
  double min_average{0.0};           // mu

  [[nodiscard]] double rate(int m, int n, int t) const {
    return rates[(static_cast<std::size_t>(t) * uavs + m) * ugvs + n];
  }
};

RateReport min_avg_sum_rate(const RadioMap& map, const Schedule& a, const PowerProfile& power,
                            const TrajectorySet& traj, double noise);

void write_rate_csv(const RateReport& report, const Schedule& a, const PowerProfile& power,
                    const std::filesystem::path& path);

struct FitnessContext {
  const RadioMap& map;
  const Schedule& schedule;
  const PowerProfile& power;
  const Scenario& scenario;
};

struct FitnessTerms {
  double min_sum_rate{0.0};     // Omega: min over UGVs of sum_t sum_m R (no 1/T)
  double speed_excess{0.0};     // S
  double angle_excess{0.0};     // A
  double building_excess{0.0};  // C, penetration depth below roofs
  double value{0.0};            // alpha*Omega - beta*S - gamma*A - kappa*C
};

FitnessTerms fitness(const TrajectorySet& particle, const FitnessContext& ctx);

}  // namespace agcoop
