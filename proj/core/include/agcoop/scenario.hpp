#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "agcoop/radio_map.hpp"
#include "agcoop/types.hpp"

namespace agcoop {

class TrajectorySet;

// Physical and algorithmic constants. Defaults follow the reference setup:
// 2 UAVs, 4 UGVs, 20 slots, -120 dBm noise, 30 dB reference loss, 5 m voxels,
// 40 deg turn limit, 10 m separation, 20 m/s, 1 bps/Hz QoS, swarm of 100 for
// 100 iterations with 0.1 cross/mutation rates, penalty weight 0.5 and fitness
// weights (0.5, 2, 5, 5).
struct SystemParams {
  int num_uavs{2};
  int num_ugvs{4};
  int num_slots{20};
  double slot_duration{1.0};         // tau, s
  double max_speed{20.0};            // V_max, m/s
  double min_altitude{10.0};         // H_min, m (also the voxel grid's z anchor)
  double max_altitude{60.0};         // H_max, m
  double max_turn_angle{0.6981317007977318};  // theta_max, rad (40 deg)
  double min_separation{10.0};       // d_min, m
  double max_power{1.0};             // P_max, W
  double min_rate{1.0};              // R_min, bps/Hz
  double noise_dbm{-120.0};          // N_0
  double ref_loss_db{30.0};          // L_0 as a loss at 1 m
  double penalty_weight{0.5};        // eta
  double sca_tolerance{1e-4};        // epsilon
  double fitness_rate_weight{0.5};   // alpha
  double fitness_speed_weight{2.0};  // beta
  double fitness_angle_weight{5.0};  // gamma
  double fitness_building_weight{5.0};  // kappa
  double cross_rate{0.1};            // sigma_c
  double mutation_rate{0.1};         // sigma_m
  int swarm_iterations{100};         // P_iter
  int swarm_size{100};               // P_num
  double inertia{0.7};               // omega
  double cognitive{1.5};             // h_1
  double social{1.5};                // h_2
  std::optional<double> velocity_cap;  // v_max per dimension; defaults to V_max * tau
  double cube_side{5.0};             // delta, m

  [[nodiscard]] double noise_watts() const { return dbm_to_watts(noise_dbm); }
  [[nodiscard]] double ref_gain() const { return db_to_linear(-ref_loss_db); }
  [[nodiscard]] double pso_velocity_cap() const { return velocity_cap.value_or(max_speed * slot_duration); }
  [[nodiscard]] double max_step() const { return max_speed * slot_duration; }

  void validate() const;
  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

struct UgvPath {
  std::vector<Vec3> waypoints;  // one per slot, z == 0
  double speed{0.0};            // m/s, metadata checked against waypoint spacing

  friend bool operator==(const UgvPath&, const UgvPath&) = default;
};

struct UavEndpoints {
  Vec3 start{};
  Vec3 end{};
  friend bool operator==(const UavEndpoints&, const UavEndpoints&) = default;
};

struct SceneExtent {
  double x_min{0.0};
  double y_min{0.0};
  double x_max{240.0};
  double y_max{400.0};
  friend bool operator==(const SceneExtent&, const SceneExtent&) = default;
};

struct Scenario {
  SystemParams params;
  SceneExtent extent;
  BuildingSet buildings;
  std::vector<UgvPath> ugvs;
  std::vector<UavEndpoints> uav_endpoints;  // empty: hover above scene center
  PropagationModel propagation;

  [[nodiscard]] VoxelGrid grid() const;
  // Lower/upper corners of the UAV search box: the scene extent at [H_min, H_max].
  [[nodiscard]] Vec3 search_lower() const;
  [[nodiscard]] Vec3 search_upper() const;
  [[nodiscard]] const Vec3& ugv_position(int n, int t) const { return ugvs[n].waypoints[t]; }

  void validate() const;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

void to_json(nlohmann::json& j, const SystemParams& p);
void from_json(const nlohmann::json& j, SystemParams& p);
void to_json(nlohmann::json& j, const Scenario& s);
// Missing fields take their defaults; UGV paths default to the reference
// lanes (UGVs 1-2 at 27.0 km/h, 3-4 at 16.2 km/h). Throws ValidationError.
Scenario scenario_from_json(const nlohmann::json& j);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

// The reference lanes used when a scenario names no UGV paths.
std::vector<UgvPath> default_ugv_paths(const SystemParams& params, const SceneExtent& extent);

// Seeded urban layout: random prisms plus two UGV convoys on straight lanes.
Scenario make_synthetic_scenario(std::uint64_t seed, const SystemParams& params = {});

RadioMap generate_synthetic_map(const Scenario& scenario, const PropagationModel& model, std::uint64_t seed);

struct Violation {
  int uav{0};
  int slot{0};
  double amount{0.0};
  int other{-1};  // second UAV for separation violations
};

struct KinematicsReport {
  std::vector<Violation> speed;
  std::vector<Violation> turn;
  std::vector<Violation> altitude;
  std::vector<Violation> building;
  std::vector<Violation> separation;
  std::vector<Violation> extent;

  [[nodiscard]] bool empty() const {
    return speed.empty() && turn.empty() && altitude.empty() && building.empty() && separation.empty() &&
           extent.empty();
  }
  [[nodiscard]] std::size_t total() const {
    return speed.size() + turn.size() + altitude.size() + building.size() + separation.size() + extent.size();
  }
};

// Turning angle between the displacements into and out of slot t, defined for
// 0 < t < T-1 (0-based); zero when either displacement is shorter than 1e-9 m.
double turn_angle(const TrajectorySet& traj, int m, int t);

KinematicsReport check_kinematics(const TrajectorySet& traj, const Scenario& scenario);

}  // namespace agcoop
