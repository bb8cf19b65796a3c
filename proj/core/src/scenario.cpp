#include "agcoop/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "agcoop/link_model.hpp"

namespace agcoop {

using nlohmann::json;

namespace {

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(field, "must be a finite value > 0");
}

void require_unit(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(field, "must lie in [0, 1]");
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(field, "expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(key, e.what());
    }
  }
}

}  // namespace

void SystemParams::validate() const {
  if (num_uavs < 1) throw ValidationError("M", "must be >= 1");
  if (num_ugvs < 1) throw ValidationError("N", "must be >= 1");
  if (num_slots < 1) throw ValidationError("T", "must be >= 1");
  require_positive(slot_duration, "tau_s");
  require_positive(max_speed, "v_max_mps");
  require_positive(min_altitude, "h_min_m");
  require_positive(max_altitude, "h_max_m");
  if (!(min_altitude < max_altitude)) throw ValidationError("h_max_m", "H_min must be below H_max");
  require_positive(max_turn_angle, "theta_max_rad");
  if (max_turn_angle > std::numbers::pi) throw ValidationError("theta_max_rad", "must not exceed pi");
  require_positive(min_separation, "d_min_m");
  require_positive(max_power, "p_max_w");
  require_positive(min_rate, "r_min_bps_hz");
  if (!std::isfinite(noise_dbm)) throw ValidationError("noise_dbm", "must be finite");
  if (!std::isfinite(ref_loss_db)) throw ValidationError("ref_loss_db", "must be finite");
  if (!(penalty_weight >= 0.0)) throw ValidationError("eta", "must be >= 0");
  require_positive(sca_tolerance, "epsilon");
  require_positive(fitness_rate_weight, "alpha");
  require_positive(fitness_speed_weight, "beta");
  require_positive(fitness_angle_weight, "gamma");
  require_positive(fitness_building_weight, "kappa");
  require_unit(cross_rate, "sigma_c");
  require_unit(mutation_rate, "sigma_m");
  if (swarm_iterations < 0) throw ValidationError("p_iter", "must be >= 0");
  if (swarm_size < 2) throw ValidationError("p_num", "must be >= 2");
  if (!(inertia >= 0.0)) throw ValidationError("omega", "must be >= 0");
  if (!(cognitive >= 0.0)) throw ValidationError("h1", "must be >= 0");
  if (!(social >= 0.0)) throw ValidationError("h2", "must be >= 0");
  if (velocity_cap) require_positive(*velocity_cap, "v_max_pso_m");
  require_positive(cube_side, "delta_m");
}

VoxelGrid Scenario::grid() const {
  VoxelGrid g;
  g.origin = {extent.x_min, extent.y_min, params.min_altitude};
  g.cube_side = params.cube_side;
  const auto cells = [&](double span) { return std::max(1, static_cast<int>(std::ceil(span / params.cube_side - 1e-9))); };
  g.dims = {cells(extent.x_max - extent.x_min), cells(extent.y_max - extent.y_min),
            cells(params.max_altitude - params.min_altitude)};
  return g;
}

Vec3 Scenario::search_lower() const { return {extent.x_min, extent.y_min, params.min_altitude}; }
Vec3 Scenario::search_upper() const { return {extent.x_max, extent.y_max, params.max_altitude}; }

void Scenario::validate() const {
  params.validate();
  propagation.validate();
  if (!(extent.x_max > extent.x_min) || !(extent.y_max > extent.y_min)) {
    throw ValidationError("extent", "empty scene extent");
  }
  buildings.validate(grid());
  if (static_cast<int>(ugvs.size()) != params.num_ugvs) {
    throw ValidationError("ugvs", "expected " + std::to_string(params.num_ugvs) + " UGV paths, got " +
                                      std::to_string(ugvs.size()));
  }
  for (std::size_t n = 0; n < ugvs.size(); ++n) {
    const UgvPath& path = ugvs[n];
    const std::string field = "ugvs[" + std::to_string(n) + "]";
    if (static_cast<int>(path.waypoints.size()) != params.num_slots) {
      throw ValidationError(field + ".waypoints", "expected T waypoints");
    }
    if (!(path.speed >= 0.0)) throw ValidationError(field + ".speed_mps", "must be >= 0");
    const double step = path.speed * params.slot_duration;
    for (std::size_t t = 0; t < path.waypoints.size(); ++t) {
      const Vec3& w = path.waypoints[t];
      if (w.z != 0.0) throw ValidationError(field + ".waypoints[" + std::to_string(t) + "]", "z must be exactly 0");
      if (w.x < extent.x_min || w.x > extent.x_max || w.y < extent.y_min || w.y > extent.y_max) {
        throw ValidationError(field + ".waypoints[" + std::to_string(t) + "]", "outside the scene extent");
      }
      if (t > 0) {
        const double d = (w - path.waypoints[t - 1]).norm();
        if (std::abs(d - step) > 0.01 * step + 1e-9) {
          throw ValidationError(field + ".waypoints[" + std::to_string(t) + "]",
                                "spacing inconsistent with declared speed x tau");
        }
      }
    }
  }
  if (!uav_endpoints.empty() && static_cast<int>(uav_endpoints.size()) != params.num_uavs) {
    throw ValidationError("uavs", "endpoints must be given for every UAV or for none");
  }
  for (std::size_t m = 0; m < uav_endpoints.size(); ++m) {
    for (const Vec3& p : {uav_endpoints[m].start, uav_endpoints[m].end}) {
      if (p.x < extent.x_min || p.x > extent.x_max || p.y < extent.y_min || p.y > extent.y_max ||
          p.z < params.min_altitude || p.z > params.max_altitude) {
        throw ValidationError("uavs[" + std::to_string(m) + "]", "endpoint outside the flight volume");
      }
    }
  }
}

void to_json(json& j, const SystemParams& p) {
  j = json{{"M", p.num_uavs},
           {"N", p.num_ugvs},
           {"T", p.num_slots},
           {"tau_s", p.slot_duration},
           {"v_max_mps", p.max_speed},
           {"h_min_m", p.min_altitude},
           {"h_max_m", p.max_altitude},
           {"theta_max_rad", p.max_turn_angle},
           {"d_min_m", p.min_separation},
           {"p_max_w", p.max_power},
           {"r_min_bps_hz", p.min_rate},
           {"noise_dbm", p.noise_dbm},
           {"ref_loss_db", p.ref_loss_db},
           {"eta", p.penalty_weight},
           {"epsilon", p.sca_tolerance},
           {"alpha", p.fitness_rate_weight},
           {"beta", p.fitness_speed_weight},
           {"gamma", p.fitness_angle_weight},
           {"kappa", p.fitness_building_weight},
           {"sigma_c", p.cross_rate},
           {"sigma_m", p.mutation_rate},
           {"p_iter", p.swarm_iterations},
           {"p_num", p.swarm_size},
           {"omega", p.inertia},
           {"h1", p.cognitive},
           {"h2", p.social},
           {"delta_m", p.cube_side}};
  if (p.velocity_cap) j["v_max_pso_m"] = *p.velocity_cap;
}

void from_json(const json& j, SystemParams& p) {
  read_opt(j, "M", p.num_uavs);
  read_opt(j, "N", p.num_ugvs);
  read_opt(j, "T", p.num_slots);
  read_opt(j, "tau_s", p.slot_duration);
  read_opt(j, "v_max_mps", p.max_speed);
  read_opt(j, "h_min_m", p.min_altitude);
  read_opt(j, "h_max_m", p.max_altitude);
  if (j.contains("theta_max_deg")) {
    double deg = 0.0;
    read_opt(j, "theta_max_deg", deg);
    p.max_turn_angle = deg * std::numbers::pi / 180.0;
  }
  read_opt(j, "theta_max_rad", p.max_turn_angle);
  read_opt(j, "d_min_m", p.min_separation);
  read_opt(j, "p_max_w", p.max_power);
  read_opt(j, "r_min_bps_hz", p.min_rate);
  read_opt(j, "noise_dbm", p.noise_dbm);
  read_opt(j, "ref_loss_db", p.ref_loss_db);
  read_opt(j, "eta", p.penalty_weight);
  read_opt(j, "epsilon", p.sca_tolerance);
  read_opt(j, "alpha", p.fitness_rate_weight);
  read_opt(j, "beta", p.fitness_speed_weight);
  read_opt(j, "gamma", p.fitness_angle_weight);
  read_opt(j, "kappa", p.fitness_building_weight);
  read_opt(j, "sigma_c", p.cross_rate);
  read_opt(j, "sigma_m", p.mutation_rate);
  read_opt(j, "p_iter", p.swarm_iterations);
  read_opt(j, "p_num", p.swarm_size);
  read_opt(j, "omega", p.inertia);
  read_opt(j, "h1", p.cognitive);
  read_opt(j, "h2", p.social);
  if (j.contains("v_max_pso_m")) {
    double cap = 0.0;
    read_opt(j, "v_max_pso_m", cap);
    p.velocity_cap = cap;
  }
  read_opt(j, "delta_m", p.cube_side);
}

void to_json(json& j, const Scenario& s) {
  j = json::object();
  j["params"] = s.params;
  j["extent"] = {{"x_min", s.extent.x_min}, {"y_min", s.extent.y_min}, {"x_max", s.extent.x_max}, {"y_max", s.extent.y_max}};
  json buildings = json::array();
  for (const Building& b : s.buildings.prisms()) buildings.push_back({b.x0, b.y0, b.x1, b.y1, b.height});
  j["buildings"] = buildings;
  json ugvs = json::array();
  for (const UgvPath& u : s.ugvs) {
    json wps = json::array();
    for (const Vec3& w : u.waypoints) wps.push_back(vec_json(w));
    ugvs.push_back({{"speed_mps", u.speed}, {"waypoints", wps}});
  }
  j["ugvs"] = ugvs;
  json uavs = json::array();
  for (const UavEndpoints& e : s.uav_endpoints) uavs.push_back({{"start", vec_json(e.start)}, {"end", vec_json(e.end)}});
  j["uavs"] = uavs;
  j["propagation"] = {{"ref_loss_db", s.propagation.ref_loss_db},
                      {"los_exponent", s.propagation.los_exponent},
                      {"nlos_exponent", s.propagation.nlos_exponent},
                      {"nlos_penalty_db", s.propagation.nlos_penalty_db},
                      {"shadowing_sigma_db", s.propagation.shadowing_sigma_db}};
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("<root>", "scenario must be a JSON object");
  Scenario s;
  if (auto it = j.find("params"); it != j.end()) {
    if (!it->is_object()) throw ValidationError("params", "must be an object");
    s.params = it->get<SystemParams>();
  }
  if (auto it = j.find("extent"); it != j.end()) {
    read_opt(*it, "x_min", s.extent.x_min);
    read_opt(*it, "y_min", s.extent.y_min);
    read_opt(*it, "x_max", s.extent.x_max);
    read_opt(*it, "y_max", s.extent.y_max);
  }
  if (auto it = j.find("buildings"); it != j.end()) {
    std::vector<Building> prisms;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& b = (*it)[i];
      if (!b.is_array() || b.size() != 5) {
        throw ValidationError("buildings[" + std::to_string(i) + "]", "expected [x0, y0, x1, y1, height]");
      }
      prisms.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>(),
                        b[4].get<double>()});
    }
    s.buildings = BuildingSet(std::move(prisms));
  }
  s.params.validate();
  if (auto it = j.find("ugvs"); it != j.end() && !it->empty()) {
    for (std::size_t n = 0; n < it->size(); ++n) {
      const json& u = (*it)[n];
      const std::string field = "ugvs[" + std::to_string(n) + "]";
      UgvPath path;
      read_opt(u, "speed_mps", path.speed);
      if (!u.contains("waypoints")) throw ValidationError(field + ".waypoints", "missing");
      for (std::size_t t = 0; t < u["waypoints"].size(); ++t) {
        path.waypoints.push_back(vec_from(u["waypoints"][t], field + ".waypoints[" + std::to_string(t) + "]"));
      }
      s.ugvs.push_back(std::move(path));
    }
  } else {
    s.ugvs = default_ugv_paths(s.params, s.extent);
  }
  if (auto it = j.find("uavs"); it != j.end()) {
    for (std::size_t m = 0; m < it->size(); ++m) {
      const json& u = (*it)[m];
      const std::string field = "uavs[" + std::to_string(m) + "]";
      if (!u.contains("start") || !u.contains("end")) throw ValidationError(field, "needs start and end");
      s.uav_endpoints.push_back({vec_from(u["start"], field + ".start"), vec_from(u["end"], field + ".end")});
    }
  }
  if (auto it = j.find("propagation"); it != j.end()) {
    read_opt(*it, "ref_loss_db", s.propagation.ref_loss_db);
    read_opt(*it, "los_exponent", s.propagation.los_exponent);
    read_opt(*it, "nlos_exponent", s.propagation.nlos_exponent);
    read_opt(*it, "nlos_penalty_db", s.propagation.nlos_penalty_db);
    read_opt(*it, "shadowing_sigma_db", s.propagation.shadowing_sigma_db);
  } else {
    s.propagation.ref_loss_db = s.params.ref_loss_db;
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << json(scenario).dump(2) << '\n';
}

std::vector<UgvPath> default_ugv_paths(const SystemParams& params, const SceneExtent& extent) {
  // Two convoys: UGVs 1-2 at 27.0 km/h heading +y in the lower-left of the
  // scene, UGVs 3-4 at 16.2 km/h heading +x in the upper-right.
  constexpr double kFastSpeed = 27.0 / 3.6;
  constexpr double kSlowSpeed = 16.2 / 3.6;
  const double w = extent.x_max - extent.x_min;
  const double l = extent.y_max - extent.y_min;
  std::vector<UgvPath> paths;
  for (int n = 0; n < params.num_ugvs; ++n) {
    const int convoy = (n / 2) % 2;
    const double lane = 15.0 * (n % 2) + 35.0 * (n / 4);
    UgvPath path;
    path.speed = convoy == 0 ? kFastSpeed : kSlowSpeed;
    const double step = path.speed * params.slot_duration;
    for (int t = 0; t < params.num_slots; ++t) {
      if (convoy == 0) {
        path.waypoints.push_back({extent.x_min + 0.2 * w + lane, extent.y_min + 0.1 * l + step * t, 0.0});
      } else {
        path.waypoints.push_back({extent.x_min + 0.45 * w + step * t, extent.y_min + 0.75 * l + lane, 0.0});
      }
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

Scenario make_synthetic_scenario(std::uint64_t seed, const SystemParams& params) {
  Scenario s;
  s.params = params;
  s.propagation.ref_loss_db = params.ref_loss_db;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double w = s.extent.x_max - s.extent.x_min;
  const double l = s.extent.y_max - s.extent.y_min;
  constexpr double kFastSpeed = 27.0 / 3.6;
  constexpr double kSlowSpeed = 16.2 / 3.6;
  constexpr double kLaneGap = 15.0;
  constexpr double kMargin = 10.0;

  // Convoy c lives in its own horizontal band so that the two convoys are far
  // apart, each pair travelling side by side on parallel lanes.
  const int convoys = (params.num_ugvs + 1) / 2;
  s.ugvs.assign(params.num_ugvs, {});
  for (int c = 0; c < convoys; ++c) {
    const double speed = c % 2 == 0 ? kFastSpeed : kSlowSpeed;
    const double length = speed * params.slot_duration * (params.num_slots - 1);
    const double band_lo = s.extent.y_min + l * c / convoys;
    const double band_hi = s.extent.y_min + l * (c + 1) / convoys;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw ValidationError("ugvs", "cannot place convoy inside the scene");
      const double heading = 2.0 * std::numbers::pi * unit(rng);
      const Vec3 dir{std::cos(heading), std::sin(heading), 0.0};
      const Vec3 normal{-dir.y, dir.x, 0.0};
      const Vec3 start{s.extent.x_min + kMargin + (w - 2 * kMargin) * unit(rng),
                       band_lo + kMargin + (band_hi - band_lo - 2 * kMargin) * unit(rng), 0.0};
      bool inside = true;
      std::vector<UgvPath> lanes;
      for (int k = 0; k < 2 && 2 * c + k < params.num_ugvs; ++k) {
        UgvPath path;
        path.speed = speed;
        for (int t = 0; t < params.num_slots; ++t) {
          const double along = params.num_slots > 1 ? length * t / (params.num_slots - 1) : 0.0;
          Vec3 p = start + along * dir + (kLaneGap * k) * normal;
          p.z = 0.0;
          if (p.x < s.extent.x_min + kMargin || p.x > s.extent.x_max - kMargin || p.y < band_lo + 1.0 ||
              p.y > band_hi - 1.0) {
            inside = false;
          }
          path.waypoints.push_back(p);
        }
        lanes.push_back(std::move(path));
      }
      if (!inside) continue;
      for (std::size_t k = 0; k < lanes.size(); ++k) s.ugvs[2 * c + k] = std::move(lanes[k]);
      break;
    }
  }

  // Buildings: axis-aligned prisms kept clear of every UGV waypoint and of
  // each other.
  const int count = 6 + static_cast<int>(unit(rng) * 5.0);
  std::vector<Building> prisms;
  for (int attempt = 0; attempt < 2000 && static_cast<int>(prisms.size()) < count; ++attempt) {
    const double bw = 20.0 + 30.0 * unit(rng);
    const double bl = 20.0 + 30.0 * unit(rng);
    const double x0 = s.extent.x_min + 5.0 + (w - bw - 10.0) * unit(rng);
    const double y0 = s.extent.y_min + 5.0 + (l - bl - 10.0) * unit(rng);
    const double height = 15.0 + 35.0 * unit(rng);
    const Building b{x0, y0, x0 + bw, y0 + bl, std::min(height, params.max_altitude - 5.0)};
    const auto near_footprint = [&](const Vec3& p) {
      return p.x > b.x0 - 8.0 && p.x < b.x1 + 8.0 && p.y > b.y0 - 8.0 && p.y < b.y1 + 8.0;
    };
    bool clear = true;
    for (const UgvPath& u : s.ugvs) {
      for (std::size_t t = 0; t < u.waypoints.size(); ++t) {
        const Vec3 a = u.waypoints[t];
        const Vec3 e = t + 1 < u.waypoints.size() ? u.waypoints[t + 1] : a;
        for (int k = 0; k < 4; ++k) clear = clear && !near_footprint(a + (k / 4.0) * (e - a));
      }
    }
    for (const Building& o : prisms) {
      if (b.x0 < o.x1 + 10.0 && o.x0 < b.x1 + 10.0 && b.y0 < o.y1 + 10.0 && o.y0 < b.y1 + 10.0) clear = false;
    }
    if (clear) prisms.push_back(b);
  }
  s.buildings = BuildingSet(std::move(prisms));

  // UAV m shadows convoy m mod convoys at mid altitude; extra UAVs on the
  // same convoy stack upwards by d_min + 1.
  const int T = params.num_slots;
  for (int m = 0; m < params.num_uavs; ++m) {
    const int c = m % convoys;
    const int first = 2 * c;
    const int count = std::min(2, params.num_ugvs - first);
    Vec3 start{}, end{};
    for (int k = 0; k < count; ++k) {
      start = start + s.ugvs[first + k].waypoints.front();
      end = end + s.ugvs[first + k].waypoints[T - 1];
    }
    start = (1.0 / count) * start;
    end = (1.0 / count) * end;
    const double z = std::min(0.5 * (params.min_altitude + params.max_altitude) +
                                  (m / convoys) * (params.min_separation + 1.0),
                              params.max_altitude);
    start.z = z;
    end.z = z;
    s.uav_endpoints.push_back({start, end});
  }
  s.validate();
  return s;
}

RadioMap generate_synthetic_map(const Scenario& scenario, const PropagationModel& model, std::uint64_t seed) {
  std::vector<std::vector<Vec3>> tx(scenario.ugvs.size());
  for (std::size_t n = 0; n < scenario.ugvs.size(); ++n) tx[n] = scenario.ugvs[n].waypoints;
  return generate_synthetic_map(scenario.grid(), scenario.buildings, tx, model, seed);
}

double turn_angle(const TrajectorySet& traj, int m, int t) {
  if (t <= 0 || t >= traj.slots() - 1) return 0.0;
  const Vec3 d1 = traj.point(m, t) - traj.point(m, t - 1);
  const Vec3 d2 = traj.point(m, t + 1) - traj.point(m, t);
  const double n1 = d1.norm();
  const double n2 = d2.norm();
  if (n1 < 1e-9 || n2 < 1e-9) return 0.0;
  return std::acos(std::clamp(d1.dot(d2) / (n1 * n2), -1.0, 1.0));
}

KinematicsReport check_kinematics(const TrajectorySet& traj, const Scenario& scenario) {
  const SystemParams& p = scenario.params;
  KinematicsReport report;
  const Vec3 lo = scenario.search_lower();
  const Vec3 hi = scenario.search_upper();
  for (int m = 0; m < traj.uavs(); ++m) {
    for (int t = 0; t < traj.slots(); ++t) {
      const Vec3 pos = traj.point(m, t);
      if (t > 0) {
        const double v = (pos - traj.point(m, t - 1)).norm() / p.slot_duration;
        if (v > p.max_speed) report.speed.push_back({m, t, v - p.max_speed});
      }
      const double theta = turn_angle(traj, m, t);
      if (theta > p.max_turn_angle) report.turn.push_back({m, t, theta - p.max_turn_angle});
      if (pos.z < p.min_altitude) report.altitude.push_back({m, t, p.min_altitude - pos.z});
      if (pos.z > p.max_altitude) report.altitude.push_back({m, t, pos.z - p.max_altitude});
      if (const int b = scenario.buildings.containing(pos); b >= 0) {
        report.building.push_back({m, t, scenario.buildings.prisms()[b].height - pos.z});
      }
      if (pos.x < lo.x || pos.x > hi.x || pos.y < lo.y || pos.y > hi.y) report.extent.push_back({m, t, 0.0});
      for (int o = m + 1; o < traj.uavs(); ++o) {
        const double d = (pos - traj.point(o, t)).norm();
        if (d < p.min_separation) report.separation.push_back({m, t, p.min_separation - d, o});
      }
    }
  }
  return report;
}

}  // namespace agcoop
