#include <fstream>
#include <iomanip>

#include <nlohmann/json.hpp>

#include "agcoop/pipeline.hpp"

namespace agcoop {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json violations_json(const KinematicsReport& r) {
  auto list = [](const std::vector<Violation>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : v) a.push_back({{"uav", x.uav}, {"slot", x.slot}, {"amount", x.amount}, {"other", x.other}});
    return a;
  };
  return {{"speed", list(r.speed)},       {"turn", list(r.turn)},
          {"altitude", list(r.altitude)}, {"building", list(r.building)},
          {"separation", list(r.separation)}, {"extent", list(r.extent)}};
}

nlohmann::json terms_json(const FitnessTerms& f) {
  return {{"min_sum_rate", f.min_sum_rate},
          {"speed_excess", f.speed_excess},
          {"angle_excess", f.angle_excess},
          {"building_excess", f.building_excess},
          {"value", f.value}};
}

}  // namespace

nlohmann::json summary_json(const PipelineResult& r) {
  nlohmann::json j;
  j["label"] = r.label;
  j["ok"] = r.ok;
  j["mu"] = r.mu;
  j["ugv_average"] = r.rates.ugv_average;
  const double mean = r.power.mean();
  j["mean_power"] = mean;
  j["power_saving"] = 1.0 - mean / r.params.max_power;
  j["fitness"] = terms_json(r.fitness);
  j["violations"] = violations_json(r.violations);
  j["violation_count"] = r.violations.total();
  j["outer_rounds"] = static_cast<int>(r.outer_trace.size()) - 1;
  j["diagnostics"] = r.diagnostics;
  j["config"] = r.config_snapshot();
  return j;
}

void emit_report(const PipelineResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_rate_csv(r.rates, r.schedule, r.power, dir / "rates.csv");

  {
    auto out = open_out(dir / "outer_trace.csv");
    out << "round,mu,scheduling_mu,best_fitness,accepted\n";
    for (const auto& row : r.outer_trace)
      out << row.round << ',' << row.mu << ',' << row.scheduling_mu << ',' << row.best_fitness << ','
          << (row.accepted ? 1 : 0) << '\n';
  }
  {
    auto out = open_out(dir / "scheduling_trace.csv");
    out << "round,iteration,objective,mu,penalty,max_binary_gap\n";
    for (std::size_t k = 0; k < r.scheduling_traces.size(); ++k)
      for (const auto& row : r.scheduling_traces[k])
        out << k + 1 << ',' << row.iteration << ',' << row.objective << ',' << row.mu << ',' << row.penalty << ','
            << row.max_binary_gap << '\n';
  }
  {
    auto out = open_out(dir / "warm_start_trace.csv");
    out << "round,block_round,block,los_mu\n";
    for (std::size_t k = 0; k < r.warm_start_traces.size(); ++k)
      for (const auto& row : r.warm_start_traces[k])
        out << k + 1 << ',' << row.round << ',' << row.block << ',' << row.mu << '\n';
  }
  {
    auto out = open_out(dir / "swarm_trace.csv");
    out << "round,iteration,fitness,min_sum_rate,speed_excess,angle_excess,building_excess\n";
    for (std::size_t k = 0; k < r.swarm_traces.size(); ++k)
      for (const auto& row : r.swarm_traces[k])
        out << k + 1 << ',' << row.iteration << ',' << row.best.value << ',' << row.best.min_sum_rate << ','
            << row.best.speed_excess << ',' << row.best.angle_excess << ',' << row.best.building_excess << '\n';
  }
  {
    auto out = open_out(dir / "power_trace.csv");
    out << "iteration,mu,mean_power,power_saving\n";
    for (const auto& row : r.power_trace)
      out << row.iteration << ',' << row.mu << ',' << row.mean_power << ',' << row.power_saving << '\n';
  }
  {
    // gnuplot-friendly: one block per outer round
    auto out = open_out(dir / "fitness.dat");
    out << "# round iteration best_fitness\n";
    for (std::size_t k = 0; k < r.swarm_traces.size(); ++k) {
      if (k > 0) out << "\n\n";
      for (const auto& row : r.swarm_traces[k]) out << k + 1 << ' ' << row.iteration << ' ' << row.best.value << '\n';
    }
  }

  nlohmann::json traj;
  traj["slot_duration"] = r.params.slot_duration;
  traj["uavs"] = nlohmann::json::array();
  for (int m = 0; m < r.trajectory.uavs(); ++m) {
    nlohmann::json pts = nlohmann::json::array();
    for (int t = 0; t < r.trajectory.slots(); ++t) {
      const Vec3 p = r.trajectory.point(m, t);
      pts.push_back({p.x, p.y, p.z});
    }
    traj["uavs"].push_back({{"waypoints", pts}});
  }
  write_json(traj, dir / "trajectory.json");
  write_json(summary_json(r), dir / "summary.json");

  const StageTimings& tm = r.timings;
  write_json({{"scheduling_s", tm.scheduling_s},
              {"swarm_s", tm.swarm_s},
              {"power_s", tm.power_s},
              {"total_s", tm.total_s}},
             dir / "timings.json");
}

void write_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = open_out(path);
  out << "# max_power mu mean_power power_saving\n";
  for (const auto& row : rows)
    out << row.max_power << ' ' << row.mu << ' ' << row.mean_power << ' ' << row.power_saving << '\n';
}

}  // namespace agcoop
