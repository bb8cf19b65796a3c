#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agcoop/pipeline.hpp"
#include "oracles.hpp"

namespace {

using agcoop::PipelineConfig;
using agcoop::RadioMap;
using agcoop::Scenario;

struct Common {
  std::string scenario;
  std::string map;
  std::uint64_t seed{1};
  std::string out{"out"};
  std::optional<int> iters;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--scenario", c.scenario, "scenario JSON (default: synthetic from --seed)");
  cmd->add_option("--map", c.map, "radio map file (default: generated from the scenario)");
  cmd->add_option("--seed", c.seed, "RNG seed");
  if (with_out) cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--iters", c.iters, "swarm iterations (P_iter)");
}

Scenario scenario_of(const Common& c) {
  if (!c.scenario.empty()) return agcoop::load_scenario(c.scenario);
  return agcoop::make_synthetic_scenario(c.seed);
}

RadioMap map_of(const Common& c, const Scenario& s) {
  if (!c.map.empty()) return agcoop::load_map(c.map);
  return agcoop::generate_synthetic_map(s, s.propagation, c.seed);
}

PipelineConfig config_of(const Common& c) {
  PipelineConfig cfg;
  cfg.seed = c.seed;
  cfg.swarm_iterations = c.iters;
  return cfg;
}

void make_parent(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void print_summary(const agcoop::PipelineResult& r) {
  nlohmann::json j = agcoop::summary_json(r);
  j.erase("config");
  std::cout << j.dump(2) << '\n';
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw agcoop::ValidationError("pmax-list", "not a number: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw agcoop::ValidationError("pmax-list", "empty list");
  return out;
}

nlohmann::json run_oracle(std::uint64_t seed) {
  using namespace agcoop;
  nlohmann::json j;
  const Scenario tiny = oracle::tiny_scenario();
  const RadioMap tiny_map = oracle::tiny_map(tiny, seed);
  PipelineConfig cfg;
  cfg.seed = seed;
  const PipelineResult r = run_algorithm1(tiny, tiny_map, cfg);
  const oracle::TinyOptimum best = oracle::brute_force(tiny, tiny_map);
  j["tiny"] = {{"algorithm_mu", r.mu},
               {"exhaustive_mu", best.mu},
               {"ratio", best.mu > 0.0 ? r.mu / best.mu : 0.0},
               {"evaluations", best.evaluations}};

  const Scenario two = oracle::two_link_scenario(seed);
  const RadioMap two_map = generate_synthetic_map(two, two.propagation, seed);
  Schedule a(2, 2, 1);
  a(0, 0, 0) = 1.0;
  a(1, 1, 0) = 1.0;
  TrajectorySet q(2, 1);
  q.set_point(0, 0, two.ugv_position(0, 0) + Vec3{0.0, 0.0, 15.0});
  q.set_point(1, 0, two.ugv_position(1, 0) + Vec3{0.0, 0.0, 15.0});
  const PowerResult pr = solve_P2(two_map, a, q, two.params, PowerProfile(2, 1, 0.5 * two.params.max_power));
  const oracle::PowerOptimum grid = oracle::power_grid_search(two_map, a, q, two.params);
  j["power"] = {{"sca_mu", pr.mu}, {"grid_mu", grid.mu}, {"ratio", grid.mu > 0.0 ? pr.mu / grid.mu : 0.0}};
  return j;
}

int fail(const std::string& kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cout << j.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV-UGV cooperative data collection planner"};
  app.require_subcommand(1);

  Common gen;
  auto* genscenario = app.add_subcommand("genscenario", "write a seeded synthetic scenario");
  genscenario->add_option("--seed", gen.seed, "RNG seed");
  genscenario->add_option("--out", gen.out, "scenario JSON path")->required();

  Common gm;
  auto* genmap = app.add_subcommand("genmap", "generate a radio map for a scenario");
  genmap->add_option("--scenario", gm.scenario, "scenario JSON (default: synthetic from --seed)");
  genmap->add_option("--seed", gm.seed, "RNG seed");
  genmap->add_option("--out", gm.out, "map file path")->required();

  Common sv;
  auto* solve = app.add_subcommand("solve", "run the full block-coordinate planner");
  add_common(solve, sv);

  Common bl;
  std::string kind;
  auto* baseline = app.add_subcommand("baseline", "run a comparison pipeline");
  add_common(baseline, bl);
  baseline->add_option("--kind", kind, "baseline")
      ->required()
      ->check(CLI::IsMember({"pso", "pso-cm", "ga", "rr", "fp"}));

  Common sw;
  std::string pmax_list{"0.5,1,1.5,2,2.5,3"};
  auto* sweep = app.add_subcommand("sweep", "planner once per P_max value");
  add_common(sweep, sw);
  sweep->add_option("--pmax-list", pmax_list, "comma-separated P_max values in W");

  Common orc;
  auto* oracle_cmd = app.add_subcommand("oracle", "compare against exhaustive search on tiny instances");
  orc.seed = 7;
  oracle_cmd->add_option("--seed", orc.seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*genscenario) {
      make_parent(gen.out);
      agcoop::save_scenario(agcoop::make_synthetic_scenario(gen.seed), gen.out);
    } else if (*genmap) {
      const Scenario s = scenario_of(gm);
      const RadioMap map = agcoop::generate_synthetic_map(s, s.propagation, gm.seed);
      make_parent(gm.out);
      agcoop::save_map(map, gm.out);
      agcoop::write_map_sidecar(map, gm.out);
    } else if (*solve) {
      const Scenario s = scenario_of(sv);
      const RadioMap map = map_of(sv, s);
      const auto r = agcoop::run_algorithm1(s, map, config_of(sv));
      agcoop::emit_report(r, sv.out);
      print_summary(r);
      if (!r.ok) return 1;
    } else if (*baseline) {
      const Scenario s = scenario_of(bl);
      const RadioMap map = map_of(bl, s);
      const PipelineConfig cfg = config_of(bl);
      agcoop::PipelineResult r;
      if (kind == "rr") r = agcoop::run_rr_baseline(s, map, cfg);
      else if (kind == "fp") r = agcoop::run_fp_baseline(s, map, cfg);
      else if (kind == "pso") r = agcoop::run_swarm_baseline(agcoop::SwarmKind::pso, s, map, cfg);
      else if (kind == "ga") r = agcoop::run_swarm_baseline(agcoop::SwarmKind::ga, s, map, cfg);
      else r = agcoop::run_swarm_baseline(agcoop::SwarmKind::pso_cm, s, map, cfg);
      agcoop::emit_report(r, bl.out);
      print_summary(r);
      if (!r.ok) return 1;
    } else if (*sweep) {
      const Scenario s = scenario_of(sw);
      const RadioMap map = map_of(sw, s);
      const auto rows = agcoop::sweep_max_power(s, map, parse_list(pmax_list), config_of(sw));
      agcoop::write_sweep(rows, std::filesystem::path(sw.out) / "sweep.dat");
      nlohmann::json j = nlohmann::json::array();
      for (const auto& row : rows)
        j.push_back({{"max_power", row.max_power}, {"mu", row.mu}, {"mean_power", row.mean_power},
                     {"power_saving", row.power_saving}});
      std::cout << j.dump(2) << '\n';
    } else if (*oracle_cmd) {
      std::cout << run_oracle(orc.seed).dump(2) << '\n';
    }
  } catch (const agcoop::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("io", e.what());
  }
  return 0;
}
