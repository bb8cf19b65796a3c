#include "agcoop/trajectory_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "agcoop/parallel.hpp"

namespace agcoop {

namespace {

constexpr double kBuildingClearance = 0.5;
constexpr double kSpeedShrink = 0.999;
constexpr double kTurnSlack = 2e-3;

Vec3 clamp_box(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y), std::clamp(p.z, lo.z, hi.z)};
}

bool in_box(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
}

// Smallest move out of every prism: over the roof or past the nearest face.
Vec3 escape_buildings(Vec3 p, const Scenario& s, const Vec3& lo, const Vec3& hi) {
  for (int pass = 0; pass < 4; ++pass) {
    const int b = s.buildings.containing(p);
    if (b < 0) return p;
    const Building& prism = s.buildings.prisms()[b];
    std::vector<Vec3> options;
    if (prism.height + kBuildingClearance <= hi.z) options.push_back({p.x, p.y, prism.height + kBuildingClearance});
    options.push_back({prism.x0 - kBuildingClearance, p.y, p.z});
    options.push_back({prism.x1 + kBuildingClearance, p.y, p.z});
    options.push_back({p.x, prism.y0 - kBuildingClearance, p.z});
    options.push_back({p.x, prism.y1 + kBuildingClearance, p.z});
    Vec3 best = p;
    double best_d = std::numeric_limits<double>::infinity();
    for (const Vec3& o : options) {
      if (!in_box(o, lo, hi)) continue;
      const double d = (o - p).squared_norm();
      if (d < best_d) {
        best_d = d;
        best = o;
      }
    }
    if (best_d == std::numeric_limits<double>::infinity()) return p;
    p = best;
  }
  return p;
}

double angle_between(const Vec3& a, const Vec3& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-9 || nb < 1e-9) return 0.0;
  return std::acos(std::clamp(a.dot(b) / (na * nb), -1.0, 1.0));
}

// Rotate d2 in the plane of (d1, d2) so that it makes angle phi with d1,
// keeping its length.
Vec3 rotate_towards(const Vec3& d1, const Vec3& d2, double phi) {
  const double n1 = d1.norm();
  const double n2 = d2.norm();
  const Vec3 u1 = (1.0 / n1) * d1;
  Vec3 w = d2 - d2.dot(u1) * u1;
  if (w.norm() < 1e-9 * n2) {
    // d2 is (anti)parallel to d1: pick any perpendicular, preferring horizontal
    w = std::abs(u1.z) < 0.9 ? Vec3{-u1.y, u1.x, 0.0} : Vec3{1.0, 0.0, 0.0};
    w = w - w.dot(u1) * u1;
  }
  const Vec3 u2 = (1.0 / w.norm()) * w;
  return n2 * (std::cos(phi) * u1 + std::sin(phi) * u2);
}

bool waypoint_ok(const Vec3& p, const Scenario& s, const Vec3& lo, const Vec3& hi) {
  return in_box(p, lo, hi) && s.buildings.containing(p) < 0;
}

}  // namespace

TrajectorySet repair_trajectory(const TrajectorySet& traj, const Scenario& s) {
  const int M = traj.uavs();
  const int T = traj.slots();
  const SystemParams& p = s.params;
  const Vec3 lo = s.search_lower();
  const Vec3 hi = s.search_upper();
  const double step_cap = p.max_step();
  const double d_min = p.min_separation;
  TrajectorySet out(M, T);

  // slot 0: no motion constraints, only placement and separation
  for (int m = 0; m < M; ++m) {
    Vec3 q = traj.point(m, 0);
    if (!std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(q.z)) q = 0.5 * (lo + hi);
    q = escape_buildings(clamp_box(q, lo, hi), s, lo, hi);
    auto separated = [&](const Vec3& c) {
      for (int o = 0; o < m; ++o) {
        if ((c - out.point(o, 0)).norm() < d_min) return false;
      }
      return true;
    };
    if (!(waypoint_ok(q, s, lo, hi) && separated(q))) {
      bool placed = false;
      for (int ring = 1; ring <= 12 && !placed; ++ring) {
        for (int k = 0; k < 8 && !placed; ++k) {
          const double phi = 2.0 * std::numbers::pi * k / 8.0;
          const double r = 1.05 * d_min * ring;
          const Vec3 c = clamp_box(q + Vec3{r * std::cos(phi), r * std::sin(phi), 0.0}, lo, hi);
          if (waypoint_ok(c, s, lo, hi) && separated(c)) {
            q = c;
            placed = true;
          }
        }
        for (double dz : {1.05 * d_min * ring, -1.05 * d_min * ring}) {
          const Vec3 c = clamp_box(q + Vec3{0.0, 0.0, dz}, lo, hi);
          if (!placed && waypoint_ok(c, s, lo, hi) && separated(c)) {
            q = c;
            placed = true;
          }
        }
      }
    }
    out.set_point(m, 0, q);
  }

  for (int t = 1; t < T; ++t) {
    for (int m = 0; m < M; ++m) {
      const Vec3 prev = out.point(m, t - 1);
      Vec3 q = traj.point(m, t);
      if (!std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(q.z)) q = prev;
      q = escape_buildings(clamp_box(q, lo, hi), s, lo, hi);
      Vec3 d = q - prev;
      if (d.norm() > kSpeedShrink * step_cap) d = (kSpeedShrink * step_cap / d.norm()) * d;
      if (t >= 2) {
        const Vec3 d1 = prev - out.point(m, t - 2);
        if (angle_between(d1, d) > p.max_turn_angle - kTurnSlack && d1.norm() >= 1e-9 && d.norm() >= 1e-9) {
          d = rotate_towards(d1, d, std::max(0.0, p.max_turn_angle - 2.0 * kTurnSlack));
        }
      }
      q = prev + d;
      bool ok = waypoint_ok(q, s, lo, hi) && (q - prev).norm() <= step_cap;
      if (ok && t >= 2) ok = angle_between(prev - out.point(m, t - 2), q - prev) <= p.max_turn_angle;
      out.set_point(m, t, ok ? q : prev);
    }
    bool clash = false;
    for (int m = 0; m < M && !clash; ++m) {
      for (int o = m + 1; o < M; ++o) {
        if ((out.point(m, t) - out.point(o, t)).norm() < d_min) {
          clash = true;
          break;
        }
      }
    }
    if (clash) {
      for (int m = 0; m < M; ++m) out.set_point(m, t, out.point(m, t - 1));
    }
  }
  return out;
}

TrajectorySet initial_trajectory(const Scenario& s) {
  const SystemParams& p = s.params;
  const int M = p.num_uavs;
  const int T = p.num_slots;
  const double mid_z = 0.5 * (p.min_altitude + p.max_altitude);
  TrajectorySet traj(M, T);
  if (!s.uav_endpoints.empty()) {
    for (int m = 0; m < M; ++m) {
      const Vec3 a{s.uav_endpoints[m].start.x, s.uav_endpoints[m].start.y, mid_z};
      const Vec3 b{s.uav_endpoints[m].end.x, s.uav_endpoints[m].end.y, mid_z};
      for (int t = 0; t < T; ++t) {
        const double f = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
        traj.set_point(m, t, a + f * (b - a));
      }
    }
  } else {
    const double cx = 0.5 * (s.extent.x_min + s.extent.x_max);
    const double cy = 0.5 * (s.extent.y_min + s.extent.y_max);
    for (int m = 0; m < M; ++m) {
      const double x = cx + (m - 0.5 * (M - 1)) * 2.0 * p.min_separation;
      for (int t = 0; t < T; ++t) traj.set_point(m, t, {x, cy, mid_z});
    }
  }
  return repair_trajectory(traj, s);
}

// ---- swarm ---------------------------------------------------------------

SwarmConfig SwarmConfig::from_params(const SystemParams& params, std::uint64_t seed) {
  SwarmConfig c;
  c.size = params.swarm_size;
  c.iterations = params.swarm_iterations;
  c.inertia = params.inertia;
  c.cognitive = params.cognitive;
  c.social = params.social;
  c.cross_rate = params.cross_rate;
  c.mutation_rate = params.mutation_rate;
  c.velocity_cap = params.pso_velocity_cap();
  c.init_jitter = 2.0 * params.cube_side;
  c.seed = seed;
  return c;
}

void SwarmConfig::validate() const {
  if (size < 2) throw ValidationError("p_num", "swarm needs at least two particles");
  if (iterations < 0) throw ValidationError("p_iter", "must be >= 0");
  if (!(cross_rate >= 0.0 && cross_rate <= 1.0)) throw ValidationError("sigma_c", "must lie in [0, 1]");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ValidationError("sigma_m", "must lie in [0, 1]");
  if (!(velocity_cap > 0.0)) throw ValidationError("v_max_pso_m", "must be > 0");
  if (!(init_jitter >= 0.0)) throw ValidationError("init_jitter", "must be >= 0");
}

const char* to_string(SwarmKind kind) {
  switch (kind) {
    case SwarmKind::ws_pso_cm:
      return "ws-pso-cm";
    case SwarmKind::pso_cm:
      return "pso-cm";
    case SwarmKind::pso:
      return "pso";
    case SwarmKind::ga:
      return "ga";
  }
  return "unknown";
}

namespace {

void clamp_coords(std::span<double> xyz, const Vec3& lo, const Vec3& hi) {
  for (std::size_t i = 0; i < xyz.size(); i += 3) {
    xyz[i] = std::clamp(xyz[i], lo.x, hi.x);
    xyz[i + 1] = std::clamp(xyz[i + 1], lo.y, hi.y);
    xyz[i + 2] = std::clamp(xyz[i + 2], lo.z, hi.z);
  }
}

void update_gbest(Swarm& swarm) {
  for (const Particle& p : swarm.particles) {
    if (p.best_fitness > swarm.gbest_fitness) {
      swarm.gbest_fitness = p.best_fitness;
      swarm.gbest = p.best;
      swarm.gbest_terms = p.best_terms;
    }
  }
}

}  // namespace

void pso_step(Swarm& swarm, const SwarmConfig& config, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto g = swarm.gbest.coords();
  for (Particle& p : swarm.particles) {
    const double r1 = unit(rng);
    const double r2 = unit(rng);
    auto q = p.position.coords();
    const auto b = p.best.coords();
    for (std::size_t i = 0; i < q.size(); ++i) {
      double v = config.inertia * p.velocity[i] + config.cognitive * r1 * (b[i] - q[i]) +
                 config.social * r2 * (g[i] - q[i]);
      v = std::clamp(v, -config.velocity_cap, config.velocity_cap);
      p.velocity[i] = v;
      q[i] += v;
    }
    clamp_coords(q, swarm.lower, swarm.upper);
  }
}

void cross(Swarm& swarm, double sigma_c, std::mt19937_64& rng) {
  const std::size_t k = swarm.particles.size();
  if (k < 2 || sigma_c <= 0.0) return;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> other(0, k - 2);
  std::vector<TrajectorySet> snapshot;
  snapshot.reserve(k);
  for (const Particle& p : swarm.particles) snapshot.push_back(p.position);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(unit(rng) < sigma_c)) continue;
    std::size_t j = other(rng);
    if (j >= i) ++j;
    const double r3 = unit(rng);
    auto q = swarm.particles[i].position.coords();
    const auto a = snapshot[i].coords();
    const auto b = snapshot[j].coords();
    for (std::size_t c = 0; c < q.size(); ++c) q[c] = r3 * a[c] + (1.0 - r3) * b[c];
  }
}

void mutate(Swarm& swarm, double sigma_m, double v_max, std::mt19937_64& rng) {
  if (sigma_m <= 0.0) return;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  for (Particle& p : swarm.particles) {
    if (!(unit(rng) < sigma_m)) continue;
    auto q = p.position.coords();
    for (double& c : q) c += sym(rng) * v_max;
    clamp_coords(q, swarm.lower, swarm.upper);
  }
}

void evaluate(Swarm& swarm, const FitnessContext& ctx) {
  std::vector<FitnessTerms> terms(swarm.particles.size());
  parallel_for(swarm.particles.size(), [&](std::size_t i) { terms[i] = fitness(swarm.particles[i].position, ctx); });
  for (std::size_t i = 0; i < swarm.particles.size(); ++i) {
    Particle& p = swarm.particles[i];
    p.fitness = terms[i].value;
    if (terms[i].value > p.best_fitness) {
      p.best_fitness = terms[i].value;
      p.best = p.position;
      p.best_terms = terms[i];
    }
  }
  update_gbest(swarm);
}

namespace {

Swarm make_swarm(const Scenario& scenario, int size, int uavs, int slots) {
  Swarm swarm;
  swarm.lower = scenario.search_lower();
  swarm.upper = scenario.search_upper();
  swarm.particles.resize(size);
  for (Particle& p : swarm.particles) {
    p.position = TrajectorySet(uavs, slots);
    p.velocity.assign(p.position.coords().size(), 0.0);
  }
  return swarm;
}

void seed_around(Swarm& swarm, const TrajectorySet& center, double jitter, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  for (std::size_t k = 0; k < swarm.particles.size(); ++k) {
    TrajectorySet& q = swarm.particles[k].position;
    q = center;
    if (k == 0) continue;
    for (double& c : q.coords()) c += sym(rng) * jitter;
    clamp_coords(q.coords(), swarm.lower, swarm.upper);
  }
}

void seed_uniform(Swarm& swarm, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Particle& p : swarm.particles) {
    auto q = p.position.coords();
    for (std::size_t i = 0; i < q.size(); i += 3) {
      q[i] = swarm.lower.x + (swarm.upper.x - swarm.lower.x) * unit(rng);
      q[i + 1] = swarm.lower.y + (swarm.upper.y - swarm.lower.y) * unit(rng);
      q[i + 2] = swarm.lower.z + (swarm.upper.z - swarm.lower.z) * unit(rng);
    }
  }
}

SwarmResult finish(const Swarm& swarm, std::vector<SwarmTraceRow> trace) {
  SwarmResult r;
  r.best = swarm.gbest;
  r.terms = swarm.gbest_terms;
  r.trace = std::move(trace);
  return r;
}

SwarmResult run_pso_loop(Swarm& swarm, const FitnessContext& ctx, const SwarmConfig& config, double sigma_c,
                         double sigma_m, std::mt19937_64& rng) {
  std::vector<SwarmTraceRow> trace{{0, swarm.gbest_terms}};
  for (int it = 1; it <= config.iterations; ++it) {
    pso_step(swarm, config, rng);
    evaluate(swarm, ctx);
    cross(swarm, sigma_c, rng);
    mutate(swarm, sigma_m, config.velocity_cap, rng);
    trace.push_back({it, swarm.gbest_terms});
  }
  return finish(swarm, std::move(trace));
}

SwarmResult run_ga_loop(Swarm& swarm, const FitnessContext& ctx, const SwarmConfig& config, std::mt19937_64& rng) {
  std::vector<SwarmTraceRow> trace{{0, swarm.gbest_terms}};
  const std::size_t k = swarm.particles.size();
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::vector<TrajectorySet> next(k);
  for (int it = 1; it <= config.iterations; ++it) {
    next[0] = swarm.gbest;
    for (std::size_t i = 1; i < k; ++i) {
      const std::size_t a = pick(rng);
      const std::size_t b = pick(rng);
      next[i] = swarm.particles[a].fitness >= swarm.particles[b].fitness ? swarm.particles[a].position
                                                                        : swarm.particles[b].position;
    }
    for (std::size_t i = 0; i < k; ++i) swarm.particles[i].position = next[i];
    const TrajectorySet elite = swarm.particles[0].position;
    cross(swarm, config.cross_rate, rng);
    mutate(swarm, config.mutation_rate, config.velocity_cap, rng);
    swarm.particles[0].position = elite;
    evaluate(swarm, ctx);
    trace.push_back({it, swarm.gbest_terms});
  }
  return finish(swarm, std::move(trace));
}

}  // namespace

SwarmResult run_ws_pso_cm(const Scenario& scenario, const RadioMap& map, const Schedule& schedule,
                          const PowerProfile& power, const SwarmConfig& config, const TrajectorySet& traj_init,
                          const WarmStartOptions& warm_options) {
  config.validate();
  WarmStartResult warm = warm_start_P3(scenario, schedule, power, traj_init, warm_options);
  std::mt19937_64 rng(config.seed);
  Swarm swarm = make_swarm(scenario, config.size, traj_init.uavs(), traj_init.slots());
  seed_around(swarm, warm.trajectory, config.init_jitter, rng);
  const FitnessContext ctx{map, schedule, power, scenario};
  evaluate(swarm, ctx);
  // the warm start itself is the incumbent before any swarm move
  const Particle& lead = swarm.particles.front();
  swarm.gbest = lead.position;
  swarm.gbest_fitness = lead.best_fitness;
  swarm.gbest_terms = lead.best_terms;
  SwarmResult r = run_pso_loop(swarm, ctx, config, config.cross_rate, config.mutation_rate, rng);
  r.warm = std::move(warm);
  return r;
}

SwarmResult run_baseline(SwarmKind kind, const Scenario& scenario, const RadioMap& map, const Schedule& schedule,
                         const PowerProfile& power, const SwarmConfig& config) {
  if (kind == SwarmKind::ws_pso_cm) {
    return run_ws_pso_cm(scenario, map, schedule, power, config, initial_trajectory(scenario));
  }
  config.validate();
  std::mt19937_64 rng(config.seed);
  Swarm swarm = make_swarm(scenario, config.size, scenario.params.num_uavs, scenario.params.num_slots);
  seed_uniform(swarm, rng);
  const FitnessContext ctx{map, schedule, power, scenario};
  evaluate(swarm, ctx);
  switch (kind) {
    case SwarmKind::pso_cm:
      return run_pso_loop(swarm, ctx, config, config.cross_rate, config.mutation_rate, rng);
    case SwarmKind::pso:
      return run_pso_loop(swarm, ctx, config, 0.0, 0.0, rng);
    case SwarmKind::ga:
      return run_ga_loop(swarm, ctx, config, rng);
    case SwarmKind::ws_pso_cm:
      break;
  }
  return {};
}

}  // namespace agcoop
