#include "agcoop/convex_core.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "agcoop/types.hpp"

namespace agcoop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

std::span<const double> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void add_affine_grad(const AffineExpr& e, double scale, Vector& g) {
  for (const auto& [i, c] : e.terms) g[i] += scale * c;
}

void add_affine_outer(const AffineExpr& e, double scale, Matrix& h) {
  for (const auto& [i, ci] : e.terms) {
    for (const auto& [j, cj] : e.terms) h(i, j) += scale * ci * cj;
  }
}

void add_concave_grad(const ConcaveExpr& e, std::span<const double> x, double scale, Vector& g) {
  add_affine_grad(e.linear, scale, g);
  for (const auto& l : e.logs) add_affine_grad(l.arg, scale * l.weight / l.arg.eval(x), g);
  for (const auto& q : e.squares) add_affine_grad(q.arg, -2.0 * scale * q.weight * q.arg.eval(x), g);
}

// h += scale * (-Hessian of e), which is PSD for scale >= 0.
void add_concave_neg_hessian(const ConcaveExpr& e, std::span<const double> x, double scale, Matrix& h) {
  for (const auto& l : e.logs) {
    const double v = l.arg.eval(x);
    add_affine_outer(l.arg, scale * l.weight / (v * v), h);
  }
  for (const auto& q : e.squares) add_affine_outer(q.arg, 2.0 * scale * q.weight, h);
}

// Barrier function for a program whose feasible interior is nonempty:
//   phi_t(x) = -t f0(x) - sum log(slack_i(x)).
class Barrier {
 public:
  explicit Barrier(const ConcaveProgram& p) : p_(p), n_(p.num_vars) {
    constraints_ = static_cast<int>(p.affine_le.size() + p.concave_ge.size());
    for (int i = 0; i < n_; ++i) {
      constraints_ += std::isfinite(p.lower[i]) ? 1 : 0;
      constraints_ += std::isfinite(p.upper[i]) ? 1 : 0;
    }
  }

  [[nodiscard]] int constraint_count() const { return constraints_; }

  [[nodiscard]] bool strictly_feasible(std::span<const double> x) const {
    for (int i = 0; i < n_; ++i) {
      if (!(x[i] > p_.lower[i] && x[i] < p_.upper[i])) return false;
    }
    if (!p_.objective.in_domain(x)) return false;
    for (const auto& a : p_.affine_le) {
      if (!(a.eval(x) < 0.0)) return false;
    }
    for (const auto& c : p_.concave_ge) {
      if (!c.in_domain(x) || !(c.eval(x) > 0.0)) return false;
    }
    return true;
  }

  [[nodiscard]] double value(std::span<const double> x, double t) const {
    double phi = -t * p_.objective.eval(x);
    for (int i = 0; i < n_; ++i) {
      if (std::isfinite(p_.lower[i])) phi -= std::log(x[i] - p_.lower[i]);
      if (std::isfinite(p_.upper[i])) phi -= std::log(p_.upper[i] - x[i]);
    }
    for (const auto& a : p_.affine_le) phi -= std::log(-a.eval(x));
    for (const auto& c : p_.concave_ge) phi -= std::log(c.eval(x));
    return phi;
  }

  void derivatives(std::span<const double> x, double t, Vector& g, Matrix& h) const {
    g.setZero(n_);
    h.setZero(n_, n_);
    add_concave_grad(p_.objective, x, -t, g);
    add_concave_neg_hessian(p_.objective, x, t, h);
    for (int i = 0; i < n_; ++i) {
      if (std::isfinite(p_.lower[i])) {
        const double s = x[i] - p_.lower[i];
        g[i] -= 1.0 / s;
        h(i, i) += 1.0 / (s * s);
      }
      if (std::isfinite(p_.upper[i])) {
        const double s = p_.upper[i] - x[i];
        g[i] += 1.0 / s;
        h(i, i) += 1.0 / (s * s);
      }
    }
    for (const auto& a : p_.affine_le) {
      const double s = -a.eval(x);
      add_affine_grad(a, 1.0 / s, g);
      add_affine_outer(a, 1.0 / (s * s), h);
    }
    Vector cg(n_);
    std::vector<int> nz;
    for (const auto& c : p_.concave_ge) {
      const double s = c.eval(x);
      cg.setZero();
      add_concave_grad(c, x, 1.0, cg);
      g -= cg / s;
      nz.clear();
      for (int i = 0; i < n_; ++i) {
        if (cg[i] != 0.0) nz.push_back(i);
      }
      const double w = 1.0 / (s * s);
      for (int i : nz) {
        for (int j : nz) h(i, j) += w * cg[i] * cg[j];
      }
      add_concave_neg_hessian(c, x, 1.0 / s, h);
    }
  }

 private:
  const ConcaveProgram& p_;
  int n_;
  int constraints_{0};
};

// Newton direction for H dx = -g with Jacobi scaling and a diagonal shift
// fallback when the factorization is not positive.
Vector newton_direction(const Matrix& h, const Vector& g) {
  const Eigen::Index n = g.size();
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = h(i, i) > 0.0 ? 1.0 / std::sqrt(h(i, i)) : 1.0;
  Matrix hs = d.asDiagonal() * h * d.asDiagonal();
  const Vector gs = d.cwiseProduct(g);
  double shift = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Matrix m = hs;
    if (shift > 0.0) m.diagonal().array() += shift;
    Eigen::LDLT<Matrix> ldlt(m);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0.0).all()) {
      Vector y = ldlt.solve(-gs);
      if (y.allFinite()) return d.cwiseProduct(y);
    }
    shift = shift == 0.0 ? 1e-12 : shift * 100.0;
  }
  return -d.cwiseProduct(gs);
}

struct PathResult {
  Vector x;
  double t{1.0};
  int steps{0};
  bool converged{false};
  bool stopped_early{false};
};

// Path following from a strictly feasible x0. `done` is checked after every
// centering and ends the run early when it returns true.
PathResult follow_path(const ConcaveProgram& p, Vector x0, const SolveOptions& opt, int step_budget,
                       const std::function<bool(const Vector&)>& done = {}) {
  const Barrier barrier(p);
  const int m = std::max(barrier.constraint_count(), 1);
  PathResult r;
  r.x = std::move(x0);
  const int n = p.num_vars;
  Vector g(n);
  Matrix h(n, n);
  Vector trial(n);
  double t = 1.0;
  while (true) {
    for (int it = 0; it < opt.max_newton_per_center; ++it) {
      if (r.steps >= step_budget) {
        r.t = t;
        return r;
      }
      barrier.derivatives(view(r.x), t, g, h);
      const Vector dx = newton_direction(h, g);
      const double slope = g.dot(dx);
      if (!(slope < 0.0) || -slope * 0.5 <= opt.newton_tol) break;
      ++r.steps;
      double step = 1.0;
      trial = r.x + dx;
      int halvings = 0;
      while (!barrier.strictly_feasible(view(trial)) && halvings < 200) {
        step *= 0.5;
        trial = r.x + step * dx;
        ++halvings;
      }
      if (halvings >= 200) break;
      const double phi0 = barrier.value(view(r.x), t);
      bool moved = false;
      for (int k = 0; k < 60; ++k) {
        const double phi = barrier.value(view(trial), t);
        if (phi <= phi0 + 0.25 * step * slope) {
          moved = true;
          break;
        }
        step *= 0.5;
        trial = r.x + step * dx;
      }
      if (!moved) break;
      r.x = trial;
    }
    r.t = t;
    if (done && done(r.x)) {
      r.stopped_early = true;
      return r;
    }
    if (m / t < opt.opt_tol) {
      r.converged = true;
      return r;
    }
    t *= opt.barrier_growth;
  }
}

Vector initial_point(const ConcaveProgram& p, std::optional<std::span<const double>> warm) {
  Vector x(p.num_vars);
  for (int i = 0; i < p.num_vars; ++i) {
    const double lo = p.lower[i];
    const double hi = p.upper[i];
    double v = 0.0;
    if (std::isfinite(lo) && std::isfinite(hi)) {
      v = 0.5 * (lo + hi);
    } else if (std::isfinite(lo)) {
      v = lo + 1.0;
    } else if (std::isfinite(hi)) {
      v = hi - 1.0;
    }
    if (warm && static_cast<int>(warm->size()) == p.num_vars && std::isfinite((*warm)[i])) {
      // nudge warm coordinates sitting on a bound into the interior
      const double w = (*warm)[i];
      const double pad = std::isfinite(hi - lo) ? 1e-6 * (hi - lo) : 1e-6 * std::max(1.0, std::abs(w));
      v = w;
      if (std::isfinite(lo)) v = std::max(v, lo + pad);
      if (std::isfinite(hi)) v = std::min(v, hi - pad);
    }
    x[i] = v;
  }
  return x;
}

// Stage A: make every log argument, affine constraint and bound strictly
// satisfied by maximizing a common slack s.
std::optional<Vector> phase_affine(const ConcaveProgram& p, Vector x0, const SolveOptions& opt, int& steps) {
  const int n = p.num_vars;
  std::vector<AffineExpr> rows;
  auto push_log_args = [&](const ConcaveExpr& e) {
    for (const auto& l : e.logs) {
      AffineExpr r = l.arg;
      for (auto& term : r.terms) term.second = -term.second;
      r.constant = -r.constant;
      rows.push_back(std::move(r));
    }
  };
  push_log_args(p.objective);
  for (const auto& c : p.concave_ge) push_log_args(c);
  for (const auto& a : p.affine_le) rows.push_back(a);
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.lower[i])) rows.push_back(AffineExpr(p.lower[i]).add(i, -1.0));
    if (std::isfinite(p.upper[i])) rows.push_back(AffineExpr(-p.upper[i]).add(i, 1.0));
  }
  const std::span<const double> xv = view(x0);
  double worst = kInf;
  for (const auto& r : rows) worst = std::min(worst, -r.eval(xv));
  if (rows.empty() || worst > 0.0) return x0;

  ConcaveProgram a(n);
  const int s = a.add_variable(-kInf, 1.0 + std::abs(worst));
  a.objective.linear.add(s, 1.0);
  for (auto& r : rows) {
    r.add(s, 1.0);
    a.affine_le.push_back(std::move(r));
  }
  Vector y(n + 1);
  y.head(n) = x0;
  y[n] = worst - 1.0;
  PathResult pr = follow_path(a, y, opt, opt.max_newton_total - steps, [&](const Vector& v) { return v[n] > 0.0; });
  steps += pr.steps;
  if (pr.x[n] > 0.0) return Vector(pr.x.head(n));
  return std::nullopt;
}

// Stage B: with log domains and affine rows already strict, maximize a
// common slack on the concave constraints.
std::optional<Vector> phase_concave(const ConcaveProgram& p, Vector x0, const SolveOptions& opt, int& steps) {
  const int n = p.num_vars;
  const std::span<const double> xv = view(x0);
  double worst = kInf;
  for (const auto& c : p.concave_ge) worst = std::min(worst, c.eval(xv));
  if (p.concave_ge.empty() || worst > 0.0) return x0;

  ConcaveProgram b(n);
  b.lower = p.lower;
  b.upper = p.upper;
  const int s = b.add_variable(-kInf, 1.0 + std::abs(worst));
  b.objective.linear.add(s, 1.0);
  b.affine_le = p.affine_le;
  for (const auto& l : p.objective.logs) {
    AffineExpr r = l.arg;
    for (auto& term : r.terms) term.second = -term.second;
    r.constant = -r.constant;
    b.affine_le.push_back(std::move(r));
  }
  for (const auto& c : p.concave_ge) {
    ConcaveExpr e = c;
    e.linear.add(s, -1.0);
    b.concave_ge.push_back(std::move(e));
  }
  Vector y(n + 1);
  y.head(n) = x0;
  y[n] = worst - 1.0;
  PathResult pr = follow_path(b, y, opt, opt.max_newton_total - steps, [&](const Vector& v) { return v[n] > 0.0; });
  steps += pr.steps;
  if (pr.x[n] > 0.0) return Vector(pr.x.head(n));
  return std::nullopt;
}

}  // namespace

double AffineExpr::eval(std::span<const double> x) const {
  double v = constant;
  for (const auto& [i, c] : terms) v += c * x[i];
  return v;
}

bool ConcaveExpr::in_domain(std::span<const double> x) const {
  return std::all_of(logs.begin(), logs.end(), [&](const Log& l) { return l.arg.eval(x) > 0.0; });
}

double ConcaveExpr::eval(std::span<const double> x) const {
  double v = linear.eval(x);
  for (const auto& l : logs) {
    const double a = l.arg.eval(x);
    if (!(a > 0.0)) return -kInf;
    v += l.weight * std::log(a);
  }
  for (const auto& q : squares) {
    const double a = q.arg.eval(x);
    v -= q.weight * a * a;
  }
  return v;
}

double ConcaveProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (int i = 0; i < num_vars; ++i) {
    worst = std::max({worst, lower[i] - x[i], x[i] - upper[i]});
  }
  for (const auto& a : affine_le) worst = std::max(worst, a.eval(x));
  for (const auto& c : concave_ge) {
    const double v = c.eval(x);
    worst = std::max(worst, std::isfinite(v) ? -v : kInf);
  }
  return worst;
}

void ConcaveProgram::validate() const {
  if (num_vars < 0 || static_cast<int>(lower.size()) != num_vars || static_cast<int>(upper.size()) != num_vars) {
    throw PreconditionError("program bounds do not match the variable count");
  }
  auto check_affine = [&](const AffineExpr& e) {
    for (const auto& [i, c] : e.terms) {
      if (i < 0 || i >= num_vars || !std::isfinite(c)) throw PreconditionError("affine term out of range");
    }
  };
  auto check_concave = [&](const ConcaveExpr& e) {
    check_affine(e.linear);
    for (const auto& l : e.logs) {
      if (!(l.weight > 0.0)) throw PreconditionError("log weight must be positive");
      check_affine(l.arg);
    }
    for (const auto& q : e.squares) {
      if (!(q.weight > 0.0)) throw PreconditionError("square weight must be positive");
      check_affine(q.arg);
    }
  };
  check_concave(objective);
  for (const auto& a : affine_le) check_affine(a);
  for (const auto& c : concave_ge) check_concave(c);
  for (int i = 0; i < num_vars; ++i) {
    if (!(lower[i] < upper[i])) throw PreconditionError("empty box for variable " + std::to_string(i));
  }
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal:
      return "optimal";
    case SolveStatus::max_iters:
      return "max_iters";
    case SolveStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

SolveResult solve(const ConcaveProgram& program, std::optional<std::span<const double>> warm,
                  const SolveOptions& options) {
  program.validate();
  SolveResult res;
  int steps = 0;
  Vector x = initial_point(program, warm);

  auto a = phase_affine(program, x, options, steps);
  if (!a) {
    res.x.assign(x.data(), x.data() + x.size());
    res.newton_steps = steps;
    res.diagnostic = "no point with positive log arguments inside the affine constraints";
    return res;
  }
  // A warm point that only touches bounds or affine rows is pulled towards
  // the stage-A point by the largest blend weight that is strictly feasible;
  // stage B runs only when no blend works.
  std::optional<Vector> b;
  if (warm && static_cast<int>(warm->size()) == program.num_vars) {
    const Barrier barrier(program);
    Vector w(program.num_vars);
    bool finite = true;
    for (int i = 0; i < program.num_vars; ++i) {
      finite = finite && std::isfinite((*warm)[i]);
      w[i] = std::clamp((*warm)[i], program.lower[i], program.upper[i]);
    }
    for (double theta = 1.0; finite && theta > 1e-12; theta *= 0.5) {
      Vector trial = (1.0 - theta) * w + theta * *a;
      if (barrier.strictly_feasible(view(trial))) {
        b = std::move(trial);
        break;
      }
    }
  }
  if (!b) b = phase_concave(program, *a, options, steps);
  if (!b) {
    res.x.assign(a->data(), a->data() + a->size());
    res.newton_steps = steps;
    res.diagnostic = "concave constraints have no strictly feasible point";
    return res;
  }

  const Barrier barrier(program);
  PathResult pr = follow_path(program, *b, options, options.max_newton_total - steps);
  steps += pr.steps;
  res.x.assign(pr.x.data(), pr.x.data() + pr.x.size());
  res.objective = program.objective.eval(res.x);
  res.max_violation = program.max_violation(res.x);
  res.gap = std::max(barrier.constraint_count(), 1) / pr.t;
  res.newton_steps = steps;
  res.status = pr.converged ? SolveStatus::optimal : SolveStatus::max_iters;
  return res;
}

double bisect_max_min(const std::function<bool(double)>& feasible, double lo, double hi, double tol) {
  if (!(tol > 0.0) || !(lo <= hi)) throw PreconditionError("bisect_max_min needs lo <= hi and tol > 0");
  if (!feasible(lo)) throw PreconditionError("bisect_max_min: lower end is infeasible");
  if (feasible(hi)) return hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace agcoop
