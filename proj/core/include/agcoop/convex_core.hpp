#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace agcoop {

// constant + sum coef * x[index]; repeated indices add up.
struct AffineExpr {
  double constant{0.0};
  std::vector<std::pair<int, double>> terms;

  AffineExpr() = default;
  explicit AffineExpr(double c) : constant(c) {}

  AffineExpr& add(int index, double coef) {
    if (coef != 0.0) terms.emplace_back(index, coef);
    return *this;
  }
  [[nodiscard]] double eval(std::span<const double> x) const;
};

// linear + sum w * log(arg) - sum w * arg^2 with every w > 0, so the whole
// expression is concave on the set where all log arguments are positive.
struct ConcaveExpr {
  struct Log {
    double weight{1.0};
    AffineExpr arg;
  };
  struct Square {
    double weight{1.0};
    AffineExpr arg;
  };

  AffineExpr linear;
  std::vector<Log> logs;
  std::vector<Square> squares;

  ConcaveExpr() = default;
  explicit ConcaveExpr(AffineExpr lin) : linear(std::move(lin)) {}

  ConcaveExpr& add_log(double weight, AffineExpr arg) {
    logs.push_back({weight, std::move(arg)});
    return *this;
  }
  ConcaveExpr& add_neg_square(double weight, AffineExpr arg) {
    squares.push_back({weight, std::move(arg)});
    return *this;
  }

  [[nodiscard]] bool in_domain(std::span<const double> x) const;
  // -inf outside the log domain.
  [[nodiscard]] double eval(std::span<const double> x) const;
};

// maximize objective(x)
//   s.t. affine_le[i](x) <= 0, concave_ge[k](x) >= 0, lower <= x <= upper.
// Bounds may be infinite.
struct ConcaveProgram {
  int num_vars{0};
  ConcaveExpr objective;
  std::vector<AffineExpr> affine_le;
  std::vector<ConcaveExpr> concave_ge;
  std::vector<double> lower;
  std::vector<double> upper;

  ConcaveProgram() = default;
  explicit ConcaveProgram(int n)
      : num_vars(n),
        lower(n, -std::numeric_limits<double>::infinity()),
        upper(n, std::numeric_limits<double>::infinity()) {}

  int add_variable(double lo, double hi) {
    lower.push_back(lo);
    upper.push_back(hi);
    return num_vars++;
  }
  void set_bounds(int i, double lo, double hi) {
    lower[i] = lo;
    upper[i] = hi;
  }

  // Largest violation over all constraints and bounds (0 when feasible).
  [[nodiscard]] double max_violation(std::span<const double> x) const;
  void validate() const;
};

enum class SolveStatus { optimal, max_iters, infeasible };

const char* to_string(SolveStatus s);

struct SolveOptions {
  double opt_tol{1e-6};        // stop once (constraints / t) < opt_tol
  double feas_tol{1e-8};
  double barrier_growth{10.0};
  double newton_tol{1e-10};    // half squared Newton decrement
  int max_newton_per_center{100};
  int max_newton_total{3000};
};

struct SolveResult {
  std::vector<double> x;
  double objective{-std::numeric_limits<double>::infinity()};
  SolveStatus status{SolveStatus::infeasible};
  double max_violation{0.0};
  double gap{std::numeric_limits<double>::infinity()};  // certified objective gap bound
  int newton_steps{0};
  std::string diagnostic;
};

// Log-barrier path following. A warm point outside the strict interior is
// only used as the phase-I seed.
SolveResult solve(const ConcaveProgram& program, std::optional<std::span<const double>> warm = std::nullopt,
                  const SolveOptions& options = {});

// Largest mu in [lo, hi] (to within tol) with feasible(mu) true, assuming the
// feasible set shrinks as mu grows. Throws PreconditionError if lo fails.
double bisect_max_min(const std::function<bool(double)>& feasible, double lo, double hi, double tol);

}  // namespace agcoop
