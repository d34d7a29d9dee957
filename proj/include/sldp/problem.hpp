#pragma once

// Control problems: dynamics f(y,u), running cost g(y,u), discount lambda,
// a box state domain and a finite sample of the control box.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sldp/expression.hpp"
#include "sldp/mesh.hpp"

namespace sldp {

/// Finite tensor-grid sample of a box of controls.
class ControlSet {
 public:
  ControlSet(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> counts);

  std::size_t dim() const noexcept { return lower_.size(); }
  std::size_t size() const noexcept { return samples_.size() / dim(); }
  std::span<const double> operator[](std::size_t i) const {
    return {samples_.data() + i * dim(), dim()};
  }

  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }

  bool contains(std::span<const double> u) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::size_t> counts_;
  std::vector<double> samples_;
};

/// Grid with both endpoints per axis; a count of 1 gives the midpoint.
/// Samples are ordered lexicographically with the first axis slowest.
ControlSet sample_control_set(std::vector<double> lower, std::vector<double> upper,
                              std::vector<std::size_t> counts);

/// Optional analytic constants of the problem data.
struct ProblemBounds {
  std::optional<double> lipschitz_f;
  std::optional<double> lipschitz_g;
  std::optional<double> max_f;  // sup of ||f||_inf over domain x controls
  std::optional<double> max_g;  // sup of |g|
  std::optional<double> lipschitz_u;
};

using DynamicsFn =
    std::function<void(std::span<const double> y, std::span<const double> u, std::span<double> out)>;
using RunningCostFn = std::function<double(std::span<const double> y, std::span<const double> u)>;

class Problem {
 public:
  Problem(BoxDomain domain, ControlSet controls, double lambda, DynamicsFn dynamics,
          RunningCostFn running_cost, ProblemBounds bounds = {}, std::string name = {});

  std::size_t state_dim() const noexcept { return domain_.dim(); }
  std::size_t control_dim() const noexcept { return controls_.dim(); }
  double lambda() const noexcept { return lambda_; }
  const BoxDomain& domain() const noexcept { return domain_; }
  const ControlSet& controls() const noexcept { return controls_; }
  const ProblemBounds& bounds() const noexcept { return bounds_; }
  const std::string& name() const noexcept { return name_; }

  void dynamics(std::span<const double> y, std::span<const double> u, std::span<double> out) const {
    dynamics_(y, u, out);
  }
  std::vector<double> dynamics(std::span<const double> y, std::span<const double> u) const;
  double running_cost(std::span<const double> y, std::span<const double> u) const {
    return running_cost_(y, u);
  }

  Problem with_bounds(ProblemBounds bounds) const;
  Problem with_controls(ControlSet controls) const;

 private:
  BoxDomain domain_;
  ControlSet controls_;
  double lambda_;
  DynamicsFn dynamics_;
  RunningCostFn running_cost_;
  ProblemBounds bounds_;
  std::string name_;
};

/// Problem whose data come from expressions in the state/control variables.
Problem make_expression_problem(BoxDomain domain, ControlSet controls, double lambda,
                                std::vector<Expression> dynamics, Expression running_cost,
                                ProblemBounds bounds = {}, std::string name = {});

/// A problem with a known smooth value function v*: the running cost is
///   g(y,u) = lambda v*(y) - f(y,u) . grad v*(y),
/// which makes the HJB supremand equal to -lambda v*(y) for every control.
struct ManufacturedProblem {
  Problem problem;
  Expression vstar;
  std::vector<Expression> dynamics;
  std::vector<Expression> gradient;
  Expression running_cost;

  double exact(std::span<const double> y) const { return vstar.eval(y, {}); }
  /// lambda v*(y) + (-f(y,u) . grad v*(y) - g(y,u)); zero up to rounding.
  double hjb_residual(std::span<const double> y, std::span<const double> u) const;
};

ManufacturedProblem make_manufactured(const Expression& vstar, std::vector<Expression> dynamics,
                                      double lambda, BoxDomain domain, ControlSet controls,
                                      ProblemBounds bounds = {}, std::string name = {});

struct ValidationReport {
  double max_f_inf = 0.0;       // max ||f(y_i,u)||_inf over vertices x controls
  double max_abs_g = 0.0;       // max |g(y_i,u)|
  std::size_t invariance_violations = 0;  // pairs with y_i + h f(y_i,u) outside the box
  double worst_violation = 0.0;           // largest inf-norm distance outside the box
  std::size_t worst_vertex = 0;
  std::size_t worst_control = 0;
  double lipschitz_f_estimate = 0.0;
  double lipschitz_g_estimate = 0.0;
  std::size_t pairs_checked = 0;
};

/// Report-only diagnostics over all (vertex, control) pairs of the mesh plus
/// random-pair Lipschitz estimates in both arguments.
ValidationReport validate_problem(const Problem& problem, const SimplicialMesh& mesh, double h,
                                  std::uint64_t seed = 0, std::size_t random_pairs = 2000);

/// Bounds with any missing entry filled from a validation report.
ProblemBounds fill_bounds(const ProblemBounds& given, const ValidationReport& report);

/// Compiled-in benchmarks, selected by name:
///   "manufactured_1d": v* = y1^2, f = u1 (1 - y1^2) on [-1,1], U = [-1,1]
///   "manufactured_2d": v* = y1^2 + y2^2, f_i = u_i (1 - y_i^2) on [-1,1]^2, U = [-1,1]^2
/// control_counts defaults to 21 (1D) or 5 per axis (2D) when empty.
ManufacturedProblem make_benchmark(const std::string& name, double lambda,
                                   std::vector<std::size_t> control_counts = {});
std::vector<std::string> benchmark_names();

}  // namespace sldp
