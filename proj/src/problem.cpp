#include "sldp/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sldp/error.hpp"

namespace sldp {

ControlSet::ControlSet(std::vector<double> lower, std::vector<double> upper,
                       std::vector<std::size_t> counts)
    : lower_(std::move(lower)), upper_(std::move(upper)), counts_(std::move(counts)) {
  const std::size_t m = lower_.size();
  if (m == 0) throw InvalidArgument("control dimension must be at least 1");
  if (upper_.size() != m || counts_.size() != m)
    throw InvalidArgument("control bounds and counts must have the same length");
  std::size_t total = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || lower_[i] > upper_[i])
      throw InvalidArgument("control bounds must be finite with lower <= upper (axis " +
                            std::to_string(i) + ")");
    if (counts_[i] < 1)
      throw InvalidArgument("control count for axis " + std::to_string(i) + " must be >= 1");
    total *= counts_[i];
  }

  samples_.resize(total * m);
  std::vector<std::size_t> idx(m, 0);
  for (std::size_t s = 0; s < total; ++s) {
    for (std::size_t i = 0; i < m; ++i) {
      double& x = samples_[s * m + i];
      if (counts_[i] == 1) {
        x = 0.5 * (lower_[i] + upper_[i]);
      } else if (idx[i] + 1 == counts_[i]) {
        x = upper_[i];
      } else {
        x = lower_[i] + (upper_[i] - lower_[i]) * static_cast<double>(idx[i]) /
                            static_cast<double>(counts_[i] - 1);
      }
    }
    // Last axis fastest.
    for (std::size_t i = m; i-- > 0;) {
      if (++idx[i] < counts_[i]) break;
      idx[i] = 0;
    }
  }
}

bool ControlSet::contains(std::span<const double> u) const {
  if (u.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(u[i] >= lower_[i] && u[i] <= upper_[i])) return false;
  return true;
}

ControlSet sample_control_set(std::vector<double> lower, std::vector<double> upper,
                              std::vector<std::size_t> counts) {
  return ControlSet(std::move(lower), std::move(upper), std::move(counts));
}

Problem::Problem(BoxDomain domain, ControlSet controls, double lambda, DynamicsFn dynamics,
                 RunningCostFn running_cost, ProblemBounds bounds, std::string name)
    : domain_(std::move(domain)),
      controls_(std::move(controls)),
      lambda_(lambda),
      dynamics_(std::move(dynamics)),
      running_cost_(std::move(running_cost)),
      bounds_(bounds),
      name_(std::move(name)) {
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_))
    throw InvalidArgument("lambda must be a finite positive number");
  if (!dynamics_ || !running_cost_) throw InvalidArgument("problem requires dynamics and running cost");
  auto check = [](const std::optional<double>& v, const char* what) {
    if (v && (!std::isfinite(*v) || *v < 0.0))
      throw InvalidArgument(std::string("bound ") + what + " must be finite and non-negative");
  };
  check(bounds_.lipschitz_f, "L_f");
  check(bounds_.lipschitz_g, "L_g");
  check(bounds_.max_f, "M_f");
  check(bounds_.max_g, "M_g");
  check(bounds_.lipschitz_u, "L_u");
}

std::vector<double> Problem::dynamics(std::span<const double> y, std::span<const double> u) const {
  std::vector<double> out(state_dim());
  dynamics_(y, u, out);
  return out;
}

Problem Problem::with_bounds(ProblemBounds bounds) const {
  return Problem(domain_, controls_, lambda_, dynamics_, running_cost_, bounds, name_);
}

Problem Problem::with_controls(ControlSet controls) const {
  return Problem(domain_, std::move(controls), lambda_, dynamics_, running_cost_, bounds_, name_);
}

namespace {

void check_arity(const Expression& e, std::size_t n, std::size_t m, const std::string& what) {
  if (e.state_arity() > n)
    throw InvalidArgument(what + " uses y" + std::to_string(e.state_arity()) +
                          " but the state dimension is " + std::to_string(n));
  if (e.control_arity() > m)
    throw InvalidArgument(what + " uses u" + std::to_string(e.control_arity()) +
                          " but the control dimension is " + std::to_string(m));
}

}  // namespace

Problem make_expression_problem(BoxDomain domain, ControlSet controls, double lambda,
                                std::vector<Expression> dynamics, Expression running_cost,
                                ProblemBounds bounds, std::string name) {
  const std::size_t n = domain.dim(), m = controls.dim();
  if (dynamics.size() != n)
    throw InvalidArgument("dynamics has " + std::to_string(dynamics.size()) +
                          " components, state dimension is " + std::to_string(n));
  for (std::size_t j = 0; j < n; ++j) check_arity(dynamics[j], n, m, "dynamics component " + std::to_string(j + 1));
  check_arity(running_cost, n, m, "running cost");

  DynamicsFn f = [dyn = std::move(dynamics)](std::span<const double> y, std::span<const double> u,
                                             std::span<double> out) {
    for (std::size_t j = 0; j < dyn.size(); ++j) out[j] = dyn[j].eval(y, u);
  };
  RunningCostFn g = [cost = std::move(running_cost)](std::span<const double> y,
                                                     std::span<const double> u) {
    return cost.eval(y, u);
  };
  return Problem(std::move(domain), std::move(controls), lambda, std::move(f), std::move(g), bounds,
                 std::move(name));
}

double ManufacturedProblem::hjb_residual(std::span<const double> y, std::span<const double> u) const {
  double f_dot_grad = 0.0;
  for (std::size_t j = 0; j < dynamics.size(); ++j) f_dot_grad += dynamics[j].eval(y, u) * gradient[j].eval(y, u);
  return problem.lambda() * vstar.eval(y, u) + (-f_dot_grad - running_cost.eval(y, u));
}

ManufacturedProblem make_manufactured(const Expression& vstar, std::vector<Expression> dynamics,
                                      double lambda, BoxDomain domain, ControlSet controls,
                                      ProblemBounds bounds, std::string name) {
  const std::size_t n = domain.dim();
  if (vstar.control_arity() > 0) throw InvalidArgument("exact value function must not depend on controls");
  check_arity(vstar, n, 0, "exact value function");
  if (dynamics.size() != n)
    throw InvalidArgument("dynamics has " + std::to_string(dynamics.size()) +
                          " components, state dimension is " + std::to_string(n));

  std::vector<Expression> gradient;
  gradient.reserve(n);
  for (std::size_t j = 0; j < n; ++j) gradient.push_back(differentiate(vstar, {VarKind::State, j}));

  Expression g = Expression::constant(lambda) * vstar;
  for (std::size_t j = 0; j < n; ++j) g = g - dynamics[j] * gradient[j];

  Problem p = make_expression_problem(std::move(domain), std::move(controls), lambda, dynamics, g,
                                      bounds, std::move(name));
  return ManufacturedProblem{std::move(p), vstar, std::move(dynamics), std::move(gradient), g};
}

ValidationReport validate_problem(const Problem& problem, const SimplicialMesh& mesh, double h,
                                  std::uint64_t seed, std::size_t random_pairs) {
  const std::size_t n = problem.state_dim();
  const std::size_t m = problem.control_dim();
  const ControlSet& U = problem.controls();
  ValidationReport r;
  std::vector<double> f(n), foot(n);
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    const auto y = mesh.vertex(v);
    for (std::size_t c = 0; c < U.size(); ++c) {
      problem.dynamics(y, U[c], f);
      for (double x : f) r.max_f_inf = std::max(r.max_f_inf, std::abs(x));
      r.max_abs_g = std::max(r.max_abs_g, std::abs(problem.running_cost(y, U[c])));
      for (std::size_t i = 0; i < n; ++i) foot[i] = y[i] + h * f[i];
      const double d = problem.domain().distance_outside(foot);
      if (d > 0.0) {
        ++r.invariance_violations;
        if (d > r.worst_violation) {
          r.worst_violation = d;
          r.worst_vertex = v;
          r.worst_control = c;
        }
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& lo = problem.domain().lower();
  const auto& hi = problem.domain().upper();
  std::vector<double> y1(n), y2(n), u1(m), u2(m), f1(n), f2(n);
  auto random_state = [&](std::vector<double>& y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
  };
  auto random_control = [&](std::vector<double>& u) {
    for (std::size_t i = 0; i < m; ++i) u[i] = U.lower()[i] + (U.upper()[i] - U.lower()[i]) * unit(rng);
  };
  auto norm2 = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  for (std::size_t p = 0; p < random_pairs; ++p) {
    // Alternate far pairs and near pairs, in y and in u.
    const bool near = p % 2 == 1;
    random_state(y1);
    random_control(u1);
    y2 = y1;
    u2 = u1;
    if (p % 4 < 2) {
      random_state(y2);
      if (near)
        for (std::size_t i = 0; i < n; ++i) y2[i] = std::clamp(y1[i] + 1e-3 * (y2[i] - y1[i]), lo[i], hi[i]);
    } else {
      random_control(u2);
      if (near)
        for (std::size_t i = 0; i < m; ++i) u2[i] = u1[i] + 1e-3 * (u2[i] - u1[i]);
    }
    const double dist = norm2(y1, y2) + norm2(u1, u2);
    if (!(dist > 0.0)) continue;
    problem.dynamics(y1, u1, f1);
    problem.dynamics(y2, u2, f2);
    r.lipschitz_f_estimate = std::max(r.lipschitz_f_estimate, norm2(f1, f2) / dist);
    r.lipschitz_g_estimate =
        std::max(r.lipschitz_g_estimate,
                 std::abs(problem.running_cost(y1, u1) - problem.running_cost(y2, u2)) / dist);
    ++r.pairs_checked;
  }
  return r;
}

ProblemBounds fill_bounds(const ProblemBounds& given, const ValidationReport& report) {
  ProblemBounds b = given;
  if (!b.max_f) b.max_f = report.max_f_inf;
  if (!b.max_g) b.max_g = report.max_abs_g;
  if (!b.lipschitz_f) b.lipschitz_f = report.lipschitz_f_estimate;
  if (!b.lipschitz_g) b.lipschitz_g = report.lipschitz_g_estimate;
  return b;
}

namespace {

// max over [-1,1] of 2|y|(1 - y^2), attained at |y| = 1/sqrt(3).
constexpr double kCubicPeak = 0.76980035891950105;

}  // namespace

ManufacturedProblem make_benchmark(const std::string& name, double lambda,
                                   std::vector<std::size_t> control_counts) {
  if (name == "manufactured_1d") {
    if (control_counts.empty()) control_counts = {21};
    ProblemBounds b;
    b.lipschitz_f = 2.0;
    b.max_f = 1.0;
    b.max_g = lambda + kCubicPeak;
    b.lipschitz_g = 2.0 * lambda + 4.0;
    return make_manufactured(parse_expression("y1^2", 1, 0), {parse_expression("u1*(1 - y1^2)", 1, 1)},
                             lambda, BoxDomain({-1.0}, {1.0}),
                             sample_control_set({-1.0}, {1.0}, control_counts), b, name);
  }
  if (name == "manufactured_2d") {
    if (control_counts.empty()) control_counts = {5, 5};
    ProblemBounds b;
    b.lipschitz_f = 2.0;
    b.max_f = 1.0;
    b.max_g = 2.0 * lambda + 2.0 * kCubicPeak;
    b.lipschitz_g = std::sqrt(2.0) * (2.0 * lambda + 4.0);
    return make_manufactured(parse_expression("y1^2 + y2^2", 2, 0),
                             {parse_expression("u1*(1 - y1^2)", 2, 2), parse_expression("u2*(1 - y2^2)", 2, 2)},
                             lambda, BoxDomain({-1.0, -1.0}, {1.0, 1.0}),
                             sample_control_set({-1.0, -1.0}, {1.0, 1.0}, control_counts), b, name);
  }
  throw InvalidArgument("unknown benchmark '" + name + "'");
}

std::vector<std::string> benchmark_names() { return {"manufactured_1d", "manufactured_2d"}; }

}  // namespace sldp
