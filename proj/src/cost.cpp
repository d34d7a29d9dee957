#include "sldp/cost.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sldp/error.hpp"
#include "sldp/interp.hpp"
#include "sldp/solver.hpp"

namespace sldp {

std::span<const double> ControlSequence::at(std::size_t n) const {
  if (controls.empty()) throw InvalidArgument("control sequence is empty");
  return controls[std::min(n, controls.size() - 1)];
}

ControlSequence sample_control_signal(const std::function<std::vector<double>(double)>& control,
                                      double h, std::size_t count) {
  ControlSequence seq;
  seq.h = h;
  seq.controls.reserve(count);
  for (std::size_t i = 0; i < count; ++i) seq.controls.push_back(control(static_cast<double>(i) * h));
  return seq;
}

namespace {

void check_sequence(const Problem& problem, const ControlSequence& seq) {
  if (seq.controls.empty()) throw InvalidArgument("control sequence must contain at least one control");
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq.controls[i].size() != problem.control_dim())
      throw InvalidArgument("control " + std::to_string(i) + " has the wrong dimension");
    if (!problem.controls().contains(seq.controls[i]))
      throw InvalidArgument("control " + std::to_string(i) + " lies outside the admissible box");
  }
}

void check_start(const Problem& problem, std::span<const double> y0) {
  if (y0.size() != problem.state_dim()) throw InvalidArgument("initial state has the wrong dimension");
  if (!problem.domain().contains(y0)) throw OutOfDomain("initial state lies outside the domain");
}

// I_k g(y,u), and I_k f(y,u) into f_out, sharing one point location.
double interpolated_data(const Problem& problem, const SimplicialMesh& mesh, std::span<const double> y,
                         std::span<const double> u, std::span<double> f_out, std::span<double> scratch) {
  SimplexWeights w;
  mesh.locate_into(y, w);
  std::fill(f_out.begin(), f_out.end(), 0.0);
  double g = 0.0;
  for (std::size_t j = 0; j < w.count; ++j) {
    if (w.weight[j] == 0.0) continue;
    const auto vy = mesh.vertex(w.vertex[j]);
    problem.dynamics(vy, u, scratch);
    for (std::size_t i = 0; i < f_out.size(); ++i) f_out[i] += w.weight[j] * scratch[i];
    g += w.weight[j] * problem.running_cost(vy, u);
  }
  return g;
}

}  // namespace

Trajectory euler_rollout(const Problem& problem, const SimplicialMesh& mesh,
                         std::span<const double> y0, const ControlSequence& seq) {
  check_start(problem, y0);
  check_sequence(problem, seq);
  check_step(seq.h, problem.lambda());
  const std::size_t n = problem.state_dim();
  Trajectory tr;
  tr.states.reserve(seq.size() + 1);
  tr.states.emplace_back(y0.begin(), y0.end());
  std::vector<double> f(n), scratch(n);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    std::vector<double> next = tr.states.back();
    interpolated_data(problem, mesh, next, seq.controls[k], f, scratch);
    for (std::size_t i = 0; i < n; ++i) next[i] += seq.h * f[i];
    if (!problem.domain().contains(next)) {
      problem.domain().clamp_in_place(next);
      ++tr.clamp_events;
    }
    tr.states.push_back(std::move(next));
  }
  return tr;
}

std::size_t terms_for_tail(double max_g, double lambda, double h, double tail_tol) {
  check_step(h, lambda);
  if (!(tail_tol > 0.0)) throw InvalidArgument("tail tolerance must be positive");
  if (max_g <= 0.0) return 0;
  const double delta = 1.0 - lambda * h;
  const double ratio = tail_tol * lambda / max_g;
  if (ratio >= 1.0) return 0;
  return static_cast<std::size_t>(std::ceil(std::log(ratio) / std::log(delta)));
}

double geometric_tail(double max_g, double lambda, double h, std::size_t terms) {
  return max_g * std::pow(1.0 - lambda * h, static_cast<double>(terms)) / lambda;
}

CostEstimate discrete_cost(const Problem& problem, const SimplicialMesh& mesh,
                           std::span<const double> y0, const ControlSequence& seq, double tail_tol) {
  check_start(problem, y0);
  check_sequence(problem, seq);
  const double h = seq.h;
  const double lambda = problem.lambda();
  check_step(h, lambda);

  std::size_t terms = seq.size();
  const auto& max_g = problem.bounds().max_g;
  if (std::isfinite(tail_tol)) {
    if (!max_g)
      throw InvalidArgument(
          "discrete_cost needs the running-cost bound M_g to truncate the series; supply it in the "
          "problem bounds or run validate_problem to estimate it");
    terms = std::max(terms, terms_for_tail(*max_g, lambda, h, tail_tol));
  }

  const std::size_t n = problem.state_dim();
  const double delta = 1.0 - lambda * h;
  std::vector<double> y(y0.begin(), y0.end()), f(n), scratch(n);
  double sum = 0.0, weight = 1.0;
  for (std::size_t k = 0; k < terms; ++k) {
    const double g = interpolated_data(problem, mesh, y, seq.at(k), f, scratch);
    sum += weight * g;
    weight *= delta;
    for (std::size_t i = 0; i < n; ++i) y[i] += h * f[i];
    problem.domain().clamp_in_place(y);
  }
  CostEstimate out;
  out.value = h * sum;
  out.terms = terms;
  out.tail_bound = max_g ? geometric_tail(*max_g, lambda, h, terms)
                         : std::numeric_limits<double>::infinity();
  return out;
}

namespace {

template <class OnStep>
void integrate_rk4(const Problem& problem, std::span<const double> y0,
                   const std::function<std::vector<double>(double)>& control, double T, double dt,
                   OnStep&& on_step) {
  if (!(T > 0.0) || !(dt > 0.0)) throw InvalidArgument("horizon T and step dt must be positive");
  check_start(problem, y0);
  const std::size_t n = problem.state_dim();
  const std::size_t steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  const double step = T / static_cast<double>(steps);
  std::vector<double> y(y0.begin(), y0.end()), k1(n), k2(n), k3(n), k4(n), tmp(n);
  on_step(std::size_t{0}, 0.0, std::span<const double>(y));
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * step;
    const auto u0 = control(t);
    const auto um = control(t + 0.5 * step);
    const auto u1 = control(t + step);
    problem.dynamics(y, u0, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * step * k1[i];
    problem.dynamics(tmp, um, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * step * k2[i];
    problem.dynamics(tmp, um, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * k3[i];
    problem.dynamics(tmp, u1, k4);
    for (std::size_t i = 0; i < n; ++i) y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    on_step(s + 1, static_cast<double>(s + 1) * step, std::span<const double>(y));
  }
}

}  // namespace

CostEstimate continuous_cost_oracle(const Problem& problem, std::span<const double> y0,
                                    const std::function<std::vector<double>(double)>& control,
                                    double T, double dt) {
  const double lambda = problem.lambda();
  double integral = 0.0, prev = 0.0, prev_t = 0.0;
  std::size_t count = 0;
  integrate_rk4(problem, y0, control, T, dt, [&](std::size_t s, double t, std::span<const double> y) {
    const double phi = problem.running_cost(y, control(t)) * std::exp(-lambda * t);
    if (s > 0) integral += 0.5 * (t - prev_t) * (prev + phi);
    prev = phi;
    prev_t = t;
    count = s;
  });
  CostEstimate out;
  out.value = integral;
  out.terms = count;
  const auto& max_g = problem.bounds().max_g;
  out.tail_bound = max_g ? *max_g * std::exp(-lambda * T) / lambda
                         : std::numeric_limits<double>::infinity();
  return out;
}

std::vector<std::vector<double>> reference_trajectory(
    const Problem& problem, std::span<const double> y0,
    const std::function<std::vector<double>(double)>& control, double T, double dt) {
  std::vector<std::vector<double>> states;
  integrate_rk4(problem, y0, control, T, dt, [&](std::size_t, double, std::span<const double> y) {
    states.emplace_back(y.begin(), y.end());
  });
  return states;
}

BruteForceResult brute_force_value(const Problem& problem, const SimplicialMesh& mesh, double h,
                                   std::size_t y0_vertex, std::size_t N, double max_sequences) {
  check_step(h, problem.lambda());
  if (N < 1) throw InvalidArgument("sequence length N must be >= 1");
  if (y0_vertex >= mesh.vertex_count()) throw InvalidArgument("start vertex index out of range");
  const ControlSet& U = problem.controls();
  const double count = std::pow(static_cast<double>(U.size()), static_cast<double>(N));
  if (count > max_sequences)
    throw EnumerationLimit("brute force would enumerate " + std::to_string(count) +
                               " sequences, above the limit of " + std::to_string(max_sequences),
                           count);

  const std::size_t n = problem.state_dim();
  const std::size_t nc = U.size();
  // Nodal tables of f(., u) and g(., u) for every sampled control.
  std::vector<double> f_table(nc * mesh.vertex_count() * n), g_table(nc * mesh.vertex_count());
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
      problem.dynamics(mesh.vertex(v), U[c],
                       std::span<double>(f_table.data() + (c * mesh.vertex_count() + v) * n, n));
      g_table[c * mesh.vertex_count() + v] = problem.running_cost(mesh.vertex(v), U[c]);
    }

  const double delta = 1.0 - problem.lambda() * h;
  // states[d] is the state before step d; partial[d] is the discounted sum of
  // the first d stage costs (without the factor h).
  std::vector<std::vector<double>> states(N + 1, std::vector<double>(n));
  std::vector<double> partial(N + 1, 0.0), weight(N + 1, 1.0);
  for (std::size_t d = 1; d <= N; ++d) weight[d] = weight[d - 1] * delta;
  std::vector<SimplexWeights> loc(N);
  std::vector<std::size_t> choice(N, 0);
  const auto y0 = mesh.vertex(y0_vertex);
  std::copy(y0.begin(), y0.end(), states[0].begin());

  BruteForceResult best;
  best.value = std::numeric_limits<double>::infinity();
  best.sequences = count;

  // Iterative DFS: choice[d] is the control at depth d.
  std::size_t depth = 0;
  mesh.locate_into(states[0], loc[0]);
  choice[0] = 0;
  for (;;) {
    const std::size_t c = choice[depth];
    const SimplexWeights& w = loc[depth];
    double g = 0.0;
    for (std::size_t j = 0; j < w.count; ++j) g += w.weight[j] * g_table[c * mesh.vertex_count() + w.vertex[j]];
    partial[depth + 1] = partial[depth] + weight[depth] * g;

    if (depth + 1 == N) {
      const double value = h * partial[N];
      if (value < best.value) {
        best.value = value;
        best.best_sequence = choice;
      }
    } else {
      auto& next = states[depth + 1];
      for (std::size_t i = 0; i < n; ++i) {
        double fi = 0.0;
        for (std::size_t j = 0; j < w.count; ++j)
          fi += w.weight[j] * f_table[(c * mesh.vertex_count() + w.vertex[j]) * n + i];
        next[i] = states[depth][i] + h * fi;
      }
      problem.domain().clamp_in_place(next);
      ++depth;
      mesh.locate_into(states[depth], loc[depth]);
      choice[depth] = 0;
      continue;
    }

    // Advance to the next sibling, backtracking as needed.
    while (++choice[depth] == nc) {
      if (depth == 0) {
        const auto& max_g = problem.bounds().max_g;
        best.tail_bound = max_g ? geometric_tail(*max_g, problem.lambda(), h, N)
                                : std::numeric_limits<double>::infinity();
        return best;
      }
      --depth;
    }
  }
}

}  // namespace sldp
