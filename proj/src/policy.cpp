#include "sldp/policy.hpp"

#include <cmath>
#include <limits>

#include "sldp/error.hpp"

namespace sldp {

GreedyChoice greedy_control(const ValueFunction& v, const Problem& problem, std::span<const double> y) {
  if (y.size() != problem.state_dim()) throw InvalidArgument("state has the wrong dimension");
  if (!problem.domain().contains(y)) throw OutOfDomain("state lies outside the domain");
  const double h = v.h;
  const double delta = 1.0 - problem.lambda() * h;
  const ControlSet& U = problem.controls();
  const std::size_t n = problem.state_dim();
  std::vector<double> f(n), foot(n);
  GreedyChoice best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < U.size(); ++c) {
    problem.dynamics(y, U[c], f);
    for (std::size_t i = 0; i < n; ++i) foot[i] = y[i] + h * f[i];
    problem.domain().clamp_in_place(foot);
    const double candidate = delta * v.field.interpolate_scalar(foot) + h * problem.running_cost(y, U[c]);
    if (candidate < best.value) {
      best.value = candidate;
      best.index = c;
    }
  }
  best.control.assign(U[best.index].begin(), U[best.index].end());
  return best;
}

ClosedLoopRun synthesize_trajectory(const ValueFunction& v, const Problem& problem,
                                    std::span<const double> y0, std::size_t steps) {
  if (y0.size() != problem.state_dim()) throw InvalidArgument("initial state has the wrong dimension");
  if (!problem.domain().contains(y0)) throw OutOfDomain("initial state lies outside the domain");
  const SimplicialMesh& mesh = v.mesh();
  const std::size_t n = problem.state_dim();
  const double h = v.h;
  const double delta = 1.0 - problem.lambda() * h;

  ClosedLoopRun run;
  run.trajectory.states.emplace_back(y0.begin(), y0.end());
  std::vector<double> f(n), scratch(n);
  double weight = 1.0, sum = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::vector<double>& y = run.trajectory.states.back();
    GreedyChoice choice = greedy_control(v, problem, y);

    SimplexWeights w;
    mesh.locate_into(y, w);
    std::fill(f.begin(), f.end(), 0.0);
    double g = 0.0;
    for (std::size_t j = 0; j < w.count; ++j) {
      if (w.weight[j] == 0.0) continue;
      const auto vy = mesh.vertex(w.vertex[j]);
      problem.dynamics(vy, choice.control, scratch);
      for (std::size_t i = 0; i < n; ++i) f[i] += w.weight[j] * scratch[i];
      g += w.weight[j] * problem.running_cost(vy, choice.control);
    }
    sum += weight * g;
    weight *= delta;

    std::vector<double> next = y;
    for (std::size_t i = 0; i < n; ++i) next[i] += h * f[i];
    if (!problem.domain().contains(next)) {
      problem.domain().clamp_in_place(next);
      ++run.trajectory.clamp_events;
    }
    run.stage_costs.push_back(g);
    run.controls.push_back(std::move(choice.control));
    run.trajectory.states.push_back(std::move(next));
  }
  run.realized_cost = h * sum;
  const auto& max_g = problem.bounds().max_g;
  run.tail_bound = max_g ? geometric_tail(*max_g, problem.lambda(), h, steps)
                         : std::numeric_limits<double>::infinity();
  if (!std::isfinite(run.realized_cost)) throw NumericalError("closed-loop cost is not finite");
  return run;
}

}  // namespace sldp
