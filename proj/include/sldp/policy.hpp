#pragma once

// Greedy feedback from a solved value function.

#include <cstddef>
#include <span>
#include <vector>

#include "sldp/cost.hpp"
#include "sldp/solver.hpp"

namespace sldp {

struct GreedyChoice {
  std::size_t index = 0;
  std::vector<double> control;
  double value = 0.0;  // the minimized right-hand side
};

/// argmin over sampled controls of (1 - lambda h) I_k v(y + h f(y,u)) + h g(y,u).
/// Foot points outside the box are clamped. Ties go to the lowest index.
GreedyChoice greedy_control(const ValueFunction& v, const Problem& problem, std::span<const double> y);

struct ClosedLoopRun {
  Trajectory trajectory;
  std::vector<std::vector<double>> controls;  // one per step
  std::vector<double> stage_costs;            // I_k g(y_n, u_n)
  double realized_cost = 0.0;                 // h sum delta^n I_k g(y_n, u_n)
  double tail_bound = 0.0;
};

/// Applies the greedy control and the interpolated Euler step `steps` times.
ClosedLoopRun synthesize_trajectory(const ValueFunction& v, const Problem& problem,
                                    std::span<const double> y0, std::size_t steps);

}  // namespace sldp
