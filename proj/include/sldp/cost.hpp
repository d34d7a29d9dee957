#pragma once

// Discrete and continuous cost functionals.
//
// The fully discrete cost of a control sequence starting at y is
//   J_hk(y, u) = h sum_n delta^n I_k g(y_n, u_n),   delta = 1 - lambda h,
//   y_{n+1}    = y_n + h I_k f(y_n, u_n),          y_0 = y,
// truncated after N terms with the geometric tail bound M_g delta^N / lambda.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sldp/mesh.hpp"
#include "sldp/problem.hpp"

namespace sldp {

struct ControlSequence {
  std::vector<std::vector<double>> controls;  // u_0 .. u_{N-1}
  double h = 0.0;

  std::size_t size() const noexcept { return controls.size(); }
  /// u_n, repeating the last control past the end.
  std::span<const double> at(std::size_t n) const;
};

/// u_i = control(t_i), t_i = i h, for i < count.
ControlSequence sample_control_signal(const std::function<std::vector<double>(double)>& control,
                                      double h, std::size_t count);

struct Trajectory {
  std::vector<std::vector<double>> states;  // y_0 .. y_N
  std::size_t clamp_events = 0;
};

/// Euler steps with the interpolated dynamics I_k f; steps leaving the box
/// are clamped and counted. Throws OutOfDomain when y0 is outside the box.
Trajectory euler_rollout(const Problem& problem, const SimplicialMesh& mesh,
                         std::span<const double> y0, const ControlSequence& seq);

struct CostEstimate {
  double value = 0.0;
  double tail_bound = 0.0;  // |value - untruncated value| <= tail_bound
  std::size_t terms = 0;
};

/// Smallest N with M_g delta^N / lambda <= tail_tol.
std::size_t terms_for_tail(double max_g, double lambda, double h, double tail_tol);
double geometric_tail(double max_g, double lambda, double h, std::size_t terms);

/// Truncated J_hk. Uses max(seq.size(), terms_for_tail) terms; the last
/// control is repeated. A finite tail_tol needs M_g in the problem bounds;
/// tail_tol = +inf evaluates exactly seq.size() terms.
CostEstimate discrete_cost(const Problem& problem, const SimplicialMesh& mesh,
                           std::span<const double> y0, const ControlSequence& seq, double tail_tol);

/// Reference for J(y0, u) = int_0^inf g(y(t), u(t)) e^{-lambda t} dt: classical
/// RK4 on the exact dynamics and trapezoidal discounting on the same grid up to
/// T. tail_bound = M_g e^{-lambda T} / lambda (infinite when M_g is unknown).
CostEstimate continuous_cost_oracle(const Problem& problem, std::span<const double> y0,
                                    const std::function<std::vector<double>(double)>& control,
                                    double T, double dt);

/// States of the exact dynamics at t = 0, dt, ..., integrated with RK4.
std::vector<std::vector<double>> reference_trajectory(
    const Problem& problem, std::span<const double> y0,
    const std::function<std::vector<double>(double)>& control, double T, double dt);

struct BruteForceResult {
  double value = 0.0;
  double tail_bound = 0.0;
  std::vector<std::size_t> best_sequence;  // control indices
  double sequences = 0.0;
};

inline constexpr double kMaxEnumeratedSequences = 1e7;

/// min over all |U|^N control sequences of the N-term discrete cost from the
/// mesh vertex y0_vertex. Ties keep the lexicographically first sequence.
/// Throws EnumerationLimit when |U|^N exceeds max_sequences.
BruteForceResult brute_force_value(const Problem& problem, const SimplicialMesh& mesh, double h,
                                   std::size_t y0_vertex, std::size_t N,
                                   double max_sequences = kMaxEnumeratedSequences);

}  // namespace sldp
