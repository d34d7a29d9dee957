#pragma once

// Fully discrete semi-Lagrangian dynamic programming:
//
//   v(y_i) = min_u { (1 - lambda h) I_k v(y_i + h f(y_i,u)) + h g(y_i,u) }
//
// at every mesh vertex y_i, iterated to its unique fixed point.

#include <cstddef>
#include <memory>
#include <variant>
#include <vector>

#include "sldp/interp.hpp"
#include "sldp/mesh.hpp"
#include "sldp/problem.hpp"

namespace sldp {

enum class OutOfDomainPolicy { Clamp, Reject };

struct ZeroGuess {};
struct ConstantGuess {
  double value;
};
using InitialGuess = std::variant<ZeroGuess, ConstantGuess, std::vector<double>>;

struct SolveConfig {
  double tolerance = 1e-10;  // sup-norm distance to the discrete fixed point
  int max_iterations = 1'000'000;
  OutOfDomainPolicy out_of_domain = OutOfDomainPolicy::Clamp;
  InitialGuess initial_guess = ZeroGuess{};
  unsigned workers = 1;  // 0 = hardware concurrency

  void validate() const;
};

struct ValueFunction {
  NodalField field;
  double h = 0.0;
  double lambda = 0.0;
  double residual = 0.0;  // sup-norm of the last update
  int iterations = 0;
  std::size_t clamp_events = 0;
  std::vector<std::size_t> policy;  // argmin control index per vertex, last sweep

  double operator()(std::size_t vertex) const { return field.value(vertex); }
  const SimplicialMesh& mesh() const { return field.mesh(); }
};

struct BellmanResult {
  std::vector<double> values;
  std::vector<std::size_t> argmin;
};

/// Throws InvalidArgument unless 0 < h < 1/lambda.
void check_step(double h, double lambda);

/// The discrete Bellman operator with all foot points located once.
class BellmanOperator {
 public:
  BellmanOperator(const Problem& problem, std::shared_ptr<const SimplicialMesh> mesh, double h,
                  OutOfDomainPolicy policy = OutOfDomainPolicy::Clamp, unsigned workers = 1);

  BellmanResult apply(std::span<const double> v) const;
  /// Writes into out (size = vertex count); argmin may be empty to skip it.
  void apply_into(std::span<const double> v, std::span<double> out, std::span<std::size_t> argmin) const;

  double h() const noexcept { return h_; }
  double discount() const noexcept { return discount_; }
  std::size_t clamp_events() const noexcept { return clamp_events_; }
  const std::shared_ptr<const SimplicialMesh>& mesh() const noexcept { return mesh_; }
  std::size_t control_count() const noexcept { return controls_; }

 private:
  std::shared_ptr<const SimplicialMesh> mesh_;
  double h_;
  double discount_;
  std::size_t controls_;
  std::size_t clamp_events_ = 0;
  unsigned workers_;
  std::vector<SimplexWeights> stencil_;  // [vertex * controls + control]
  std::vector<double> stage_cost_;       // h g(y_i, u)
};

BellmanResult bellman_apply(const NodalField& v, const Problem& problem, double h,
                            OutOfDomainPolicy policy = OutOfDomainPolicy::Clamp);

/// Value iteration from the configured initial guess. Stops once the update
/// is <= tolerance (1 - delta) / delta, which bounds the distance to the
/// exact fixed point by the tolerance. Throws NonConvergence otherwise.
ValueFunction solve_fixed_point(const Problem& problem, std::shared_ptr<const SimplicialMesh> mesh,
                                double h, const SolveConfig& config);

/// max over mesh edges of |v(a) - v(b)| / ||a - b||_2.
double lipschitz_estimate(const ValueFunction& v);
double lipschitz_estimate(const NodalField& v);

}  // namespace sldp
