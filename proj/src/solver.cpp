#include "sldp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "sldp/error.hpp"

namespace sldp {

void SolveConfig::validate() const {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) throw InvalidArgument("tolerance must be positive");
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
}

void check_step(double h, double lambda) {
  if (!(h > 0.0) || !(h * lambda < 1.0) || !std::isfinite(h))
    throw InvalidArgument("h must lie in (0, 1/lambda); got h = " + std::to_string(h) +
                          ", lambda = " + std::to_string(lambda));
}

namespace {

unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(begin, end) over contiguous chunks of [0, count).
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 1; w < workers; ++w) {
    const std::size_t b = w * chunk, e = std::min(count, b + chunk);
    if (b < e) threads.emplace_back([&body, b, e] { body(b, e); });
  }
  body(0, std::min(count, chunk));
}

}  // namespace

BellmanOperator::BellmanOperator(const Problem& problem, std::shared_ptr<const SimplicialMesh> mesh,
                                 double h, OutOfDomainPolicy policy, unsigned workers)
    : mesh_(std::move(mesh)),
      h_(h),
      discount_(1.0 - problem.lambda() * h),
      controls_(problem.controls().size()),
      workers_(resolve_workers(workers)) {
  if (!mesh_) throw InvalidArgument("Bellman operator requires a mesh");
  check_step(h, problem.lambda());
  if (mesh_->dim() != problem.state_dim())
    throw InvalidArgument("mesh dimension does not match the problem's state dimension");

  const std::size_t n = mesh_->dim();
  const ControlSet& U = problem.controls();
  stencil_.resize(mesh_->vertex_count() * controls_);
  stage_cost_.resize(stencil_.size());
  std::vector<double> f(n), foot(n);
  for (std::size_t v = 0; v < mesh_->vertex_count(); ++v) {
    const auto y = mesh_->vertex(v);
    for (std::size_t c = 0; c < controls_; ++c) {
      problem.dynamics(y, U[c], f);
      const double g = problem.running_cost(y, U[c]);
      bool finite = std::isfinite(g);
      for (double x : f) finite = finite && std::isfinite(x);
      if (!finite)
        throw NumericalError("problem data is not finite at vertex " + std::to_string(v) +
                             ", control " + std::to_string(c));
      for (std::size_t i = 0; i < n; ++i) foot[i] = y[i] + h * f[i];
      if (!mesh_->domain().contains(foot)) {
        if (policy == OutOfDomainPolicy::Reject)
          throw OutOfDomain("foot point of vertex " + std::to_string(v) + " under control " +
                            std::to_string(c) + " leaves the domain by " +
                            std::to_string(mesh_->domain().distance_outside(foot)));
        mesh_->domain().clamp_in_place(foot);
        ++clamp_events_;
      }
      mesh_->locate_into(foot, stencil_[v * controls_ + c]);
      stage_cost_[v * controls_ + c] = h * g;
    }
  }
}

void BellmanOperator::apply_into(std::span<const double> v, std::span<double> out,
                                 std::span<std::size_t> argmin) const {
  const std::size_t nv = mesh_->vertex_count();
  if (v.size() != nv || out.size() != nv)
    throw InvalidArgument("value array does not match the mesh vertex count");
  const bool want_argmin = !argmin.empty();
  parallel_for(nv, workers_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < controls_; ++c) {
        const SimplexWeights& w = stencil_[i * controls_ + c];
        double interp = 0.0;
        for (std::size_t j = 0; j < w.count; ++j) interp += w.weight[j] * v[w.vertex[j]];
        const double candidate = discount_ * interp + stage_cost_[i * controls_ + c];
        // Strict comparison: lowest control index wins ties.
        if (candidate < best) {
          best = candidate;
          best_c = c;
        }
      }
      out[i] = best;
      if (want_argmin) argmin[i] = best_c;
    }
  });
}

BellmanResult BellmanOperator::apply(std::span<const double> v) const {
  BellmanResult r;
  r.values.resize(mesh_->vertex_count());
  r.argmin.resize(mesh_->vertex_count());
  apply_into(v, r.values, r.argmin);
  return r;
}

BellmanResult bellman_apply(const NodalField& v, const Problem& problem, double h,
                            OutOfDomainPolicy policy) {
  if (v.width() != 1) throw InvalidArgument("Bellman operator acts on scalar fields");
  BellmanOperator op(problem, v.mesh_ptr(), h, policy, 1);
  return op.apply(v.values());
}

ValueFunction solve_fixed_point(const Problem& problem, std::shared_ptr<const SimplicialMesh> mesh,
                                double h, const SolveConfig& config) {
  config.validate();
  check_step(h, problem.lambda());
  BellmanOperator op(problem, mesh, h, config.out_of_domain, config.workers);
  const std::size_t nv = op.mesh()->vertex_count();

  std::vector<double> v(nv, 0.0);
  if (const auto* c = std::get_if<ConstantGuess>(&config.initial_guess)) {
    std::fill(v.begin(), v.end(), c->value);
  } else if (const auto* field = std::get_if<std::vector<double>>(&config.initial_guess)) {
    if (field->size() != nv)
      throw InvalidArgument("initial guess has " + std::to_string(field->size()) +
                            " values, mesh has " + std::to_string(nv) + " vertices");
    v = *field;
  }

  const double delta = op.discount();
  const double threshold = config.tolerance * (1.0 - delta) / delta;
  std::vector<double> next(nv);
  std::vector<std::size_t> argmin(nv);
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < config.max_iterations) {
    op.apply_into(v, next, argmin);
    ++it;
    residual = 0.0;
    for (std::size_t i = 0; i < nv; ++i) residual = std::max(residual, std::abs(next[i] - v[i]));
    v.swap(next);
    if (!std::isfinite(residual)) break;
    if (residual <= threshold) {
      ValueFunction out{NodalField(op.mesh(), 1, std::move(v)), h, problem.lambda(), residual, it,
                        op.clamp_events(), std::move(argmin)};
      return out;
    }
  }
  throw NonConvergence("value iteration did not converge in " + std::to_string(it) +
                           " iterations; last update " + std::to_string(residual) +
                           ", required " + std::to_string(threshold),
                       residual, it);
}

double lipschitz_estimate(const NodalField& v) {
  const SimplicialMesh& mesh = v.mesh();
  const std::size_t n = mesh.dim();
  double best = 0.0;
  for (std::size_t s = 0; s < mesh.simplex_count(); ++s) {
    const auto verts = mesh.simplex(s);
    for (std::size_t a = 0; a < verts.size(); ++a)
      for (std::size_t b = a + 1; b < verts.size(); ++b) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = mesh.vertex(verts[a])[i] - mesh.vertex(verts[b])[i];
          d2 += d * d;
        }
        best = std::max(best, std::abs(v.value(verts[a]) - v.value(verts[b])) / std::sqrt(d2));
      }
  }
  return best;
}

double lipschitz_estimate(const ValueFunction& v) { return lipschitz_estimate(v.field); }

}  // namespace sldp
