#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <vector>

#include "sldp/cost.hpp"
#include "sldp/mesh.hpp"
#include "sldp/problem.hpp"
#include "sldp/solver.hpp"

namespace sldp::testing {

inline BoxDomain unit_box(std::size_t n) { return BoxDomain(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)); }

inline std::shared_ptr<const SimplicialMesh> make_mesh(const BoxDomain& d, std::vector<std::size_t> cells) {
  return std::make_shared<const SimplicialMesh>(d, std::move(cells));
}

/// f = f_value (every component), g = c.
inline Problem constant_problem(const BoxDomain& domain, double lambda, double c, double f_value = 0.0,
                                std::size_t controls = 3) {
  ControlSet U = sample_control_set({-1.0}, {1.0}, {controls});
  ProblemBounds b;
  b.max_g = std::abs(c);
  b.max_f = std::abs(f_value);
  b.lipschitz_f = 0.0;
  b.lipschitz_g = 0.0;
  return Problem(
      domain, U, lambda,
      [f_value](std::span<const double>, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), f_value);
      },
      [c](std::span<const double>, std::span<const double>) { return c; }, b, "constant");
}

/// Piecewise linear interpolation of nodal data on a uniform 1D grid over
/// [0,1]; written independently of the mesh module.
inline double hat_interp(const std::vector<double>& nodes, double y) {
  const std::size_t cells = nodes.size() - 1;
  double s = y * static_cast<double>(cells);
  std::size_t c = std::min<std::size_t>(static_cast<std::size_t>(std::floor(s)), cells - 1);
  const double t = s - static_cast<double>(c);
  return (1.0 - t) * nodes[c] + t * nodes[c + 1];
}

/// 1D problem on [0,1] whose data are random nodal tables per control;
/// f is clipped so that every foot point y_i + h f(y_i,u) stays in the box.
struct TableInstance {
  std::size_t vertices = 0;
  std::size_t controls = 0;
  std::vector<std::vector<double>> f;  // [control][vertex]
  std::vector<std::vector<double>> g;
  double lambda = 1.0;
  double h = 0.2;

  Problem problem() const {
    auto self = std::make_shared<TableInstance>(*this);
    const double nu = static_cast<double>(controls);
    ControlSet U = sample_control_set({0.0}, {nu - 1.0}, {controls});
    auto index = [](std::span<const double> u) { return static_cast<std::size_t>(std::lround(u[0])); };
    ProblemBounds b;
    double mg = 0.0, mf = 0.0;
    for (std::size_t c = 0; c < controls; ++c)
      for (std::size_t i = 0; i < vertices; ++i) {
        mg = std::max(mg, std::abs(g[c][i]));
        mf = std::max(mf, std::abs(f[c][i]));
      }
    b.max_g = mg;
    b.max_f = mf;
    return Problem(
        BoxDomain({0.0}, {1.0}), controls == 1 ? sample_control_set({0.0}, {0.0}, {1}) : U, lambda,
        [self, index](std::span<const double> y, std::span<const double> u, std::span<double> out) {
          out[0] = hat_interp(self->f[index(u)], y[0]);
        },
        [self, index](std::span<const double> y, std::span<const double> u) {
          return hat_interp(self->g[index(u)], y[0]);
        },
        b, "table");
  }
};

inline TableInstance random_instance(std::mt19937_64& rng, std::size_t vertices, std::size_t controls,
                                     double h = 0.2) {
  TableInstance t;
  t.vertices = vertices;
  t.controls = controls;
  t.h = h;
  std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0);
  for (std::size_t c = 0; c < controls; ++c) {
    std::vector<double> fc(vertices), gc(vertices);
    for (std::size_t i = 0; i < vertices; ++i) {
      const double y = static_cast<double>(i) / static_cast<double>(vertices - 1);
      // keep y + h f inside [0, 1]
      fc[i] = std::clamp(sym(rng), -y / h, (1.0 - y) / h);
      gc[i] = unit(rng);
    }
    t.f.push_back(fc);
    t.g.push_back(gc);
  }
  return t;
}

/// Every foot point lands on a vertex (stay, left or right neighbour), so the
/// discrete trajectories never leave the vertex set.
inline TableInstance grid_aligned_instance(std::mt19937_64& rng, std::size_t vertices, std::size_t controls,
                                           double h = 0.2) {
  TableInstance t = random_instance(rng, vertices, controls, h);
  const double spacing = 1.0 / static_cast<double>(vertices - 1);
  std::uniform_int_distribution<int> move(-1, 1);
  for (std::size_t c = 0; c < controls; ++c)
    for (std::size_t i = 0; i < vertices; ++i) {
      int m = move(rng);
      if (i == 0 && m < 0) m = 0;
      if (i + 1 == vertices && m > 0) m = 0;
      t.f[c][i] = m * spacing / h;
    }
  return t;
}

}  // namespace sldp::testing
