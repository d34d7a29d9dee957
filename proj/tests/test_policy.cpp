#include <doctest.h>

#include <cmath>
#include <random>

#include "sldp/error.hpp"
#include "sldp/policy.hpp"
#include "support.hpp"

using namespace sldp;

namespace {

ValueFunction constant_value(std::shared_ptr<const SimplicialMesh> mesh, double c, double h, double lambda) {
  return ValueFunction{NodalField(mesh, 1, std::vector<double>(mesh->vertex_count(), c)), h, lambda};
}

}  // namespace

TEST_CASE("single control") {
  const Problem p = testing::constant_problem(testing::unit_box(1), 1.0, 1.0, 0.0, 1);
  auto mesh = testing::make_mesh(p.domain(), {4});
  const auto choice = greedy_control(constant_value(mesh, 1.0, 0.1, 1.0), p, std::vector<double>{0.3});
  CHECK(choice.index == 0);
  CHECK(choice.control == std::vector<double>{0.0});
}

TEST_CASE("only the running cost varies") {
  Problem p(
      testing::unit_box(1), sample_control_set({-1.0}, {1.0}, {3}), 1.0,
      [](std::span<const double>, std::span<const double>, std::span<double> o) { o[0] = 0.0; },
      [](std::span<const double>, std::span<const double> u) { return u[0] * u[0]; });
  auto mesh = testing::make_mesh(p.domain(), {4});
  const auto choice = greedy_control(constant_value(mesh, 2.0, 0.1, 1.0), p, std::vector<double>{0.6});
  CHECK(choice.control[0] == 0.0);
  CHECK(choice.value == doctest::Approx(0.9 * 2.0));
}

TEST_CASE("ties go to the lowest index") {
  const Problem p = testing::constant_problem(testing::unit_box(1), 1.0, 1.0, 0.0, 5);
  auto mesh = testing::make_mesh(p.domain(), {4});
  CHECK(greedy_control(constant_value(mesh, 1.0, 0.1, 1.0), p, std::vector<double>{0.3}).index == 0);
}

TEST_CASE("greedy control at vertices matches the solver's argmin") {
  std::mt19937_64 rng(8);
  const testing::TableInstance t = testing::random_instance(rng, 5, 3);
  const Problem p = t.problem();
  auto mesh = testing::make_mesh(p.domain(), {4});
  SolveConfig sc;
  sc.tolerance = 1e-13;
  const ValueFunction v = solve_fixed_point(p, mesh, t.h, sc);
  const auto last = BellmanOperator(p, mesh, t.h).apply(v.field.values());
  for (std::size_t i = 0; i < mesh->vertex_count(); ++i) {
    const auto choice = greedy_control(v, p, mesh->vertex(i));
    CHECK(choice.index == last.argmin[i]);
    CHECK(choice.value == doctest::Approx(last.values[i]).epsilon(1e-13));
  }
}

TEST_CASE("closed loop with frozen state") {
  Problem p(
      testing::unit_box(1), sample_control_set({-1.0}, {1.0}, {3}), 1.0,
      [](std::span<const double>, std::span<const double>, std::span<double> o) { o[0] = 0.0; },
      [](std::span<const double> y, std::span<const double> u) { return y[0] + u[0] * u[0]; },
      ProblemBounds{.max_g = 2.0});
  auto mesh = testing::make_mesh(p.domain(), {4});
  const ValueFunction v = solve_fixed_point(p, mesh, 0.1, {});
  const std::vector<double> y0{0.5};
  const auto run = synthesize_trajectory(v, p, y0, 200);
  for (const auto& s : run.trajectory.states) CHECK(s[0] == 0.5);
  for (const auto& u : run.controls) CHECK(u[0] == 0.0);
  CHECK(std::abs(run.realized_cost - 0.5) <= run.tail_bound + 1e-12);
}

TEST_CASE("closed loop with constant running cost") {
  const Problem p = testing::constant_problem(BoxDomain({-1.0}, {1.0}), 2.0, 0.6, 0.3);
  auto mesh = testing::make_mesh(p.domain(), {8});
  const ValueFunction v = solve_fixed_point(p, mesh, 0.1, {});
  const auto run = synthesize_trajectory(v, p, std::vector<double>{-0.2}, 150);
  CHECK(std::abs(run.realized_cost - 0.3) <= run.tail_bound + 1e-12);
}

TEST_CASE("closed loop on the quadratic benchmark stays near the nodal value") {
  const auto m = make_benchmark("manufactured_1d", 1.0);
  auto mesh = testing::make_mesh(m.problem.domain(), {40});
  SolveConfig sc;
  const double h = 0.05;
  const ValueFunction v = solve_fixed_point(m.problem, mesh, h, sc);
  const std::vector<double> y0{0.5};
  const auto run = synthesize_trajectory(v, m.problem, y0, 400);
  // the greedy loop realizes the minimum up to interpolation at off-mesh states
  const double slack = run.tail_bound + sc.tolerance + 2.0 * (h + mesh->k());
  CHECK(std::abs(run.realized_cost - v.field.interpolate_scalar(y0)) <= slack);
  CHECK_THROWS_AS(synthesize_trajectory(v, m.problem, std::vector<double>{5.0}, 10), OutOfDomain);
}
