#include <doctest.h>

#include <cmath>
#include <random>

#include "sldp/error.hpp"
#include "sldp/problem.hpp"
#include "support.hpp"

using namespace sldp;

TEST_CASE("control set sampling") {
  const ControlSet a = sample_control_set({-1.0}, {1.0}, {3});
  REQUIRE(a.size() == 3);
  CHECK(a[0][0] == -1.0);
  CHECK(a[1][0] == 0.0);
  CHECK(a[2][0] == 1.0);

  const ControlSet b = sample_control_set({-1.0, -1.0}, {1.0, 1.0}, {2, 2});
  REQUIRE(b.size() == 4);
  CHECK(b[0][0] == -1.0);
  CHECK(b[0][1] == -1.0);
  CHECK(b[1][0] == -1.0);
  CHECK(b[1][1] == 1.0);
  CHECK(b[3][0] == 1.0);
  CHECK(b[3][1] == 1.0);

  const ControlSet c = sample_control_set({-1.0}, {1.0}, {1});
  REQUIRE(c.size() == 1);
  CHECK(c[0][0] == 0.0);

  CHECK_THROWS_AS(sample_control_set({1.0}, {-1.0}, {2}), InvalidArgument);
  CHECK_THROWS_AS(sample_control_set({0.0}, {1.0}, {0}), InvalidArgument);
  CHECK(a.contains(std::vector<double>{0.3}));
  CHECK_FALSE(a.contains(std::vector<double>{1.3}));
}

TEST_CASE("problem preconditions") {
  auto f = [](std::span<const double>, std::span<const double>, std::span<double> o) { o[0] = 0.0; };
  auto g = [](std::span<const double>, std::span<const double>) { return 1.0; };
  const ControlSet U = sample_control_set({0.0}, {1.0}, {2});
  CHECK_THROWS_AS(Problem(testing::unit_box(1), U, 0.0, f, g), InvalidArgument);
  CHECK_THROWS_AS(Problem(testing::unit_box(1), U, -1.0, f, g), InvalidArgument);
  ProblemBounds bad;
  bad.max_g = -1.0;
  CHECK_THROWS_AS(Problem(testing::unit_box(1), U, 1.0, f, g, bad), InvalidArgument);
  CHECK_THROWS_AS(make_expression_problem(testing::unit_box(1), U, 1.0, {parse_expression("y2")},
                                          parse_expression("1")),
                  InvalidArgument);
  CHECK_THROWS_AS(make_expression_problem(testing::unit_box(1), U, 1.0, {parse_expression("u2")},
                                          parse_expression("1")),
                  InvalidArgument);
}

TEST_CASE("manufactured running cost") {
  SUBCASE("constant value function") {
    const auto m = make_manufactured(parse_expression("1"), {parse_expression("sin(y1) * u1")}, 1.0,
                                     testing::unit_box(1), sample_control_set({-1.0}, {1.0}, {5}));
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> y{std::uniform_real_distribution<double>(0.0, 1.0)(rng)};
      std::vector<double> u{std::uniform_real_distribution<double>(-1.0, 1.0)(rng)};
      CHECK(m.problem.running_cost(y, u) == 1.0);
      CHECK(m.exact(y) == 1.0);
    }
  }
  SUBCASE("quadratic value function") {
    const auto m = make_benchmark("manufactured_1d", 1.0);
    std::mt19937_64 rng(2);
    for (int t = 0; t < 200; ++t) {
      const double y = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      const double u = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      const double expected = y * y - 2.0 * u * y * (1.0 - y * y);
      CHECK(m.problem.running_cost(std::vector<double>{y}, std::vector<double>{u}) ==
            doctest::Approx(expected).epsilon(1e-14));
    }
  }
}

TEST_CASE("manufactured HJB residual vanishes") {
  for (const auto& name : benchmark_names()) {
    const auto m = make_benchmark(name, 1.7);
    const std::size_t n = m.problem.state_dim(), k = m.problem.control_dim();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pick(-1.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> y(n), u(k);
      for (auto& x : y) x = pick(rng);
      for (auto& x : u) x = pick(rng);
      CHECK(std::abs(m.hjb_residual(y, u)) <= 1e-10);
    }
  }
}

TEST_CASE("benchmark bounds dominate sampled data") {
  for (const auto& name : benchmark_names()) {
    const auto m = make_benchmark(name, 1.0);
    SimplicialMesh mesh(m.problem.domain(), std::vector<std::size_t>(m.problem.state_dim(), 12));
    const auto r = validate_problem(m.problem, mesh, 0.1, 5);
    CHECK(r.max_abs_g <= *m.problem.bounds().max_g);
    CHECK(r.max_f_inf <= *m.problem.bounds().max_f);
    CHECK(r.lipschitz_f_estimate <= *m.problem.bounds().lipschitz_f * 1.0001 + 1.0);
    CHECK(r.lipschitz_g_estimate <= *m.problem.bounds().lipschitz_g + 1.0);
  }
  CHECK_THROWS_AS(make_benchmark("nope", 1.0), InvalidArgument);
}

TEST_CASE("invariance check on the quadratic benchmark") {
  const auto m = make_benchmark("manufactured_1d", 1.0);
  SimplicialMesh mesh(m.problem.domain(), {40});
  for (double h : {0.5, 0.25, 0.1}) {
    const auto r = validate_problem(m.problem, mesh, h);
    CHECK(r.invariance_violations == 0);
    // independent check of |y + h u (1 - y^2)| <= 1 on the sample grid
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i)
      for (std::size_t c = 0; c < m.problem.controls().size(); ++c) {
        const double y = mesh.vertex(i)[0], u = m.problem.controls()[c][0];
        CHECK(std::abs(y + h * u * (1.0 - y * y)) <= 1.0);
      }
  }
}

TEST_CASE("invariance violation at the right boundary") {
  const Problem p = testing::constant_problem(testing::unit_box(1), 1.0, 1.0, 1.0);
  SimplicialMesh mesh(p.domain(), {4});
  const auto r = validate_problem(p, mesh, 0.1);
  CHECK(r.invariance_violations == p.controls().size());
  CHECK(r.worst_vertex == 4);
  CHECK(r.worst_violation == doctest::Approx(0.1));
  CHECK(r.max_abs_g == 1.0);
  CHECK(fill_bounds({}, r).max_g == 1.0);
}

TEST_CASE("validation is reproducible from the seed") {
  const auto m = make_benchmark("manufactured_2d", 1.0);
  SimplicialMesh mesh(m.problem.domain(), {6, 6});
  const auto a = validate_problem(m.problem, mesh, 0.1, 42);
  const auto b = validate_problem(m.problem, mesh, 0.1, 42);
  CHECK(a.lipschitz_g_estimate == b.lipschitz_g_estimate);
  CHECK(a.pairs_checked == b.pairs_checked);
}
