#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sldp/error.hpp"
#include "sldp/study.hpp"
#include "support.hpp"

using namespace sldp;

TEST_CASE("rate fit on exact power laws") {
  const std::vector<double> x{0.2, 0.1, 0.05, 0.025};
  std::vector<double> e1, e2;
  for (double v : x) {
    e1.push_back(3.0 * v);
    e2.push_back(0.5 * v * v);
  }
  const RateFit a = fit_rate(x, e1);
  CHECK(std::abs(a.slope - 1.0) <= 1e-12);
  CHECK(std::abs(a.intercept - std::log(3.0)) <= 1e-12);
  CHECK(a.r_squared == doctest::Approx(1.0));
  CHECK(a.reliable);
  CHECK(std::abs(fit_rate(x, e2).slope - 2.0) <= 1e-12);

  const std::vector<double> noisy{1.0, 0.2, 0.9, 0.1};
  CHECK_FALSE(fit_rate(x, noisy).reliable);
  CHECK_THROWS_AS(fit_rate(std::vector<double>{0.1}, std::vector<double>{0.1}), InvalidArgument);
  CHECK_THROWS_AS(fit_rate(x, std::vector<double>{1.0, 0.0, 1.0, 1.0}), InvalidArgument);
}

TEST_CASE("errors against a reference") {
  const auto m = make_benchmark("manufactured_1d", 1.0);
  auto mesh = testing::make_mesh(m.problem.domain(), {20});
  const ValueFunction v = solve_fixed_point(m.problem, mesh, 0.1, {});
  const auto own = [&](std::span<const double> y) { return v.field.interpolate_scalar(y); };
  CHECK(error_against_reference(v, own) == 0.0);
  const auto shifted = [&](std::span<const double> y) { return v.field.interpolate_scalar(y) + 0.5; };
  CHECK(error_against_reference(v, shifted) == doctest::Approx(0.5).epsilon(1e-14));
  const double e = error_against_reference(v, [&](std::span<const double> y) { return m.exact(y); });
  CHECK(e > 0.0);
  CHECK(vertex_rms_error(v, own) == 0.0);
}

TEST_CASE("joint refinement on the quadratic benchmark") {
  const auto m = make_benchmark("manufactured_1d", 1.0);
  RefinementSchedule s;
  for (std::size_t cells : {10, 20, 40}) s.entries.push_back({2.0 / cells, {cells}});
  s.reference = ExactReference{[&](std::span<const double> y) { return m.exact(y); }};
  const ConvergenceRun run = run_refinement_study(m.problem, s, {});
  REQUIRE(run.records.size() == 3);
  REQUIRE(run.fit);
  CHECK(run.fit->slope > 0.8);
  CHECK(run.records[0].h > run.records[2].h);
  CHECK_FALSE(run.failure);
  CHECK(run.warnings.empty());

  RefinementSchedule empty;
  empty.reference = s.reference;
  CHECK_THROWS_AS(run_refinement_study(m.problem, empty, {}), InvalidArgument);
}

TEST_CASE("coarse fine reference is flagged") {
  const auto m = make_benchmark("manufactured_1d", 1.0);
  RefinementSchedule s;
  s.entries = {{0.2, {10}}, {0.1, {20}}};
  s.reference = FineReference{0.05, {40}};
  const ConvergenceRun run = run_refinement_study(m.problem, s, {});
  CHECK(run.records.size() == 2);
  CHECK(run.warnings.size() >= 1);
}

TEST_CASE("failing solves keep partial results") {
  const auto m = make_benchmark("manufactured_1d", 1.0);
  RefinementSchedule s;
  s.entries = {{0.2, {10}}, {0.002, {20}}};
  s.reference = ExactReference{[&](std::span<const double> y) { return m.exact(y); }};
  SolveConfig c;
  c.max_iterations = 500;
  const ConvergenceRun run = run_refinement_study(m.problem, s, c);
  CHECK(run.records.size() == 1);
  REQUIRE(run.failure);
  CHECK(run.failure->find("schedule entry 1") != std::string::npos);
}

TEST_CASE("fixed mesh sweeps") {
  const auto m = make_benchmark("manufactured_1d", 1.0);
  const auto exact = [&](std::span<const double> y) { return m.exact(y); };
  SUBCASE("single step size") {
    const FixedKTable t = fixed_k_blowup_test(m.problem, {20}, {0.1}, exact, {});
    CHECK(t.records.size() == 1);
    CHECK(t.ratios.empty());
    CHECK_FALSE(t.max_ratio);
  }
  SUBCASE("coarse mesh plateaus") {
    const FixedKTable t = fixed_k_blowup_test(m.problem, {4}, {0.05, 0.025, 0.0125, 0.00625}, exact, {});
    REQUIRE(t.ratios.size() == 3);
    CHECK(*t.max_ratio <= 1.1);
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(fixed_k_blowup_test(m.problem, {4}, {}, exact, {}), InvalidArgument);
    CHECK_THROWS_AS(fixed_k_blowup_test(m.problem, {4}, {0.1, 0.2}, exact, {}), InvalidArgument);
    CHECK_THROWS_AS(fixed_k_blowup_test(m.problem, {4}, {1.5}, exact, {}), InvalidArgument);
  }
}

TEST_CASE("study CSV layout") {
  std::ostringstream out;
  write_study_csv(out, {{0.1, 0.1, 0.01, 0.005, 10, 0, 0.5}}, RateFit{1.0, 0.0, 1.0, true}, 1.02, {"note"});
  const std::string s = out.str();
  CHECK(s.rfind("h,k,sup_error,iterations,clamp_events,wall_seconds\n", 0) == 0);
  CHECK(s.find("0.10000000000000001,") != std::string::npos);
  CHECK(s.find("# slope,1\n") != std::string::npos);
  CHECK(s.find("# max_fixed_k_ratio,1.02\n") != std::string::npos);
  CHECK(s.find("# warning,note\n") != std::string::npos);
}
