#include "sldp/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>

#include "sldp/error.hpp"

namespace sldp {

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double error_against_reference(const ValueFunction& v, const ReferenceFn& reference) {
  double e = 0.0;
  for (std::size_t i = 0; i < v.mesh().vertex_count(); ++i)
    e = std::max(e, std::abs(v(i) - reference(v.mesh().vertex(i))));
  return e;
}

double vertex_rms_error(const ValueFunction& v, const ReferenceFn& reference) {
  double s = 0.0;
  const std::size_t nv = v.mesh().vertex_count();
  for (std::size_t i = 0; i < nv; ++i) {
    const double d = v(i) - reference(v.mesh().vertex(i));
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(nv));
}

RateFit fit_rate(std::span<const double> x, std::span<const double> error) {
  if (x.size() != error.size()) throw InvalidArgument("rate fit needs matching x and error arrays");
  if (x.size() < 2) throw InvalidArgument("rate fit needs at least two points");
  std::vector<double> lx(x.size()), le(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(error[i] > 0.0)) throw InvalidArgument("rate fit needs positive data");
    lx[i] = std::log(x[i]);
    le[i] = std::log(error[i]);
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, me = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    me += le[i];
  }
  mx /= n;
  me /= n;
  double sxx = 0.0, sxe = 0.0, see = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxe += (lx[i] - mx) * (le[i] - me);
    see += (le[i] - me) * (le[i] - me);
  }
  if (sxx == 0.0) throw InvalidArgument("rate fit needs at least two distinct abscissae");
  RateFit fit;
  fit.slope = sxe / sxx;
  fit.intercept = me - fit.slope * mx;
  fit.r_squared = see == 0.0 ? 1.0 : (sxe * sxe) / (sxx * see);
  fit.reliable = fit.r_squared >= kReliableR2;
  return fit;
}

namespace {

struct TimedSolve {
  ValueFunction value;
  double seconds;
};

TimedSolve timed_solve(const Problem& problem, std::shared_ptr<const SimplicialMesh> mesh, double h,
                       const SolveConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ValueFunction v = solve_fixed_point(problem, std::move(mesh), h, config);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return {std::move(v), elapsed.count()};
}

}  // namespace

ConvergenceRun run_refinement_study(const Problem& problem, const RefinementSchedule& schedule,
                                    const SolveConfig& config) {
  if (schedule.entries.empty()) throw InvalidArgument("refinement schedule is empty");
  for (const auto& e : schedule.entries) check_step(e.h, problem.lambda());
  config.validate();

  ConvergenceRun run;
  ReferenceFn reference;
  if (const auto* exact = std::get_if<ExactReference>(&schedule.reference)) {
    reference = exact->value;
  } else {
    const auto& fine = std::get<FineReference>(schedule.reference);
    auto mesh = std::make_shared<const SimplicialMesh>(problem.domain(), fine.cells);
    double min_hk = std::numeric_limits<double>::infinity();
    for (const auto& e : schedule.entries) {
      const SimplicialMesh m(problem.domain(), e.cells);
      min_hk = std::min(min_hk, e.h + m.k());
    }
    if (fine.h + mesh->k() > 0.25 * min_hk)
      run.warnings.push_back("reference solve (h + k = " + format_real(fine.h + mesh->k()) +
                             ") is not at least four times finer than the schedule (min h + k = " +
                             format_real(min_hk) + ")");
    try {
      auto fine_solution = std::make_shared<ValueFunction>(solve_fixed_point(problem, mesh, fine.h, config));
      reference = [fine_solution](std::span<const double> y) {
        return fine_solution->field.interpolate_scalar(y);
      };
    } catch (const std::exception& ex) {
      run.failure = std::string("reference solve failed: ") + ex.what();
      return run;
    }
  }

  for (std::size_t i = 0; i < schedule.entries.size(); ++i) {
    const auto& entry = schedule.entries[i];
    try {
      auto mesh = std::make_shared<const SimplicialMesh>(problem.domain(), entry.cells);
      TimedSolve s = timed_solve(problem, mesh, entry.h, config);
      run.records.push_back({entry.h, mesh->k(), error_against_reference(s.value, reference),
                             vertex_rms_error(s.value, reference), s.value.iterations,
                             s.value.clamp_events, s.seconds});
    } catch (const std::exception& ex) {
      run.failure = "solve for schedule entry " + std::to_string(i) + " (h = " + format_real(entry.h) +
                    ") failed: " + ex.what();
      break;
    }
  }

  std::stable_sort(run.records.begin(), run.records.end(),
                   [](const StudyRecord& a, const StudyRecord& b) { return a.h + a.k > b.h + b.k; });
  if (run.records.size() >= 2) {
    std::vector<double> x, e;
    for (const auto& r : run.records) {
      x.push_back(r.h + r.k);
      e.push_back(r.sup_error);
    }
    try {
      run.fit = fit_rate(x, e);
      if (!run.fit->reliable)
        run.warnings.push_back("rate fit unreliable: R^2 = " + format_real(run.fit->r_squared));
    } catch (const InvalidArgument& ex) {
      run.warnings.push_back(std::string("no rate fit: ") + ex.what());
    }
  }
  return run;
}

FixedKTable fixed_k_blowup_test(const Problem& problem, const std::vector<std::size_t>& cells,
                                const std::vector<double>& h_list, const ReferenceFn& reference,
                                const SolveConfig& config) {
  if (h_list.empty()) throw InvalidArgument("h list is empty");
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    check_step(h_list[i], problem.lambda());
    if (i > 0 && !(h_list[i] < h_list[i - 1])) throw InvalidArgument("h list must be strictly decreasing");
  }
  config.validate();
  auto mesh = std::make_shared<const SimplicialMesh>(problem.domain(), cells);

  FixedKTable table;
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    try {
      TimedSolve s = timed_solve(problem, mesh, h_list[i], config);
      table.records.push_back({h_list[i], mesh->k(), error_against_reference(s.value, reference),
                               vertex_rms_error(s.value, reference), s.value.iterations,
                               s.value.clamp_events, s.seconds});
    } catch (const std::exception& ex) {
      table.failure = "solve for h = " + format_real(h_list[i]) + " failed: " + ex.what();
      break;
    }
  }
  for (std::size_t i = 1; i < table.records.size(); ++i) {
    const double r = table.records[i].sup_error / table.records[i - 1].sup_error;
    table.ratios.push_back(r);
    table.max_ratio = table.max_ratio ? std::max(*table.max_ratio, r) : r;
  }
  if (table.records.size() >= 2) {
    std::vector<double> x, e;
    for (const auto& r : table.records) {
      x.push_back(r.h);
      e.push_back(r.sup_error);
    }
    try {
      table.fit = fit_rate(x, e);
    } catch (const InvalidArgument&) {
    }
  }
  return table;
}

void write_study_csv(std::ostream& out, const std::vector<StudyRecord>& records,
                     const std::optional<RateFit>& fit, const std::optional<double>& max_ratio,
                     const std::vector<std::string>& warnings) {
  out << "h,k,sup_error,iterations,clamp_events,wall_seconds\n";
  for (const auto& r : records)
    out << format_real(r.h) << ',' << format_real(r.k) << ',' << format_real(r.sup_error) << ','
        << r.iterations << ',' << r.clamp_events << ',' << format_real(r.wall_seconds) << '\n';
  if (fit) {
    out << "# slope," << format_real(fit->slope) << '\n';
    out << "# intercept," << format_real(fit->intercept) << '\n';
    out << "# r_squared," << format_real(fit->r_squared) << '\n';
    out << "# fit_reliable," << (fit->reliable ? "true" : "false") << '\n';
  }
  if (max_ratio) out << "# max_fixed_k_ratio," << format_real(*max_ratio) << '\n';
  for (const auto& w : warnings) out << "# warning," << w << '\n';
}

}  // namespace sldp
