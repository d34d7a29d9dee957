#pragma once

// Convergence studies: refinement schedules, errors against a reference and
// least-squares rate fits on log-log data.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sldp/problem.hpp"
#include "sldp/solver.hpp"

namespace sldp {

using ReferenceFn = std::function<double(std::span<const double>)>;

/// max over vertices of |v - reference|.
double error_against_reference(const ValueFunction& v, const ReferenceFn& reference);
/// Root-mean-square vertex error (diagnostics only).
double vertex_rms_error(const ValueFunction& v, const ReferenceFn& reference);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool reliable = false;  // r_squared >= kReliableR2
};

inline constexpr double kReliableR2 = 0.98;

/// Least squares of log(error) on log(x).
RateFit fit_rate(std::span<const double> x, std::span<const double> error);

struct ScheduleEntry {
  double h;
  std::vector<std::size_t> cells;
};

struct ExactReference {
  ReferenceFn value;
};
struct FineReference {
  double h;
  std::vector<std::size_t> cells;
};

struct RefinementSchedule {
  std::vector<ScheduleEntry> entries;
  std::variant<ExactReference, FineReference> reference;
};

struct StudyRecord {
  double h = 0.0;
  double k = 0.0;
  double sup_error = 0.0;
  double rms_error = 0.0;
  int iterations = 0;
  std::size_t clamp_events = 0;
  double wall_seconds = 0.0;
};

struct ConvergenceRun {
  std::vector<StudyRecord> records;  // sorted by h + k, descending
  std::optional<RateFit> fit;        // on log(h + k); needs >= 2 records
  std::vector<std::string> warnings;
  std::optional<std::string> failure;  // set when a solve aborted the study
};

/// One solve per entry. A failing solve stops the study; the records gathered
/// so far are kept and `failure` describes the error.
ConvergenceRun run_refinement_study(const Problem& problem, const RefinementSchedule& schedule,
                                    const SolveConfig& config);

struct FixedKTable {
  std::vector<StudyRecord> records;  // in h_list order
  std::vector<double> ratios;        // error(h_{i+1}) / error(h_i)
  std::optional<double> max_ratio;
  std::optional<RateFit> fit;        // on log(h)
  std::optional<std::string> failure;
};

/// Errors on a fixed mesh for a strictly decreasing list of steps.
FixedKTable fixed_k_blowup_test(const Problem& problem, const std::vector<std::size_t>& cells,
                                const std::vector<double>& h_list, const ReferenceFn& reference,
                                const SolveConfig& config);

/// CSV with columns h,k,sup_error,iterations,clamp_events,wall_seconds and a
/// trailing '#'-prefixed summary block.
void write_study_csv(std::ostream& out, const std::vector<StudyRecord>& records,
                     const std::optional<RateFit>& fit, const std::optional<double>& max_ratio,
                     const std::vector<std::string>& warnings = {});

/// 17 significant digits.
std::string format_real(double x);

}  // namespace sldp
