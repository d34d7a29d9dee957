#pragma once

// Command-line driver. A run is described by a JSON config file; see
// README.md for the schema. Exit codes: 0 success, 1 invalid input,
// 2 numerical failure.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sldp/problem.hpp"
#include "sldp/solver.hpp"

namespace sldp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNumerical = 2;

struct ProblemSpec {
  std::string benchmark;              // registry name; empty for inline problems
  std::vector<std::string> dynamics;  // one expression per state component
  std::string running_cost;           // inline g (exclusive with vstar)
  std::string vstar;                  // inline exact value function (manufactured)
};

struct ScheduleSpec {
  double h;
  std::vector<std::size_t> cells;
};

struct StudySpec {
  std::string mode = "joint";  // "joint" or "fixed_k"
  std::vector<ScheduleSpec> schedule;           // joint
  std::optional<ScheduleSpec> fine_reference;   // joint; otherwise the exact v*
  std::vector<std::size_t> fixed_cells;         // fixed_k
  std::vector<double> h_list;                   // fixed_k
};

struct OracleSpec {
  std::optional<std::size_t> vertex;
  std::optional<std::vector<double>> y0;
  std::size_t N = 0;
  std::optional<double> tail_budget;
};

struct RolloutSpec {
  std::vector<double> y0;
  std::size_t steps = 0;
};

struct RunConfig {
  ProblemSpec problem;
  double lambda = 0.0;
  std::optional<std::vector<double>> domain_lower, domain_upper;
  std::optional<std::vector<double>> control_lower, control_upper;
  std::optional<std::vector<std::size_t>> control_counts;
  std::optional<double> h;
  std::optional<std::vector<std::size_t>> cells;
  ProblemBounds bounds;
  double tolerance = 1e-10;
  int max_iterations = 1'000'000;
  OutOfDomainPolicy out_of_domain = OutOfDomainPolicy::Clamp;
  std::optional<double> initial_constant;
  std::optional<StudySpec> study;
  std::optional<OracleSpec> oracle;
  std::optional<RolloutSpec> rollout;
  std::uint64_t seed = 0;
  std::size_t validation_pairs = 2000;
};

/// Parses and validates a JSON config text. Throws InvalidArgument naming
/// the offending field.
RunConfig parse_run_config(const std::string& json_text);
/// The effective config as JSON; parsing it back yields the same run.
std::string serialize_run_config(const RunConfig& config);

/// Subcommand-specific checks, all performed before any computation.
void validate_for(const RunConfig& config, const std::string& command);

struct BuiltProblem {
  Problem problem;
  std::optional<ManufacturedProblem> manufactured;
};
BuiltProblem build_problem(const RunConfig& config);

struct Options {
  std::string out_dir = ".";
  unsigned workers = 0;  // 0 = available parallelism
  std::optional<std::uint64_t> seed;
};

int cmd_solve(const RunConfig& config, const Options& opts, std::ostream& out, std::ostream& err);
int cmd_study(const RunConfig& config, const Options& opts, std::ostream& out, std::ostream& err);
int cmd_oracle(const RunConfig& config, const Options& opts, std::ostream& out, std::ostream& err);
int cmd_rollout(const RunConfig& config, const Options& opts, std::ostream& out, std::ostream& err);
int cmd_validate(const RunConfig& config, const Options& opts, std::ostream& out, std::ostream& err);

/// Full entry point: `sldp <solve|study|oracle|rollout|validate> --config PATH
/// [--out DIR] [--workers N] [--seed S]`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sldp::cli
