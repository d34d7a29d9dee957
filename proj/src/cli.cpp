#include "sldp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sldp/cost.hpp"
#include "sldp/error.hpp"
#include "sldp/policy.hpp"
#include "sldp/study.hpp"

namespace sldp::cli {

using nlohmann::json;

namespace {

// Guard against meshes that would exhaust memory before any solve starts.
constexpr double kMaxVertices = 5e7;

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw InvalidArgument("config field '" + field + "' " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad_field(where.empty() ? "<root>" : where, "must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end())
      bad_field(where.empty() ? key : where + "." + key, "is not recognized");
  }
}

double get_real(const json& v, const std::string& field) {
  if (!v.is_number()) bad_field(field, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad_field(field, "must be finite");
  return x;
}

std::size_t get_count(const json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad_field(field, "must be a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<double> get_reals(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) bad_field(field, "must be a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_real(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::size_t> get_counts(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) bad_field(field, "must be a non-empty array of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(get_count(v[i], field + "[" + std::to_string(i) + "]"));
    if (out.back() == 0) bad_field(field + "[" + std::to_string(i) + "]", "must be at least 1");
  }
  return out;
}

std::string get_string(const json& v, const std::string& field) {
  if (!v.is_string()) bad_field(field, "must be a string");
  return v.get<std::string>();
}

ScheduleSpec get_schedule_entry(const json& v, const std::string& field) {
  check_keys(v, field, {"h", "cells_per_dim"});
  if (!v.contains("h")) bad_field(field + ".h", "is required");
  if (!v.contains("cells_per_dim")) bad_field(field + ".cells_per_dim", "is required");
  return {get_real(v["h"], field + ".h"), get_counts(v["cells_per_dim"], field + ".cells_per_dim")};
}

json schedule_entry_json(const ScheduleSpec& s) { return {{"h", s.h}, {"cells_per_dim", s.cells}}; }

std::string policy_name(OutOfDomainPolicy p) { return p == OutOfDomainPolicy::Clamp ? "clamp" : "reject"; }

bool is_manufactured_spec(const RunConfig& c) {
  return !c.problem.vstar.empty() || !c.problem.benchmark.empty();
}

std::size_t state_dim_of(const RunConfig& c) {
  if (c.domain_lower) return c.domain_lower->size();
  if (c.problem.benchmark == "manufactured_2d") return 2;
  return 1;
}

void check_cells(const RunConfig& c, const std::vector<std::size_t>& cells, const std::string& field) {
  if (cells.size() != state_dim_of(c))
    bad_field(field, "needs one entry per state dimension (" + std::to_string(state_dim_of(c)) + ")");
  double vertices = 1.0;
  for (auto n : cells) vertices *= static_cast<double>(n) + 1.0;
  if (vertices > kMaxVertices) bad_field(field, "gives more than 5e7 vertices");
}

void check_h(const RunConfig& c, double h, const std::string& field) {
  if (!(h > 0.0 && h * c.lambda < 1.0))
    bad_field(field, "h must lie in (0, 1/lambda); got " + format_real(h) + " with lambda = " + format_real(c.lambda));
}

void check_point(const BoxDomain& domain, const std::vector<double>& y, const std::string& field) {
  if (y.size() != domain.dim()) bad_field(field, "has the wrong dimension");
  if (!domain.contains(y)) bad_field(field, "lies outside the domain");
}

SolveConfig solve_config(const RunConfig& c, unsigned workers) {
  SolveConfig s;
  s.tolerance = c.tolerance;
  s.max_iterations = c.max_iterations;
  s.out_of_domain = c.out_of_domain;
  if (c.initial_constant) s.initial_guess = ConstantGuess{*c.initial_constant};
  s.workers = workers;
  return s;
}

unsigned resolve_workers(const Options& o) {
  if (o.workers != 0) return o.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::filesystem::path prepare_out(const Options& o) {
  std::filesystem::path dir(o.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create output directory '" + o.out_dir + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write '" + path.string() + "'");
  return f;
}

void write_effective_config(const RunConfig& c, const std::filesystem::path& dir) {
  auto f = open_out(dir / "effective_config.json");
  f << serialize_run_config(c) << '\n';
}

void write_value_csv(const ValueFunction& v, std::ostream& out) {
  const auto& mesh = v.mesh();
  for (std::size_t d = 0; d < mesh.dim(); ++d) out << 'y' << d + 1 << ',';
  out << "value\n";
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    for (double x : mesh.vertex(i)) out << format_real(x) << ',';
    out << format_real(v(i)) << '\n';
  }
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const OutOfDomain& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "", {"problem", "lambda", "domain", "controls", "h", "cells_per_dim", "bounds", "solver",
                     "study", "oracle", "rollout", "seed", "validation_pairs"});
  RunConfig c;

  if (!j.contains("problem")) bad_field("problem", "is required");
  const json& p = j["problem"];
  check_keys(p, "problem", {"benchmark", "dynamics", "running_cost", "vstar"});
  if (p.contains("benchmark")) {
    c.problem.benchmark = get_string(p["benchmark"], "problem.benchmark");
    const auto names = benchmark_names();
    if (std::find(names.begin(), names.end(), c.problem.benchmark) == names.end())
      bad_field("problem.benchmark", "names no known benchmark");
    if (p.contains("dynamics") || p.contains("running_cost") || p.contains("vstar"))
      bad_field("problem", "must give either a benchmark or inline expressions, not both");
  } else {
    if (!p.contains("dynamics")) bad_field("problem.dynamics", "is required for an inline problem");
    const json& dyn = p["dynamics"];
    if (!dyn.is_array() || dyn.empty()) bad_field("problem.dynamics", "must be a non-empty array of strings");
    for (std::size_t i = 0; i < dyn.size(); ++i)
      c.problem.dynamics.push_back(get_string(dyn[i], "problem.dynamics[" + std::to_string(i) + "]"));
    const bool has_g = p.contains("running_cost"), has_v = p.contains("vstar");
    if (has_g == has_v) bad_field("problem", "needs exactly one of running_cost and vstar");
    if (has_g) c.problem.running_cost = get_string(p["running_cost"], "problem.running_cost");
    if (has_v) c.problem.vstar = get_string(p["vstar"], "problem.vstar");
  }

  if (!j.contains("lambda")) bad_field("lambda", "is required");
  c.lambda = get_real(j["lambda"], "lambda");
  if (!(c.lambda > 0.0)) bad_field("lambda", "must be positive");

  if (j.contains("domain")) {
    check_keys(j["domain"], "domain", {"lower", "upper"});
    if (!j["domain"].contains("lower") || !j["domain"].contains("upper"))
      bad_field("domain", "needs lower and upper");
    c.domain_lower = get_reals(j["domain"]["lower"], "domain.lower");
    c.domain_upper = get_reals(j["domain"]["upper"], "domain.upper");
  }
  if (j.contains("controls")) {
    const json& u = j["controls"];
    check_keys(u, "controls", {"lower", "upper", "counts"});
    if (u.contains("lower")) c.control_lower = get_reals(u["lower"], "controls.lower");
    if (u.contains("upper")) c.control_upper = get_reals(u["upper"], "controls.upper");
    if (u.contains("counts")) c.control_counts = get_counts(u["counts"], "controls.counts");
  }
  if (j.contains("h")) c.h = get_real(j["h"], "h");
  if (j.contains("cells_per_dim")) c.cells = get_counts(j["cells_per_dim"], "cells_per_dim");

  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    check_keys(b, "bounds", {"lipschitz_f", "lipschitz_g", "max_f", "max_g", "lipschitz_u"});
    auto read = [&](const char* key, std::optional<double>& dst) {
      if (!b.contains(key)) return;
      dst = get_real(b[key], std::string("bounds.") + key);
      if (*dst < 0.0) bad_field(std::string("bounds.") + key, "must be non-negative");
    };
    read("lipschitz_f", c.bounds.lipschitz_f);
    read("lipschitz_g", c.bounds.lipschitz_g);
    read("max_f", c.bounds.max_f);
    read("max_g", c.bounds.max_g);
    read("lipschitz_u", c.bounds.lipschitz_u);
  }

  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, "solver", {"tolerance", "max_iterations", "out_of_domain", "initial_guess"});
    if (s.contains("tolerance")) {
      c.tolerance = get_real(s["tolerance"], "solver.tolerance");
      if (!(c.tolerance > 0.0)) bad_field("solver.tolerance", "must be positive");
    }
    if (s.contains("max_iterations")) {
      const std::size_t n = get_count(s["max_iterations"], "solver.max_iterations");
      if (n < 1 || n > static_cast<std::size_t>(std::numeric_limits<int>::max()))
        bad_field("solver.max_iterations", "must lie in [1, 2^31)");
      c.max_iterations = static_cast<int>(n);
    }
    if (s.contains("out_of_domain")) {
      const std::string pol = get_string(s["out_of_domain"], "solver.out_of_domain");
      if (pol == "clamp")
        c.out_of_domain = OutOfDomainPolicy::Clamp;
      else if (pol == "reject")
        c.out_of_domain = OutOfDomainPolicy::Reject;
      else
        bad_field("solver.out_of_domain", "must be \"clamp\" or \"reject\"");
    }
    if (s.contains("initial_guess")) {
      const json& g = s["initial_guess"];
      if (g.is_string()) {
        if (g.get<std::string>() != "zeros") bad_field("solver.initial_guess", "must be \"zeros\" or a number");
      } else {
        c.initial_constant = get_real(g, "solver.initial_guess");
      }
    }
  }

  if (j.contains("study")) {
    const json& s = j["study"];
    check_keys(s, "study", {"mode", "schedule", "reference", "cells_per_dim", "h_list"});
    StudySpec st;
    if (s.contains("mode")) st.mode = get_string(s["mode"], "study.mode");
    if (st.mode != "joint" && st.mode != "fixed_k") bad_field("study.mode", "must be \"joint\" or \"fixed_k\"");
    if (st.mode == "joint") {
      if (!s.contains("schedule") || !s["schedule"].is_array())
        bad_field("study.schedule", "must be an array of {h, cells_per_dim}");
      if (s["schedule"].empty()) bad_field("study.schedule", "is empty");
      for (std::size_t i = 0; i < s["schedule"].size(); ++i)
        st.schedule.push_back(get_schedule_entry(s["schedule"][i], "study.schedule[" + std::to_string(i) + "]"));
      if (s.contains("cells_per_dim") || s.contains("h_list"))
        bad_field("study", "cells_per_dim and h_list belong to fixed_k mode");
    } else {
      if (!s.contains("cells_per_dim")) bad_field("study.cells_per_dim", "is required in fixed_k mode");
      st.fixed_cells = get_counts(s["cells_per_dim"], "study.cells_per_dim");
      if (!s.contains("h_list")) bad_field("study.h_list", "is required in fixed_k mode");
      st.h_list = get_reals(s["h_list"], "study.h_list");
      if (s.contains("schedule")) bad_field("study.schedule", "belongs to joint mode");
    }
    if (s.contains("reference")) {
      const json& r = s["reference"];
      if (r.is_string()) {
        if (r.get<std::string>() != "exact") bad_field("study.reference", "must be \"exact\" or {h, cells_per_dim}");
      } else {
        st.fine_reference = get_schedule_entry(r, "study.reference");
      }
    }
    c.study = std::move(st);
  }

  if (j.contains("oracle")) {
    const json& o = j["oracle"];
    check_keys(o, "oracle", {"vertex", "y0", "N", "tail_budget"});
    OracleSpec os;
    if (o.contains("vertex")) os.vertex = get_count(o["vertex"], "oracle.vertex");
    if (o.contains("y0")) os.y0 = get_reals(o["y0"], "oracle.y0");
    if (os.vertex && os.y0) bad_field("oracle", "takes vertex or y0, not both");
    if (!o.contains("N")) bad_field("oracle.N", "is required");
    os.N = get_count(o["N"], "oracle.N");
    if (os.N == 0) bad_field("oracle.N", "must be at least 1");
    if (o.contains("tail_budget")) {
      os.tail_budget = get_real(o["tail_budget"], "oracle.tail_budget");
      if (!(*os.tail_budget > 0.0)) bad_field("oracle.tail_budget", "must be positive");
    }
    c.oracle = std::move(os);
  }

  if (j.contains("rollout")) {
    const json& r = j["rollout"];
    check_keys(r, "rollout", {"y0", "steps"});
    RolloutSpec rs;
    if (!r.contains("y0")) bad_field("rollout.y0", "is required");
    rs.y0 = get_reals(r["y0"], "rollout.y0");
    if (!r.contains("steps")) bad_field("rollout.steps", "is required");
    rs.steps = get_count(r["steps"], "rollout.steps");
    c.rollout = std::move(rs);
  }

  if (j.contains("seed")) c.seed = get_count(j["seed"], "seed");
  if (j.contains("validation_pairs")) c.validation_pairs = get_count(j["validation_pairs"], "validation_pairs");

  // Checks that need several fields at once.
  if (c.problem.benchmark.empty()) {
    if (!c.domain_lower) bad_field("domain", "is required for an inline problem");
    if (!c.control_lower || !c.control_upper || !c.control_counts)
      bad_field("controls", "needs lower, upper and counts for an inline problem");
    if (c.problem.dynamics.size() != c.domain_lower->size())
      bad_field("problem.dynamics", "needs one expression per state dimension");
  } else {
    if (c.domain_lower) bad_field("domain", "is fixed by the benchmark");
    if (c.control_lower || c.control_upper) bad_field("controls", "bounds are fixed by the benchmark; only counts may be set");
  }
  if (c.domain_lower && c.domain_lower->size() != c.domain_upper->size())
    bad_field("domain.upper", "must have the same length as domain.lower");
  if (c.control_lower && c.control_upper && c.control_lower->size() != c.control_upper->size())
    bad_field("controls.upper", "must have the same length as controls.lower");
  if (c.control_lower && c.control_counts && c.control_counts->size() != c.control_lower->size())
    bad_field("controls.counts", "must have the same length as controls.lower");
  if (c.domain_lower) {
    for (std::size_t i = 0; i < c.domain_lower->size(); ++i)
      if (!((*c.domain_lower)[i] < (*c.domain_upper)[i]))
        bad_field("domain", "needs lower < upper on every axis");
  }
  if (c.h) check_h(c, *c.h, "h");
  if (c.cells) check_cells(c, *c.cells, "cells_per_dim");
  if (c.study) {
    for (std::size_t i = 0; i < c.study->schedule.size(); ++i) {
      const std::string f = "study.schedule[" + std::to_string(i) + "]";
      check_h(c, c.study->schedule[i].h, f + ".h");
      check_cells(c, c.study->schedule[i].cells, f + ".cells_per_dim");
    }
    if (c.study->fine_reference) {
      check_h(c, c.study->fine_reference->h, "study.reference.h");
      check_cells(c, c.study->fine_reference->cells, "study.reference.cells_per_dim");
    }
    if (c.study->mode == "fixed_k") {
      check_cells(c, c.study->fixed_cells, "study.cells_per_dim");
      for (std::size_t i = 0; i < c.study->h_list.size(); ++i) {
        check_h(c, c.study->h_list[i], "study.h_list[" + std::to_string(i) + "]");
        if (i > 0 && !(c.study->h_list[i] < c.study->h_list[i - 1]))
          bad_field("study.h_list", "must be strictly decreasing");
      }
    }
    if (!c.study->fine_reference && !is_manufactured_spec(c))
      bad_field("study.reference", "must be a fine solve {h, cells_per_dim} when v* is unknown");
  }
  return c;
}

std::string serialize_run_config(const RunConfig& c) {
  json j;
  if (!c.problem.benchmark.empty()) {
    j["problem"] = {{"benchmark", c.problem.benchmark}};
  } else {
    j["problem"]["dynamics"] = c.problem.dynamics;
    if (!c.problem.vstar.empty())
      j["problem"]["vstar"] = c.problem.vstar;
    else
      j["problem"]["running_cost"] = c.problem.running_cost;
  }
  j["lambda"] = c.lambda;
  if (c.domain_lower) j["domain"] = {{"lower", *c.domain_lower}, {"upper", *c.domain_upper}};
  if (c.control_lower) j["controls"]["lower"] = *c.control_lower;
  if (c.control_upper) j["controls"]["upper"] = *c.control_upper;
  if (c.control_counts) j["controls"]["counts"] = *c.control_counts;
  if (c.h) j["h"] = *c.h;
  if (c.cells) j["cells_per_dim"] = *c.cells;
  json b = json::object();
  if (c.bounds.lipschitz_f) b["lipschitz_f"] = *c.bounds.lipschitz_f;
  if (c.bounds.lipschitz_g) b["lipschitz_g"] = *c.bounds.lipschitz_g;
  if (c.bounds.max_f) b["max_f"] = *c.bounds.max_f;
  if (c.bounds.max_g) b["max_g"] = *c.bounds.max_g;
  if (c.bounds.lipschitz_u) b["lipschitz_u"] = *c.bounds.lipschitz_u;
  if (!b.empty()) j["bounds"] = b;
  j["solver"] = {{"tolerance", c.tolerance},
                 {"max_iterations", c.max_iterations},
                 {"out_of_domain", policy_name(c.out_of_domain)}};
  if (c.initial_constant)
    j["solver"]["initial_guess"] = *c.initial_constant;
  else
    j["solver"]["initial_guess"] = "zeros";
  if (c.study) {
    json s;
    s["mode"] = c.study->mode;
    if (c.study->mode == "joint") {
      s["schedule"] = json::array();
      for (const auto& e : c.study->schedule) s["schedule"].push_back(schedule_entry_json(e));
    } else {
      s["cells_per_dim"] = c.study->fixed_cells;
      s["h_list"] = c.study->h_list;
    }
    s["reference"] = c.study->fine_reference ? schedule_entry_json(*c.study->fine_reference) : json("exact");
    j["study"] = s;
  }
  if (c.oracle) {
    json o;
    if (c.oracle->vertex) o["vertex"] = *c.oracle->vertex;
    if (c.oracle->y0) o["y0"] = *c.oracle->y0;
    o["N"] = c.oracle->N;
    if (c.oracle->tail_budget) o["tail_budget"] = *c.oracle->tail_budget;
    j["oracle"] = o;
  }
  if (c.rollout) j["rollout"] = {{"y0", c.rollout->y0}, {"steps", c.rollout->steps}};
  j["seed"] = c.seed;
  j["validation_pairs"] = c.validation_pairs;
  return j.dump(2);
}

void validate_for(const RunConfig& c, const std::string& command) {
  const bool needs_mesh = command == "solve" || command == "oracle" || command == "rollout" || command == "validate";
  if (needs_mesh) {
    if (!c.h) bad_field("h", "is required for " + command);
    if (!c.cells) bad_field("cells_per_dim", "is required for " + command);
  }
  if (command == "study" && !c.study) bad_field("study", "is required for study");
  if (command == "oracle" && !c.oracle) bad_field("oracle", "is required for oracle");
  if (command == "rollout" && !c.rollout) bad_field("rollout", "is required for rollout");
}

BuiltProblem build_problem(const RunConfig& c) {
  if (!c.problem.benchmark.empty()) {
    ManufacturedProblem m = make_benchmark(c.problem.benchmark, c.lambda,
                                           c.control_counts.value_or(std::vector<std::size_t>{}));
    ProblemBounds b = m.problem.bounds();
    if (c.bounds.lipschitz_f) b.lipschitz_f = c.bounds.lipschitz_f;
    if (c.bounds.lipschitz_g) b.lipschitz_g = c.bounds.lipschitz_g;
    if (c.bounds.max_f) b.max_f = c.bounds.max_f;
    if (c.bounds.max_g) b.max_g = c.bounds.max_g;
    if (c.bounds.lipschitz_u) b.lipschitz_u = c.bounds.lipschitz_u;
    m.problem = m.problem.with_bounds(b);
    Problem p = m.problem;
    return {std::move(p), std::move(m)};
  }
  BoxDomain domain(*c.domain_lower, *c.domain_upper);
  ControlSet controls = sample_control_set(*c.control_lower, *c.control_upper, *c.control_counts);
  const std::size_t n = domain.dim(), m = controls.dim();
  std::vector<Expression> dyn;
  for (std::size_t i = 0; i < c.problem.dynamics.size(); ++i) {
    try {
      dyn.push_back(parse_expression(c.problem.dynamics[i], n, m));
    } catch (const ExpressionError& e) {
      bad_field("problem.dynamics[" + std::to_string(i) + "]", std::string("does not parse: ") + e.what());
    }
  }
  if (!c.problem.vstar.empty()) {
    Expression vstar;
    try {
      vstar = parse_expression(c.problem.vstar, n, 0);
      if (vstar.control_arity() > 0) bad_field("problem.vstar", "must not depend on controls");
    } catch (const ExpressionError& e) {
      bad_field("problem.vstar", std::string("does not parse: ") + e.what());
    }
    try {
      ManufacturedProblem mp =
          make_manufactured(vstar, std::move(dyn), c.lambda, domain, controls, c.bounds, "inline");
      Problem p = mp.problem;
      return {std::move(p), std::move(mp)};
    } catch (const ExpressionError& e) {
      bad_field("problem.vstar", std::string("cannot be differentiated: ") + e.what());
    }
  }
  Expression g;
  try {
    g = parse_expression(c.problem.running_cost, n, m);
  } catch (const ExpressionError& e) {
    bad_field("problem.running_cost", std::string("does not parse: ") + e.what());
  }
  return {make_expression_problem(domain, controls, c.lambda, std::move(dyn), std::move(g), c.bounds, "inline"),
          std::nullopt};
}

int cmd_solve(const RunConfig& c, const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate_for(c, "solve");
    BuiltProblem bp = build_problem(c);
    const auto dir = prepare_out(opts);
    auto mesh = std::make_shared<const SimplicialMesh>(bp.problem.domain(), *c.cells);
    ValueFunction v = solve_fixed_point(bp.problem, mesh, *c.h, solve_config(c, resolve_workers(opts)));
    {
      auto f = open_out(dir / "value.csv");
      write_value_csv(v, f);
    }
    json summary = {{"iterations", v.iterations},
                    {"residual", v.residual},
                    {"clamp_events", v.clamp_events},
                    {"h", v.h},
                    {"k", mesh->k()},
                    {"vertices", mesh->vertex_count()},
                    {"controls", bp.problem.controls().size()}};
    out << "iterations " << v.iterations << "\nresidual " << format_real(v.residual) << "\nclamp_events "
        << v.clamp_events << "\nk " << format_real(mesh->k()) << '\n';
    if (bp.manufactured) {
      const double e = error_against_reference(
          v, [&](std::span<const double> y) { return bp.manufactured->exact(y); });
      summary["sup_error_vs_exact"] = e;
      out << "sup_error_vs_exact " << format_real(e) << '\n';
    }
    {
      auto f = open_out(dir / "summary.json");
      f << summary.dump(2) << '\n';
    }
    write_effective_config(c, dir);
    return kExitOk;
  });
}

int cmd_study(const RunConfig& c, const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate_for(c, "study");
    BuiltProblem bp = build_problem(c);
    const auto dir = prepare_out(opts);
    const SolveConfig sc = solve_config(c, resolve_workers(opts));
    const StudySpec& st = *c.study;
    std::optional<std::string> failure;

    if (st.mode == "joint") {
      RefinementSchedule schedule;
      for (const auto& e : st.schedule) schedule.entries.push_back({e.h, e.cells});
      if (st.fine_reference)
        schedule.reference = FineReference{st.fine_reference->h, st.fine_reference->cells};
      else
        schedule.reference = ExactReference{[m = *bp.manufactured](std::span<const double> y) { return m.exact(y); }};
      ConvergenceRun run = run_refinement_study(bp.problem, schedule, sc);
      {
        auto f = open_out(dir / "study.csv");
        write_study_csv(f, run.records, run.fit, std::nullopt, run.warnings);
      }
      write_study_csv(out, run.records, run.fit, std::nullopt, run.warnings);
      failure = run.failure;
    } else {
      ReferenceFn reference;
      if (st.fine_reference) {
        auto fine_mesh = std::make_shared<const SimplicialMesh>(bp.problem.domain(), st.fine_reference->cells);
        auto fine = std::make_shared<ValueFunction>(solve_fixed_point(bp.problem, fine_mesh, st.fine_reference->h, sc));
        reference = [fine](std::span<const double> y) { return fine->field.interpolate_scalar(y); };
      } else {
        reference = [m = *bp.manufactured](std::span<const double> y) { return m.exact(y); };
      }
      FixedKTable table = fixed_k_blowup_test(bp.problem, st.fixed_cells, st.h_list, reference, sc);
      std::vector<std::string> notes;
      for (std::size_t i = 0; i < table.ratios.size(); ++i)
        notes.push_back("ratio " + format_real(table.records[i + 1].h) + "/" + format_real(table.records[i].h) +
                        " = " + format_real(table.ratios[i]));
      {
        auto f = open_out(dir / "study.csv");
        write_study_csv(f, table.records, table.fit, table.max_ratio, notes);
      }
      write_study_csv(out, table.records, table.fit, table.max_ratio, notes);
      failure = table.failure;
    }
    write_effective_config(c, dir);
    if (failure) {
      err << "study aborted: " << *failure << '\n';
      return kExitNumerical;
    }
    return kExitOk;
  });
}

int cmd_oracle(const RunConfig& c, const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate_for(c, "oracle");
    BuiltProblem bp = build_problem(c);
    const OracleSpec& o = *c.oracle;
    auto mesh = std::make_shared<const SimplicialMesh>(bp.problem.domain(), *c.cells);
    const double count = std::pow(static_cast<double>(bp.problem.controls().size()), static_cast<double>(o.N));
    if (count > kMaxEnumeratedSequences)
      throw EnumerationLimit("oracle.N: enumerating " + format_real(count) + " sequences exceeds the limit of " +
                                 format_real(kMaxEnumeratedSequences),
                             count);

    std::vector<std::size_t> vertices;
    if (o.vertex) {
      if (*o.vertex >= mesh->vertex_count()) bad_field("oracle.vertex", "is not a mesh vertex index");
      vertices.push_back(*o.vertex);
    } else if (o.y0) {
      check_point(bp.problem.domain(), *o.y0, "oracle.y0");
      bool found = false;
      for (std::size_t i = 0; i < mesh->vertex_count() && !found; ++i) {
        const auto y = mesh->vertex(i);
        if (std::equal(y.begin(), y.end(), o.y0->begin(), [](double a, double b) { return std::abs(a - b) <= 1e-12; })) {
          vertices.push_back(i);
          found = true;
        }
      }
      if (!found) bad_field("oracle.y0", "is not a mesh vertex");
    } else {
      for (std::size_t i = 0; i < mesh->vertex_count(); ++i) vertices.push_back(i);
    }

    Problem problem = bp.problem;
    if (!problem.bounds().max_g) {
      const ValidationReport rep = validate_problem(problem, *mesh, *c.h, opts.seed.value_or(c.seed), c.validation_pairs);
      problem = problem.with_bounds(fill_bounds(problem.bounds(), rep));
      out << "max_g estimated from validation: " << format_real(*problem.bounds().max_g) << '\n';
    }
    const double tail = geometric_tail(*problem.bounds().max_g, c.lambda, *c.h, o.N);
    if (o.tail_budget && tail > *o.tail_budget) {
      const std::size_t need = terms_for_tail(*problem.bounds().max_g, c.lambda, *c.h, *o.tail_budget);
      bad_field("oracle.N", "gives a tail bound of " + format_real(tail) + " above tail_budget " +
                                format_real(*o.tail_budget) + "; use N >= " + std::to_string(need));
    }

    const auto dir = prepare_out(opts);
    ValueFunction v = solve_fixed_point(problem, mesh, *c.h, solve_config(c, resolve_workers(opts)));
    const double budget = tail + c.tolerance;
    auto f = open_out(dir / "oracle.csv");
    f << "vertex,v_hk,brute_force,gap,budget\n";
    out << "vertex v_hk brute_force gap budget\n";
    bool ok = true;
    for (std::size_t i : vertices) {
      const BruteForceResult r = brute_force_value(problem, *mesh, *c.h, i, o.N);
      const double gap = std::abs(v(i) - r.value);
      ok = ok && gap <= budget;
      f << i << ',' << format_real(v(i)) << ',' << format_real(r.value) << ',' << format_real(gap) << ','
        << format_real(budget) << '\n';
      out << i << ' ' << format_real(v(i)) << ' ' << format_real(r.value) << ' ' << format_real(gap) << ' '
          << format_real(budget) << (gap <= budget ? "" : "  EXCEEDS") << '\n';
    }
    write_effective_config(c, dir);
    if (!ok) err << "gap exceeds the budget at one or more vertices\n";
    return ok ? kExitOk : kExitNumerical;
  });
}

int cmd_rollout(const RunConfig& c, const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate_for(c, "rollout");
    BuiltProblem bp = build_problem(c);
    const RolloutSpec& r = *c.rollout;
    check_point(bp.problem.domain(), r.y0, "rollout.y0");
    const auto dir = prepare_out(opts);
    auto mesh = std::make_shared<const SimplicialMesh>(bp.problem.domain(), *c.cells);
    ValueFunction v = solve_fixed_point(bp.problem, mesh, *c.h, solve_config(c, resolve_workers(opts)));
    ClosedLoopRun run = synthesize_trajectory(v, bp.problem, r.y0, r.steps);

    const std::size_t n = bp.problem.state_dim(), m = bp.problem.control_dim();
    auto f = open_out(dir / "trajectory.csv");
    f << "step";
    for (std::size_t i = 0; i < n; ++i) f << ",y" << i + 1;
    for (std::size_t i = 0; i < m; ++i) f << ",u" << i + 1;
    f << ",stage_cost\n";
    for (std::size_t s = 0; s < run.trajectory.states.size(); ++s) {
      f << s;
      for (double x : run.trajectory.states[s]) f << ',' << format_real(x);
      if (s < run.controls.size()) {
        for (double u : run.controls[s]) f << ',' << format_real(u);
        f << ',' << format_real(run.stage_costs[s]) << '\n';
      } else {
        for (std::size_t i = 0; i <= m; ++i) f << ',';
        f << '\n';
      }
    }
    out << "realized_cost " << format_real(run.realized_cost) << "\ntail_bound " << format_real(run.tail_bound)
        << "\nvalue_at_y0 " << format_real(v.field.interpolate_scalar(r.y0)) << "\nclamp_events "
        << run.trajectory.clamp_events << '\n';
    if (bp.manufactured) out << "exact_value_at_y0 " << format_real(bp.manufactured->exact(r.y0)) << '\n';
    write_effective_config(c, dir);
    return kExitOk;
  });
}

int cmd_validate(const RunConfig& c, const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate_for(c, "validate");
    BuiltProblem bp = build_problem(c);
    const auto dir = prepare_out(opts);
    const SimplicialMesh mesh(bp.problem.domain(), *c.cells);
    const ValidationReport rep = validate_problem(bp.problem, mesh, *c.h, opts.seed.value_or(c.seed), c.validation_pairs);
    json j = {{"max_f_inf", rep.max_f_inf},
              {"max_abs_g", rep.max_abs_g},
              {"invariance_violations", rep.invariance_violations},
              {"worst_violation", rep.worst_violation},
              {"worst_vertex", rep.worst_vertex},
              {"worst_control", rep.worst_control},
              {"lipschitz_f_estimate", rep.lipschitz_f_estimate},
              {"lipschitz_g_estimate", rep.lipschitz_g_estimate},
              {"pairs_checked", rep.pairs_checked}};
    for (const auto& [key, value] : j.items()) {
      out << key << ' ';
      if (value.is_number_float())
        out << format_real(value.get<double>());
      else
        out << value.dump();
      out << '\n';
    }
    if (rep.invariance_violations > 0) {
      const auto y = mesh.vertex(rep.worst_vertex);
      out << "warning: invariance fails at " << rep.invariance_violations << " (vertex, control) pairs; worst at y = (";
      for (std::size_t i = 0; i < y.size(); ++i) out << (i ? ", " : "") << format_real(y[i]);
      out << "), control " << rep.worst_control << '\n';
    }
    auto f = open_out(dir / "validation.json");
    f << j.dump(2) << '\n';
    write_effective_config(c, dir);
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semi-Lagrangian dynamic programming for discounted optimal control"};
  app.require_subcommand(1);
  std::string config_path;
  Options opts;
  std::uint64_t seed = 0;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve", "solve for the discrete value function; writes value.csv"},
      {"study", "refinement or fixed-mesh error study; writes study.csv"},
      {"oracle", "compare the solution with brute-force enumeration of control sequences"},
      {"rollout", "greedy closed-loop trajectory; writes trajectory.csv"},
      {"validate", "report data bounds, invariance violations and Lipschitz estimates"}};
  for (const auto& [name, about] : commands) {
    CLI::App* sub = app.add_subcommand(name, about);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--workers", opts.workers, "worker threads (0 = available parallelism)");
    sub->add_option("--seed", seed, "seed for randomized checks (overrides the config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  std::string command;
  for (CLI::App* sub : app.get_subcommands()) command = sub->get_name();
  if (app.get_subcommand(command)->count("--seed") > 0) opts.seed = seed;

  std::ifstream in(config_path);
  if (!in) {
    err << "error: cannot read config '" << config_path << "'\n";
    return kExitInvalid;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig config;
  try {
    config = parse_run_config(buf.str());
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  if (opts.seed) config.seed = *opts.seed;

  if (command == "solve") return cmd_solve(config, opts, out, err);
  if (command == "study") return cmd_study(config, opts, out, err);
  if (command == "oracle") return cmd_oracle(config, opts, out, err);
  if (command == "rollout") return cmd_rollout(config, opts, out, err);
  return cmd_validate(config, opts, out, err);
}

}  // namespace sldp::cli
