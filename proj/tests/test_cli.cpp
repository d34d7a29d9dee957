#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sldp/cli.hpp"
#include "sldp/error.hpp"

namespace fs = std::filesystem;
using namespace sldp::cli;

namespace {

struct Sandbox {
  fs::path root;
  Sandbox() {
    std::random_device rd;
    root = fs::temp_directory_path() / ("sldp_cli_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(root);
  }
  ~Sandbox() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = root / name;
    std::ofstream(p) << text;
    return p;
  }
};

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sldp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

const char* kConstantCost = R"j({
  "problem": {"dynamics": ["0.5 * u1 * (1 - y1^2)"], "running_cost": "1"},
  "lambda": 1, "h": 0.1, "cells_per_dim": [8],
  "domain": {"lower": [-1], "upper": [1]},
  "controls": {"lower": [-1], "upper": [1], "counts": [3]}
})j";

const char* kBenchmark = R"j({
  "problem": {"benchmark": "manufactured_2d"},
  "lambda": 1, "h": 0.1, "cells_per_dim": [10, 10]
})j";

}  // namespace

TEST_CASE("solve writes the constant solution") {
  Sandbox box;
  const auto cfg = box.write("c.json", kConstantCost);
  const auto r = run_cli({"solve", "--config", cfg.string(), "--out", (box.root / "o").string()});
  REQUIRE(r.code == kExitOk);
  const auto rows = csv_rows(box.root / "o" / "value.csv");
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == std::vector<std::string>{"y1", "value"});
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::abs(std::stod(rows[i][1]) - 1.0) <= 1e-10);
  CHECK(fs::exists(box.root / "o" / "summary.json"));
}

TEST_CASE("solve reports the error against the exact solution") {
  Sandbox box;
  const auto cfg = box.write("b.json", kBenchmark);
  const auto r = run_cli({"solve", "--config", cfg.string(), "--out", (box.root / "o").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("sup_error_vs_exact") != std::string::npos);
  CHECK(csv_rows(box.root / "o" / "value.csv").size() == 122);
}

TEST_CASE("invalid inputs exit with 1 and name the field") {
  Sandbox box;
  const auto expect_invalid = [&](const std::string& text, const std::string& needle, const char* cmd = "solve") {
    CAPTURE(text);
    const auto cfg = box.write("bad.json", text);
    const auto start = std::chrono::steady_clock::now();
    const auto r = run_cli({cmd, "--config", cfg.string(), "--out", (box.root / "o").string()});
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));
    CHECK(r.code == kExitInvalid);
    CHECK(r.err.find(needle) != std::string::npos);
  };
  expect_invalid(R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "h": 2, "cells_per_dim": [4]})j",
                 "h must lie in (0, 1/lambda)");
  expect_invalid(R"j({"problem": {"benchmark": "manufactured_1d"}, "h": 0.1, "cells_per_dim": [4]})j", "lambda");
  expect_invalid(R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "cells_per_dim": [4]})j", "'h'");
  expect_invalid(R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "h": 0.1})j", "cells_per_dim");
  expect_invalid(R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "h": 0.1, "cells_per_dim": [0]})j",
                 "cells_per_dim[0]");
  expect_invalid(R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "h": 0.1,
                     "cells_per_dim": [100000000]})j",
                 "vertices");
  expect_invalid(R"j({"problem": {"benchmark": "nope"}, "lambda": 1, "h": 0.1, "cells_per_dim": [4]})j",
                 "problem.benchmark");
  expect_invalid(R"j({"problem": {"dynamics": ["y1 + * 2"], "running_cost": "1"}, "lambda": 1, "h": 0.1,
                     "cells_per_dim": [4], "domain": {"lower": [0], "upper": [1]},
                     "controls": {"lower": [0], "upper": [1], "counts": [2]}})j",
                 "problem.dynamics[0]");
  expect_invalid(R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "h": 0.1, "cells_per_dim": [4],
                     "typo": 3})j",
                 "typo");
  expect_invalid("{not json", "JSON");
  expect_invalid(R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1,
                     "study": {"mode": "joint", "schedule": []}})j",
                 "study.schedule", "study");
  expect_invalid(R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "h": 0.1, "cells_per_dim": [4],
                     "rollout": {"y0": [5], "steps": 10}})j",
                 "rollout.y0", "rollout");
}

TEST_CASE("missing config file and unknown subcommand") {
  CHECK(run_cli({"solve", "--config", "/nonexistent/cfg.json"}).code == kExitInvalid);
  CHECK(run_cli({"frobnicate"}).code == kExitInvalid);
  CHECK(run_cli({"solve"}).code == kExitInvalid);
}

TEST_CASE("non-convergence exits with 2") {
  Sandbox box;
  const auto cfg = box.write("nc.json", R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "h": 0.01,
                                            "cells_per_dim": [10], "solver": {"max_iterations": 5}})j");
  CHECK(run_cli({"solve", "--config", cfg.string(), "--out", (box.root / "o").string()}).code == kExitNumerical);
}

TEST_CASE("solve output does not depend on the worker count") {
  Sandbox box;
  const auto cfg = box.write("b.json", kBenchmark);
  REQUIRE(run_cli({"solve", "--config", cfg.string(), "--out", (box.root / "a").string(), "--workers", "1"}).code == 0);
  REQUIRE(run_cli({"solve", "--config", cfg.string(), "--out", (box.root / "b").string(), "--workers", "3"}).code == 0);
  CHECK(slurp(box.root / "a" / "value.csv") == slurp(box.root / "b" / "value.csv"));
}

TEST_CASE("effective config round trip") {
  Sandbox box;
  const auto cfg = box.write("c.json", kConstantCost);
  REQUIRE(run_cli({"solve", "--config", cfg.string(), "--out", (box.root / "a").string()}).code == 0);
  const fs::path eff = box.root / "a" / "effective_config.json";
  REQUIRE(run_cli({"solve", "--config", eff.string(), "--out", (box.root / "b").string()}).code == 0);
  CHECK(slurp(box.root / "a" / "value.csv") == slurp(box.root / "b" / "value.csv"));
  CHECK(slurp(eff) == slurp(box.root / "b" / "effective_config.json"));

  const RunConfig c = parse_run_config(kBenchmark);
  CHECK(serialize_run_config(parse_run_config(serialize_run_config(c))) == serialize_run_config(c));
}

TEST_CASE("study subcommand") {
  Sandbox box;
  const auto joint = box.write("s.json", R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1,
    "study": {"mode": "joint", "schedule": [
      {"h": 0.1, "cells_per_dim": [20]}, {"h": 0.05, "cells_per_dim": [40]},
      {"h": 0.025, "cells_per_dim": [80]}, {"h": 0.0125, "cells_per_dim": [160]}]}})j");
  const auto r = run_cli({"study", "--config", joint.string(), "--out", (box.root / "j").string()});
  REQUIRE(r.code == kExitOk);
  const auto rows = csv_rows(box.root / "j" / "study.csv");
  REQUIRE(rows.size() >= 6);
  double slope = 0.0;
  for (const auto& row : rows)
    if (row[0] == "# slope") slope = std::stod(row[1]);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.1));

  const auto fixed = box.write("f.json", R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1,
    "study": {"mode": "fixed_k", "cells_per_dim": [20], "h_list": [0.1, 0.05, 0.025]}})j");
  const auto rf = run_cli({"study", "--config", fixed.string(), "--out", (box.root / "f").string()});
  REQUIRE(rf.code == kExitOk);
  CHECK(rf.out.find("# max_fixed_k_ratio,") != std::string::npos);
  CHECK(rf.out.find("ratio 0.05") != std::string::npos);

  const auto failing = box.write("x.json", R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1,
    "solver": {"max_iterations": 50},
    "study": {"mode": "joint", "schedule": [{"h": 0.1, "cells_per_dim": [20]}, {"h": 0.01, "cells_per_dim": [40]}]}})j");
  CHECK(run_cli({"study", "--config", failing.string(), "--out", (box.root / "x").string()}).code != 0);
}

TEST_CASE("oracle subcommand") {
  Sandbox box;
  SUBCASE("single control") {
    const auto cfg = box.write("o.json", R"j({"problem": {"dynamics": ["0.5 - y1"], "running_cost": "y1^2"},
      "lambda": 1, "h": 0.2, "cells_per_dim": [2], "domain": {"lower": [0], "upper": [1]},
      "controls": {"lower": [0], "upper": [0], "counts": [1]}, "oracle": {"N": 40}})j");
    const auto r = run_cli({"oracle", "--config", cfg.string(), "--out", (box.root / "o").string()});
    CHECK(r.code == kExitOk);
    CHECK(csv_rows(box.root / "o" / "oracle.csv").size() == 4);
  }
  SUBCASE("three vertices, two controls, eight steps") {
    const auto cfg = box.write("o.json", R"j({"problem": {"dynamics": ["u1 * (1 - y1) * y1"], "running_cost": "y1 + 0.5 * u1^2"},
      "lambda": 1, "h": 0.2, "cells_per_dim": [2], "domain": {"lower": [0], "upper": [1]},
      "controls": {"lower": [-1], "upper": [1], "counts": [2]}, "oracle": {"N": 8}})j");
    const auto r = run_cli({"oracle", "--config", cfg.string(), "--out", (box.root / "o").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("max_g estimated") != std::string::npos);
  }
  SUBCASE("tail budget needs a longer horizon") {
    const auto cfg = box.write("o.json", R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "h": 0.2,
      "cells_per_dim": [2], "controls": {"counts": [2]}, "oracle": {"vertex": 1, "N": 4, "tail_budget": 1e-3}})j");
    const auto r = run_cli({"oracle", "--config", cfg.string(), "--out", (box.root / "o").string()});
    CHECK(r.code == kExitInvalid);
    CHECK(r.err.find("use N >=") != std::string::npos);
  }
  SUBCASE("enumeration guard") {
    const auto cfg = box.write("o.json", R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "h": 0.2,
      "cells_per_dim": [2], "oracle": {"vertex": 1, "N": 30}})j");
    CHECK(run_cli({"oracle", "--config", cfg.string(), "--out", (box.root / "o").string()}).code == kExitInvalid);
  }
}

TEST_CASE("rollout subcommand") {
  Sandbox box;
  SUBCASE("frozen dynamics") {
    const auto cfg = box.write("r.json", R"j({"problem": {"dynamics": ["0"], "running_cost": "y1^2 + u1^2"},
      "lambda": 1, "h": 0.1, "cells_per_dim": [4], "domain": {"lower": [-1], "upper": [1]},
      "controls": {"lower": [-1], "upper": [1], "counts": [3]}, "rollout": {"y0": [0.3], "steps": 20}})j");
    REQUIRE(run_cli({"rollout", "--config", cfg.string(), "--out", (box.root / "r").string()}).code == kExitOk);
    const auto rows = csv_rows(box.root / "r" / "trajectory.csv");
    REQUIRE(rows.size() == 22);
    CHECK(rows[0] == std::vector<std::string>{"step", "y1", "u1", "stage_cost"});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][1]) == 0.3);
  }
  SUBCASE("quadratic benchmark") {
    const auto cfg = box.write("r.json", R"j({"problem": {"benchmark": "manufactured_1d"}, "lambda": 1, "h": 0.05,
      "cells_per_dim": [40], "rollout": {"y0": [0.5], "steps": 400}})j");
    const auto r = run_cli({"rollout", "--config", cfg.string(), "--out", (box.root / "r").string()});
    REQUIRE(r.code == kExitOk);
    std::istringstream in(r.out);
    std::string key;
    double value, realized = 0.0, tail = 0.0, nodal = 0.0;
    while (in >> key >> value) {
      if (key == "realized_cost") realized = value;
      if (key == "tail_bound") tail = value;
      if (key == "value_at_y0") nodal = value;
    }
    CHECK(std::abs(realized - nodal) <= tail + 1e-10 + 2.0 * (0.05 + 0.05));
  }
}

TEST_CASE("validate subcommand") {
  Sandbox box;
  const auto cfg = box.write("v.json", R"j({"problem": {"dynamics": ["1"], "running_cost": "1"},
    "lambda": 1, "h": 0.1, "cells_per_dim": [4], "domain": {"lower": [0], "upper": [1]},
    "controls": {"lower": [0], "upper": [1], "counts": [2]}})j");
  const auto r = run_cli({"validate", "--config", cfg.string(), "--out", (box.root / "v").string(), "--seed", "3"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("invariance_violations 2") != std::string::npos);
  CHECK(r.out.find("max_abs_g 1") != std::string::npos);
  CHECK(r.out.find("warning: invariance fails") != std::string::npos);
}
