#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "abdsde/commands.hpp"
#include "abdsde/error.hpp"

using namespace abdsde;
namespace fs = std::filesystem;

namespace {

RunConfig config_from(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

CommandOptions options_in(const std::string& name) {
  CommandOptions o;
  o.out_dir = fs::temp_directory_path() / ("abdsde_test_" + name);
  fs::remove_all(*o.out_dir);
  return o;
}

const char* kPoisson = R"({
  "problem": {"T": 1.0, "levy": {"atoms": [{"size": 1.0, "intensity": 1.0}]},
              "xi": {"family": "constant", "value": 2.0}},
  "numerics": {"N": 10, "n_paths": 20000, "p": "auto"},
  "rng": {"seed": 3}
})";

}  // namespace

TEST_CASE("config parsing") {
  const auto c = config_from(kPoisson);
  CHECK(c.problem.levy.atoms.size() == 1);
  CHECK(c.numerics.steps == 10);
  CHECK(c.resolved_order() == 1);
  CHECK(c.seed == 3);
  CHECK_THROWS_AS(config_from(R"({"problem": {"T": 1.0, "typo": 1}})"), Error);
  CHECK_THROWS_AS(config_from(R"({"problem": {"T": 1.0}, "numerics": {"N": -1}})"), Error);
  CHECK_THROWS_AS(config_from(R"({"problem": {"T": 1.0, "f": {"family": "cubic"}}})"), Error);
  CHECK_THROWS_AS(config_from("{not json"), Error);
  const auto betas = config_from(R"({"problem": {"T": 1.0}, "numerics": {"beta": 2.5, "p": 0}})");
  CHECK(betas.numerics.beta == 2.5);
  CHECK(betas.resolved_order() == 0);
}

TEST_CASE("simulate: normalized Poisson variance tracks node times") {
  const auto opts = options_in("simulate");
  std::ostringstream log;
  const auto report = cmd_simulate(config_from(kPoisson), opts, log);
  const auto rows = read_csv(report.statistics_csv);
  REQUIRE(rows.size() == 12);
  CHECK(rows[0][7] == "var_H1");
  for (std::size_t k = 1; k <= 10; ++k) {
    const double t = std::stod(rows[k + 1][1]);
    const double var = std::stod(rows[k + 1][7]);
    CHECK(std::abs(var - t) < 4.0 * std::sqrt((2.0 * t * t + t) / 20000.0) + 1e-12);
  }
  CHECK(report.bracket_checks == 10);
  const std::string first = slurp(report.statistics_csv);
  cmd_simulate(config_from(kPoisson), opts, log);
  CHECK(slurp(report.statistics_csv) == first);
}

TEST_CASE("simulate: zero intensity gives the drift line") {
  const auto opts = options_in("drift");
  std::ostringstream log;
  const auto config = config_from(R"({"problem": {"T": 1.0, "levy": {"b": 1.5,
      "atoms": [{"size": 1.0, "intensity": 0.0}]}}, "numerics": {"N": 4, "n_paths": 10}})");
  const auto report = cmd_simulate(config, opts, log);
  const auto rows = read_csv(report.statistics_csv);
  for (std::size_t k = 0; k <= 4; ++k) {
    CHECK(std::stod(rows[k + 1][2]) == 1.5 * std::stod(rows[k + 1][1]));
    CHECK(std::stod(rows[k + 1][3]) == 0.0);
  }
}

TEST_CASE("solve: constant terminal value") {
  const auto opts = options_in("solve");
  std::ostringstream log;
  const auto report = cmd_solve(config_from(kPoisson), opts, log);
  const auto rows = read_csv(report.solution_csv);
  CHECK(rows[0] == std::vector<std::string>{"t", "mean_Y", "mean_Z1", "mean_K", "barrier"});
  for (std::size_t r = 1; r < rows.size(); ++r) {
    CHECK(rows[r][1] == "2");
    CHECK(rows[r][3] == "0");
  }
  CHECK(report.y0 == 2.0);
  CHECK(fs::exists(report.summary_json));
}

TEST_CASE("solve: reflected deterministic case") {
  const auto opts = options_in("reflected");
  std::ostringstream log;
  const auto config = config_from(R"({"problem": {"T": 1.0, "xi": {"value": 1.0},
      "barrier": {"family": "constant", "value": 2.0}},
      "numerics": {"N": 10, "n_paths": 1, "reflect": true}})");
  const auto report = cmd_solve(config, opts, log);
  CHECK(report.y0 == 2.0);
  CHECK(report.k_terminal == 1.0);
  CHECK(log.str().find("skorokhod residual: 0\n") != std::string::npos);
}

TEST_CASE("solve: picard on constant generators") {
  const auto opts = options_in("picard");
  std::ostringstream log;
  const auto config = config_from(R"({"problem": {"T": 1.0, "xi": {"value": 1.0},
      "levy": {"atoms": [{"size": 1.0, "intensity": 1.0}]},
      "f": {"family": "constant", "params": {"constant": 0.5}},
      "g": {"family": "constant", "params": {"constant": 0.2}}},
      "numerics": {"N": 10, "n_paths": 200, "n_b_scenarios": 2, "mode": "picard"}})");
  cmd_solve(config, opts, log);
  CHECK(log.str().find("iterations: 2, final distance: 0\n") != std::string::npos);
}

TEST_CASE("solve: validation errors carry the assumption") {
  const auto opts = options_in("invalid");
  std::ostringstream log;
  const auto config = config_from(R"({"problem": {"T": 1.0, "K_ext": 0.1,
      "phi": {"kind": "constant", "delta": 0.5},
      "f": {"family": "anticipated_affine", "lipschitz_c": 1.0, "params": {"pi": 1.0}}},
      "numerics": {"N": 10, "N_ext": 1, "n_paths": 1}})");
  try {
    cmd_solve(config, opts, log);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(e.assumption() == "(A)");
  }
}

TEST_CASE("verify") {
  CommandOptions opts;
  std::ostringstream log;
  const auto all = cmd_verify(std::nullopt, std::nullopt, opts, log);
  CHECK(all.cases.size() == verify_case_names().size());
  CHECK(all.failures() == 0);
  const auto broken = cmd_verify(std::vector<std::string>{"ode_exact"}, 0.0, opts, log);
  CHECK(broken.failures() == 1);
  std::ostringstream empty_log;
  const auto empty = cmd_verify(std::vector<std::string>{}, std::nullopt, opts, empty_log);
  CHECK(empty.cases.empty());
  CHECK(empty.failures() == 0);
  CHECK(empty_log.str().find("warning") != std::string::npos);
  CHECK_THROWS_AS(cmd_verify(std::vector<std::string>{"nope"}, std::nullopt, opts, log), Error);
}

TEST_CASE("convergence") {
  const auto opts = options_in("convergence");
  std::ostringstream log;
  const auto ode = config_from(R"({"problem": {"T": 1.0, "xi": {"value": 1.0},
      "f": {"family": "affine", "lipschitz_c": 1.0, "params": {"y": 1.0}}},
      "numerics": {"n_paths": 1}})");
  CHECK(closed_form_y0(ode) == doctest::Approx(std::exp(1.0)));
  const auto table = cmd_convergence(ode, {50, 100, 200}, opts, log);
  REQUIRE(table.rows.size() == 3);
  CHECK(table.monotone);
  CHECK(table.rows[1].error < table.rows[0].error);
  CHECK(table.rows[2].error < table.rows[1].error);
  CHECK(table.rows[1].ratio.has_value());

  const auto single = cmd_convergence(ode, {100}, opts, log);
  CHECK_FALSE(single.rows[0].ratio.has_value());
  CHECK(single.monotone);

  const auto exact = config_from(R"({"problem": {"T": 1.0, "xi": {"value": 4.0}}, "numerics": {"n_paths": 1}})");
  const auto zeros = cmd_convergence(exact, {10, 20}, opts, log);
  for (const auto& row : zeros.rows) CHECK(row.error == 0.0);
  CHECK(zeros.monotone);

  const auto barrier = config_from(R"({"problem": {"T": 1.0, "barrier": {"family": "constant", "value": -1.0}},
      "numerics": {"n_paths": 1, "reflect": true}})");
  CHECK_THROWS_AS(cmd_convergence(barrier, {10}, opts, log), Error);
}

TEST_CASE("basis dump") {
  const auto opts = options_in("basis");
  std::ostringstream log;
  const auto config = config_from(R"({"problem": {"T": 1.0, "levy": {"atoms":
      [{"size": 1.0, "intensity": 1.0}, {"size": -1.0, "intensity": 1.0}]}}})");
  const auto path = cmd_basis(config, opts, log);
  const auto rows = read_csv(path);
  CHECK(rows[0] == std::vector<std::string>{"table", "i", "j", "value"});
  bool found = false;
  for (const auto& row : rows)
    if (row[0] == "gram" && row[1] == "1" && row[2] == "1") found = std::stod(row[3]) == 2.0;
  CHECK(found);
}

TEST_CASE("format_number uses 17 significant digits") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(2.0) == "2");
}
