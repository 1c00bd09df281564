#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "abdsde/config.hpp"

namespace abdsde {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitSuccess = 0,
  kExitValidation = 1,
  kExitNumerical = 2,
  kExitVerification = 3,
};

struct CommandOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides output.directory
  std::optional<std::uint64_t> seed;             // overrides rng.seed
  std::size_t threads = 1;
  bool debug = false;
};

struct SimulateReport {
  std::filesystem::path statistics_csv;
  std::filesystem::path bracket_csv;
  std::size_t bracket_checks = 0;
  std::size_t bracket_failures = 0;
};

// Per-node means/variances of L, Y^(i), H^(i) and the bracket table
// E[H^(i)_t H^(j)_t] against delta_ij t (4 standard errors).
SimulateReport cmd_simulate(const RunConfig& config, const CommandOptions& options, std::ostream& log);

struct SolveReport {
  std::filesystem::path solution_csv;
  std::filesystem::path summary_json;
  double y0 = 0.0;
  double y0_stderr = 0.0;
  double k_terminal = 0.0;
  double skorokhod_residual = 0.0;
  int iterations = 0;
  std::vector<double> distances;
  std::vector<double> ratios;
};

SolveReport cmd_solve(const RunConfig& config, const CommandOptions& options, std::ostream& log);

struct VerifyCaseResult {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct VerifyReport {
  std::vector<VerifyCaseResult> cases;
  std::size_t failures() const;
};

std::vector<std::string> verify_case_names();

// Runs the oracle suite. `selection` empty = all cases; an explicitly empty
// selection list passes vacuously. `tolerance_override` replaces every
// per-case tolerance.
VerifyReport cmd_verify(const std::optional<std::vector<std::string>>& selection,
                        std::optional<double> tolerance_override, const CommandOptions& options,
                        std::ostream& log);

struct ConvergenceRow {
  std::size_t steps = 0;
  double error = 0.0;
  std::optional<double> ratio;  // previous error / this error
};

struct ConvergenceReport {
  std::filesystem::path table_csv;
  std::vector<ConvergenceRow> rows;
  bool monotone = true;
};

// Exact Y_0 for the closed-form families (g = 0, no barrier, constant xi,
// f in {zero, constant, affine in y}); empty when the config is not one.
std::optional<double> closed_form_y0(const RunConfig& config);

ConvergenceReport cmd_convergence(const RunConfig& config, const std::vector<std::size_t>& levels,
                                  const CommandOptions& options, std::ostream& log);

// Writes moments, Gram matrix and orthonormalization coefficients.
std::filesystem::path cmd_basis(const RunConfig& config, const CommandOptions& options, std::ostream& log);

// Formats with 17 significant digits.
std::string format_number(double value);

}  // namespace abdsde
