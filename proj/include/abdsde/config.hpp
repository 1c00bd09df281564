#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "abdsde/problem.hpp"
#include "abdsde/solver.hpp"
#include "abdsde/time_grid.hpp"

namespace abdsde {

struct NumericsConfig {
  std::size_t steps = 100;            // N
  std::size_t extension_steps = 0;    // N_ext
  std::size_t paths = 1000;           // Levy paths per Brownian scenario
  std::size_t scenarios = 1;          // Brownian scenarios
  std::optional<std::size_t> order;   // Teugels order p; empty means "auto"
  int degree = 2;
  bool jump_count_features = false;
  bool reflect = false;
  SolveMode mode = SolveMode::Direct;
  ZEstimator z_estimator = ZEstimator::Joint;
  double picard_tol = 1e-10;
  int picard_max_iters = 50;
  std::optional<double> beta;  // empty means "auto"
  int inner_sweeps = 3;
};

struct OutputConfig {
  std::string directory = "out";
  int verbosity = 1;
};

struct RunConfig {
  ProblemSpec problem;
  NumericsConfig numerics;
  std::uint64_t seed = 1;
  OutputConfig output;

  TimeGrid grid() const;
  // Basis order after resolving "auto" to max_order.
  std::size_t resolved_order() const;
  SolverOptions solver_options(std::size_t threads) const;
};

// Parses the JSON configuration. Every object is checked for unknown keys.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace abdsde
