#include "abdsde/commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "abdsde/error.hpp"
#include "abdsde/levy_paths.hpp"
#include "abdsde/oracles.hpp"
#include "abdsde/solver.hpp"
#include "abdsde/teugels_basis.hpp"

namespace abdsde {

namespace fs = std::filesystem;

namespace {

using Index = Eigen::Index;

struct Prepared {
  TimeGrid grid;
  ValidatedProblem problem;
  TeugelsBasis basis;
  PathBundle bundle;
};

fs::path output_directory(const RunConfig& config, const CommandOptions& options) {
  fs::path dir = options.out_dir.value_or(fs::path(config.output.directory));
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_validation("cannot write '" + path.string() + "'");
  return out;
}

TeugelsBasis make_basis(const LevySpec& levy, std::size_t order) {
  return order == 0 ? TeugelsBasis::trivial() : build_basis(levy, order);
}

Prepared prepare(const RunConfig& config, const CommandOptions& options) {
  TimeGrid grid = config.grid();
  // Registry checks run before any simulation.
  ValidatedProblem problem = validate_problem(config.problem, grid);
  TeugelsBasis basis = make_basis(config.problem.levy, config.resolved_order());
  const std::uint64_t seed = options.seed.value_or(config.seed);
  PathBundle bundle = sample_paths(config.problem.levy, grid, config.numerics.scenarios,
                                   config.numerics.paths, seed, options.threads);
  bundle = teugels_increments(std::move(bundle), config.problem.levy, basis, options.threads);
  return {std::move(grid), std::move(problem), std::move(basis), std::move(bundle)};
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments column_moments(const PathMatrix& m, Index col) {
  Moments out;
  const auto n = static_cast<double>(m.rows());
  out.mean = m.col(col).mean();
  if (m.rows() > 1) out.variance = (m.col(col).array() - out.mean).square().sum() / (n - 1.0);
  return out;
}

PathMatrix cumulative_teugels(const PathBundle& bundle, std::size_t order) {
  const auto& dh = bundle.teugels_increment(order);
  PathMatrix h = PathMatrix::Zero(dh.rows(), dh.cols() + 1);
  for (Index k = 0; k < dh.cols(); ++k) h.col(k + 1) = h.col(k) + dh.col(k);
  return h;
}

}  // namespace

std::string format_number(double value) {
  std::ostringstream out;
  out << std::setprecision(17) << value;
  return out.str();
}

SimulateReport cmd_simulate(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  const Prepared prep = prepare(config, options);
  const auto& grid = prep.grid;
  const auto& bundle = prep.bundle;
  const std::size_t order = prep.basis.order;
  const fs::path dir = output_directory(config, options);

  std::vector<PathMatrix> compensated;
  std::vector<PathMatrix> teugels;
  for (std::size_t i = 1; i <= order; ++i) {
    compensated.push_back(compensate(bundle, config.problem.levy, static_cast<int>(i)));
    teugels.push_back(cumulative_teugels(bundle, i));
  }

  SimulateReport report;
  report.statistics_csv = dir / "simulate.csv";
  {
    auto out = open_output(report.statistics_csv);
    out << "node,t,mean_L,var_L";
    for (std::size_t i = 1; i <= order; ++i)
      out << ",mean_Y" << i << ",var_Y" << i << ",mean_H" << i << ",var_H" << i;
    out << '\n';
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
      const auto col = static_cast<Index>(k);
      const Moments l = column_moments(bundle.levy(), col);
      out << k << ',' << format_number(grid.time(k)) << ',' << format_number(l.mean) << ','
          << format_number(l.variance);
      for (std::size_t i = 0; i < order; ++i) {
        const Moments y = column_moments(compensated[i], col);
        const Moments h = column_moments(teugels[i], col);
        out << ',' << format_number(y.mean) << ',' << format_number(y.variance) << ','
            << format_number(h.mean) << ',' << format_number(h.variance);
      }
      out << '\n';
    }
  }

  report.bracket_csv = dir / "bracket.csv";
  {
    auto out = open_output(report.bracket_csv);
    out << "node,t,i,j,estimate,target,stderr,z_score,pass\n";
    const auto n = static_cast<double>(bundle.total_paths());
    for (std::size_t k = 1; k <= grid.terminal_index(); ++k) {
      const auto col = static_cast<Index>(k);
      for (std::size_t i = 0; i < order; ++i) {
        for (std::size_t j = i; j < order; ++j) {
          const Eigen::ArrayXd product = teugels[i].col(col).array() * teugels[j].col(col).array();
          const double estimate = product.mean();
          const double variance =
              n > 1.0 ? (product - estimate).square().sum() / (n - 1.0) : 0.0;
          const double stderr_ = std::sqrt(variance / n);
          const double target = i == j ? grid.time(k) : 0.0;
          double z = 0.0;
          bool pass;
          if (stderr_ > 0.0) {
            z = (estimate - target) / stderr_;
            pass = std::abs(z) <= 4.0;
          } else {
            pass = std::abs(estimate - target) <= 1e-12;
          }
          ++report.bracket_checks;
          if (!pass) ++report.bracket_failures;
          out << k << ',' << format_number(grid.time(k)) << ',' << i + 1 << ',' << j + 1 << ','
              << format_number(estimate) << ',' << format_number(target) << ','
              << format_number(stderr_) << ',' << format_number(z) << ',' << (pass ? 1 : 0) << '\n';
        }
      }
    }
  }

  if (options.debug) {
    auto out = open_output(dir / "levy_dump.csv");
    write_levy_dump(bundle, out);
  }
  log << "simulate: " << bundle.total_paths() << " paths, order " << order << ", bracket checks "
      << report.bracket_checks - report.bracket_failures << "/" << report.bracket_checks
      << " within 4 standard errors\n";
  log << "wrote " << report.statistics_csv.string() << " and " << report.bracket_csv.string() << '\n';
  return report;
}

SolveReport cmd_solve(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  const Prepared prep = prepare(config, options);
  const auto& grid = prep.grid;
  SolverOptions solver_options = config.solver_options(options.threads);
  solver_options.record_r2 = options.debug;
  const SolveResult result = solve(prep.problem, prep.bundle, prep.basis, solver_options);
  const auto& state = result.state;
  const auto& diag = result.diagnostics;
  const std::size_t order = prep.basis.order;
  const fs::path dir = output_directory(config, options);
  const std::size_t terminal = grid.terminal_index();
  const bool has_barrier = config.problem.boundary.barrier.active();

  SolveReport report;
  report.solution_csv = dir / "solution.csv";
  {
    auto out = open_output(report.solution_csv);
    out << "t,mean_Y";
    for (std::size_t i = 1; i <= order; ++i) out << ",mean_Z" << i;
    out << ",mean_K,barrier\n";
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
      const auto col = static_cast<Index>(n);
      const auto head = static_cast<Index>(std::min(n, terminal));
      out << format_number(grid.time(n)) << ',' << format_number(state.y.col(col).mean());
      for (std::size_t i = 0; i < order; ++i) out << ',' << format_number(state.z[i].col(col).mean());
      out << ',' << format_number(state.k.col(head).mean()) << ',';
      if (has_barrier && n <= terminal) {
        const bool shared = config.problem.boundary.barrier.deterministic();
        out << format_number(shared ? state.barrier(0, col) : state.barrier.col(col).mean());
      }
      out << '\n';
    }
  }

  report.y0 = diag.y0_mean;
  report.y0_stderr = diag.y0_stderr;
  report.k_terminal = state.k.col(static_cast<Index>(terminal)).mean();
  report.skorokhod_residual = diag.skorokhod_residual;
  report.iterations = diag.iterations;
  report.distances = diag.distances;
  report.ratios = diag.ratios;

  nlohmann::json summary;
  summary["mode"] = config.numerics.mode == SolveMode::Picard ? "picard" : "direct";
  summary["reflect"] = config.numerics.reflect;
  summary["paths"] = prep.bundle.total_paths();
  summary["order"] = order;
  summary["y0"] = report.y0;
  summary["y0_stderr"] = report.y0_stderr;
  summary["k_T_mean"] = report.k_terminal;
  summary["skorokhod_residual"] = report.skorokhod_residual;
  summary["max_reflection_increment"] = diag.max_reflection_increment;
  summary["change_of_variables_M"] = prep.problem.change_of_variables;
  summary["contraction"] = {{"eps0", diag.contraction.eps0},
                            {"eps2", diag.contraction.eps2},
                            {"beta", diag.contraction.beta},
                            {"c_hat", diag.contraction.c_hat},
                            {"feasible", diag.contraction.feasible}};
  summary["beta"] = diag.beta;
  if (config.numerics.mode == SolveMode::Picard) {
    summary["picard_iterations"] = diag.iterations;
    summary["picard_distances"] = diag.distances;
    summary["picard_ratios"] = diag.ratios;
    summary["convergence_guaranteed"] = diag.convergence_guaranteed;
  }
  summary["warnings"] = diag.warnings;
  report.summary_json = dir / "summary.json";
  {
    auto out = open_output(report.summary_json);
    out << summary.dump(2) << '\n';
  }
  if (options.debug) {
    auto out = open_output(dir / "regression_r2.csv");
    out << "node,r_squared\n";
    // recorded from t_{N-1} backwards
    for (std::size_t i = 0; i < diag.r_squared.size(); ++i)
      out << terminal - 1 - i << ',' << format_number(diag.r_squared[i]) << '\n';
  }

  log << "Y0: " << format_number(report.y0) << " (stderr " << format_number(report.y0_stderr) << ")\n";
  log << "K_T mean: " << format_number(report.k_terminal) << '\n';
  log << "skorokhod residual: " << format_number(report.skorokhod_residual) << '\n';
  if (config.numerics.mode == SolveMode::Picard) {
    log << "iterations: " << report.iterations << ", final distance: "
        << format_number(report.distances.empty() ? 0.0 : report.distances.back()) << '\n';
    log << "distance ratios:";
    for (double r : report.ratios) log << ' ' << format_number(r);
    log << '\n';
    if (!diag.convergence_guaranteed) log << "warning: contraction constant c_hat >= 1\n";
  }
  for (const auto& w : diag.warnings) log << "warning: " << w << '\n';
  return report;
}

// ---------------------------------------------------------------------------
// Oracle suite

namespace {

struct OracleCase {
  std::string name;
  double tolerance;
  std::function<double(std::size_t threads)> deviation;
};

SolveResult solve_single_path(const ProblemSpec& spec, const TimeGrid& grid, bool reflect,
                              std::size_t threads) {
  const ValidatedProblem problem = validate_problem(spec, grid);
  PathBundle bundle = sample_paths(spec.levy, grid, 1, 1, 0, threads);
  SolverOptions options;
  options.reflect = reflect;
  options.threads = threads;
  return solve(problem, bundle, TeugelsBasis::trivial(), options);
}

double max_abs_difference(const PathMatrix& row, const std::vector<double>& reference,
                          std::size_t count) {
  double worst = 0.0;
  for (std::size_t n = 0; n < count; ++n)
    worst = std::max(worst, std::abs(row(0, static_cast<Index>(n)) - reference[n]));
  return worst;
}

ProblemSpec deterministic_spec(double horizon, double terminal) {
  ProblemSpec spec;
  spec.horizon = horizon;
  spec.boundary.xi.a = terminal;
  return spec;
}

GeneratorSpec affine_y(double slope) {
  GeneratorSpec f;
  f.family = GeneratorFamily::Affine;
  f.params.y = slope;
  f.lipschitz_c = slope * slope;
  return f;
}

struct MartingaleRun {
  double mean_z = 0.0;
  double y_rms = 0.0;
};

MartingaleRun martingale_run(std::size_t threads) {
  const double rate = 4.0;
  ProblemSpec spec;
  spec.levy.atoms = {{1.0, rate}};
  spec.horizon = 1.0;
  spec.boundary.xi = {TerminalFamily::LinearCompensated, 0.0, 1.0};
  const TimeGrid grid(1.0, 0.0, 20, 0);
  const ValidatedProblem problem = validate_problem(spec, grid);
  const TeugelsBasis basis = build_basis(spec.levy, 1);
  PathBundle bundle = sample_paths(spec.levy, grid, 1, 20000, 7, threads);
  bundle = teugels_increments(std::move(bundle), spec.levy, basis, threads);
  SolverOptions options;
  options.threads = threads;
  const SolveResult result = solve(problem, bundle, basis, options);

  const auto reference = oracles::closed_form_martingale(0.0, 1.0, rate);
  MartingaleRun run;
  run.mean_z = result.state.z[0].leftCols(static_cast<Index>(grid.steps())).mean() / reference.z1;
  double squares = 0.0;
  for (Index r = 0; r < result.state.y.rows(); ++r)
    for (std::size_t n = 0; n <= grid.terminal_index(); ++n) {
      const double expected = reference.y(grid.time(n), bundle.levy()(r, static_cast<Index>(n)));
      const double d = result.state.y(r, static_cast<Index>(n)) - expected;
      squares += d * d;
    }
  run.y_rms = std::sqrt(squares / static_cast<double>(result.state.y.rows() *
                                                      static_cast<Index>(grid.terminal_index() + 1)));
  return run;
}

std::vector<OracleCase> oracle_suite() {
  std::vector<OracleCase> cases;

  cases.push_back({"constant_terminal", 1e-12, [](std::size_t threads) {
                     const TimeGrid grid(1.0, 0.0, 50, 0);
                     const auto result = solve_single_path(deterministic_spec(1.0, 3.0), grid, false, threads);
                     const auto ref = oracles::deterministic_delay_recursion(
                         {}, 3.0, [](double) { return 3.0; }, 0.0, {1.0, 50, 0.0, 0});
                     return max_abs_difference(result.state.y, ref, 51);
                   }});

  cases.push_back({"ode_exact", 0.03, [](std::size_t threads) {
                     auto spec = deterministic_spec(1.0, 1.0);
                     spec.f = affine_y(1.0);
                     const auto result = solve_single_path(spec, TimeGrid(1.0, 0.0, 200, 0), false, threads);
                     return std::abs(result.state.y(0, 0) - std::exp(1.0));
                   }});

  // Explicit oracle vs the solver's inner fixed point: an O(dt) scheme gap.
  cases.push_back({"ode_oracle", 0.02, [](std::size_t threads) {
                     auto spec = deterministic_spec(1.0, 1.0);
                     spec.f = affine_y(1.0);
                     const auto result = solve_single_path(spec, TimeGrid(1.0, 0.0, 200, 0), false, threads);
                     oracles::LinearDriver f;
                     f.y_weight = 1.0;
                     const auto ref = oracles::deterministic_delay_recursion(
                         f, 1.0, [](double) { return 1.0; }, 0.0, {1.0, 200, 0.0, 0});
                     return max_abs_difference(result.state.y, ref, 201);
                   }});

  cases.push_back({"anticipated_delay", 1e-12, [](std::size_t threads) {
                     auto spec = deterministic_spec(1.0, 1.0);
                     spec.extension = 0.25;
                     spec.f.family = GeneratorFamily::AnticipatedAffine;
                     spec.f.params.pi = 1.0;
                     spec.f.lipschitz_c = 1.0;
                     spec.phi = DelaySpec::constant(0.25);
                     spec.boundary.eta = {ExtensionFamily::Constant, 1.0, 0.0};
                     const auto result =
                         solve_single_path(spec, TimeGrid(1.0, 0.25, 100, 25), false, threads);
                     oracles::LinearDriver f;
                     f.pi_weight = 1.0;
                     const auto ref = oracles::deterministic_delay_recursion(
                         f, 1.0, [](double) { return 1.0; }, 0.25, {1.0, 100, 0.25, 25});
                     return max_abs_difference(result.state.y, ref, 126);
                   }});

  auto reflected_case = [](double terminal, std::function<BarrierSpec()> barrier,
                           std::function<double(double)> barrier_fn, double drift_constant) {
    return [=](std::size_t threads) {
      auto spec = deterministic_spec(1.0, terminal);
      if (drift_constant != 0.0) {
        spec.f.family = GeneratorFamily::Constant;
        spec.f.params.constant = drift_constant;
      }
      spec.boundary.barrier = barrier();
      const TimeGrid grid(1.0, 0.0, 100, 0);
      const auto result = solve_single_path(spec, grid, true, threads);
      oracles::LinearDriver f;
      f.constant = drift_constant;
      const auto ref = oracles::reflected_dp(f, terminal, barrier_fn, {1.0, 100, 0.0, 0});
      double worst = max_abs_difference(result.state.y, ref.y, 101);
      for (std::size_t n = 0; n <= 100; ++n)
        worst = std::max(worst, std::abs(result.state.k(0, static_cast<Index>(n)) - ref.k[n]));
      return worst;
    };
  };

  cases.push_back({"reflected_binding", 1e-12,
                   reflected_case(1.0, [] { return BarrierSpec{BarrierFamily::Constant, 2.0, 0.0}; },
                                  [](double) { return 2.0; }, 0.0)});
  cases.push_back({"reflected_slack", 1e-12,
                   reflected_case(5.0, [] { return BarrierSpec{BarrierFamily::Constant, 2.0, 0.0}; },
                                  [](double) { return 2.0; }, 0.0)});
  cases.push_back({"reflected_drift", 1e-12,
                   reflected_case(0.0, [] { return BarrierSpec{BarrierFamily::AffineTime, 0.5, -0.5}; },
                                  [](double t) { return 0.5 - 0.5 * t; }, -1.0)});

  cases.push_back({"barrier_far_below", 0.0, [](std::size_t threads) {
                     auto spec = deterministic_spec(1.0, 1.0);
                     spec.f = affine_y(0.5);
                     const TimeGrid grid(1.0, 0.0, 100, 0);
                     const auto free = solve_single_path(spec, grid, false, threads);
                     spec.boundary.barrier = {BarrierFamily::Constant, -1e6, 0.0};
                     const auto reflected = solve_single_path(spec, grid, true, threads);
                     return (free.state.y - reflected.state.y).cwiseAbs().maxCoeff() +
                            reflected.state.k.cwiseAbs().maxCoeff();
                   }});

  cases.push_back({"martingale_z", 0.02, [](std::size_t threads) {
                     return std::abs(martingale_run(threads).mean_z - 1.0);
                   }});
  cases.push_back({"martingale_y", 0.05, [](std::size_t threads) {
                     return martingale_run(threads).y_rms;
                   }});
  return cases;
}

}  // namespace

std::size_t VerifyReport::failures() const {
  std::size_t count = 0;
  for (const auto& c : cases)
    if (!c.passed) ++count;
  return count;
}

std::vector<std::string> verify_case_names() {
  std::vector<std::string> names;
  for (const auto& c : oracle_suite()) names.push_back(c.name);
  return names;
}

VerifyReport cmd_verify(const std::optional<std::vector<std::string>>& selection,
                        std::optional<double> tolerance_override, const CommandOptions& options,
                        std::ostream& log) {
  const auto suite = oracle_suite();
  if (selection) {
    for (const auto& name : *selection) {
      bool known = false;
      for (const auto& c : suite) known = known || c.name == name;
      if (!known) fail_validation("verify: unknown case '" + name + "'");
    }
    if (selection->empty()) log << "warning: empty case selection, nothing verified\n";
  }

  VerifyReport report;
  for (const auto& c : suite) {
    if (selection && std::find(selection->begin(), selection->end(), c.name) == selection->end())
      continue;
    VerifyCaseResult result;
    result.name = c.name;
    result.tolerance = tolerance_override.value_or(c.tolerance);
    result.deviation = c.deviation(options.threads);
    result.passed = std::isfinite(result.deviation) && result.deviation <= result.tolerance;
    log << (result.passed ? "PASS " : "FAIL ") << result.name
        << "  deviation=" << format_number(result.deviation)
        << "  tolerance=" << format_number(result.tolerance) << '\n';
    report.cases.push_back(result);
  }
  log << report.cases.size() - report.failures() << "/" << report.cases.size() << " oracle cases passed\n";

  if (options.out_dir) {
    fs::create_directories(*options.out_dir);
    auto out = open_output(*options.out_dir / "verify.csv");
    out << "case,deviation,tolerance,pass\n";
    for (const auto& c : report.cases)
      out << c.name << ',' << format_number(c.deviation) << ',' << format_number(c.tolerance) << ','
          << (c.passed ? 1 : 0) << '\n';
  }
  return report;
}

// ---------------------------------------------------------------------------

std::optional<double> closed_form_y0(const RunConfig& config) {
  const auto& p = config.problem;
  const auto& b = p.boundary;
  if (p.g.family != GeneratorFamily::Zero) return std::nullopt;
  if (b.barrier.active() && config.numerics.reflect) return std::nullopt;
  if (b.xi.random()) return std::nullopt;
  double slope = 0.0;
  double constant = 0.0;
  switch (p.f.family) {
    case GeneratorFamily::Zero:
      break;
    case GeneratorFamily::Constant:
      constant = p.f.params.constant;
      break;
    case GeneratorFamily::Affine:
      if (p.f.params.z != 0.0) return std::nullopt;
      slope = p.f.params.y;
      constant = p.f.params.constant;
      break;
    default:
      return std::nullopt;
  }
  const double xi = b.xi.a;
  const double T = p.horizon;
  // y' = -(slope y + constant), y(T) = xi
  if (slope == 0.0) return xi + constant * T;
  return (xi + constant / slope) * std::exp(slope * T) - constant / slope;
}

ConvergenceReport cmd_convergence(const RunConfig& config, const std::vector<std::size_t>& levels,
                                  const CommandOptions& options, std::ostream& log) {
  const auto exact = closed_form_y0(config);
  if (!exact)
    fail_validation("convergence: the configured problem has no closed-form Y_0 (needs g = 0, "
                    "no active barrier, constant xi and f in {zero, constant, affine in y})");
  if (levels.empty()) fail_validation("convergence: no refinement levels given");

  ConvergenceReport report;
  for (std::size_t level : levels) {
    RunConfig run = config;
    run.numerics.steps = level;
    if (config.problem.extension > 0.0) {
      const double ratio = config.problem.extension / config.problem.horizon;
      run.numerics.extension_steps =
          std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(level))));
    }
    const Prepared prep = prepare(run, options);
    const SolveResult result =
        solve(prep.problem, prep.bundle, prep.basis, run.solver_options(options.threads));
    ConvergenceRow row;
    row.steps = level;
    row.error = std::abs(result.diagnostics.y0_mean - *exact);
    if (!report.rows.empty() && row.error > 0.0) row.ratio = report.rows.back().error / row.error;
    if (!report.rows.empty()) {
      const double previous = report.rows.back().error;
      const bool ok = previous > 0.0 ? row.error < previous : row.error <= previous;
      report.monotone = report.monotone && ok;
    }
    report.rows.push_back(row);
  }

  const fs::path dir = output_directory(config, options);
  report.table_csv = dir / "convergence.csv";
  auto out = open_output(report.table_csv);
  out << "N,error,ratio\n";
  log << "N, |Y0 - exact|, ratio   (exact Y0 = " << format_number(*exact) << ")\n";
  for (const auto& row : report.rows) {
    out << row.steps << ',' << format_number(row.error) << ','
        << (row.ratio ? format_number(*row.ratio) : std::string()) << '\n';
    log << row.steps << ", " << format_number(row.error) << ", "
        << (row.ratio ? format_number(*row.ratio) : std::string("-")) << '\n';
  }
  if (report.rows.size() > 1)
    log << (report.monotone ? "error decreases monotonically\n" : "error is NOT monotonically decreasing\n");
  return report;
}

fs::path cmd_basis(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  const TeugelsBasis basis = build_basis(config.problem.levy, config.resolved_order());
  const fs::path dir = output_directory(config, options);
  const fs::path path = dir / "basis.csv";
  auto out = open_output(path);
  write_basis_csv(basis, out);
  log << "wrote " << path.string() << " (order " << basis.order << ")\n";
  return path;
}

}  // namespace abdsde
