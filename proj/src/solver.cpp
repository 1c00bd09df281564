#include "abdsde/solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "abdsde/error.hpp"
#include "abdsde/parallel.hpp"

namespace abdsde {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

// Node for t_k + delay(t_k), pushed past k so that backward induction has
// already produced it.
std::size_t anticipated_node(const DelaySpec& delay, const TimeGrid& grid, double horizon,
                             std::size_t k, bool* forced = nullptr) {
  const double target = grid.time(k) + delay.value(grid.time(k), horizon);
  std::size_t node = grid.nearest_index(target);
  if (node <= k) {
    node = k + 1;
    if (forced) *forced = true;
  }
  return node;
}

struct ScenarioBlock {
  std::size_t first;
  std::size_t size;
};

void finalize(SolverState& state, Diagnostics& diagnostics, const TimeGrid& grid) {
  const std::size_t steps = grid.steps();
  const Index rows = state.y.rows();
  diagnostics.skorokhod_residual = 0.0;
  diagnostics.max_reflection_increment = 0.0;
  for (Index r = 0; r < rows; ++r) {
    state.k(r, 0) = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
      const double dk = state.dk(r, ix(n));
      state.k(r, ix(n + 1)) = state.k(r, ix(n)) + dk;
      if (dk != 0.0) {
        diagnostics.skorokhod_residual += (state.y(r, ix(n)) - state.barrier(r, ix(n))) * dk;
        diagnostics.max_reflection_increment = std::max(diagnostics.max_reflection_increment, dk);
      }
    }
  }
  diagnostics.y0_mean = state.y.col(0).mean();
  const auto& realized = state.realized_at_zero;
  if (realized.size() > 1) {
    double mean = 0.0;
    for (double v : realized) mean += v;
    mean /= static_cast<double>(realized.size());
    double squares = 0.0;
    for (double v : realized) squares += (v - mean) * (v - mean);
    const double n = static_cast<double>(realized.size());
    diagnostics.y0_stderr = std::sqrt(squares / (n - 1.0) / n);
  } else {
    diagnostics.y0_stderr = 0.0;
  }
}

void check_inputs(const PathBundle& bundle, const TeugelsBasis& basis, const ValidatedProblem& problem) {
  const auto& grid = bundle.grid();
  if (std::abs(grid.horizon() - problem.spec.horizon) > 1e-12 * std::max(1.0, problem.spec.horizon) ||
      std::abs(grid.extension() - problem.spec.extension) > 1e-12 * std::max(1.0, problem.spec.extension))
    fail_dimension("path bundle grid does not match the problem horizon/extension");
  if (basis.order > bundle.teugels_order())
    fail_dimension("bundle carries " + std::to_string(bundle.teugels_order()) +
                   " Teugels increments, basis order is " + std::to_string(basis.order));
}

}  // namespace

AnticipationIndex anticipation_index(const ProblemSpec& spec, const TimeGrid& grid) {
  AnticipationIndex out;
  for (std::size_t k = 0; k <= grid.terminal_index(); ++k) {
    if (spec.phi.kind != DelayKind::None)
      out.phi.push_back(anticipated_node(spec.phi, grid, spec.horizon, k));
    if (spec.psi.kind != DelayKind::None)
      out.psi.push_back(anticipated_node(spec.psi, grid, spec.horizon, k));
  }
  return out;
}

SolverState terminal_state(const ValidatedProblem& problem, const PathBundle& bundle,
                           std::size_t order) {
  const auto& spec = problem.spec;
  const auto& grid = bundle.grid();
  const std::size_t terminal = grid.terminal_index();
  const Index rows = ix(bundle.total_paths());
  const Index nodes = ix(grid.node_count());
  const Index head = ix(terminal + 1);

  SolverState state;
  state.y = PathMatrix::Zero(rows, nodes);
  state.z.assign(order, PathMatrix::Zero(rows, nodes));
  state.k = PathMatrix::Zero(rows, head);
  state.dk = PathMatrix::Zero(rows, ix(terminal));
  state.barrier = PathMatrix::Zero(rows, head);
  state.pi = PathMatrix::Zero(rows, head);
  state.zeta.assign(order, PathMatrix::Zero(rows, head));

  const auto& b = spec.boundary;
  const double theta = extension_z_value(b.vartheta);
  const auto& levy = bundle.levy();
  for (Index r = 0; r < rows; ++r) {
    const double xi = terminal_value(b.xi, spec.levy, spec.horizon, levy(r, ix(terminal)));
    state.y(r, ix(terminal)) = xi;
    for (std::size_t n = terminal + 1; n < grid.node_count(); ++n)
      state.y(r, ix(n)) = extension_value(b.eta, xi, grid.time(n), spec.horizon);
    for (auto& z : state.z)
      for (std::size_t n = terminal; n < grid.node_count(); ++n) z(r, ix(n)) = theta;
    for (std::size_t n = 0; n <= terminal; ++n)
      state.barrier(r, ix(n)) = barrier_value(b.barrier, grid.time(n), levy(r, ix(n)));
  }

  // At t = T the anticipated data lie in the extension window and are
  // F_T-measurable, so no projection is needed.
  if (spec.phi.kind != DelayKind::None) {
    const std::size_t a = anticipated_node(spec.phi, grid, spec.horizon, terminal);
    state.pi.col(ix(terminal)) = state.y.col(ix(a));
  }
  if (spec.psi.kind != DelayKind::None) {
    const std::size_t a = anticipated_node(spec.psi, grid, spec.horizon, terminal);
    for (std::size_t i = 0; i < order; ++i) state.zeta[i].col(ix(terminal)) = state.z[i].col(ix(a));
  }
  return state;
}

double step_backward(SolverState& state, const PathBundle& bundle, const ValidatedProblem& problem,
                     std::size_t node, const SolverOptions& options, const SolverState* frozen) {
  const auto& spec = problem.spec;
  const auto& grid = bundle.grid();
  if (node >= grid.terminal_index()) fail_dimension("step_backward needs a node before T");
  const std::size_t order = state.order();
  if (order > bundle.teugels_order()) fail_dimension("bundle lacks Teugels increments");
  const SolverState& source = frozen ? *frozen : state;
  if (source.y.rows() != state.y.rows() || source.y.cols() != state.y.cols() ||
      source.order() != order)
    fail_dimension("frozen input does not match the solver state");

  const std::size_t k = node;
  const double dt = grid.step(k);
  const bool need_pi = spec.f.uses_pi() || spec.g.uses_pi();
  const bool need_zeta = spec.f.uses_zeta() || spec.g.uses_zeta();
  const bool g_active = spec.g.family != GeneratorFamily::Zero;
  const std::size_t a_phi = need_pi ? anticipated_node(spec.phi, grid, spec.horizon, k) : 0;
  const std::size_t a_psi = need_zeta ? anticipated_node(spec.psi, grid, spec.horizon, k) : 0;
  const int sweeps = std::max(1, options.inner_sweeps);

  if (k == 0) state.realized_at_zero.assign(bundle.total_paths(), 0.0);

  std::vector<double> r_squared(bundle.scenarios(), 1.0);
  parallel_for(bundle.scenarios(), options.threads, [&](std::size_t s) {
    const std::size_t n = bundle.paths_per_scenario();
    const std::size_t first = bundle.path_index(s, 0);
    const Regressor regressor = scenario_regressor(bundle, s, k, options.regression);
    const double dB = bundle.brownian()(ix(s), ix(k));

    // Column 0: continuation Y_{k+1} + g(t_{k+1}, .) dB_k; then anticipated targets.
    const Index cols = 1 + (need_pi ? 1 : 0) + (need_zeta ? ix(order) : 0);
    Eigen::MatrixXd targets(ix(n), cols);
    std::vector<double> z_buf(order), zeta_buf(order);
    for (std::size_t j = 0; j < n; ++j) {
      const Index r = ix(first + j);
      double continuation = state.y(r, ix(k + 1));
      if (g_active && dB != 0.0) {
        for (std::size_t i = 0; i < order; ++i) {
          z_buf[i] = source.z[i](r, ix(k + 1));
          zeta_buf[i] = state.zeta[i](r, ix(k + 1));
        }
        GeneratorArgs args{source.y(r, ix(k + 1)), z_buf, state.pi(r, ix(k + 1)), zeta_buf};
        continuation += evaluate(spec.g, args) * dB;
      }
      Index c = 0;
      targets(ix(j), c++) = continuation;
      if (need_pi) targets(ix(j), c++) = source.y(r, ix(a_phi));
      if (need_zeta)
        for (std::size_t i = 0; i < order; ++i) targets(ix(j), c++) = source.z[i](r, ix(a_psi));
    }
    Eigen::MatrixXd fitted = regressor.project(targets);

    Eigen::MatrixXd z_values = Eigen::MatrixXd::Zero(ix(n), ix(order));
    const auto continuation = targets.col(0);
    const bool constant_continuation = (continuation.array() == continuation(0)).all();
    if (order > 0 && !constant_continuation) {
      Eigen::MatrixXd dh(ix(n), ix(order));
      for (std::size_t i = 0; i < order; ++i)
        for (std::size_t j = 0; j < n; ++j)
          dh(ix(j), ix(i)) = bundle.teugels_increment(i + 1)(ix(first + j), ix(k));
      const Eigen::MatrixXd& design = regressor.design();
      const Index m = design.cols();
      bool solved = false;
      if (options.z_estimator == ZEstimator::Joint) {
        // Y_{k+1} ~ a(L_k) + sum_i z_i(L_k) dH^(i)_k. The z block drops its
        // highest terms while some state class carries no jump variation.
        for (Index mz = m; mz >= 1 && !solved; --mz) {
          Eigen::MatrixXd joint(ix(n), m + mz * ix(order));
          if (joint.rows() < joint.cols()) continue;
          joint.leftCols(m) = design;
          for (std::size_t i = 0; i < order; ++i)
            joint.middleCols(m + mz * ix(i), mz) =
                design.leftCols(mz).array().colwise() * dh.col(ix(i)).array();
          Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
          cod.setThreshold(1e-11);
          cod.compute(joint);
          if (cod.rank() < regressor.rank() + mz * ix(order)) continue;
          const Eigen::VectorXd theta = cod.solve(Eigen::VectorXd(continuation));
          fitted.col(0) = design * theta.head(m);
          for (std::size_t i = 0; i < order; ++i)
            z_values.col(ix(i)) = design.leftCols(mz) * theta.segment(m + mz * ix(i), mz);
          solved = true;
        }
      }
      if (!solved) {
        // Z_k = E_k[(continuation - E_k continuation) dH_k] / dt
        Eigen::MatrixXd z_targets(ix(n), ix(order));
        for (std::size_t j = 0; j < n; ++j)
          z_targets.row(ix(j)) = (continuation(ix(j)) - fitted(ix(j), 0)) * dh.row(ix(j));
        z_values = regressor.project(z_targets) / dt;
      }
    }

    {
      const double mean = continuation.mean();
      const double total = (continuation.array() - mean).square().sum();
      const double resid = (continuation - fitted.col(0)).squaredNorm();
      r_squared[s] = total > 0.0 ? 1.0 - resid / total : 1.0;
    }

    for (std::size_t j = 0; j < n; ++j) {
      const Index r = ix(first + j);
      const Index row = ix(j);
      Index c = 1;
      double pi = 0.0;
      if (need_pi) pi = fitted(row, c++);
      for (std::size_t i = 0; i < order; ++i) {
        state.z[i](r, ix(k)) = z_values(row, ix(i));
        zeta_buf[i] = need_zeta ? fitted(row, c + ix(i)) : 0.0;
        state.zeta[i](r, ix(k)) = zeta_buf[i];
      }
      state.pi(r, ix(k)) = pi;

      const double expected = fitted(row, 0);
      double y_tilde = expected;
      if (spec.f.family != GeneratorFamily::Zero) {
        if (frozen) {
          for (std::size_t i = 0; i < order; ++i) z_buf[i] = source.z[i](r, ix(k));
          GeneratorArgs args{source.y(r, ix(k)), z_buf, pi, zeta_buf};
          y_tilde = expected + dt * evaluate(spec.f, args);
        } else {
          for (std::size_t i = 0; i < order; ++i) z_buf[i] = z_values(row, ix(i));
          for (int sweep = 0; sweep < sweeps; ++sweep) {
            GeneratorArgs args{y_tilde, z_buf, pi, zeta_buf};
            y_tilde = expected + dt * evaluate(spec.f, args);
          }
        }
      }

      const double barrier = state.barrier(r, ix(k));
      double dk = 0.0;
      double y = y_tilde;
      if (options.reflect && barrier > y_tilde) {
        dk = barrier - y_tilde;
        y = barrier;
      }
      state.y(r, ix(k)) = y;
      state.dk(r, ix(k)) = dk;
      if (k == 0)
        state.realized_at_zero[first + j] = targets(row, 0) + (y_tilde - expected) + dk;
    }
  });

  double mean = 0.0;
  for (double v : r_squared) mean += v;
  return mean / static_cast<double>(r_squared.size());
}

SolveResult picard_phi(const ValidatedProblem& problem, const PathBundle& bundle,
                       const TeugelsBasis& basis, const SolverState& frozen,
                       const SolverOptions& options) {
  check_inputs(bundle, basis, problem);
  SolveResult result;
  result.state = terminal_state(problem, bundle, basis.order);
  if (frozen.order() != basis.order || frozen.y.rows() != result.state.y.rows() ||
      frozen.y.cols() != result.state.y.cols())
    fail_dimension("frozen input does not match the grid and basis");
  for (std::size_t k = bundle.grid().terminal_index(); k-- > 0;) {
    const double r2 = step_backward(result.state, bundle, problem, k, options, &frozen);
    if (options.record_r2) result.diagnostics.r_squared.push_back(r2);
  }
  result.diagnostics.contraction = problem.contraction;
  result.diagnostics.beta = options.beta.value_or(problem.contraction.beta);
  result.diagnostics.convergence_guaranteed = problem.contraction.feasible;
  result.diagnostics.iterations = 1;
  finalize(result.state, result.diagnostics, bundle.grid());
  return result;
}

SolveResult solve(const ValidatedProblem& problem, const PathBundle& bundle,
                  const TeugelsBasis& basis, const SolverOptions& options) {
  check_inputs(bundle, basis, problem);
  validate_barrier_on_paths(problem, bundle);
  const auto& grid = bundle.grid();

  Diagnostics diagnostics;
  diagnostics.contraction = problem.contraction;
  diagnostics.beta = options.beta.value_or(problem.contraction.beta);
  diagnostics.convergence_guaranteed = problem.contraction.feasible;
  diagnostics.warnings = problem.warnings;
  for (const auto* delay : {&problem.spec.phi, &problem.spec.psi}) {
    if (delay->kind == DelayKind::None) continue;
    for (std::size_t k = 0; k <= grid.terminal_index(); ++k) {
      bool forced = false;
      anticipated_node(*delay, grid, problem.spec.horizon, k, &forced);
      if (forced) {
        diagnostics.warnings.push_back("anticipated node at t = " + std::to_string(grid.time(k)) +
                                       " snapped onto t itself; moved one node forward");
        break;
      }
    }
  }

  SolveResult result;
  if (options.mode == SolveMode::Direct) {
    result.state = terminal_state(problem, bundle, basis.order);
    for (std::size_t k = grid.terminal_index(); k-- > 0;) {
      const double r2 = step_backward(result.state, bundle, problem, k, options);
      if (options.record_r2) diagnostics.r_squared.push_back(r2);
    }
    diagnostics.iterations = 0;
  } else {
    if (!problem.contraction.feasible)
      diagnostics.warnings.push_back(
          "contraction constant c_hat >= 1: Picard convergence is not guaranteed");
    SolverState current = terminal_state(problem, bundle, basis.order);
    const double beta = diagnostics.beta;
    for (int iter = 1; iter <= std::max(1, options.picard_max_iters); ++iter) {
      SolveResult next = picard_phi(problem, bundle, basis, current, options);
      const double distance = beta_distance(next.state, current, grid, beta);
      diagnostics.iterate_norms.push_back(beta_norm(next.state.y, next.state.z, grid, beta));
      if (!diagnostics.distances.empty() && diagnostics.distances.back() > 0.0)
        diagnostics.ratios.push_back(distance / diagnostics.distances.back());
      diagnostics.distances.push_back(distance);
      diagnostics.iterations = iter;
      diagnostics.r_squared = std::move(next.diagnostics.r_squared);
      current = std::move(next.state);
      if (distance < options.picard_tol) break;
    }
    result.state = std::move(current);
  }
  finalize(result.state, diagnostics, grid);
  result.diagnostics = std::move(diagnostics);
  return result;
}

double beta_norm(const PathMatrix& dy, const std::vector<PathMatrix>& dz, const TimeGrid& grid,
                 double beta) {
  if (dy.cols() != ix(grid.node_count())) fail_dimension("beta_norm: grid mismatch");
  for (const auto& z : dz)
    if (z.rows() != dy.rows() || z.cols() != dy.cols()) fail_dimension("beta_norm: grid mismatch");
  const Index rows = dy.rows();
  if (rows == 0) return 0.0;
  std::vector<double> weights(grid.node_count() - 1);
  for (std::size_t k = 0; k + 1 < grid.node_count(); ++k)
    weights[k] = std::exp(beta * grid.time(k)) * grid.step(k);
  double total = 0.0;
  for (Index r = 0; r < rows; ++r) {
    double path_sum = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      double sq = dy(r, ix(k)) * dy(r, ix(k));
      for (const auto& z : dz) sq += z(r, ix(k)) * z(r, ix(k));
      path_sum += weights[k] * sq;
    }
    total += path_sum;
  }
  return std::sqrt(total / static_cast<double>(rows));
}

double beta_distance(const SolverState& a, const SolverState& b, const TimeGrid& grid, double beta) {
  if (a.y.rows() != b.y.rows() || a.y.cols() != b.y.cols() || a.order() != b.order())
    fail_dimension("beta_distance: states live on different grids");
  std::vector<PathMatrix> dz;
  dz.reserve(a.order());
  for (std::size_t i = 0; i < a.order(); ++i) dz.emplace_back(a.z[i] - b.z[i]);
  return beta_norm(a.y - b.y, dz, grid, beta);
}

RepresentationCheck representation_residual(const TerminalSpec& xi, const LevySpec& levy,
                                            const PathBundle& bundle, const TeugelsBasis& basis,
                                            const RegressionBasis& regression,
                                            std::size_t threads) {
  const auto& grid = bundle.grid();
  ProblemSpec spec;
  spec.levy = levy;
  spec.horizon = grid.horizon();
  spec.extension = grid.extension();
  spec.boundary.xi = xi;
  spec.boundary.eta.family = ExtensionFamily::HoldTerminal;
  const ValidatedProblem problem = validate_problem(spec, grid);

  SolverOptions options;
  options.regression = regression;
  options.threads = threads;
  const SolveResult result = solve(problem, bundle, basis, options);

  RepresentationCheck out;
  const std::size_t steps = grid.steps();
  const Index rows = ix(bundle.total_paths());
  double squares = 0.0;
  for (Index r = 0; r < rows; ++r) {
    double reconstructed = result.state.y(r, 0);
    for (std::size_t i = 0; i < basis.order; ++i)
      for (std::size_t k = 0; k < steps; ++k)
        reconstructed += result.state.z[i](r, ix(k)) * bundle.teugels_increment(i + 1)(r, ix(k));
    const double target = terminal_value(xi, levy, spec.horizon, bundle.levy()(r, ix(steps)));
    squares += (reconstructed - target) * (reconstructed - target);
  }
  out.rms = std::sqrt(squares / static_cast<double>(rows));
  out.y0 = result.diagnostics.y0_mean;
  for (std::size_t i = 0; i < basis.order; ++i)
    out.mean_z.push_back(result.state.z[i].leftCols(ix(steps)).mean());
  return out;
}

}  // namespace abdsde
