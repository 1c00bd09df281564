#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "abdsde/levy_paths.hpp"
#include "abdsde/lsmc.hpp"
#include "abdsde/problem.hpp"
#include "abdsde/teugels_basis.hpp"

namespace abdsde {

enum class SolveMode { Direct, Picard };

// Joint: regress Y_{k+1} on [p(L_k), dH_k p(L_k)] and read Z off the dH block.
// Covariance: Z_k = E_k[(Y_{k+1} - E_k Y_{k+1}) dH_k] / dt.
enum class ZEstimator { Joint, Covariance };

struct SolverOptions {
  bool reflect = false;
  SolveMode mode = SolveMode::Direct;
  RegressionBasis regression;
  ZEstimator z_estimator = ZEstimator::Joint;
  int inner_sweeps = 3;  // fixed-point sweeps for the implicit y-dependence of f
  double picard_tol = 1e-10;
  int picard_max_iters = 50;
  std::optional<double> beta;  // defaults to the contraction constant beta
  std::size_t threads = 1;
  bool record_r2 = false;
};

// Node values on [0, T + K]. Rows index global paths.
struct SolverState {
  PathMatrix y;               // paths x nodes
  std::vector<PathMatrix> z;  // one per Teugels order, paths x nodes
  PathMatrix k;               // paths x (N + 1), cumulative reflection, K_0 = 0
  PathMatrix dk;              // paths x N, reflection increment over [t_k, t_{k+1}]
  PathMatrix barrier;         // paths x (N + 1), S at the nodes (-inf when absent)
  // Anticipated arguments E^{F_{t_k}}[Y_{t_k + phi}] and E^{F_{t_k}}[Z_{t_k + psi}], k <= N.
  PathMatrix pi;
  std::vector<PathMatrix> zeta;
  // Pathwise Y_{t_1} + g dB_0 + dt f + dK_0, the quantity averaged into Y_0.
  std::vector<double> realized_at_zero;

  std::size_t order() const noexcept { return z.size(); }
};

struct Diagnostics {
  ContractionConstants contraction;
  double beta = 0.0;
  bool convergence_guaranteed = true;
  int iterations = 0;
  std::vector<double> iterate_norms;  // ||(Y^n, Z^n)||_beta
  std::vector<double> distances;      // ||(Y^n - Y^{n-1}, Z^n - Z^{n-1})||_beta
  std::vector<double> ratios;         // distances[n] / distances[n-1]
  double skorokhod_residual = 0.0;    // sum over paths and nodes of (Y - S) dK
  double max_reflection_increment = 0.0;
  double y0_mean = 0.0;
  double y0_stderr = 0.0;
  std::vector<double> r_squared;  // per step, when requested
  std::vector<std::string> warnings;
};

struct SolveResult {
  SolverState state;
  Diagnostics diagnostics;
};

// Snapped node indices of t_k + phi(t_k) and t_k + psi(t_k), k <= N. Entries
// are forced past k. Empty when the delay is not declared.
struct AnticipationIndex {
  std::vector<std::size_t> phi;
  std::vector<std::size_t> psi;
};
AnticipationIndex anticipation_index(const ProblemSpec& spec, const TimeGrid& grid);

// State with (Y, Z) = (eta, theta) on [T, T + K], zeros before T, and the
// anticipated caches at t_N. Also the starting point U^0 of the Picard iteration.
SolverState terminal_state(const ValidatedProblem& problem, const PathBundle& bundle,
                           std::size_t order);

// One backward step at node k < N. Reads nodes > k of `state`; when `frozen`
// is given, f and g are evaluated on it instead of on the solution. Returns
// the mean R^2 of the continuation regression across scenarios.
double step_backward(SolverState& state, const PathBundle& bundle, const ValidatedProblem& problem,
                   std::size_t node, const SolverOptions& options,
                   const SolverState* frozen = nullptr);

SolveResult solve(const ValidatedProblem& problem, const PathBundle& bundle,
                  const TeugelsBasis& basis, const SolverOptions& options);

// The frozen-coefficient map: one backward sweep with the generator arguments
// taken from `frozen` = (U, V).
SolveResult picard_phi(const ValidatedProblem& problem, const PathBundle& bundle,
                       const TeugelsBasis& basis, const SolverState& frozen,
                       const SolverOptions& options);

// Riemann discretization of (E int_0^{T+K} e^{beta s}(|dY_s|^2 + sum_i |dZ^(i)_s|^2) ds)^{1/2}.
double beta_norm(const PathMatrix& dy, const std::vector<PathMatrix>& dz, const TimeGrid& grid,
                 double beta);
double beta_distance(const SolverState& a, const SolverState& b, const TimeGrid& grid, double beta);

struct RepresentationCheck {
  double rms = 0.0;
  double y0 = 0.0;
  std::vector<double> mean_z;  // per order, averaged over paths and nodes in [0, T)
};

// Solves the f = g = 0 problem with terminal `xi` and measures how well
// Y_0 + sum_i sum_k Z^(i)_{t_k} dH^(i)_k reconstructs xi across paths.
RepresentationCheck representation_residual(const TerminalSpec& xi, const LevySpec& levy,
                                            const PathBundle& bundle, const TeugelsBasis& basis,
                                            const RegressionBasis& regression,
                                            std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Squared-value identity for alpha_t = alpha_0 + int beta ds + int gamma dB
// + sum_i int sigma^(i) dH^(i).

struct Integrand {
  enum class Kind { Zero, Constant, LinearTime } kind = Kind::Zero;
  double v0 = 0.0;
  double v1 = 0.0;
  static Integrand zero() { return {}; }
  static Integrand constant(double v) { return {Kind::Constant, v, 0.0}; }
  static Integrand linear(double v0, double v1) { return {Kind::LinearTime, v0, v1}; }
  double operator()(double t) const;
};

struct ItoIntegrands {
  double alpha0 = 0.0;
  Integrand drift;
  Integrand brownian;
  std::vector<Integrand> jumps;
};

// |alpha_T|^2 minus the right-hand side of the identity, per path, with the
// Brownian term read as a backward integral (right-endpoint alpha) and the
// jump bracket taken as sum of products of grid increments.
std::vector<double> ito_residual(const ItoIntegrands& integrands, const PathBundle& bundle);

}  // namespace abdsde
