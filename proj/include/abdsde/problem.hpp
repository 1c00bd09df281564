#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "abdsde/levy_paths.hpp"
#include "abdsde/time_grid.hpp"

namespace abdsde {

// ---------------------------------------------------------------------------
// Delays phi, psi : [0, T] -> (0, inf)

enum class DelayKind {
  None,      // generator does not anticipate through this delay
  Constant,  // phi(t) = delta
  Affine,    // phi(t) = rho * (T - t) + delta0, 0 <= rho < 1
};

struct DelaySpec {
  DelayKind kind = DelayKind::None;
  double delta = 0.0;
  double rho = 0.0;
  double delta0 = 0.0;

  static DelaySpec none() { return {}; }
  static DelaySpec constant(double delta) { return {DelayKind::Constant, delta, 0.0, 0.0}; }
  static DelaySpec affine(double rho, double delta0) { return {DelayKind::Affine, 0.0, rho, delta0}; }

  double value(double t, double horizon) const;
  // Smallest K with t + phi(t) <= T + K on [0, T].
  double required_extension(double horizon) const;
  // Change-of-variables constant of assumption (B) in closed form: 1 for a
  // constant delay, 1/(1 - rho) for the affine family, 0 when unused.
  double change_of_variables_constant() const;
};

// Checks (A) and the support conditions for both delays and returns
// M = max(M_phi, M_psi).
double validate_delays(const DelaySpec& phi, const DelaySpec& psi, double horizon, double extension);

// ---------------------------------------------------------------------------
// Generators f(t, y, z, pi, zeta) and g(t, y, z, pi, zeta). z and zeta are
// l^2-valued; the built-in families read their first component.

enum class GeneratorFamily { Zero, Constant, Affine, AnticipatedAffine, Clamped };

struct GeneratorParams {
  double y = 0.0;
  double z = 0.0;
  double pi = 0.0;    // weight of E^{F_t}[Y_{t+phi(t)}]
  double zeta = 0.0;  // weight of E^{F_t}[Z_{t+psi(t)}]
  double constant = 0.0;
  double lower = -1.0;  // clamp window for the Clamped family
  double upper = 1.0;
};

struct GeneratorSpec {
  GeneratorFamily family = GeneratorFamily::Zero;
  GeneratorParams params;
  double lipschitz_c = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  bool uses_y() const;
  bool uses_z() const;
  bool uses_pi() const;
  bool uses_zeta() const;
  bool uses_anticipation() const { return uses_pi() || uses_zeta(); }
};

struct GeneratorArgs {
  double y = 0.0;
  std::span<const double> z;
  double pi = 0.0;
  std::span<const double> zeta;
};

double evaluate(const GeneratorSpec& gen, const GeneratorArgs& args);

// (H1.1)(i): |f - f'|^2 <= c (|dy|^2 + |dz|^2 + |dpi|^2 + |dzeta|^2).
void validate_driver_f(const GeneratorSpec& f);
// (H1.1)(ii): |g - g'|^2 <= c(|dy|^2 + |dpi|^2) + alpha1 |dz|^2 + alpha2 |dzeta|^2,
// with 0 <= alpha1 < 1/2, alpha2 * M < 1 and alpha1 + alpha2 * M < 1/2.
void validate_driver_g(const GeneratorSpec& g, double change_of_variables);

struct ContractionConstants {
  double eps0 = 0.0;
  double eps2 = 0.0;
  double beta = 0.0;
  double c_hat = 0.0;
  double c = 0.0;
  bool feasible = false;
};

// Constants of the Picard contraction estimate. c_hat(eps0) = (a1 + a2 M) +
// c/eps0 + c M decreases to (a1 + a2 M) + c M as eps0 grows while beta grows
// with eps0; eps0 is placed where c/eps0 takes half of the remaining slack.
ContractionConstants contraction_constants(const GeneratorSpec& f, const GeneratorSpec& g,
                                           double change_of_variables);

// ---------------------------------------------------------------------------
// Terminal data, extension data and barrier.

enum class TerminalFamily { Constant, LinearLevy, LinearCompensated };
struct TerminalSpec {
  TerminalFamily family = TerminalFamily::Constant;
  double a = 0.0;  // constant term (the value for Constant)
  double b = 0.0;  // slope on L_T or Y^(1)_T
  bool random() const { return family != TerminalFamily::Constant && b != 0.0; }
};

enum class ExtensionFamily { HoldTerminal, Constant, AffineTime };
struct ExtensionSpec {
  ExtensionFamily family = ExtensionFamily::HoldTerminal;
  double v0 = 0.0;  // value at T
  double v1 = 0.0;  // slope in (t - T)
};

enum class ExtensionZFamily { Zero, Constant };
struct ExtensionZSpec {
  ExtensionZFamily family = ExtensionZFamily::Zero;
  double value = 0.0;  // applied to every component
};

enum class BarrierFamily { None, Constant, AffineTime, AffineLevy };
struct BarrierSpec {
  BarrierFamily family = BarrierFamily::None;
  double s0 = 0.0;
  double s1 = 0.0;
  bool active() const { return family != BarrierFamily::None; }
  bool deterministic() const { return family != BarrierFamily::AffineLevy || s1 == 0.0; }
};

struct BoundarySpec {
  TerminalSpec xi;
  ExtensionSpec eta;
  ExtensionZSpec vartheta;
  BarrierSpec barrier;
};

double terminal_value(const TerminalSpec& xi, const LevySpec& levy, double horizon, double levy_at_T);
double extension_value(const ExtensionSpec& eta, double terminal, double t, double horizon);
double extension_z_value(const ExtensionZSpec& vartheta);
double barrier_value(const BarrierSpec& barrier, double t, double levy_at_t);

// ---------------------------------------------------------------------------

struct ProblemSpec {
  LevySpec levy;
  double horizon = 1.0;
  double extension = 0.0;
  GeneratorSpec f;
  GeneratorSpec g;
  DelaySpec phi;
  DelaySpec psi;
  BoundarySpec boundary;
};

struct ValidatedProblem {
  ProblemSpec spec;
  double change_of_variables = 0.0;  // M
  ContractionConstants contraction;
  std::vector<std::string> warnings;
};

// Runs every registry check: (A), (B), (H1.1), eta_T = xi and (H2.2) for
// deterministic data on the extension nodes of `grid`.
ValidatedProblem validate_problem(const ProblemSpec& spec, const TimeGrid& grid);

// (H2.2) on simulated paths for data that depend on L.
void validate_barrier_on_paths(const ValidatedProblem& problem, const PathBundle& bundle);

}  // namespace abdsde
