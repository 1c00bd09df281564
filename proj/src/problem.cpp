#include "abdsde/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "abdsde/error.hpp"

namespace abdsde {

namespace {

constexpr double kRelativeSlack = 1e-12;

bool within(double value, double bound) {
  return value <= bound + kRelativeSlack * std::max(1.0, std::abs(bound));
}

double first_component(std::span<const double> v) { return v.empty() ? 0.0 : v.front(); }

bool is_affine_like(GeneratorFamily family) {
  return family == GeneratorFamily::Affine || family == GeneratorFamily::AnticipatedAffine ||
         family == GeneratorFamily::Clamped;
}

void check_delay(const DelaySpec& delay, const char* name, double horizon, double extension) {
  switch (delay.kind) {
    case DelayKind::None:
      return;
    case DelayKind::Constant:
      if (!(delay.delta > 0.0) || !std::isfinite(delay.delta))
        fail_validation(std::string(name) + " must be strictly positive");
      break;
    case DelayKind::Affine:
      if (!(delay.rho < 1.0) || !std::isfinite(delay.rho))
        fail_validation(std::string("unsupported delay: t + ") + name +
                        "(t) must be increasing (rho < 1)");
      if (!(delay.delta0 > 0.0) || !(delay.rho * horizon + delay.delta0 > 0.0))
        fail_validation(std::string(name) + " must be strictly positive on [0, T]");
      break;
  }
  const double needed = delay.required_extension(horizon);
  if (!within(needed, extension)) {
    std::ostringstream msg;
    msg << "sup_t (t + " << name << "(t)) = T + " << needed << " exceeds T + K_ext = T + "
        << extension;
    fail_validation(msg.str(), "(A)");
  }
}

}  // namespace

double DelaySpec::value(double t, double horizon) const {
  switch (kind) {
    case DelayKind::None:
      return 0.0;
    case DelayKind::Constant:
      return delta;
    case DelayKind::Affine:
      return rho * (horizon - t) + delta0;
  }
  return 0.0;
}

double DelaySpec::required_extension(double horizon) const {
  switch (kind) {
    case DelayKind::None:
      return 0.0;
    case DelayKind::Constant:
      return delta;
    case DelayKind::Affine:
      // t + phi(t) has slope 1 - rho > 0, so the supremum sits at t = T.
      return std::max(delta0, rho * horizon + delta0 - horizon);
  }
  return 0.0;
}

double DelaySpec::change_of_variables_constant() const {
  switch (kind) {
    case DelayKind::None:
      return 0.0;
    case DelayKind::Constant:
      return 1.0;
    case DelayKind::Affine:
      return 1.0 / (1.0 - rho);
  }
  return 0.0;
}

double validate_delays(const DelaySpec& phi, const DelaySpec& psi, double horizon, double extension) {
  check_delay(phi, "phi", horizon, extension);
  check_delay(psi, "psi", horizon, extension);
  return std::max(phi.change_of_variables_constant(), psi.change_of_variables_constant());
}

bool GeneratorSpec::uses_y() const { return is_affine_like(family) && params.y != 0.0; }
bool GeneratorSpec::uses_z() const { return is_affine_like(family) && params.z != 0.0; }
bool GeneratorSpec::uses_pi() const { return is_affine_like(family) && params.pi != 0.0; }
bool GeneratorSpec::uses_zeta() const { return is_affine_like(family) && params.zeta != 0.0; }

double evaluate(const GeneratorSpec& gen, const GeneratorArgs& args) {
  const auto& p = gen.params;
  switch (gen.family) {
    case GeneratorFamily::Zero:
      return 0.0;
    case GeneratorFamily::Constant:
      return p.constant;
    case GeneratorFamily::Affine:
    case GeneratorFamily::AnticipatedAffine:
      return p.y * args.y + p.z * first_component(args.z) + p.pi * args.pi +
             p.zeta * first_component(args.zeta) + p.constant;
    case GeneratorFamily::Clamped:
      return p.y * std::clamp(args.y, p.lower, p.upper) + p.z * std::tanh(first_component(args.z)) +
             p.pi * std::clamp(args.pi, p.lower, p.upper) +
             p.zeta * std::tanh(first_component(args.zeta)) + p.constant;
  }
  return 0.0;
}

namespace {

void check_family_shape(const GeneratorSpec& gen, const char* name) {
  if (!(gen.lipschitz_c >= 0.0) || !std::isfinite(gen.lipschitz_c))
    fail_validation(std::string(name) + ": Lipschitz constant c must be finite and >= 0");
  const auto& p = gen.params;
  for (double v : {p.y, p.z, p.pi, p.zeta, p.constant})
    if (!std::isfinite(v)) fail_validation(std::string(name) + ": coefficients must be finite");
  if (gen.family == GeneratorFamily::Affine && (p.pi != 0.0 || p.zeta != 0.0))
    fail_validation(std::string(name) +
                    ": the affine family has no anticipated terms; use anticipated_affine");
  if (gen.family == GeneratorFamily::Clamped && !(p.lower < p.upper))
    fail_validation(std::string(name) + ": clamp window needs lower < upper");
}

}  // namespace

void validate_driver_f(const GeneratorSpec& f) {
  check_family_shape(f, "f");
  if (!is_affine_like(f.family)) return;
  const auto& p = f.params;
  // Cauchy-Schwarz: |sum a_k d_k|^2 <= (sum a_k^2)(sum d_k^2); clamp and tanh are 1-Lipschitz.
  const double modulus = p.y * p.y + p.z * p.z + p.pi * p.pi + p.zeta * p.zeta;
  if (!within(modulus, f.lipschitz_c)) {
    std::ostringstream msg;
    msg << "f: declared c = " << f.lipschitz_c << " is below the squared modulus " << modulus;
    fail_validation(msg.str(), "(H1.1)(i)");
  }
}

void validate_driver_g(const GeneratorSpec& g, double change_of_variables) {
  check_family_shape(g, "g");
  const double M = change_of_variables;
  const double a1 = g.alpha1;
  const double a2 = g.alpha2;
  if (!(a1 >= 0.0) || !(a1 < 0.5)) fail_validation("g: need 0 <= alpha1 < 1/2", "(H1.1)(ii)");
  if (!(a2 >= 0.0) || !(a2 * M < 1.0)) fail_validation("g: need 0 <= alpha2 < 1/M", "(H1.1)(ii)");
  if (!(a1 + a2 * M < 0.5)) {
    std::ostringstream msg;
    msg << "g: alpha1 + alpha2 * M = " << a1 + a2 * M << " must be < 1/2";
    fail_validation(msg.str(), "(H1.1)(ii)");
  }
  if (!is_affine_like(g.family)) return;
  // Weighted Cauchy-Schwarz: (sum a_k d_k)^2 <= (sum a_k^2 / w_k)(sum w_k d_k^2)
  // with weights (c, c, alpha1, alpha2) on (y, pi, z, zeta).
  const auto& p = g.params;
  const double coefficients[] = {p.y, p.pi, p.z, p.zeta};
  const double weights[] = {g.lipschitz_c, g.lipschitz_c, a1, a2};
  double load = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (coefficients[k] == 0.0) continue;
    if (weights[k] <= 0.0)
      fail_validation("g: a nonzero coefficient has zero declared modulus", "(H1.1)(ii)");
    load += coefficients[k] * coefficients[k] / weights[k];
  }
  if (!within(load, 1.0)) {
    std::ostringstream msg;
    msg << "g: declared constants do not dominate the coefficients (weighted load " << load
        << " > 1)";
    fail_validation(msg.str(), "(H1.1)(ii)");
  }
}

ContractionConstants contraction_constants(const GeneratorSpec& f, const GeneratorSpec& g,
                                           double change_of_variables) {
  const double M = change_of_variables;
  const double z_part = g.alpha1 + g.alpha2 * M;
  const double c = std::max(f.lipschitz_c, g.lipschitz_c);

  ContractionConstants out;
  out.c = c;
  const double slack = 1.0 - z_part - c * M;
  out.feasible = slack > 0.0;
  if (c == 0.0) {
    out.eps0 = 1.0;
  } else if (out.feasible) {
    out.eps0 = 2.0 * c / slack;
  } else {
    out.eps0 = 2.0 * c;
  }
  out.c_hat = z_part + (c / out.eps0 + c * M);
  const double numerator = c / out.eps0 + c + 2.0 * c * M;
  out.eps2 = out.c_hat > 0.0 ? numerator / out.c_hat : 0.0;
  out.beta = out.eps0 + out.eps2;
  return out;
}

double terminal_value(const TerminalSpec& xi, const LevySpec& levy, double horizon,
                      double levy_at_T) {
  switch (xi.family) {
    case TerminalFamily::Constant:
      return xi.a;
    case TerminalFamily::LinearLevy:
      return xi.a + xi.b * levy_at_T;
    case TerminalFamily::LinearCompensated:
      return xi.a + xi.b * (levy_at_T - horizon * levy.mean_rate(1));
  }
  return 0.0;
}

double extension_value(const ExtensionSpec& eta, double terminal, double t, double horizon) {
  switch (eta.family) {
    case ExtensionFamily::HoldTerminal:
      return terminal;
    case ExtensionFamily::Constant:
      return eta.v0;
    case ExtensionFamily::AffineTime:
      return eta.v0 + eta.v1 * (t - horizon);
  }
  return terminal;
}

double extension_z_value(const ExtensionZSpec& vartheta) {
  return vartheta.family == ExtensionZFamily::Zero ? 0.0 : vartheta.value;
}

double barrier_value(const BarrierSpec& barrier, double t, double levy_at_t) {
  switch (barrier.family) {
    case BarrierFamily::None:
      return -std::numeric_limits<double>::infinity();
    case BarrierFamily::Constant:
      return barrier.s0;
    case BarrierFamily::AffineTime:
      return barrier.s0 + barrier.s1 * t;
    case BarrierFamily::AffineLevy:
      return barrier.s0 + barrier.s1 * levy_at_t;
  }
  return -std::numeric_limits<double>::infinity();
}

ValidatedProblem validate_problem(const ProblemSpec& spec, const TimeGrid& grid) {
  spec.levy.validate();
  if (std::abs(grid.horizon() - spec.horizon) > 1e-12 * std::max(1.0, spec.horizon) ||
      std::abs(grid.extension() - spec.extension) > 1e-12 * std::max(1.0, spec.extension))
    fail_validation("time grid does not match the problem horizon/extension");

  ValidatedProblem out;
  out.spec = spec;
  out.change_of_variables = validate_delays(spec.phi, spec.psi, spec.horizon, spec.extension);

  for (const auto* gen : {&spec.f, &spec.g}) {
    const char* name = gen == &spec.f ? "f" : "g";
    if (gen->uses_pi() && spec.phi.kind == DelayKind::None)
      fail_validation(std::string(name) + " reads E^{F_t}[Y_{t+phi(t)}] but no delay phi is declared",
                      "(A)");
    if (gen->uses_zeta() && spec.psi.kind == DelayKind::None)
      fail_validation(std::string(name) + " reads E^{F_t}[Z_{t+psi(t)}] but no delay psi is declared",
                      "(A)");
  }
  validate_driver_f(spec.f);
  validate_driver_g(spec.g, out.change_of_variables);

  const auto& b = spec.boundary;
  if (!std::isfinite(b.xi.a) || !std::isfinite(b.xi.b)) fail_validation("xi parameters must be finite");
  if (b.xi.random() && b.eta.family != ExtensionFamily::HoldTerminal)
    fail_validation("random xi requires eta = hold_terminal so that eta_T = xi pathwise",
                    "eta_T = xi");
  if (!b.xi.random() && b.eta.family != ExtensionFamily::HoldTerminal &&
      std::abs(b.eta.v0 - b.xi.a) > kRelativeSlack * std::max(1.0, std::abs(b.xi.a))) {
    std::ostringstream msg;
    msg << "eta_T = " << b.eta.v0 << " differs from xi = " << b.xi.a;
    fail_validation(msg.str(), "eta_T = xi");
  }

  const bool eta_deterministic = !(b.xi.random() && b.eta.family == ExtensionFamily::HoldTerminal);
  if (b.barrier.active() && b.barrier.deterministic() && eta_deterministic) {
    // The terminal node is never reflected; (H2.2) is enforced on (T, T + K].
    for (std::size_t k = grid.terminal_index() + 1; k < grid.node_count(); ++k) {
      const double t = grid.time(k);
      const double s = barrier_value(b.barrier, t, 0.0);
      const double eta = extension_value(b.eta, b.xi.a, t, spec.horizon);
      if (s > eta) {
        std::ostringstream msg;
        msg << "S_t = " << s << " > eta_t = " << eta << " at t = " << t;
        fail_validation(msg.str(), "(H2.2)");
      }
    }
  }

  const double half_step = 0.5 * grid.main_step();
  for (const auto* delay : {&spec.phi, &spec.psi}) {
    if (delay->kind == DelayKind::None) continue;
    for (std::size_t k = 0; k <= grid.terminal_index(); ++k) {
      const double target = grid.time(k) + delay->value(grid.time(k), spec.horizon);
      const std::size_t idx = grid.nearest_index(target);
      if (std::abs(grid.time(idx) - target) > half_step * (1.0 + 1e-9)) {
        std::ostringstream msg;
        msg << "anticipated time " << target << " snapped to node " << grid.time(idx)
            << " (error exceeds dt/2)";
        out.warnings.push_back(msg.str());
        break;
      }
    }
  }

  out.contraction = contraction_constants(spec.f, spec.g, out.change_of_variables);
  return out;
}

void validate_barrier_on_paths(const ValidatedProblem& problem, const PathBundle& bundle) {
  const auto& spec = problem.spec;
  const auto& b = spec.boundary;
  if (!b.barrier.active()) return;
  const auto& grid = bundle.grid();
  const auto& levy = bundle.levy();
  const auto terminal = static_cast<Eigen::Index>(grid.terminal_index());
  for (Eigen::Index p = 0; p < levy.rows(); ++p) {
    const double xi = terminal_value(b.xi, spec.levy, spec.horizon, levy(p, terminal));
    for (std::size_t k = grid.terminal_index() + 1; k < grid.node_count(); ++k) {
      const auto col = static_cast<Eigen::Index>(k);
      const double t = grid.time(k);
      const double s = barrier_value(b.barrier, t, levy(p, col));
      const double eta = extension_value(b.eta, xi, t, spec.horizon);
      if (s > eta) {
        std::ostringstream msg;
        msg << "S_t = " << s << " > eta_t = " << eta << " at t = " << t << " on path " << p;
        fail_validation(msg.str(), "(H2.2)");
      }
    }
  }
}

}  // namespace abdsde
