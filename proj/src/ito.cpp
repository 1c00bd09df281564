#include <cmath>

#include "abdsde/error.hpp"
#include "abdsde/solver.hpp"

namespace abdsde {

double Integrand::operator()(double t) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return v0;
    case Kind::LinearTime:
      return v0 + v1 * t;
  }
  return 0.0;
}

std::vector<double> ito_residual(const ItoIntegrands& integrands, const PathBundle& bundle) {
  const std::size_t order = integrands.jumps.size();
  if (order > bundle.teugels_order())
    fail_dimension("ito_residual: " + std::to_string(order) + " jump integrands but the bundle holds " +
                   std::to_string(bundle.teugels_order()) + " Teugels increments");
  const auto& grid = bundle.grid();
  const std::size_t steps = grid.steps();
  std::vector<double> residual(bundle.total_paths());

  for (std::size_t s = 0; s < bundle.scenarios(); ++s) {
    for (std::size_t j = 0; j < bundle.paths_per_scenario(); ++j) {
      const std::size_t path = bundle.path_index(s, j);
      const auto row = static_cast<Eigen::Index>(path);
      double alpha = integrands.alpha0;
      double drift_term = 0.0;     // sum alpha_k beta_k dt
      double brownian_term = 0.0;  // sum alpha_{k+1} gamma_k dB_k
      double jump_term = 0.0;      // sum alpha_k sigma_k . dH_k
      double brownian_bracket = 0.0;
      double jump_bracket = 0.0;
      for (std::size_t k = 0; k < steps; ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        const double t = grid.time(k);
        const double dt = grid.step(k);
        const double beta = integrands.drift(t);
        const double gamma = integrands.brownian(t);
        const double dB = bundle.brownian()(static_cast<Eigen::Index>(s), col);
        double jump_increment = 0.0;
        for (std::size_t i = 0; i < order; ++i)
          jump_increment += integrands.jumps[i](t) * bundle.teugels_increment(i + 1)(row, col);

        const double next = alpha + beta * dt + gamma * dB + jump_increment;
        drift_term += alpha * beta * dt;
        brownian_term += next * gamma * dB;
        jump_term += alpha * jump_increment;
        brownian_bracket += gamma * gamma * dt;
        jump_bracket += jump_increment * jump_increment;
        alpha = next;
      }
      const double rhs = integrands.alpha0 * integrands.alpha0 + 2.0 * drift_term +
                         2.0 * brownian_term + 2.0 * jump_term - brownian_bracket + jump_bracket;
      residual[path] = std::abs(alpha * alpha - rhs);
    }
  }
  return residual;
}

}  // namespace abdsde
