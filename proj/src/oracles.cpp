#include "abdsde/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace abdsde::oracles {

std::vector<double> OracleGrid::nodes() const {
  std::vector<double> t;
  const double h = horizon / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) t.push_back(h * static_cast<double>(k));
  t.push_back(horizon);
  for (std::size_t j = 1; j <= extension_steps; ++j)
    t.push_back(j == extension_steps ? horizon + extension
                                     : horizon + extension * static_cast<double>(j) /
                                                     static_cast<double>(extension_steps));
  return t;
}

std::vector<double> deterministic_delay_recursion(const LinearDriver& f, double xi,
                                                  const std::function<double(double)>& eta,
                                                  double delay, const OracleGrid& grid) {
  const std::vector<double> t = grid.nodes();
  std::vector<double> y(t.size());
  y[grid.steps] = xi;
  for (std::size_t n = grid.steps + 1; n < t.size(); ++n) y[n] = eta(t[n]);
  for (std::size_t k = grid.steps; k-- > 0;) {
    double pi = 0.0;
    if (f.pi_weight != 0.0) {
      // nearest node by linear scan, ties to the later node
      std::size_t best = k + 1;
      for (std::size_t n = k + 1; n < t.size(); ++n)
        if (std::abs(t[n] - (t[k] + delay)) <= std::abs(t[best] - (t[k] + delay))) best = n;
      pi = y[best];
    }
    y[k] = y[k + 1] + (t[k + 1] - t[k]) * (f.y_weight * y[k + 1] + f.pi_weight * pi + f.constant);
  }
  return y;
}

ReflectedPath reflected_dp(const LinearDriver& f, double xi,
                           const std::function<double(double)>& barrier, const OracleGrid& grid) {
  const std::vector<double> t = grid.nodes();
  const std::size_t n = grid.steps;
  ReflectedPath out;
  out.y.assign(n + 1, 0.0);
  std::vector<double> push(n, 0.0);
  out.y[n] = xi;
  for (std::size_t k = n; k-- > 0;) {
    const double free = out.y[k + 1] + (t[k + 1] - t[k]) * (f.y_weight * out.y[k + 1] + f.constant);
    const double s = barrier(t[k]);
    out.y[k] = std::max(free, s);
    push[k] = out.y[k] - free;
  }
  out.k.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) out.k[k + 1] = out.k[k] + push[k];
  return out;
}

double MartingaleReference::y(double t, double levy_value) const {
  return levy_value - t * (drift + rate * size);
}

MartingaleReference closed_form_martingale(double drift, double size, double rate) {
  MartingaleReference ref;
  ref.drift = drift;
  ref.size = size;
  ref.rate = rate;
  ref.z1 = std::abs(size) * std::sqrt(rate);
  return ref;
}

}  // namespace abdsde::oracles
