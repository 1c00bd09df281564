#pragma once

#include <cstddef>
#include <functional>
#include <vector>

// Reference solutions for deterministic and closed-form instances. Nothing
// here depends on the solver, the regression layer or the path simulator.
namespace abdsde::oracles {

// Uniform grid with N steps on [0, T] and N_ext steps on [T, T + K].
struct OracleGrid {
  double horizon = 1.0;
  std::size_t steps = 100;
  double extension = 0.0;
  std::size_t extension_steps = 0;

  std::vector<double> nodes() const;
};

// f(t, y, pi) = y_weight * y + pi_weight * pi + constant, explicit in y.
struct LinearDriver {
  double y_weight = 0.0;
  double pi_weight = 0.0;
  double constant = 0.0;
};

// y_k = y_{k+1} + dt f(y_{k+1}, y at the node nearest t_k + delay), with
// y = eta on [T, T + K]. Returns values at every node.
std::vector<double> deterministic_delay_recursion(const LinearDriver& f, double xi,
                                                  const std::function<double(double)>& eta,
                                                  double delay, const OracleGrid& grid);

struct ReflectedPath {
  std::vector<double> y;  // nodes 0..N
  std::vector<double> k;  // cumulative, k[0] = 0
};

// y_k = max(y_{k+1} + dt f(y_{k+1}), S(t_k)), k < N; y_N = xi.
ReflectedPath reflected_dp(const LinearDriver& f, double xi,
                           const std::function<double(double)>& barrier, const OracleGrid& grid);

// Single atom (size a, rate lambda), xi = Y^(1)_T, f = g = 0:
// Y_t = Y^(1)_t and Z^(1) = 1/c_{1,1} = |a| sqrt(lambda).
struct MartingaleReference {
  double z1 = 0.0;
  double drift = 0.0;
  double size = 1.0;
  double rate = 1.0;
  double y(double t, double levy_value) const;
};
MartingaleReference closed_form_martingale(double drift, double size, double rate);

}  // namespace abdsde::oracles
