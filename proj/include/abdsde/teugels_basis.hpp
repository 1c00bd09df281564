#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "abdsde/levy_paths.hpp"

namespace abdsde {

// Orthonormalization of 1, x, x^2, ... in L^2(mu), mu(dx) = x^2 nu(dx) + sigma^2 delta_0(dx).
// Row i-1 of `coeffs` holds the monomial coefficients of the i-th orthonormal
// polynomial, so H^(i) = sum_k coeffs(i-1, k-1) Y^(k).
struct TeugelsBasis {
  std::size_t order = 0;
  // moments[k] = int x^k nu(dx) for k = 0 .. 2*order (entries below 2 are unused by mu).
  std::vector<double> moments;
  Eigen::MatrixXd gram;
  Eigen::MatrixXd coeffs;

  // Basis of a measure with no jumps: order 0, no martingales.
  static TeugelsBasis trivial() { return {}; }

  double coefficient(std::size_t i, std::size_t k) const {
    return coeffs(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(k - 1));
  }
  // q_{i-1}(x) for 1 <= i <= order.
  double polynomial(std::size_t i, double x) const;
};

// Dimension of L^2(mu): number of atoms with positive intensity, plus one when sigma > 0.
std::size_t max_order(const LevySpec& spec);

TeugelsBasis build_basis(const LevySpec& spec, std::size_t order);

// Copy of `bundle` with dH^(i), i <= basis.order, filled from exact jump lists.
PathBundle teugels_increments(PathBundle bundle, const LevySpec& spec, const TeugelsBasis& basis,
                              std::size_t threads = 1);

// CSV with columns table,i,j,value for the moment, gram and coeffs tables.
void write_basis_csv(const TeugelsBasis& basis, std::ostream& out);

}  // namespace abdsde
