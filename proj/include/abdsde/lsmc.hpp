#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "abdsde/levy_paths.hpp"

namespace abdsde {

// Polynomial features of the state L_{t_k} up to `degree`, optionally
// augmented with jump-count bucket indicators {1, 2, >= 3 jumps}.
struct RegressionBasis {
  int degree = 2;
  bool jump_count_features = false;
};

// Least-squares fit sum_m theta_m ((x - center)/scale)^m (+ bucket terms).
struct FittedFunction {
  double center = 0.0;
  double scale = 1.0;
  int degree = 0;  // effective degree (0 when the states carry no spread)
  Eigen::VectorXd theta;
  Eigen::VectorXd bucket_theta;  // empty unless jump-count features were used

  double operator()(double state, std::size_t jump_count = 0) const;
  // Coefficients of 1, x, ..., x^degree in the raw state variable.
  Eigen::VectorXd monomial_coefficients() const;
};

// Design matrix and rank-revealing factorization for one cross-section of
// states. Reused for every target projected at the same (scenario, node).
class Regressor {
 public:
  Regressor(std::span<const double> states, const RegressionBasis& basis,
            std::span<const std::size_t> jump_counts = {});

  std::size_t samples() const noexcept { return static_cast<std::size_t>(design_.rows()); }
  std::size_t columns() const noexcept { return static_cast<std::size_t>(design_.cols()); }
  const Eigen::MatrixXd& design() const noexcept { return design_; }
  Eigen::Index rank() const { return solver_.rank(); }

  Eigen::VectorXd coefficients(const Eigen::VectorXd& targets) const;
  // Fitted values at the sample states, column by column.
  Eigen::MatrixXd project(const Eigen::MatrixXd& targets) const;
  Eigen::VectorXd project(const Eigen::VectorXd& targets) const;
  FittedFunction fit(const Eigen::VectorXd& targets) const;

 private:
  double center_ = 0.0;
  double scale_ = 1.0;
  int degree_ = 0;
  bool buckets_ = false;
  Eigen::MatrixXd design_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver_;
};

FittedFunction regress(std::span<const double> states, std::span<const double> targets,
                       const RegressionBasis& basis);

// E[targets | L_{t_k}] within one Brownian scenario; targets are indexed by
// the scenario's Levy paths.
std::vector<double> cond_expect(const PathBundle& bundle, std::size_t scenario, std::size_t node,
                                std::span<const double> targets, const RegressionBasis& basis);

// Builds the regressor on L_{t_k} for one scenario.
Regressor scenario_regressor(const PathBundle& bundle, std::size_t scenario, std::size_t node,
                             const RegressionBasis& basis);

}  // namespace abdsde
