#include "abdsde/lsmc.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "abdsde/error.hpp"

namespace abdsde {

namespace {

constexpr double kRankThreshold = 1e-11;
constexpr int kBuckets = 3;

Eigen::VectorXd to_vector(std::span<const double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  return v;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

double FittedFunction::operator()(double state, std::size_t jump_count) const {
  const double u = (state - center) / scale;
  double value = 0.0;
  double power = 1.0;
  for (int m = 0; m <= degree; ++m) {
    value += theta(m) * power;
    power *= u;
  }
  if (bucket_theta.size() > 0 && jump_count >= 1) {
    const auto bucket = static_cast<Eigen::Index>(std::min<std::size_t>(jump_count, kBuckets) - 1);
    value += bucket_theta(bucket);
  }
  return value;
}

Eigen::VectorXd FittedFunction::monomial_coefficients() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(degree + 1);
  for (int m = 0; m <= degree; ++m) {
    const double scaled = theta(m) / std::pow(scale, m);
    for (int k = 0; k <= m; ++k)
      out(k) += scaled * binomial(m, k) * std::pow(-center, m - k);
  }
  return out;
}

Regressor::Regressor(std::span<const double> states, const RegressionBasis& basis,
                     std::span<const std::size_t> jump_counts)
    : buckets_(basis.jump_count_features) {
  const std::size_t n = states.size();
  if (n == 0) fail_numerical("regression failure: no samples");
  if (basis.degree < 0) fail_validation("regression degree must be >= 0");
  if (buckets_ && jump_counts.size() != n)
    fail_dimension("jump-count features need one count per sample");

  double sum = 0.0;
  for (double x : states) {
    if (!std::isfinite(x)) fail_numerical("regression failure: non-finite state");
    sum += x;
  }
  center_ = sum / static_cast<double>(n);
  double squares = 0.0;
  for (double x : states) squares += (x - center_) * (x - center_);
  const double spread = std::sqrt(squares / static_cast<double>(n));
  if (spread > 1e-13 * std::max(1.0, std::abs(center_))) {
    scale_ = spread;
    degree_ = basis.degree;
  } else {
    scale_ = 1.0;
    degree_ = 0;
  }

  const Eigen::Index cols = degree_ + 1 + (buckets_ ? kBuckets : 0);
  if (static_cast<Eigen::Index>(n) < cols) {
    fail_numerical("regression failure: " + std::to_string(n) + " samples for " +
                   std::to_string(cols) + " basis functions");
  }
  design_.resize(static_cast<Eigen::Index>(n), cols);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double u = (states[i] - center_) / scale_;
    double power = 1.0;
    for (int m = 0; m <= degree_; ++m) {
      design_(row, m) = power;
      power *= u;
    }
    if (buckets_) {
      for (int b = 0; b < kBuckets; ++b) design_(row, degree_ + 1 + b) = 0.0;
      if (jump_counts[i] >= 1) {
        const auto bucket = std::min<std::size_t>(jump_counts[i], kBuckets) - 1;
        design_(row, degree_ + 1 + static_cast<Eigen::Index>(bucket)) = 1.0;
      }
    }
  }
  solver_.setThreshold(kRankThreshold);
  solver_.compute(design_);
  if (solver_.rank() == 0) fail_numerical("regression failure: design matrix has rank 0");
}

Eigen::VectorXd Regressor::coefficients(const Eigen::VectorXd& targets) const {
  if (targets.size() != design_.rows()) fail_dimension("regression targets/states length mismatch");
  if (!targets.allFinite()) fail_numerical("regression failure: non-finite target");
  return solver_.solve(targets);
}

Eigen::MatrixXd Regressor::project(const Eigen::MatrixXd& targets) const {
  if (targets.rows() != design_.rows()) fail_dimension("regression targets/states length mismatch");
  if (!targets.allFinite()) fail_numerical("regression failure: non-finite target");
  // Constants are in the span; return them bit-exact.
  Eigen::MatrixXd out(targets.rows(), targets.cols());
  std::vector<Eigen::Index> varying;
  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    const auto column = targets.col(c);
    if ((column.array() == column(0)).all()) {
      out.col(c).setConstant(column(0));
    } else if (design_.cols() == 1) {
      out.col(c).setConstant(column.mean());
    } else {
      varying.push_back(c);
    }
  }
  if (varying.empty()) return out;
  Eigen::MatrixXd sub(targets.rows(), static_cast<Eigen::Index>(varying.size()));
  for (std::size_t i = 0; i < varying.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = targets.col(varying[i]);
  const Eigen::MatrixXd fitted = design_ * solver_.solve(sub);
  for (std::size_t i = 0; i < varying.size(); ++i) out.col(varying[i]) = fitted.col(static_cast<Eigen::Index>(i));
  return out;
}

Eigen::VectorXd Regressor::project(const Eigen::VectorXd& targets) const {
  Eigen::MatrixXd as_matrix = targets;
  return project(as_matrix).col(0);
}

FittedFunction Regressor::fit(const Eigen::VectorXd& targets) const {
  const Eigen::VectorXd all = coefficients(targets);
  FittedFunction f;
  f.center = center_;
  f.scale = scale_;
  f.degree = degree_;
  f.theta = all.head(degree_ + 1);
  if (buckets_) f.bucket_theta = all.tail(kBuckets);
  return f;
}

FittedFunction regress(std::span<const double> states, std::span<const double> targets,
                       const RegressionBasis& basis) {
  if (states.size() != targets.size()) fail_dimension("regression targets/states length mismatch");
  if (basis.jump_count_features)
    fail_validation("jump-count features need jump counts; use Regressor directly");
  Regressor regressor(states, basis);
  return regressor.fit(to_vector(targets));
}

Regressor scenario_regressor(const PathBundle& bundle, std::size_t scenario, std::size_t node,
                             const RegressionBasis& basis) {
  if (scenario >= bundle.scenarios()) fail_dimension("scenario index out of range");
  if (node >= bundle.grid().node_count()) fail_dimension("node index out of range");
  const std::size_t n = bundle.paths_per_scenario();
  const std::size_t first = bundle.path_index(scenario, 0);
  std::vector<double> states(n);
  std::vector<std::size_t> counts;
  const auto col = static_cast<Eigen::Index>(node);
  for (std::size_t j = 0; j < n; ++j)
    states[j] = bundle.levy()(static_cast<Eigen::Index>(first + j), col);
  if (basis.jump_count_features) {
    counts.resize(n);
    for (std::size_t j = 0; j < n; ++j) counts[j] = bundle.jump_count(first + j, node);
  }
  return Regressor(states, basis, counts);
}

std::vector<double> cond_expect(const PathBundle& bundle, std::size_t scenario, std::size_t node,
                                std::span<const double> targets, const RegressionBasis& basis) {
  if (targets.size() != bundle.paths_per_scenario())
    fail_dimension("targets must be indexed by the scenario's Levy paths");
  const Regressor regressor = scenario_regressor(bundle, scenario, node, basis);
  const Eigen::VectorXd fitted = regressor.project(to_vector(targets));
  return {fitted.data(), fitted.data() + fitted.size()};
}

}  // namespace abdsde
