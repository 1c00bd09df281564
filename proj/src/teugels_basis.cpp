#include "abdsde/teugels_basis.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "abdsde/error.hpp"
#include "abdsde/parallel.hpp"

namespace abdsde {

namespace {

constexpr double kMaxGramCondition = 1e12;

}  // namespace

double TeugelsBasis::polynomial(std::size_t i, double x) const {
  double value = 0.0;
  double power = 1.0;
  for (std::size_t k = 1; k <= i; ++k) {
    value += coefficient(i, k) * power;
    power *= x;
  }
  return value;
}

std::size_t max_order(const LevySpec& spec) {
  std::size_t order = spec.sigma > 0.0 ? 1 : 0;
  for (const auto& atom : spec.atoms)
    if (atom.intensity > 0.0) ++order;
  return order;
}

TeugelsBasis build_basis(const LevySpec& spec, std::size_t order) {
  spec.validate();
  const std::size_t dimension = max_order(spec);
  if (order < 1)
    fail_validation("basis order must be >= 1 (use TeugelsBasis::trivial for jump-free drivers)");
  if (order > dimension) {
    std::ostringstream msg;
    msg << "singular Gram matrix: order " << order << " exceeds dim L^2(mu) = " << dimension
        << " (atoms with positive intensity" << (spec.sigma > 0.0 ? " plus the sigma atom" : "")
        << ")";
    fail_numerical(msg.str());
  }

  TeugelsBasis basis;
  basis.order = order;
  basis.moments.resize(2 * order + 1);
  for (std::size_t k = 0; k <= 2 * order; ++k) basis.moments[k] = spec.jump_moment(static_cast<int>(k));

  const auto n = static_cast<Eigen::Index>(order);
  basis.gram.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      basis.gram(i, j) = basis.moments[static_cast<std::size_t>(i + j + 2)];
  basis.gram(0, 0) += spec.sigma * spec.sigma;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(basis.gram, Eigen::EigenvaluesOnly);
  const double smallest = eigen.eigenvalues().minCoeff();
  const double largest = eigen.eigenvalues().maxCoeff();
  if (!(smallest > 0.0)) fail_numerical("Gram matrix is not positive definite");
  if (largest / smallest > kMaxGramCondition) {
    std::ostringstream msg;
    msg << "ill-conditioned Gram matrix: condition number " << largest / smallest << " > "
        << kMaxGramCondition;
    fail_numerical(msg.str());
  }

  Eigen::LLT<Eigen::MatrixXd> cholesky(basis.gram);
  if (cholesky.info() != Eigen::Success) fail_numerical("Cholesky factorization of Gram failed");
  Eigen::MatrixXd lower = cholesky.matrixL();
  basis.coeffs = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  basis.coeffs.triangularView<Eigen::StrictlyUpper>().setZero();
  return basis;
}

PathBundle teugels_increments(PathBundle bundle, const LevySpec& spec, const TeugelsBasis& basis,
                              std::size_t threads) {
  const std::size_t order = basis.order;
  if (static_cast<std::size_t>(basis.coeffs.rows()) != order)
    fail_dimension("Teugels basis coefficient matrix does not match its order");
  const auto& grid = bundle.grid();
  const std::size_t steps = grid.node_count() - 1;
  const auto rows = static_cast<Eigen::Index>(bundle.total_paths());

  std::vector<double> rates(order);
  for (std::size_t m = 0; m < order; ++m) rates[m] = spec.mean_rate(static_cast<int>(m + 1));

  std::vector<PathMatrix> increments(order, PathMatrix::Zero(rows, static_cast<Eigen::Index>(steps)));
  parallel_for(bundle.total_paths(), threads, [&](std::size_t path) {
    const auto& events = bundle.jumps(path);
    std::vector<double> compensated(order);
    std::size_t next = 0;
    for (std::size_t k = 0; k < steps; ++k) {
      const double dt = grid.step(k);
      for (std::size_t m = 0; m < order; ++m) compensated[m] = -dt * rates[m];
      if (order > 0) compensated[0] += spec.drift * dt;
      while (next < events.size() && events[next].time <= grid.time(k + 1)) {
        double power = 1.0;
        for (std::size_t m = 0; m < order; ++m) {
          power *= events[next].size;
          compensated[m] += power;
        }
        ++next;
      }
      for (std::size_t i = 0; i < order; ++i) {
        double dh = 0.0;
        for (std::size_t m = 0; m <= i; ++m)
          dh += basis.coeffs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) *
                compensated[m];
        increments[i](static_cast<Eigen::Index>(path), static_cast<Eigen::Index>(k)) = dh;
      }
    }
  });
  bundle.assign_teugels_increments(std::move(increments));
  return bundle;
}

void write_basis_csv(const TeugelsBasis& basis, std::ostream& out) {
  const auto precision = out.precision(17);
  out << "table,i,j,value\n";
  for (std::size_t k = 2; k < basis.moments.size(); ++k)
    out << "moment," << k << ",0," << basis.moments[k] << '\n';
  for (Eigen::Index i = 0; i < basis.gram.rows(); ++i)
    for (Eigen::Index j = 0; j < basis.gram.cols(); ++j)
      out << "gram," << i + 1 << ',' << j + 1 << ',' << basis.gram(i, j) << '\n';
  for (Eigen::Index i = 0; i < basis.coeffs.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      out << "coeff," << i + 1 << ',' << j + 1 << ',' << basis.coeffs(i, j) << '\n';
  out.precision(precision);
}

}  // namespace abdsde
