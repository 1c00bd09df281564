#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "abdsde/error.hpp"
#include "abdsde/teugels_basis.hpp"

using namespace abdsde;

namespace {

LevySpec atoms(std::vector<JumpAtom> a, double sigma = 0.0) {
  LevySpec s;
  s.atoms = std::move(a);
  s.sigma = sigma;
  return s;
}

double orthonormality_defect(const TeugelsBasis& b) {
  const Eigen::MatrixXd id = b.coeffs * b.gram * b.coeffs.transpose();
  return (id - Eigen::MatrixXd::Identity(id.rows(), id.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("max_order") {
  CHECK(max_order(atoms({{1, 1}})) == 1);
  CHECK(max_order(atoms({{1, 1}, {-1, 1}})) == 2);
  CHECK(max_order(atoms({{1, 1}}, 0.5)) == 2);
  CHECK(max_order(atoms({{1, 1}, {2, 0}})) == 1);
}

TEST_CASE("single unit atom") {
  const auto b = build_basis(atoms({{1, 1}}), 1);
  CHECK(b.gram(0, 0) == doctest::Approx(1.0));
  CHECK(b.coefficient(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("single atom of rate lambda") {
  for (double lambda : {0.25, 1.0, 4.0, 9.0}) {
    const auto b = build_basis(atoms({{1, lambda}}), 1);
    CHECK(b.coefficient(1, 1) == doctest::Approx(1.0 / std::sqrt(lambda)));
    CHECK(orthonormality_defect(b) < 1e-10);
  }
}

TEST_CASE("symmetric two-atom measure") {
  const auto b = build_basis(atoms({{1, 1}, {-1, 1}}), 2);
  CHECK(b.gram(0, 0) == doctest::Approx(2.0));
  CHECK(b.gram(0, 1) == doctest::Approx(0.0));
  CHECK(b.gram(1, 1) == doctest::Approx(2.0));
  CHECK(b.coefficient(1, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(b.coefficient(2, 1)) < 1e-14);
  CHECK(b.coefficient(2, 2) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(orthonormality_defect(b) < 1e-10);
}

TEST_CASE("orthonormality of the polynomials under mu") {
  const auto spec = atoms({{0.5, 2.0}, {-1.0, 1.0}, {2.0, 0.5}}, 0.3);
  const auto b = build_basis(spec, 4);
  CHECK(orthonormality_defect(b) < 1e-10);
  // <q_i, q_j>_mu evaluated directly on the atoms of mu
  for (std::size_t i = 1; i <= 4; ++i)
    for (std::size_t j = 1; j <= 4; ++j) {
      double inner = spec.sigma * spec.sigma * b.polynomial(i, 0.0) * b.polynomial(j, 0.0);
      for (const auto& a : spec.atoms)
        inner += a.intensity * a.size * a.size * b.polynomial(i, a.size) * b.polynomial(j, a.size);
      CHECK(inner == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("order beyond the measure dimension is rejected") {
  CHECK_THROWS_AS(build_basis(atoms({{1, 1}}), 2), Error);
  CHECK_THROWS_AS(build_basis(atoms({{1, 1}}), 0), Error);
}

TEST_CASE("normalized Poisson increments") {
  const double lambda = 2.0;
  const auto spec = atoms({{1, lambda}});
  const TimeGrid grid(1.0, 0.0, 10, 0);
  const auto basis = build_basis(spec, 1);
  const std::size_t n = 100000;
  auto bundle = teugels_increments(sample_paths(spec, grid, 1, n, 17), spec, basis);
  const auto& dh = bundle.teugels_increment(1);
  const auto y1 = compensate(bundle, spec, 1);
  for (std::size_t p = 0; p < 20; ++p)
    for (std::size_t k = 0; k < 10; ++k)
      CHECK(dh(p, k) == doctest::Approx((y1(p, k + 1) - y1(p, k)) / std::sqrt(lambda)));
  const Eigen::VectorXd h_t = dh.rowwise().sum();
  const double mean = h_t.mean();
  const double var = (h_t.array() - mean).square().sum() / (n - 1.0);
  // Var of the sample variance for H_1 (kurtosis 3 + 1/lambda)
  const double se = std::sqrt((2.0 + 1.0 / lambda) / static_cast<double>(n));
  CHECK(std::abs(var - 1.0) < 3.0 * se);
}

TEST_CASE("unit atom gives compensated increments of L") {
  const auto spec = atoms({{1, 1}});
  const TimeGrid grid(1.0, 0.0, 5, 0);
  auto bundle = teugels_increments(sample_paths(spec, grid, 1, 100, 2), spec, build_basis(spec, 1));
  for (std::size_t p = 0; p < 100; ++p)
    for (std::size_t k = 0; k < 5; ++k)
      CHECK(bundle.teugels_increment(1)(p, k) ==
            doctest::Approx(bundle.levy()(p, k + 1) - bundle.levy()(p, k) - 0.2));
}

TEST_CASE("two-atom increments are uncorrelated") {
  const auto spec = atoms({{1, 1}, {-1, 1}});
  const TimeGrid grid(1.0, 0.0, 4, 0);
  const std::size_t n = 100000;
  auto bundle = teugels_increments(sample_paths(spec, grid, 1, n, 23), spec, build_basis(spec, 2));
  const auto& a = bundle.teugels_increment(1);
  const auto& b = bundle.teugels_increment(2);
  const Eigen::ArrayXd prod = (a.col(0).array() * b.col(0).array());
  const double mean = prod.mean();
  const double se = std::sqrt((prod - mean).square().sum() / (n - 1.0) / n);
  CHECK(std::abs(mean) < 4.0 * se);
}
