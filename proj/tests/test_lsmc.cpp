#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "abdsde/error.hpp"
#include "abdsde/lsmc.hpp"

using namespace abdsde;

namespace {

std::vector<double> uniform_states(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST_CASE("constant targets are reproduced") {
  const auto x = uniform_states(200, 1);
  const std::vector<double> y(200, 7.0);
  const auto f = regress(x, y, {2, false});
  for (double s : {-2.0, 0.0, 1.5, 3.0}) CHECK(f(s) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("affine targets are interpolated exactly") {
  const auto x = uniform_states(500, 2);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 * x[i] + 1.0;
  for (int degree : {1, 2, 3}) {
    const auto f = regress(x, y, {degree, false});
    const auto c = f.monomial_coefficients();
    CHECK(std::abs(c(0) - 1.0) < 1e-10);
    CHECK(std::abs(c(1) - 2.0) < 1e-10);
    for (int m = 2; m <= degree; ++m) CHECK(std::abs(c(m)) < 1e-10);
  }
}

TEST_CASE("noisy quadratic curvature is within three standard errors") {
  const std::size_t n = 10000;
  const auto x = uniform_states(n, 3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * x[i] + noise(rng);
  const auto f = regress(x, y, {2, false});
  Eigen::MatrixXd design(n, 3);
  for (std::size_t i = 0; i < n; ++i) design.row(i) << 1.0, x[i], x[i] * x[i];
  const Eigen::MatrixXd cov = 0.25 * (design.transpose() * design).inverse();
  const double se = std::sqrt(cov(2, 2));
  CHECK(std::abs(f.monomial_coefficients()(2) - 1.0) < 3.0 * se);
}

TEST_CASE("states without spread fall back to the mean") {
  const std::vector<double> x(10, 4.0);
  std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto f = regress(x, y, {2, false});
  CHECK(f.degree == 0);
  CHECK(f(4.0) == doctest::Approx(5.5));
  Regressor r(x, {2, false});
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(10, 0.1);
  CHECK((r.project(constant).array() == 0.1).all());
}

TEST_CASE("jump-count buckets absorb count effects") {
  const std::size_t n = 300;
  const auto x = uniform_states(n, 5);
  std::vector<std::size_t> counts(n);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    counts[i] = i % 5;
    const double bump = counts[i] == 0 ? 0.0 : counts[i] == 1 ? 1.0 : counts[i] == 2 ? -2.0 : 4.0;
    y(i) = 0.5 * x[i] + bump;
  }
  Regressor r(x, {1, true}, counts);
  CHECK(r.columns() == 5);
  const auto fitted = r.project(y);
  CHECK((fitted - y).cwiseAbs().maxCoeff() < 1e-10);
  const auto f = r.fit(y);
  CHECK(f(1.0, 4) == doctest::Approx(4.5));
}

TEST_CASE("regression errors") {
  const std::vector<double> x{1.0, 2.0};
  CHECK_THROWS_AS(regress(x, std::vector<double>{1.0}, {1, false}), Error);
  CHECK_THROWS_AS(regress(x, std::vector<double>{1.0, 2.0}, {3, false}), Error);
  CHECK_THROWS_AS(regress(std::vector<double>{}, std::vector<double>{}, {1, false}), Error);
  const std::vector<double> bad{1.0, NAN};
  CHECK_THROWS_AS(regress(x, bad, {1, false}), Error);
}

TEST_CASE("conditional expectation on simulated paths") {
  LevySpec spec;
  spec.atoms = {{1.0, 2.0}};
  const TimeGrid grid(1.0, 0.0, 10, 0);
  const std::size_t n = 20000;
  const auto bundle = sample_paths(spec, grid, 2, n, 8);

  SUBCASE("targets in the span are returned unchanged") {
    std::vector<double> targets(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double l = bundle.levy()(bundle.path_index(1, j), 4);
      targets[j] = 3.0 - l + 0.25 * l * l;
    }
    const auto fitted = cond_expect(bundle, 1, 4, targets, {2, false});
    for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(fitted[j] - targets[j]) < 1e-10);
  }

  SUBCASE("martingale plus compensator") {
    std::vector<double> targets(n);
    for (std::size_t j = 0; j < n; ++j) targets[j] = bundle.levy()(bundle.path_index(0, j), 10);
    const auto fitted = cond_expect(bundle, 0, 3, targets, {2, false});
    double squares = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double expected = bundle.levy()(bundle.path_index(0, j), 3) + 2.0 * (1.0 - 0.3);
      squares += (fitted[j] - expected) * (fitted[j] - expected);
    }
    CHECK(std::sqrt(squares / n) < 0.05);
  }

  SUBCASE("constants") {
    const std::vector<double> targets(n, -1.25);
    const auto fitted = cond_expect(bundle, 0, 7, targets, {2, false});
    for (double v : fitted) CHECK(v == doctest::Approx(-1.25).epsilon(1e-12));
  }
}
