#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "abdsde/error.hpp"
#include "abdsde/problem.hpp"

using namespace abdsde;

namespace {

std::string assumption_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.assumption();
  }
  return "<none>";
}

GeneratorSpec affine(double y, double z, double pi, double zeta, double c) {
  GeneratorSpec g;
  g.family = pi != 0.0 || zeta != 0.0 ? GeneratorFamily::AnticipatedAffine : GeneratorFamily::Affine;
  g.params.y = y;
  g.params.z = z;
  g.params.pi = pi;
  g.params.zeta = zeta;
  g.lipschitz_c = c;
  return g;
}

}  // namespace

TEST_CASE("delay change-of-variables constants") {
  CHECK(validate_delays(DelaySpec::constant(0.25), DelaySpec::none(), 1.0, 0.25) == 1.0);
  CHECK(validate_delays(DelaySpec::affine(0.5, 0.1), DelaySpec::none(), 1.0, 0.1) ==
        doctest::Approx(2.0));
  CHECK(validate_delays(DelaySpec::none(), DelaySpec::affine(0.75, 0.2), 1.0, 0.2) ==
        doctest::Approx(4.0));
  CHECK(validate_delays(DelaySpec::none(), DelaySpec::none(), 1.0, 0.0) == 0.0);
}

TEST_CASE("delay past the extension violates (A)") {
  CHECK(assumption_of([] { validate_delays(DelaySpec::constant(0.5), DelaySpec::none(), 1.0, 0.25); }) ==
        "(A)");
  CHECK_THROWS_AS(validate_delays(DelaySpec::affine(1.0, 0.1), DelaySpec::none(), 1.0, 2.0), Error);
  CHECK_THROWS_AS(validate_delays(DelaySpec::constant(0.0), DelaySpec::none(), 1.0, 1.0), Error);
}

TEST_CASE("contraction constants") {
  GeneratorSpec zero;
  SUBCASE("c = 0 collapses to the z part") {
    GeneratorSpec g;
    g.alpha1 = 0.2;
    g.alpha2 = 0.1;
    const auto k = contraction_constants(zero, g, 1.0);
    CHECK(k.c_hat == doctest::Approx(0.3));
    CHECK(k.feasible);
    CHECK(std::isfinite(k.beta));
  }
  SUBCASE("small c with constant g") {
    GeneratorSpec f;
    f.lipschitz_c = 0.01;
    const auto k = contraction_constants(f, zero, 1.0);
    CHECK(k.feasible);
    CHECK(k.c_hat < 1.0);
    CHECK(k.c_hat > 0.01);
    CHECK(k.beta == doctest::Approx(k.eps0 + k.eps2));
  }
  SUBCASE("infeasible") {
    GeneratorSpec g;
    g.lipschitz_c = 1.0;
    g.alpha1 = 0.4;
    g.alpha2 = 0.05;
    const auto k = contraction_constants(zero, g, 1.0);
    CHECK_FALSE(k.feasible);
    CHECK(k.c_hat >= 1.0);
  }
  SUBCASE("feasible reference configuration") {
    GeneratorSpec f;
    f.lipschitz_c = 0.1;
    GeneratorSpec g;
    g.lipschitz_c = 0.1;
    g.alpha1 = 0.1;
    g.alpha2 = 0.1;
    const auto k = contraction_constants(f, g, 1.0);
    CHECK(k.feasible);
    CHECK(k.c_hat < 1.0);
    // c_hat = A + c/eps0 + cM with c/eps0 = slack/2
    CHECK(k.c_hat == doctest::Approx(0.2 + 0.35 + 0.1));
  }
}

TEST_CASE("generator Lipschitz declarations") {
  CHECK_NOTHROW(validate_driver_f(affine(0.3, 0.0, 0.0, 0.0, 0.09)));
  CHECK(assumption_of([] { validate_driver_f(affine(0.5, 0.0, 0.0, 0.0, 0.1)); }) == "(H1.1)(i)");
  GeneratorSpec g = affine(0.0, 0.2, 0.0, 0.0, 0.0);
  g.alpha1 = 0.04;
  CHECK_NOTHROW(validate_driver_g(g, 1.0));
  g.alpha1 = 0.03;
  CHECK(assumption_of([&] { validate_driver_g(g, 1.0); }) == "(H1.1)(ii)");
  GeneratorSpec wide;
  wide.alpha1 = 0.3;
  wide.alpha2 = 0.3;
  CHECK(assumption_of([&] { validate_driver_g(wide, 1.0); }) == "(H1.1)(ii)");
  wide.alpha1 = 0.6;
  wide.alpha2 = 0.0;
  CHECK_THROWS_AS(validate_driver_g(wide, 1.0), Error);
}

TEST_CASE("declared constants dominate random pairs") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::vector<GeneratorSpec> fs;
  {
    auto f = affine(0.2, 0.1, 0.15, 0.05, 0.0);
    f.lipschitz_c = 0.2 * 0.2 + 0.1 * 0.1 + 0.15 * 0.15 + 0.05 * 0.05;
    fs.push_back(f);
    f.family = GeneratorFamily::Clamped;
    fs.push_back(f);
  }
  GeneratorSpec g = affine(0.1, 0.2, 0.1, 0.1, 0.05);
  g.alpha1 = 0.1;
  g.alpha2 = 0.1;
  REQUIRE_NOTHROW(validate_driver_g(g, 1.0));
  for (const auto& f : fs) REQUIRE_NOTHROW(validate_driver_f(f));

  for (int trial = 0; trial < 1000; ++trial) {
    std::array<double, 1> z1{normal(rng)}, z2{normal(rng)}, w1{normal(rng)}, w2{normal(rng)};
    const GeneratorArgs a{normal(rng), z1, normal(rng), w1};
    const GeneratorArgs b{normal(rng), z2, normal(rng), w2};
    const double dy = a.y - b.y, dz = z1[0] - z2[0], dpi = a.pi - b.pi, dzeta = w1[0] - w2[0];
    const double sq = dy * dy + dz * dz + dpi * dpi + dzeta * dzeta;
    for (const auto& f : fs) {
      const double df = evaluate(f, a) - evaluate(f, b);
      CHECK(df * df <= f.lipschitz_c * sq * (1.0 + 1e-12) + 1e-300);
    }
    const double dg = evaluate(g, a) - evaluate(g, b);
    const double bound = g.lipschitz_c * (dy * dy + dpi * dpi) + g.alpha1 * dz * dz + g.alpha2 * dzeta * dzeta;
    CHECK(dg * dg <= bound * (1.0 + 1e-12) + 1e-300);
  }
}

TEST_CASE("problem registry") {
  ProblemSpec spec;
  spec.horizon = 1.0;
  spec.boundary.xi.a = 1.0;
  const TimeGrid grid(1.0, 0.0, 10, 0);
  CHECK_NOTHROW(validate_problem(spec, grid));

  SUBCASE("anticipation needs a declared delay") {
    spec.f = affine(0.0, 0.0, 1.0, 0.0, 1.0);
    CHECK(assumption_of([&] { validate_problem(spec, grid); }) == "(A)");
  }
  SUBCASE("eta must match xi") {
    spec.boundary.eta = {ExtensionFamily::Constant, 2.0, 0.0};
    CHECK(assumption_of([&] { validate_problem(spec, grid); }) == "eta_T = xi");
  }
  SUBCASE("random xi needs hold_terminal") {
    spec.boundary.xi = {TerminalFamily::LinearLevy, 0.0, 1.0};
    spec.boundary.eta = {ExtensionFamily::Constant, 0.0, 0.0};
    CHECK_THROWS_AS(validate_problem(spec, grid), Error);
  }
  SUBCASE("barrier above eta on the extension") {
    spec.extension = 0.5;
    spec.boundary.barrier = {BarrierFamily::Constant, 2.0, 0.0};
    CHECK(assumption_of([&] { validate_problem(spec, TimeGrid(1.0, 0.5, 10, 5)); }) == "(H2.2)");
  }
  SUBCASE("barrier above xi at T alone is allowed") {
    spec.boundary.barrier = {BarrierFamily::Constant, 2.0, 0.0};
    CHECK_NOTHROW(validate_problem(spec, grid));
  }
  SUBCASE("coarse snapping warns") {
    spec.extension = 0.9;
    spec.phi = DelaySpec::constant(0.9);
    spec.f = affine(0.0, 0.0, 1.0, 0.0, 1.0);
    spec.boundary.eta = {ExtensionFamily::Constant, 1.0, 0.0};
    const auto v = validate_problem(spec, TimeGrid(1.0, 0.9, 10, 1));
    CHECK_FALSE(v.warnings.empty());
  }
  SUBCASE("grid must match") {
    CHECK_THROWS_AS(validate_problem(spec, TimeGrid(2.0, 0.0, 10, 0)), Error);
  }
}

TEST_CASE("boundary data values") {
  LevySpec levy;
  levy.drift = 0.5;
  levy.atoms = {{1.0, 2.0}};
  CHECK(terminal_value({TerminalFamily::Constant, 3.0, 0.0}, levy, 1.0, 7.0) == 3.0);
  CHECK(terminal_value({TerminalFamily::LinearLevy, 1.0, 2.0}, levy, 1.0, 7.0) == 15.0);
  CHECK(terminal_value({TerminalFamily::LinearCompensated, 0.0, 1.0}, levy, 2.0, 7.0) ==
        doctest::Approx(7.0 - 2.0 * 2.5));
  CHECK(extension_value({ExtensionFamily::AffineTime, 1.0, 2.0}, 0.0, 1.5, 1.0) == 2.0);
  CHECK(extension_value({ExtensionFamily::HoldTerminal, 0.0, 0.0}, 4.0, 1.5, 1.0) == 4.0);
  CHECK(std::isinf(barrier_value({}, 0.0, 0.0)));
  CHECK(barrier_value({BarrierFamily::AffineLevy, 1.0, -1.0}, 0.3, 2.0) == -1.0);
}
