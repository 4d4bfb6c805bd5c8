#include "doctest.h"

#include <cmath>

#include "aps/cocycle.hpp"
#include "aps/fixtures.hpp"

using namespace aps;
using namespace aps::cocycle;

namespace {
const double kLambda13 = 0.5 * (1.0 + std::sqrt(13.0));

double lowdisc(int k, double lo, double hi) { return lo + (hi - lo) * kronecker1(k); }
}  // namespace

TEST_CASE("torus_norm") {
  CHECK(torus_norm(0.75) == doctest::Approx(0.25));
  CHECK(torus_norm(2.5) == doctest::Approx(0.5));
  CHECK(torus_norm(-0.1) == doctest::Approx(0.1));
  CHECK(torus_norm(3.0) == 0.0);
}

TEST_CASE("structure_factor basics") {
  const auto np13 = fixtures::get("np13");
  const auto first = tiling::supertile(np13, 0, 1);

  // Phi_b(zeta(a), w) = e[w lambda](1 + e[w] + e[2w])
  for (double w : {0.31, 0.5, 1.7}) {
    const auto got = structure_factor(np13, first, 1, Vec{w});
    const auto expect =
        unit_phase(w * kLambda13) * (1.0 + unit_phase(w) + unit_phase(2.0 * w));
    CHECK(std::abs(got - expect) < 1e-12);
  }
  CHECK(std::abs(structure_factor(np13, first, 1, Vec{0.5})) == doctest::Approx(1.0));

  // at omega = 0 the factor counts tiles
  CHECK(structure_factor(np13, first, 1, Vec{0.0}).real() == doctest::Approx(3.0));
  CHECK(structure_factor(np13, first, 0, Vec{0.0}).real() == doctest::Approx(1.0));

  // modulus invariance under patch translation
  for (int k = 0; k < 20; ++k) {
    const double shift = lowdisc(k, -7.0, 7.0);
    tiling::Patch moved = first;
    for (auto& t : moved.tiles) t.translation = t.translation + Vec{shift};
    const double a = std::abs(structure_factor(np13, first, 1, Vec{0.37}));
    const double b = std::abs(structure_factor(np13, moved, 1, Vec{0.37}));
    CHECK(std::abs(a - b) < 1e-10);
  }
}

TEST_CASE("step_matrix") {
  const auto np13 = fixtures::get("np13");
  const auto sT = tiling::substitution_matrix(np13).transpose();

  // omega = 0 reproduces S^T exactly
  const auto step0 = step_matrix(np13, 0, Vec{0.0});
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) {
      CHECK(step0.matrix.at(j, k).real() == sT.at(j, k).get_d());
      CHECK(step0.matrix.at(j, k).imag() == 0.0);
    }

  // entry (a, b) at omega = 1/2: e[lambda/2](1 + e[1/2] + e[1]) = e[lambda/2]
  const auto stepHalf = step_matrix(np13, 0, Vec{0.5});
  CHECK(std::abs(stepHalf.matrix.at(0, 1) - unit_phase(0.5 * kLambda13)) < 1e-12);

  // entrywise |entry| <= S^T over sampled omega and levels
  for (int k = 0; k < 40; ++k) {
    const Vec omega{lowdisc(k, -5.0, 5.0)};
    const int q = k % 5;
    const auto step = step_matrix(np13, q, omega);
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i)
        CHECK(std::abs(step.matrix.at(j, i)) <= sT.at(j, i).get_d() + 1e-12);
  }
}

TEST_CASE("cocycle_product: identity, integers at zero, structure-factor cross-check") {
  const auto np13 = fixtures::get("np13");
  const auto id = cocycle_product(np13, 0, Vec{0.62});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(id.matrix.at(i, j) == std::complex<double>(i == j ? 1.0 : 0.0));

  const auto p2 = cocycle_product(np13, 2, Vec{0.0});
  CHECK(p2.matrix.at(0, 0).real() == 4.0);
  CHECK(p2.matrix.at(0, 1).real() == 3.0);
  CHECK(p2.matrix.at(1, 0).real() == 1.0);
  CHECK(p2.matrix.at(1, 1).real() == 3.0);

  // Pi_n(0) = (S^n)^T exactly for n <= 8, all fixtures
  for (const std::string& name : fixtures::names()) {
    const auto rule = fixtures::get(name);
    const auto s = tiling::substitution_matrix(rule);
    auto power = algebraic::IntMatrix::identity(s.rows());
    for (int n = 0; n <= 8; ++n) {
      const auto prod = cocycle_product(rule, n, Vec{});
      for (int i = 0; i < s.rows(); ++i)
        for (int j = 0; j < s.cols(); ++j) {
          CHECK(prod.matrix.at(i, j).real() == power.at(j, i).get_d());
          CHECK(prod.matrix.at(i, j).imag() == 0.0);
        }
      power = power.mul(s);
    }
  }

  // Pi_3(0.3) against the brute-force structure factor on the 19-tile supertile
  const auto p3 = cocycle_product(np13, 3, Vec{0.3});
  for (int k = 0; k < 2; ++k) {
    const auto sup = tiling::supertile(np13, k, 3);
    for (int i = 0; i < 2; ++i) {
      const auto direct = structure_factor(np13, sup, i, Vec{0.3});
      CHECK(std::abs(p3.matrix.at(k, i) - direct) <= 1e-9);
    }
  }
}

TEST_CASE("mass_constant") {
  const auto np13 = fixtures::get("np13");
  CHECK_THROWS_AS(mass_constant(np13), PreconditionError);

  const auto np13sq = tiling::rule_power(np13, 2);
  const auto s2 = tiling::substitution_matrix(np13sq);
  // spec value: Xi[1] = 1/(2*2*4) at l = 0
  CHECK(xi_ratio(s2, {1.0, 1.0}, {1}) == doctest::Approx(1.0 / 16.0));

  const double mass = mass_constant(np13sq);
  CHECK(mass > 0.0);
  CHECK(mass <= 1.0 / 16.0);
  const double clamp = (np13sq.expansion.norm_inf() - 1.0) / (np13sq.expansion.norm_inf() + 1.0);
  CHECK(mass <= clamp);

  // positive for every primitive fixture (powered until return vectors appear)
  for (const std::string& name : fixtures::names()) {
    auto rule = fixtures::get(name);
    while (tiling::good_return_vectors(rule).empty()) rule = tiling::rule_power(rule, 2);
    CHECK(mass_constant(rule) > 0.0);
  }
}

TEST_CASE("riesz_bound") {
  const auto np13sq = tiling::rule_power(fixtures::get("np13"), 2);
  const double mass = mass_constant(np13sq);
  const auto good = tiling::good_return_vectors(np13sq);

  // n = 1, omega = 1/2, the vector 1 realizes torus norm 1/2
  const auto rb = riesz_bound(np13sq, 1, Vec{0.5}, good, mass);
  REQUIRE(rb.factors.size() == 1);
  CHECK(rb.factors[0] == doctest::Approx(1.0 - mass * 0.25));

  // omega = 0: all factors 1
  const auto rb0 = riesz_bound(np13sq, 6, Vec{0.0}, good, mass);
  for (double f : rb0.factors) CHECK(f == 1.0);
  CHECK(rb0.product == 1.0);

  // product non-increasing in n at fixed omega
  double prev = 1.0;
  for (int n = 1; n <= 10; ++n) {
    const double product = riesz_bound(np13sq, n, Vec{0.37}, good, mass).product;
    CHECK(product <= prev + 1e-15);
    prev = product;
  }

  // factors stay inside (0, 1]
  for (int k = 0; k < 25; ++k) {
    const auto bound = riesz_bound(np13sq, 8, Vec{lowdisc(k, -5.0, 5.0)}, good, mass);
    for (double f : bound.factors) {
      CHECK(f > 0.0);
      CHECK(f <= 1.0);
    }
  }
}

TEST_CASE("step_inequality_check") {
  const auto np13sq = tiling::rule_power(fixtures::get("np13"), 2);

  // x = 1, omega = 0: both sides equal S^T 1
  const auto atZero = step_inequality_check(np13sq, 0, Vec{0.0}, {1.0, 1.0});
  CHECK(atZero.ok);
  CHECK(atZero.slack == doctest::Approx(0.0));

  const auto at037 = step_inequality_check(np13sq, 0, Vec{0.37}, {1.0, 1.0});
  CHECK(at037.ok);
  CHECK(at037.slack >= 0.0);

  // property sweep: random positive x, 100 omega in [-5, 5]
  for (int k = 0; k < 100; ++k) {
    const Vec omega{lowdisc(k, -5.0, 5.0)};
    const std::vector<double> x{0.25 + kronecker1(3 * k + 1), 0.25 + kronecker1(3 * k + 2)};
    const auto res = step_inequality_check(np13sq, k % 4, omega, x);
    CHECK(res.ok);
  }
}

TEST_CASE("factor_growth_bound") {
  const auto np13sq = tiling::rule_power(fixtures::get("np13"), 2);
  std::vector<double> ones(48, 1.0);

  const double trivial = factor_growth_bound(np13sq, 50.0, Vec{0.37}, ones);
  CHECK(trivial > 0.0);
  // doubling R scales the leading R^d term by 2^d; the tower-depth jump and
  // the R^{d-1} term add a bounded extra factor
  const double doubled = factor_growth_bound(np13sq, 100.0, Vec{0.37}, ones);
  CHECK(doubled <= 3.0 * trivial);
  CHECK(doubled >= trivial);

  // monotonicity contract violated
  std::vector<double> rising{1.0, 2.0, 1.0, 1.0};
  rising.resize(48, 1.0);
  CHECK_THROWS_AS(factor_growth_bound(np13sq, 50.0, Vec{0.37}, rising), ContractError);
  std::vector<double> crashing{1.0, 1e-9};
  crashing.resize(48, 1e-9);
  CHECK_THROWS_AS(factor_growth_bound(np13sq, 50.0, Vec{0.37}, crashing), ContractError);
}

TEST_CASE("cocycle bound dominates structure factors (Prop 3.2 shape)") {
  const auto np13sq = tiling::rule_power(fixtures::get("np13"), 2);
  const double mass = mass_constant(np13sq);
  const auto good = tiling::good_return_vectors(np13sq);
  const auto s = tiling::substitution_matrix(np13sq);

  for (int k = 0; k < 30; ++k) {
    const Vec omega{lowdisc(k, -5.0, 5.0)};
    for (int n = 1; n <= 6; ++n) {
      const auto prod = cocycle_product(np13sq, n, omega);
      const auto bound = riesz_bound(np13sq, n, omega, good, mass);
      // per-entry: |Pi_n(k, i)| <= #zeta^n(T_k) * prod(factors)
      auto power = algebraic::IntMatrix::identity(2);
      for (int q = 0; q < n; ++q) power = power.mul(s);
      for (int row = 0; row < 2; ++row) {
        double count = 0.0;
        for (int i = 0; i < 2; ++i) count += power.at(i, row).get_d();
        for (int i = 0; i < 2; ++i)
          CHECK(std::abs(prod.matrix.at(row, i)) <= count * bound.product + 1e-9);
      }
    }
  }
}

TEST_CASE("cocycle precision guard") {
  const auto np13 = fixtures::get("np13");
  CHECK_THROWS_AS(step_matrix(np13, 60, Vec{0.37}), PrecisionError);
}
