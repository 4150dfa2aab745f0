#include <catch_amalgamated.hpp>

#include <cmath>

#include "fbsvar/diagrams.hpp"
#include "fbsvar/limits.hpp"

using namespace fbsvar;

namespace {
HermiteExpansion pk(int k) {
  HermiteExpansion e;
  e.coeffs[k] = 1.0;
  e.rank = k;
  e.truncation = k;
  return e;
}
}  // namespace

TEST_CASE("regime classification", "[limits]") {
  CHECK(classify_regime({{0.3, 0.9}}, 2).regime == Regime::CLT);
  CHECK(classify_regime({{0.9, 0.8}}, 2).regime == Regime::NCLT);
  SECTION("the boundary counts as central (open-box hypothesis)") {
    const auto rep = classify_regime({{0.75, 0.9}}, 2, 1e-12);
    CHECK(rep.regime == Regime::CLT);
    CHECK(rep.axis_class[0] == AxisClass::Boundary);
    CHECK(rep.axis_class[1] == AxisClass::SuperBoundary);
  }
  SECTION("rank one boundary is 1/2") {
    const auto rep = classify_regime({{0.49, 0.51}}, 1);
    CHECK(rep.boundary == Catch::Approx(0.5));
    CHECK(rep.regime == Regime::CLT);
    CHECK(classify_regime({{0.51, 0.6}}, 1).regime == Regime::NCLT);
  }
}

TEST_CASE("shifted hurst vector", "[limits]") {
  CHECK(hurst_shift({{0.3}}, 2)[0] == Catch::Approx(0.5));
  CHECK(hurst_shift({{0.9}}, 2)[0] == Catch::Approx(0.8));
  CHECK(hurst_shift({{0.7}}, 1)[0] == Catch::Approx(0.7));
  CHECK(hurst_shift({{0.75}}, 2)[0] == Catch::Approx(0.5));  // boundary
  const auto s = hurst_shift({{0.3, 0.9}}, 2);
  CHECK(s[0] == 0.5);
  CHECK(s[1] == Catch::Approx(0.8));
  for (double h : {0.1, 0.4, 0.75, 0.9, 0.99})
    for (int rank : {1, 2, 3}) {
      const double v = hurst_shift({{h}}, rank)[0];
      CHECK(v >= 0.5);
      CHECK(v < 1.0);
    }
}

TEST_CASE("rescaling sequence", "[limits]") {
  const LatticeShape m{{100}};
  CHECK(scaling_factor({{0.3}}, 2, m).per_axis[0] == Catch::Approx(100.0));
  CHECK(scaling_factor({{0.9}}, 2, m).per_axis[0] ==
        Catch::Approx(std::pow(100.0, 1.6)));
  CHECK(scaling_factor({{0.75}}, 2, m).per_axis[0] ==
        Catch::Approx(100.0 * std::log(100.0)));
  const auto both = scaling_factor({{0.3, 0.9}}, 2, LatticeShape{{100, 100}});
  CHECK(both.product == Catch::Approx(100.0 * std::pow(100.0, 1.6)));
  CHECK_THROWS_AS(scaling_factor({{0.75}}, 2, LatticeShape{{1}}),
                  std::invalid_argument);
}

TEST_CASE("b coefficients across the three branches", "[limits]") {
  SECTION("white noise collapses the series to the lag-zero term") {
    CHECK(b_coefficient(0.5, 2, 2).value == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("boundary constants") {
    CHECK(iota_constant(2) == Catch::Approx(0.28125));
    CHECK(iota_constant(1) == 0.0);
    CHECK(b_coefficient(0.75, 2, 2).value == Catch::Approx(0.28125));
    CHECK(b_coefficient(0.75, 3, 2).value == 0.0);
  }
  SECTION("super-boundary constants") {
    CHECK(kappa_constant(0.9, 2) == Catch::Approx(1.08));
    CHECK(b_coefficient(0.9, 2, 2).value == Catch::Approx(1.08));
    CHECK(b_coefficient(0.9, 3, 2).value == 0.0);
    CHECK(b_coefficient(0.8, 1, 1).value == Catch::Approx(1.0));
  }
  SECTION("series values against an independent summation") {
    CHECK(b_coefficient(0.3, 2, 2).value ==
          Catch::Approx(1.12519550536131).epsilon(1e-9));
    CHECK(b_coefficient(0.6, 2, 2).value ==
          Catch::Approx(1.08213082074).epsilon(1e-8));
  }
  SECTION("tightening the tolerance does not move the value") {
    const auto loose = b_coefficient(0.6, 2, 2, 1e-8);
    const auto tight = b_coefficient(0.6, 2, 2, 1e-12);
    CHECK(std::abs(loose.value - tight.value) <=
          loose.tail_bound + tight.tail_bound + 1e-13);
  }
  SECTION("branch mismatch is rejected") {
    CHECK_THROWS_AS(b_coefficient(0.9, 1, 2), inconsistency_error);
    CHECK_THROWS_AS(b_coefficient(0.75, 1, 2), inconsistency_error);
  }
}

TEST_CASE("limiting variance constant", "[limits]") {
  SECTION("white-noise quadratic case") {
    CHECK(lambda_constant({{0.5, 0.5}}, pk(2)) == Catch::Approx(2.0));
  }
  SECTION("non-central quadratic case") {
    CHECK(lambda_constant({{0.9}}, pk(2)) == Catch::Approx(2.16));
  }
  SECTION("rank-one non-central case is a_1^2") {
    auto e = pk(1);
    e.coeffs[1] = 1.7;
    CHECK(lambda_constant({{0.8}}, e) == Catch::Approx(1.7 * 1.7));
  }
  SECTION("mixed case keeps only the rank term") {
    CHECK(lambda_constant({{0.3, 0.9}}, pk(2)) ==
          Catch::Approx(2.430422291580).epsilon(1e-8));
  }
  SECTION("central anisotropic case") {
    CHECK(lambda_constant({{0.3, 0.6}}, pk(2)) ==
          Catch::Approx(2.435217471428).epsilon(1e-8));
  }
  SECTION("all-sub case sums every order") {
    // f = P2 + P4: Lambda = 2 b2(H)^d + 24 b4(H)^d at d=1
    HermiteExpansion e;
    e.coeffs[2] = 1.0;
    e.coeffs[4] = 1.0;
    e.rank = 2;
    const double expected = 2.0 * b_coefficient(0.3, 2, 2).value +
                            24.0 * b_coefficient(0.3, 4, 2).value;
    CHECK(lambda_constant({{0.3}}, e) == Catch::Approx(expected));
  }
}

TEST_CASE("limit covariance delegates to the sheet covariance", "[limits]") {
  CHECK(limit_covariance({{0.5}}, {{0.5}}, {{1.0}}) == Catch::Approx(0.5));
  CHECK(limit_covariance({{0.5, 0.8}}, {{1.0, 1.0}}, {{1.0, 1.0}}) ==
        Catch::Approx(1.0));
  const double direct = fbs_covariance({{0.5, 0.8}}, {{1.0, 1.0}}, {{1.0, 0.5}});
  CHECK(limit_covariance({{0.5, 0.8}}, {{1.0, 1.0}}, {{1.0, 0.5}}) ==
        Catch::Approx(direct));
}

TEST_CASE("lambda agrees with the exact finite-lattice variance", "[limits]") {
  // away from the boundary the finite-n variance converges at a power rate;
  // at n = 4096 the relative gap stays below 2%
  for (double h : {0.3, 0.5, 0.9}) {
    const RealVec H = {h};
    const double lambda = lambda_constant(H, pk(2));
    const double exact =
        exact_rescaled_cross_moment(H, pk(2), LatticeShape{{4096}},
                                    LatticeShape{{4096}});
    CHECK(std::abs(exact - lambda) / lambda < 0.02);
  }
}

TEST_CASE("boundary variance converges at a log rate only", "[limits]") {
  // the exact finite-n variance at the boundary H = 3/4 sits far above the
  // limit 2 iota(2) = 0.5625 and drifts down like 1/log n
  const RealVec H = {0.75};
  const double v512 =
      exact_rescaled_cross_moment(H, pk(2), LatticeShape{{512}},
                                  LatticeShape{{512}});
  const double v4096 =
      exact_rescaled_cross_moment(H, pk(2), LatticeShape{{4096}},
                                  LatticeShape{{4096}});
  CHECK(v512 == Catch::Approx(0.867283043690).epsilon(1e-9));
  CHECK(v4096 == Catch::Approx(0.791064679897).epsilon(1e-9));
  const double limit = 2.0 * iota_constant(2);
  CHECK(v512 > v4096);
  CHECK(v4096 > limit);
}
