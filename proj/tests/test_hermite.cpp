#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fbsvar/hermite.hpp"

using namespace fbsvar;

TEST_CASE("hermite polynomial recurrence", "[hermite]") {
  for (double u : {-2.5, -0.3, 0.0, 1.7}) {
    CHECK(hermite_poly(0, u) == 1.0);
    CHECK(hermite_poly(1, u) == u);
  }
  CHECK(hermite_poly(2, 0.0) == Catch::Approx(-1.0));
  CHECK(hermite_poly(3, 2.0) == Catch::Approx(2.0));  // u^3 - 3u at 2
  CHECK(hermite_poly(4, 1.0) == Catch::Approx(1.0 - 6.0 + 3.0));
}

TEST_CASE("quadrature rule integrates the gaussian measure", "[hermite]") {
  const GaussHermiteRule rule = gauss_hermite(60);
  double w = 0.0, m2 = 0.0, m4 = 0.0, m6 = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    w += rule.weights[i];
    m2 += rule.weights[i] * x * x;
    m4 += rule.weights[i] * x * x * x * x;
    m6 += rule.weights[i] * std::pow(x, 6);
  }
  CHECK(w == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(m2 == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == Catch::Approx(3.0).epsilon(1e-12));
  CHECK(m6 == Catch::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("quadrature orthogonality of the hermite system", "[hermite]") {
  const GaussHermiteRule rule = gauss_hermite(64);
  for (int k1 = 0; k1 <= 12; ++k1) {
    for (int k2 = k1; k2 <= 12; ++k2) {
      double acc = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * hermite_poly(k1, rule.nodes[i]) *
               hermite_poly(k2, rule.nodes[i]);
      double expected = 0.0;
      if (k1 == k2) {
        expected = 1.0;
        for (int j = 2; j <= k1; ++j) expected *= j;
      }
      // tolerance scaled by the norm product sqrt(k1! k2!); raw P products
      // reach ~1e5, so an absolute comparison would test only rounding noise
      const double scale = sqrt_factorial(k1) * sqrt_factorial(k2);
      CHECK(acc == Catch::Approx(expected).margin(1e-9 * std::max(1.0, scale)));
    }
  }
}

TEST_CASE("gaussian moments", "[hermite]") {
  CHECK(gaussian_moment(0) == 1.0);
  CHECK(gaussian_moment(2) == 1.0);
  CHECK(gaussian_moment(3) == 0.0);
  CHECK(gaussian_moment(4) == 3.0);
  CHECK(gaussian_moment(6) == 15.0);
  CHECK(gaussian_moment(8) == 105.0);
}

TEST_CASE("expansion of polynomial functionals", "[hermite]") {
  SECTION("a hermite polynomial expands to itself") {
    const auto e = expand([](double u) { return hermite_poly(3, u); }, 8);
    CHECK(e.rank == 3);
    CHECK(e.a(3) == Catch::Approx(1.0).epsilon(1e-9));
    CHECK(e.coeffs.size() == 1);
  }
  SECTION("u^3 mixes ranks") {
    const auto e = expand([](double u) { return u * u * u; }, 8);
    CHECK(e.rank == 1);
    CHECK(e.a(1) == Catch::Approx(3.0).epsilon(1e-9));
    CHECK(e.a(3) == Catch::Approx(1.0).epsilon(1e-9));
  }
  SECTION("identity functional") {
    const auto e = expand([](double u) { return u; }, 6);
    CHECK(e.rank == 1);
    CHECK(e.a(1) == Catch::Approx(1.0).epsilon(1e-10));
  }
  SECTION("non mean-zero functionals are rejected") {
    CHECK_THROWS_AS(expand([](double u) { return u * u; }, 6),
                    std::invalid_argument);
  }
  SECTION("reconstruction at random points") {
    std::mt19937 gen(2);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    // a degree-10 polynomial with zero gaussian mean
    const auto f = [](double x) {
      return std::pow(x, 10) - 945.0 + 0.5 * std::pow(x, 7) - 2.0 * x;
    };
    const auto e = expand(f, 12);
    for (int i = 0; i < 100; ++i) {
      const double x = u(gen);
      CHECK(e.evaluate(x) ==
            Catch::Approx(f(x)).margin(1e-8 * (1.0 + std::abs(f(x)))));
    }
  }
}

TEST_CASE("exact power expansions", "[hermite]") {
  SECTION("spot coefficients") {
    const auto p2 = power_expansion(2);
    CHECK(p2.rank == 2);
    CHECK(p2.coeffs == std::map<int, double>{{2, 1.0}});
    const auto p3 = power_expansion(3);
    CHECK(p3.rank == 1);
    CHECK(p3.coeffs == std::map<int, double>{{1, 3.0}, {3, 1.0}});
    const auto p4 = power_expansion(4);
    CHECK(p4.rank == 2);
    CHECK(p4.coeffs == std::map<int, double>{{2, 6.0}, {4, 1.0}});
  }
  SECTION("rank parity") {
    for (int p = 1; p <= 9; ++p)
      CHECK(power_expansion(p).rank == (p % 2 == 1 ? 1 : 2));
  }
  SECTION("variance identity sum k! a_k^2 = gamma_2p - gamma_p^2") {
    for (int p = 1; p <= 8; ++p) {
      const auto e = power_expansion(p);
      const double expected =
          gaussian_moment(2 * p) - gaussian_moment(p) * gaussian_moment(p);
      CHECK(e.variance() == Catch::Approx(expected).epsilon(1e-13));
    }
  }
  SECTION("evaluation matches the raw power") {
    for (int p : {2, 3, 5, 6}) {
      const auto e = power_expansion(p);
      for (double u : {-1.7, 0.2, 2.3}) {
        const double expected = std::pow(u, p) - gaussian_moment(p);
        CHECK(e.evaluate(u) ==
              Catch::Approx(expected).margin(1e-11 * (1.0 + std::abs(expected))));
      }
    }
  }
}

TEST_CASE("truncation provenance", "[hermite]") {
  // exact polynomial expansions are complete
  CHECK_FALSE(power_expansion(4).truncated);
  // quadrature expansion of a non-polynomial with support reaching the cap
  const auto e = expand([](double u) { return std::sin(u); }, 5);
  CHECK(e.rank == 1);
  CHECK(e.truncated);
  // polynomial under a generous cap is recognized as complete
  const auto poly = expand([](double u) { return u * u * u; }, 9);
  CHECK_FALSE(poly.truncated);
}

TEST_CASE("coefficient-decay diagnostic", "[hermite]") {
  HermiteExpansion e;
  e.coeffs[2] = 1.0;
  CHECK(assumption_value(e).value == Catch::Approx(3.0 * std::sqrt(2.0)));
  HermiteExpansion e1;
  e1.coeffs[1] = 1.0;
  CHECK(assumption_value(e1).value == Catch::Approx(std::sqrt(3.0)));
  HermiteExpansion empty;
  CHECK(assumption_value(empty).value == 0.0);
}

TEST_CASE("expansion json round trip", "[hermite]") {
  const auto e = power_expansion(4);
  const auto j = to_json(e);
  CHECK(j.at("rank") == 2);
  CHECK(j.at("truncation") == 4);
  const auto back = expansion_from_json(j);
  CHECK(back.coeffs == e.coeffs);
  CHECK(back.rank == e.rank);

  nlohmann::json bad = {{"coeffs", {{"2", 0.0}, {"4", 1.0}}}, {"rank", 2}};
  CHECK_THROWS_AS(expansion_from_json(bad), std::invalid_argument);
}
