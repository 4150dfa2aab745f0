#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fbsvar/diagrams.hpp"

using namespace fbsvar;

namespace {

HermiteExpansion pk(int k) {
  HermiteExpansion e;
  e.coeffs[k] = 1.0;
  e.rank = k;
  e.truncation = k;
  return e;
}

// independent oracle for f = P2 on a 1-D lattice: moments of the centered
// quadratic form sum(Z_i^2 - 1) via cumulants kappa_q = 2^{q-1} (q-1)! tr(R^q)
double quadratic_form_moment(double H, std::int64_t l, int p) {
  std::vector<double> R(static_cast<std::size_t>(l * l));
  for (std::int64_t i = 0; i < l; ++i)
    for (std::int64_t j = 0; j < l; ++j)
      R[i * l + j] = fgn_autocovariance(H, i - j);
  const auto tr_pow = [&](int q) {
    std::vector<double> cur = R;
    std::vector<double> next(R.size());
    for (int step = 1; step < q; ++step) {
      for (std::int64_t i = 0; i < l; ++i)
        for (std::int64_t j = 0; j < l; ++j) {
          double acc = 0.0;
          for (std::int64_t k = 0; k < l; ++k)
            acc += cur[i * l + k] * R[k * l + j];
          next[i * l + j] = acc;
        }
      std::swap(cur, next);
    }
    double tr = 0.0;
    for (std::int64_t i = 0; i < l; ++i) tr += cur[i * l + i];
    return tr;
  };
  const double k2 = 2.0 * tr_pow(2);
  const double k3 = 8.0 * tr_pow(3);
  const double k4 = 48.0 * tr_pow(4);
  const double norm = std::pow(static_cast<double>(l), 0.5 * p);
  switch (p) {
    case 2:
      return k2 / norm;
    case 3:
      return k3 / norm;
    case 4:
      return (k4 + 3.0 * k2 * k2) / norm;
    default:
      throw std::invalid_argument("p out of range for the oracle");
  }
}

}  // namespace

TEST_CASE("diagram enumeration counts", "[diagrams]") {
  const auto count = [](std::vector<int> orders) {
    return enumerate_diagrams(orders).size();
  };
  CHECK(count({1, 1}) == 1);
  CHECK(count({2, 2}) == 2);
  CHECK(count({1, 2}) == 0);  // odd total order
  CHECK(count({1, 1, 1, 1}) == 3);
  CHECK(count({2, 2, 2}) == 8);
  CHECK(count({2, 2, 2, 2}) == 60);
  SECTION("two equal levels give k!") {
    for (int k = 1; k <= 6; ++k) {
      double expected = 1.0;
      for (int j = 2; j <= k; ++j) expected *= j;
      CHECK(static_cast<double>(count({k, k})) == expected);
    }
  }
  SECTION("every diagram is a valid perfect matching") {
    for (const auto& d : enumerate_diagrams(std::vector<int>{2, 3, 3})) {
      std::vector<int> degree(3 * 3, 0);
      for (const auto& e : d.edges) {
        CHECK(e[0] != e[2]);  // no intra-level edges
        ++degree[e[0] * 3 + e[1]];
        ++degree[e[2] * 3 + e[3]];
      }
      int matched = 0;
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < d.orders[j]; ++a) {
          CHECK(degree[j * 3 + a] == 1);
          ++matched;
        }
      CHECK(matched == 8);
    }
  }
  SECTION("cardinality cap refuses combinatorial blow-up") {
    CHECK_THROWS_AS(enumerate_diagrams(std::vector<int>{8, 8, 8, 8}, 1e6),
                    numeric_error);
  }
}

TEST_CASE("pairing multiplicity matrices cover the diagram classes",
          "[diagrams]") {
  for (std::vector<int> orders :
       {std::vector<int>{2, 2}, std::vector<int>{2, 2, 2, 2},
        std::vector<int>{3, 3, 3, 3}, std::vector<int>{2, 4, 4, 2},
        std::vector<int>{4, 4, 4, 4}}) {
    double total = 0.0;
    detail::visit_pairings(orders, [&](std::span<const int>, double count) {
      total += count;
    });
    double expected;
    if (orders == std::vector<int>{4, 4, 4, 4}) {
      expected = 368064.0;  // full enumeration of this class
      CHECK(enumerate_diagrams(orders, 1e7).size() == 368064);
    } else {
      expected = static_cast<double>(enumerate_diagrams(orders).size());
    }
    CHECK(total == Catch::Approx(expected));
  }
}

TEST_CASE("diagram formula for small products", "[diagrams]") {
  SECTION("pair of linear terms gives the correlation") {
    for (double rho : {-0.7, 0.0, 0.4, 1.0}) {
      const std::vector<double> corr = {1.0, rho, rho, 1.0};
      CHECK(diagram_moment(std::vector<int>{1, 1}, corr) ==
            Catch::Approx(rho).margin(1e-15));
      CHECK(diagram_moment(std::vector<int>{2, 2}, corr) ==
            Catch::Approx(2.0 * rho * rho).margin(1e-15));
    }
  }
  SECTION("independent levels vanish") {
    std::vector<double> corr(16, 0.0);
    for (int i = 0; i < 4; ++i) corr[i * 4 + i] = 1.0;
    CHECK(diagram_moment(std::vector<int>{2, 2, 2, 2}, corr) == 0.0);
  }
  SECTION("all-equal levels match gaussian quadrature") {
    const GaussHermiteRule rule = gauss_hermite(64);
    for (std::vector<int> orders :
         {std::vector<int>{2, 2, 2}, std::vector<int>{3, 3, 3, 3},
          std::vector<int>{2, 4, 4, 2}, std::vector<int>{4, 4, 2, 2}}) {
      const int p = static_cast<int>(orders.size());
      std::vector<double> corr(p * p, 1.0);
      double quad = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        double prod = rule.weights[i];
        for (int k : orders) prod *= hermite_poly(k, rule.nodes[i]);
        quad += prod;
      }
      CHECK(diagram_moment(orders, corr) ==
            Catch::Approx(quad).epsilon(1e-8));
    }
  }
  SECTION("invalid correlation matrices are rejected") {
    CHECK_THROWS_AS(
        diagram_moment(std::vector<int>{1, 1}, std::vector<double>{1.0, 0.5}),
        std::invalid_argument);
    CHECK_THROWS_AS(diagram_moment(std::vector<int>{1, 1},
                                   std::vector<double>{1.0, 0.5, 0.6, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(diagram_moment(std::vector<int>{1, 1},
                                   std::vector<double>{1.0, 1.5, 1.5, 1.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("exact variation moments on small lattices", "[diagrams]") {
  SECTION("single site reduces to plain hermite moments") {
    const LatticeShape one{{1}};
    CHECK(exact_variation_moment({{0.5}}, one, pk(2), 2) == Catch::Approx(2.0));
    CHECK(exact_variation_moment({{0.5}}, one, pk(2), 4) == Catch::Approx(60.0));
    CHECK(exact_variation_moment({{0.5}}, one, pk(2), 3) == Catch::Approx(8.0));
    CHECK(exact_variation_moment({{0.9}}, one, pk(3), 2) == Catch::Approx(6.0));
  }
  SECTION("independent sites keep the variance") {
    CHECK(exact_variation_moment({{0.5}}, LatticeShape{{4}}, pk(2), 2) ==
          Catch::Approx(2.0));
  }
  SECTION("two correlated sites") {
    const double r1 = fgn_autocovariance(0.75, 1);
    CHECK(exact_variation_moment({{0.75}}, LatticeShape{{2}}, pk(2), 2) ==
          Catch::Approx(2.0 * (1.0 + r1 * r1)));
  }
  SECTION("agrees with the quadratic-form cumulant oracle") {
    for (double h : {0.3, 0.7, 0.9}) {
      for (std::int64_t l : {2, 4, 6}) {
        for (int p : {2, 3, 4}) {
          const double expected = quadratic_form_moment(h, l, p);
          const double got =
              exact_variation_moment({{h}}, LatticeShape{{l}}, pk(2), p, 1e9);
          CHECK(got == Catch::Approx(expected).epsilon(1e-10).margin(1e-12));
        }
      }
    }
  }
  SECTION("separable second moments factorize across axes") {
    const double d2 = exact_variation_moment({{0.3, 0.8}}, LatticeShape{{3, 4}},
                                             pk(2), 2);
    const double a1 =
        exact_variation_moment({{0.3}}, LatticeShape{{3}}, pk(2), 2);
    const double a2 =
        exact_variation_moment({{0.8}}, LatticeShape{{4}}, pk(2), 2);
    CHECK(d2 == Catch::Approx(a1 * a2 / 2.0).epsilon(1e-12));
  }
  SECTION("mixed-order expansions") {
    // f = rho_4 = P4 + 6 P2 on one site: variance 24 + 36*2 = 96
    CHECK(exact_variation_moment({{0.5}}, LatticeShape{{1}},
                                 power_expansion(4), 2) ==
          Catch::Approx(96.0));
  }
  SECTION("work cap refuses oversized sums") {
    CHECK_THROWS_AS(exact_variation_moment({{0.5}}, LatticeShape{{64}}, pk(4),
                                           4, 1e4),
                    numeric_error);
  }
}

TEST_CASE("moment bound right-hand side", "[diagrams]") {
  SECTION("quartic white-noise case") {
    const auto b = moment_bound_rhs({{0.5}}, pk(2), 4, LatticeShape{{1}});
    CHECK(b.c_constant == Catch::Approx(3.0 * std::sqrt(2.0)));
    CHECK(b.value == Catch::Approx(1296.0));
    CHECK(60.0 <= b.value);
  }
  SECTION("linear functional") {
    const auto b = moment_bound_rhs({{0.5}}, pk(1), 2, LatticeShape{{5}});
    CHECK(b.value == Catch::Approx(2.0));  // (2^1 * 1 * 1)^1
  }
  SECTION("inequality holds across the acceptance grid") {
    for (double h : {0.3, 0.5, 0.75, 0.9}) {
      for (int d : {1, 2}) {
        const RealVec H(d, h);
        const LatticeShape l{std::vector<std::int64_t>(d, 4)};
        for (const auto& e : {pk(2), power_expansion(4)}) {
          for (int p : {2, 4}) {
            const double exact = exact_variation_moment(H, l, e, p, 1e9);
            const auto bound = moment_bound_rhs(H, e, p, l);
            CHECK(std::abs(exact) <= bound.value);
          }
        }
      }
    }
  }
}

TEST_CASE("cross-scale coupling moments", "[diagrams]") {
  SECTION("equal scales reproduce the variance") {
    const double v = exact_rescaled_cross_moment({{0.9}}, pk(2),
                                                 LatticeShape{{64}},
                                                 LatticeShape{{64}});
    const double brute = quadratic_form_moment(0.9, 64, 2) /
                         std::pow(64.0, 0.6);  // c = 64^{1.6}, <l> = 64
    CHECK(v == Catch::Approx(brute).epsilon(1e-10));
  }
  SECTION("nested scales against a direct double sum") {
    const double H = 0.85;
    const std::int64_t A = 8, B = 16;
    // direct: E[Ubar_A Ubar_B] = 2/sqrt(cA cB) sum_{i,j} corr(i,j)^2
    double acc = 0.0;
    for (std::int64_t i = 1; i <= A; ++i) {
      for (std::int64_t j = 1; j <= B; ++j) {
        const double s1 = static_cast<double>(i) / A;
        const double s0 = static_cast<double>(i - 1) / A;
        const double t1 = static_cast<double>(j) / B;
        const double t0 = static_cast<double>(j - 1) / B;
        const double cov =
            0.5 * (std::pow(std::abs(s1 - t0), 2 * H) +
                   std::pow(std::abs(s0 - t1), 2 * H) -
                   std::pow(std::abs(s1 - t1), 2 * H) -
                   std::pow(std::abs(s0 - t0), 2 * H));
        const double corr =
            std::pow(static_cast<double>(A), H) *
            std::pow(static_cast<double>(B), H) * cov;
        acc += 2.0 * corr * corr;
      }
    }
    const double cA = std::pow(static_cast<double>(A), 2 - 4 * (1 - H));
    const double cB = std::pow(static_cast<double>(B), 2 - 4 * (1 - H));
    const double expected = acc / std::sqrt(cA * cB);
    CHECK(exact_rescaled_cross_moment({{H}}, pk(2), LatticeShape{{A}},
                                      LatticeShape{{B}}) ==
          Catch::Approx(expected).epsilon(1e-12));
  }
  SECTION("non-nesting extents are rejected") {
    CHECK_THROWS_AS(exact_rescaled_cross_moment({{0.9}}, pk(2),
                                                LatticeShape{{3}},
                                                LatticeShape{{8}}),
                    std::invalid_argument);
  }
}
