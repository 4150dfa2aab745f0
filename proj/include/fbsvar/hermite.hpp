// Probabilists' Hermite polynomials, Gauss-Hermite quadrature for the
// standard Gaussian measure, and Hermite expansions of variation functionals
// (coefficients, rank detection, exact power-function expansions).

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbsvar/errors.hpp"

namespace fbsvar {

/// P_k(u) by the three-term recurrence P_{k+1} = u P_k - k P_{k-1}.
inline double hermite_poly(int k, double u) {
  if (k < 0) throw std::invalid_argument("hermite_poly: k must be >= 0");
  double pm = 1.0;  // P_0
  if (k == 0) return pm;
  double p = u;  // P_1
  for (int j = 1; j < k; ++j) {
    const double next = u * p - static_cast<double>(j) * pm;
    pm = p;
    p = next;
  }
  return p;
}

/// sqrt(k!), exact in double for small k.
inline double sqrt_factorial(int k) {
  if (k <= 20) {
    double f = 1.0;
    for (int j = 2; j <= k; ++j) f *= j;
    return std::sqrt(f);
  }
  return std::exp(0.5 * std::lgamma(static_cast<double>(k) + 1.0));
}

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // normalized: weights sum to 1
};

/// Gauss-Hermite rule adapted to the standard Gaussian measure: nodes are the
/// eigenvalues of the Jacobi matrix (zero diagonal, off-diagonal sqrt(k)),
/// located by Sturm bisection; weights come from the Christoffel function of
/// the orthonormal Hermite system.
inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  std::vector<double> b2(n);  // squared off-diagonals b_k = sqrt(k)
  for (int k = 0; k < n; ++k) b2[k] = static_cast<double>(k);

  // #eigenvalues of the Jacobi matrix strictly below x
  const auto count_below = [&](double x) {
    int count = 0;
    double d = -x;
    if (d == 0.0) d = -1e-300;
    if (d < 0.0) ++count;
    for (int k = 1; k < n; ++k) {
      d = -x - b2[k] / d;
      if (d == 0.0) d = -1e-300;
      if (d < 0.0) ++count;
    }
    return count;
  };

  const double bound = 2.0 * std::sqrt(static_cast<double>(n)) + 1.0;
  // orthonormal value and derivative, p_n'(x) = sqrt(n) p_{n-1}(x)
  const auto pn_and_deriv = [&](double x) {
    double pm = 1.0, p = x;
    if (n == 1) return std::pair<double, double>{x, 1.0};
    for (int k = 1; k < n; ++k) {
      const double next =
          (x * p - std::sqrt(static_cast<double>(k)) * pm) /
          std::sqrt(static_cast<double>(k + 1));
      pm = p;
      p = next;
    }
    return std::pair<double, double>{p, std::sqrt(static_cast<double>(n)) * pm};
  };
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  for (int j = 0; j < n; ++j) {
    double lo = -bound, hi = bound;
    for (int it = 0; it < 90 && hi - lo > 1e-13 * bound; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (count_below(mid) <= j)
        lo = mid;
      else
        hi = mid;
    }
    // Newton polish to full precision
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 6; ++it) {
      const auto [value, deriv] = pn_and_deriv(x);
      if (deriv == 0.0) break;
      const double step = value / deriv;
      const double next = x - step;
      if (next <= lo || next >= hi) break;
      x = next;
      if (std::abs(step) < 1e-16 * (1.0 + std::abs(x))) break;
    }
    rule.nodes[j] = x;
  }

  rule.weights.resize(n);
  for (int j = 0; j < n; ++j) {
    const double x = rule.nodes[j];
    double pm = 1.0, p = x, chr = 1.0 + x * x;  // sum of p_k(x)^2, k < n
    for (int k = 1; k < n - 1; ++k) {
      const double next =
          (x * p - std::sqrt(static_cast<double>(k)) * pm) /
          std::sqrt(static_cast<double>(k + 1));
      pm = p;
      p = next;
      chr += next * next;
    }
    rule.weights[j] = 1.0 / chr;
  }
  return rule;
}

/// 0 for odd p, the double-factorial product (2j-1) for even p.
inline double gaussian_moment(int p) {
  if (p < 0) throw std::invalid_argument("gaussian_moment: p must be >= 0");
  if (p % 2 == 1) return 0.0;
  double prod = 1.0;
  for (int j = 1; j <= p / 2; ++j) prod *= static_cast<double>(2 * j - 1);
  return prod;
}

/// Mean-zero functional represented by Hermite coefficients a_k, k >= 1.
struct HermiteExpansion {
  std::map<int, double> coeffs;
  int rank = 0;         // smallest k with a_k != 0
  int truncation = 0;   // largest index considered when building
  double summability_value = 0.0;  // partial sum of 3^{k/2} sqrt(k!) |a_k|
  bool summability_doubtful = false;
  bool truncated = false;  // quadrature-built with support reaching truncation

  double a(int k) const {
    const auto it = coeffs.find(k);
    return it == coeffs.end() ? 0.0 : it->second;
  }

  int max_order() const {
    return coeffs.empty() ? 0 : coeffs.rbegin()->first;
  }

  /// sum a_k P_k(u), one recurrence pass.
  double evaluate(double u) const {
    if (coeffs.empty()) return 0.0;
    const int kmax = max_order();
    double acc = 0.0;
    double pm = 1.0, p = u;
    for (int k = 1; k <= kmax; ++k) {
      const auto it = coeffs.find(k);
      if (it != coeffs.end()) acc += it->second * p;
      const double next = u * p - static_cast<double>(k) * pm;
      pm = p;
      p = next;
    }
    return acc;
  }

  /// sum k! a_k^2 = variance of the represented functional.
  double variance() const {
    double acc = 0.0;
    for (const auto& [k, ak] : coeffs) {
      double f = 1.0;
      for (int j = 2; j <= k; ++j) f *= j;
      acc += f * ak * ak;
    }
    return acc;
  }
};

struct SummabilityReport {
  double value = 0.0;
  bool doubtful = false;  // terms not decreasing at the truncation index
};

/// Partial sum of the coefficient-decay series 3^{k/2} sqrt(k!) |a_k| over the
/// expansion's support.
inline SummabilityReport assumption_value(const HermiteExpansion& e) {
  SummabilityReport rep;
  double prev = -1.0, last = -1.0;
  for (const auto& [k, ak] : e.coeffs) {
    const double term =
        std::pow(3.0, 0.5 * static_cast<double>(k)) * sqrt_factorial(k) *
        std::abs(ak);
    rep.value += term;
    prev = last;
    last = term;
  }
  rep.doubtful = (prev >= 0.0 && last >= prev);
  return rep;
}

namespace detail {
inline constexpr double kRankTol = 1e-10;
}

/// Hermite coefficients a_k = (1/k!) \int f P_k dgamma for k = 1..K, via
/// Gauss-Hermite quadrature with node doubling until the coefficients settle.
/// Rejects functionals that are not mean-zero.
inline HermiteExpansion expand(const std::function<double(double)>& f, int K,
                               int nodes = 200) {
  if (K < 1) throw std::invalid_argument("expand: K must be >= 1");
  if (nodes < K + 1) nodes = K + 1;

  const auto coeffs_with = [&](int n) {
    GaussHermiteRule rule = gauss_hermite(n);
    std::vector<double> fx(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      fx[i] = f(rule.nodes[i]);
    // a_k = (1/sqrt(k!)) sum_i w_i f(x_i) p_k(x_i), orthonormal p_k
    std::vector<double> a(K + 1, 0.0);
    std::vector<double> pm(rule.nodes.size(), 1.0), p(rule.nodes);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      a[0] += rule.weights[i] * fx[i];
    for (int k = 1; k <= K; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        acc += rule.weights[i] * fx[i] * p[i];
      a[k] = acc / sqrt_factorial(k);
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double next =
            (rule.nodes[i] * p[i] - std::sqrt(static_cast<double>(k)) * pm[i]) /
            std::sqrt(static_cast<double>(k + 1));
        pm[i] = p[i];
        p[i] = next;
      }
    }
    return a;
  };

  std::vector<double> a = coeffs_with(nodes);
  bool converged = false;
  for (int n = 2 * nodes; n <= 64 * nodes; n *= 2) {
    std::vector<double> a2 = coeffs_with(n);
    double change = 0.0;
    for (int k = 0; k <= K; ++k) change = std::max(change, std::abs(a2[k] - a[k]));
    a = std::move(a2);
    if (change < detail::kRankTol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw numeric_error("expand: quadrature did not converge");

  double max_abs = 0.0;
  for (int k = 1; k <= K; ++k) max_abs = std::max(max_abs, std::abs(a[k]));
  if (max_abs == 0.0)
    throw std::invalid_argument("expand: functional is identically zero");
  if (std::abs(a[0]) > 1e-8 * std::max(1.0, max_abs))
    throw std::invalid_argument("expand: functional is not mean-zero");

  HermiteExpansion e;
  e.truncation = K;
  for (int k = 1; k <= K; ++k)
    if (std::abs(a[k]) > detail::kRankTol * max_abs) e.coeffs[k] = a[k];
  e.rank = e.coeffs.begin()->first;
  e.truncated = (e.max_order() == K);
  const auto rep = assumption_value(e);
  e.summability_value = rep.value;
  e.summability_doubtful = rep.doubtful;
  return e;
}

/// Exact expansion of rho_p(y) = y^p - gamma_p.  Coefficients are integers
/// produced by the monomial-to-Hermite change of basis
/// y^p = sum_{k = p, p-2, ...} p! / (k! 2^j j!) P_k(y), j = (p-k)/2.
inline HermiteExpansion power_expansion(int p) {
  if (p < 1) throw std::invalid_argument("power_expansion: p must be >= 1");
  HermiteExpansion e;
  e.truncation = p;
  double c = 1.0;  // coefficient of P_p
  for (int k = p; k >= 1; k -= 2) {
    e.coeffs[k] = c;
    const int j = (p - k) / 2;
    c *= static_cast<double>(k) * static_cast<double>(k - 1) /
         (2.0 * static_cast<double>(j + 1));
  }
  e.rank = (p % 2 == 1) ? 1 : 2;
  const auto rep = assumption_value(e);
  e.summability_value = rep.value;
  e.summability_doubtful = rep.doubtful;
  return e;
}

inline nlohmann::json to_json(const HermiteExpansion& e) {
  nlohmann::json coeffs = nlohmann::json::object();
  for (const auto& [k, ak] : e.coeffs) coeffs[std::to_string(k)] = ak;
  return nlohmann::json{
      {"coeffs", coeffs}, {"rank", e.rank}, {"truncation", e.truncation}};
}

inline HermiteExpansion expansion_from_json(const nlohmann::json& j) {
  HermiteExpansion e;
  for (const auto& [key, value] : j.at("coeffs").items()) {
    const int k = std::stoi(key);
    if (k < 1) throw std::invalid_argument("expansion: coefficient index < 1");
    e.coeffs[k] = value.get<double>();
  }
  if (e.coeffs.empty())
    throw std::invalid_argument("expansion: no coefficients");
  e.rank = j.contains("rank") ? j.at("rank").get<int>() : e.coeffs.begin()->first;
  if (e.rank != e.coeffs.begin()->first || e.a(e.rank) == 0.0)
    throw std::invalid_argument("expansion: rank inconsistent with support");
  e.truncation =
      j.contains("truncation") ? j.at("truncation").get<int>() : e.max_order();
  const auto rep = assumption_value(e);
  e.summability_value = rep.value;
  e.summability_doubtful = rep.doubtful;
  return e;
}

}  // namespace fbsvar
