// Exact finite-lattice moments of Hermite-polynomial functionals of Gaussian
// fields via the diagram formula.  Diagrams are perfect matchings on leveled
// vertex sets with no intra-level edges; for lattice moments the matchings
// are grouped by their level-pair multiplicity matrix, which collapses the
// diagram sum without changing a single term.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbsvar/errors.hpp"
#include "fbsvar/fgn.hpp"
#include "fbsvar/hermite.hpp"
#include "fbsvar/lattice.hpp"
#include "fbsvar/limits.hpp"

namespace fbsvar {

struct Diagram {
  std::vector<int> orders;
  // ((level j, slot a), (level j', slot a')) with j < j'
  std::vector<std::array<int, 4>> edges;
};

/// Cardinality estimate (p-1)^{(k_1+...+k_p)/2} sqrt(k_1! ... k_p!).
inline double diagram_count_bound(std::span<const int> orders) {
  const int p = static_cast<int>(orders.size());
  int total = 0;
  double root = 1.0;
  for (int k : orders) {
    if (k < 1) throw std::invalid_argument("diagram orders must be >= 1");
    total += k;
    root *= sqrt_factorial(k);
  }
  if (total % 2 != 0) return 0.0;
  return std::pow(static_cast<double>(p - 1), total / 2.0) * root;
}

namespace detail {

struct Accumulator {  // Kahan
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

// Visits every perfect matching of the leveled vertex set, lowest unmatched
// vertex first; partner order is ascending, so the visit order is canonical.
template <class F>
void visit_matchings(std::span<const int> orders, F&& fn) {
  const int p = static_cast<int>(orders.size());
  const int total = std::accumulate(orders.begin(), orders.end(), 0);
  if (total % 2 != 0) return;
  std::vector<int> level_of(total), slot_of(total);
  {
    int v = 0;
    for (int j = 0; j < p; ++j)
      for (int a = 0; a < orders[j]; ++a, ++v) {
        level_of[v] = j;
        slot_of[v] = a;
      }
  }
  std::vector<int> partner(total, -1);
  std::vector<std::array<int, 4>> edges;
  edges.reserve(total / 2);
  const std::function<void()> rec = [&]() {
    int v = 0;
    while (v < total && partner[v] >= 0) ++v;
    if (v == total) {
      fn(std::span<const std::array<int, 4>>(edges));
      return;
    }
    for (int w = v + 1; w < total; ++w) {
      if (partner[w] >= 0 || level_of[w] == level_of[v]) continue;
      partner[v] = w;
      partner[w] = v;
      edges.push_back({level_of[v], slot_of[v], level_of[w], slot_of[w]});
      rec();
      edges.pop_back();
      partner[v] = -1;
      partner[w] = -1;
    }
  };
  rec();
}

// Visits every level-pair multiplicity matrix mu (symmetric, zero diagonal,
// row sums = orders) together with the number of matchings realizing it,
// prod_j k_j! / prod_{r<c} mu_rc!.
template <class F>
void visit_pairings(std::span<const int> orders, F&& fn) {
  const int p = static_cast<int>(orders.size());
  const int total = std::accumulate(orders.begin(), orders.end(), 0);
  if (total % 2 != 0) return;
  std::vector<int> rem(orders.begin(), orders.end());
  std::vector<int> mu(static_cast<std::size_t>(p) * p, 0);
  double denom = 1.0;

  const std::function<void(int, int)> rec = [&](int r, int c) {
    if (r == p - 1) {
      if (rem[r] == 0) {
        double count = 1.0;
        for (int j = 0; j < p; ++j)
          for (int f = 2; f <= orders[j]; ++f) count *= f;
        fn(std::span<const int>(mu), count / denom);
      }
      return;
    }
    if (c == p) {
      if (rem[r] == 0) rec(r + 1, r + 2);
      return;
    }
    const int hi = std::min(rem[r], rem[c]);
    const int lo = (c == p - 1) ? rem[r] : 0;
    for (int v = lo; v <= hi; ++v) {
      double fact = 1.0;
      for (int f = 2; f <= v; ++f) fact *= f;
      mu[r * p + c] = v;
      mu[c * p + r] = v;
      rem[r] -= v;
      rem[c] -= v;
      denom *= fact;
      rec(r, c + 1);
      denom /= fact;
      rem[r] += v;
      rem[c] += v;
      mu[r * p + c] = 0;
      mu[c * p + r] = 0;
    }
  };
  if (p == 1) {
    if (orders[0] == 0) fn(std::span<const int>(mu), 1.0);
    return;
  }
  rec(0, 1);
}

}  // namespace detail

/// Number of diagrams of the given order, via the multiplicity-matrix census
/// (no enumeration).
inline double diagram_count(std::span<const int> orders) {
  double total = 0.0;
  detail::visit_pairings(orders,
                         [&](std::span<const int>, double c) { total += c; });
  return total;
}

/// Exhaustive, duplicate-free list of diagrams of the given order; empty when
/// the total order is odd.  Refuses when the cardinality estimate exceeds cap.
inline std::vector<Diagram> enumerate_diagrams(std::span<const int> orders,
                                               double cap = 1e7) {
  if (orders.size() < 2)
    throw std::invalid_argument("enumerate_diagrams: need p >= 2 levels");
  if (diagram_count_bound(orders) > cap)
    throw numeric_error("enumerate_diagrams: cardinality cap exceeded");
  std::vector<Diagram> out;
  detail::visit_matchings(orders, [&](std::span<const std::array<int, 4>> edges) {
    Diagram d;
    d.orders.assign(orders.begin(), orders.end());
    d.edges.assign(edges.begin(), edges.end());
    out.push_back(std::move(d));
  });
  return out;
}

/// Diagram formula: E[prod_j P_{k_j}(Y_j)] for jointly Gaussian unit-variance
/// Y with correlation matrix corr, as a sum over diagrams of edge-correlation
/// products.  An empty diagram class yields zero.
inline double diagram_moment(std::span<const int> orders,
                             std::span<const double> corr, double cap = 1e7) {
  const int p = static_cast<int>(orders.size());
  if (p < 2) throw std::invalid_argument("diagram_moment: need p >= 2 levels");
  if (static_cast<int>(corr.size()) != p * p)
    throw std::invalid_argument("diagram_moment: corr must be p x p");
  for (int i = 0; i < p; ++i) {
    if (corr[i * p + i] != 1.0)
      throw std::invalid_argument("diagram_moment: corr diagonal must be 1");
    for (int j = 0; j < p; ++j) {
      if (!(std::abs(corr[i * p + j]) <= 1.0 + 1e-12) ||
          corr[i * p + j] != corr[j * p + i])
        throw std::invalid_argument("diagram_moment: invalid correlation matrix");
    }
  }
  if (diagram_count_bound(orders) > cap)
    throw numeric_error("diagram_moment: cardinality cap exceeded");
  detail::Accumulator acc;
  detail::visit_matchings(orders, [&](std::span<const std::array<int, 4>> edges) {
    double prod = 1.0;
    for (const auto& e : edges) prod *= corr[e[0] * p + e[2]];
    acc.add(prod);
  });
  return acc.sum;
}

namespace detail {

// Per-axis lattice sum for one multiplicity matrix: over ordered site tuples
// (j_1..j_p) in [0,l)^p, the product over level pairs of r(j_a - j_b)^mu_ab.
inline double axis_site_sum(std::span<const int> mu, int p, std::int64_t l,
                            const std::vector<std::vector<double>>& rpow) {
  std::vector<std::int64_t> site(p, 0);
  Accumulator acc;
  for (;;) {
    double prod = 1.0;
    for (int a = 0; a < p && prod != 0.0; ++a)
      for (int b = a + 1; b < p; ++b) {
        const int m = mu[a * p + b];
        if (m > 0) prod *= rpow[m][static_cast<std::size_t>(site[a] - site[b] + l - 1)];
      }
    acc.add(prod);
    int axis = p - 1;
    for (; axis >= 0; --axis) {
      if (++site[axis] < l) break;
      site[axis] = 0;
    }
    if (axis < 0) break;
  }
  return acc.sum;
}

}  // namespace detail

/// Exact p-th moment of <l>^{-1/2} sum_{1<=i<=l} f(Z_i) for a polynomial f
/// given by a finite Hermite expansion, over the separable fGn-correlated
/// lattice field.  The diagram sum factorizes per axis for each level-pair
/// multiplicity matrix; the work cap guards combinatorial blow-up.
inline double exact_variation_moment(std::span<const double> H,
                                     const LatticeShape& l,
                                     const HermiteExpansion& e, int p,
                                     double work_cap = 1e7) {
  check_hurst(H);
  if (static_cast<int>(H.size()) != l.dim())
    throw std::invalid_argument("exact_variation_moment: dimension mismatch");
  if (p < 1) throw std::invalid_argument("exact_variation_moment: p must be >= 1");
  if (e.coeffs.empty())
    throw std::invalid_argument("exact_variation_moment: empty expansion");

  const int d = l.dim();
  int max_mult = 0;
  for (const auto& [k, ak] : e.coeffs) max_mult = std::max(max_mult, k);
  // r(j)^m tables per axis, lag offset l-1
  std::vector<std::vector<std::vector<double>>> rpow(d);
  for (int nu = 0; nu < d; ++nu) {
    rpow[nu].assign(max_mult + 1, {});
    std::vector<double> base(static_cast<std::size_t>(2 * l.extent(nu) - 1));
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(base.size()); ++j)
      base[j] = fgn_autocovariance(H[nu], j - (l.extent(nu) - 1));
    rpow[nu][1] = base;
    for (int m = 2; m <= max_mult; ++m) {
      rpow[nu][m] = rpow[nu][m - 1];
      for (std::size_t j = 0; j < base.size(); ++j) rpow[nu][m][j] *= base[j];
    }
  }

  double axis_tuple_cost = 0.0;
  for (int nu = 0; nu < d; ++nu)
    axis_tuple_cost += std::pow(static_cast<double>(l.extent(nu)), p);

  const std::vector<std::pair<int, double>> support(e.coeffs.begin(),
                                                    e.coeffs.end());
  const int s = static_cast<int>(support.size());
  std::vector<int> pick(p, 0);
  std::vector<int> orders(p);
  detail::Accumulator total;
  double work = 0.0;
  for (;;) {
    double coeff = 1.0;
    int order_sum = 0;
    for (int j = 0; j < p; ++j) {
      orders[j] = support[pick[j]].first;
      coeff *= support[pick[j]].second;
      order_sum += orders[j];
    }
    if (order_sum % 2 == 0) {
      detail::visit_pairings(orders, [&](std::span<const int> mu, double count) {
        work += axis_tuple_cost;
        if (work > work_cap)
          throw numeric_error("exact_variation_moment: work cap exceeded");
        double prod = count;
        for (int nu = 0; nu < d; ++nu)
          prod *= detail::axis_site_sum(mu, p, l.extent(nu), rpow[nu]);
        total.add(coeff * prod);
      });
    }
    int j = p - 1;
    for (; j >= 0; --j) {
      if (++pick[j] < s) break;
      pick[j] = 0;
    }
    if (j < 0) break;
  }
  return total.sum / std::pow(static_cast<double>(l.total()), p / 2.0);
}

/// Right-hand side of the moment bound:
/// (2^d C(f,p)^2 sum_{|i|<l} |rho(i)|^rank)^{p/2} with
/// C(f,p) = sum_k (p-1)^{k/2} sqrt(k!) |a_k|; the lattice sum factorizes as a
/// product of per-axis sums.
struct MomentBound {
  double value = 0.0;
  double c_constant = 0.0;
  bool partial = false;  // coefficient constant truncated (quadrature-built f)
};

inline MomentBound moment_bound_rhs(std::span<const double> H,
                                    const HermiteExpansion& e, int p,
                                    const LatticeShape& l) {
  check_hurst(H);
  if (p < 2) throw std::invalid_argument("moment_bound_rhs: p must be >= 2");
  if (static_cast<int>(H.size()) != l.dim())
    throw std::invalid_argument("moment_bound_rhs: dimension mismatch");
  MomentBound out;
  for (const auto& [k, ak] : e.coeffs)
    out.c_constant += std::pow(static_cast<double>(p - 1), 0.5 * k) *
                      sqrt_factorial(k) * std::abs(ak);
  out.partial = e.truncated;
  double lattice_sum = 1.0;
  for (int nu = 0; nu < l.dim(); ++nu) {
    double axis = 0.0;
    for (std::int64_t j = -(l.extent(nu) - 1); j < l.extent(nu); ++j)
      axis += std::pow(std::abs(fgn_autocovariance(H[nu], j)),
                       static_cast<double>(e.rank));
    lattice_sum *= axis;
  }
  out.value = std::pow(std::pow(2.0, l.dim()) * out.c_constant * out.c_constant *
                           lattice_sum,
                       0.5 * p);
  return out;
}

/// Exact second-moment coupling across nested lattices sharing one draw:
/// E[Ubar_A(1) Ubar_B(1)] where the B lattice refines the A lattice axiswise
/// (integer extent ratios).  Used as the oracle for the L2 Cauchy statistic.
inline double exact_rescaled_cross_moment(std::span<const double> H,
                                          const HermiteExpansion& e,
                                          const LatticeShape& a,
                                          const LatticeShape& b) {
  check_hurst(H);
  const int d = a.dim();
  if (b.dim() != d || static_cast<int>(H.size()) != d)
    throw std::invalid_argument("cross moment: dimension mismatch");
  for (int nu = 0; nu < d; ++nu)
    if (b.extent(nu) % a.extent(nu) != 0)
      throw std::invalid_argument("cross moment: extents must nest");

  double result = 0.0;
  for (const auto& [k, ak] : e.coeffs) {
    double prod = 1.0;
    for (int nu = 0; nu < d; ++nu) {
      const std::int64_t A = a.extent(nu), B = b.extent(nu);
      const std::int64_t q = B / A;
      const double h2 = 2.0 * H[nu];
      std::vector<double> pw(static_cast<std::size_t>(B + q + 2));
      for (std::size_t x = 0; x < pw.size(); ++x)
        pw[x] = std::pow(static_cast<double>(x), h2);
      const double norm = std::pow(static_cast<double>(A), H[nu]) *
                          std::pow(static_cast<double>(B), H[nu]) /
                          std::pow(static_cast<double>(B), h2);
      detail::Accumulator axis;
      for (std::int64_t i = 1; i <= A; ++i) {
        for (std::int64_t j = 1; j <= B; ++j) {
          const std::int64_t u = q * i - j;
          const double cov =
              0.5 * norm *
              (pw[static_cast<std::size_t>(std::abs(u + 1))] +
               pw[static_cast<std::size_t>(std::abs(u - q))] -
               pw[static_cast<std::size_t>(std::abs(u))] -
               pw[static_cast<std::size_t>(std::abs(u - q + 1))]);
          axis.add(std::pow(cov, k));
        }
      }
      prod *= axis.sum;
    }
    result += detail::factorial_as_double(k) * ak * ak * prod;
  }
  const double ca = scaling_factor(H, e.rank, a).product;
  const double cb = scaling_factor(H, e.rank, b).product;
  return result / std::sqrt(ca * cb);
}

}  // namespace fbsvar
