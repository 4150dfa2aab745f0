// Closed-form limit-theorem constants: regime classification relative to the
// boundary 1 - 1/(2k), the shifted Hurst vector, the per-axis rescaling
// sequence c(n), the b-coefficients (correlation-power series, boundary and
// super-boundary constants) and the limiting variance constant Lambda.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbsvar/errors.hpp"
#include "fbsvar/fgn.hpp"
#include "fbsvar/hermite.hpp"
#include "fbsvar/lattice.hpp"

namespace fbsvar {

enum class Regime { CLT, NCLT };
enum class AxisClass { SubBoundary, Boundary, SuperBoundary };

struct RegimeReport {
  Regime regime = Regime::CLT;
  std::vector<AxisClass> axis_class;
  int rank = 1;
  double boundary = 0.0;  // 1 - 1/(2 rank)
};

inline constexpr double kBoundaryTol = 1e-12;

/// Classifies each axis against 1 - 1/(2 rank); an exact-boundary axis counts
/// as non-super, so the non-central regime requires every axis strictly above
/// the boundary (the open-box hypothesis).
inline RegimeReport classify_regime(std::span<const double> H, int rank,
                                    double boundary_tol = kBoundaryTol) {
  check_hurst(H);
  if (rank < 1) throw std::invalid_argument("classify_regime: rank must be >= 1");
  RegimeReport rep;
  rep.rank = rank;
  rep.boundary = 1.0 - 1.0 / (2.0 * static_cast<double>(rank));
  bool all_super = true;
  for (double h : H) {
    AxisClass cls;
    if (std::abs(h - rep.boundary) <= boundary_tol)
      cls = AxisClass::Boundary;
    else if (h > rep.boundary)
      cls = AxisClass::SuperBoundary;
    else
      cls = AxisClass::SubBoundary;
    if (cls != AxisClass::SuperBoundary) all_super = false;
    rep.axis_class.push_back(cls);
  }
  rep.regime = all_super ? Regime::NCLT : Regime::CLT;
  return rep;
}

/// Hurst vector of the limit process: 1 - rank (1 - H) above the boundary,
/// 1/2 at or below it.  Values lie in [1/2, 1).
inline RealVec hurst_shift(std::span<const double> H, int rank) {
  const RegimeReport rep = classify_regime(H, rank);
  RealVec shifted(H.size());
  for (std::size_t nu = 0; nu < H.size(); ++nu)
    shifted[nu] = (rep.axis_class[nu] == AxisClass::SuperBoundary)
                      ? 1.0 - static_cast<double>(rank) * (1.0 - H[nu])
                      : 0.5;
  return shifted;
}

struct ScalingFactors {
  RealVec per_axis;
  double product = 1.0;
};

/// Rescaling sequence c: per axis m^{2 - 2 rank (1-H)} above the boundary,
/// m ln m at it (natural logarithm), m below it.
inline ScalingFactors scaling_factor(std::span<const double> H, int rank,
                                     const LatticeShape& m) {
  if (static_cast<int>(H.size()) != m.dim())
    throw std::invalid_argument("scaling_factor: dimension mismatch");
  const RegimeReport rep = classify_regime(H, rank);
  ScalingFactors out;
  for (int nu = 0; nu < m.dim(); ++nu) {
    const double mv = static_cast<double>(m.extent(nu));
    double c;
    switch (rep.axis_class[nu]) {
      case AxisClass::SuperBoundary:
        c = std::pow(mv, 2.0 - 2.0 * rank * (1.0 - H[nu]));
        break;
      case AxisClass::Boundary:
        if (m.extent(nu) < 2)
          throw std::invalid_argument(
              "scaling_factor: boundary axis needs extent >= 2");
        c = mv * std::log(mv);
        break;
      default:
        c = mv;
    }
    out.per_axis.push_back(c);
    out.product *= c;
  }
  return out;
}

struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;  // bound on the dropped remainder
  std::int64_t cutoff = 0;  // half-width of the directly summed window
};

namespace detail {

// Tail sum_{j>J} j^{-q} by Euler-Maclaurin through the J^{-q-3} term.
inline double power_tail(double J, double q) {
  return std::pow(J, 1.0 - q) / (q - 1.0) - 0.5 * std::pow(J, -q) +
         q * std::pow(J, -q - 1.0) / 12.0 -
         q * (q + 1.0) * (q + 2.0) * std::pow(J, -q - 3.0) / 720.0;
}

// Symmetric series sum_{j in Z} r_H(j)^k for H below the boundary; the tail
// beyond the cut-off is corrected analytically from the large-j expansion
// r(j) = c1 j^{2H-2} + c2 j^{2H-4} + c3 j^{2H-6} + ...
inline SeriesValue sub_boundary_series(double H, int k, double tail_tol) {
  const double h2 = 2.0 * H;
  const double c1 = H * (h2 - 1.0);
  const double c2 = h2 * (h2 - 1.0) * (h2 - 2.0) * (h2 - 3.0) / 24.0;
  const double c3 =
      h2 * (h2 - 1.0) * (h2 - 2.0) * (h2 - 3.0) * (h2 - 4.0) * (h2 - 5.0) /
      720.0;
  const double q1 = 2.0 * static_cast<double>(k) * (1.0 - H);
  if (q1 <= 1.0)
    throw std::invalid_argument("b_coefficient: series diverges for these parameters");

  std::int64_t J = 10000;
  SeriesValue out;
  for (;;) {
    double sum = 0.0, comp = 0.0;  // Kahan
    for (std::int64_t j = J; j >= 1; --j) {
      const double term = std::pow(fgn_autocovariance(H, j), k);
      const double y = term - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    const double Jd = static_cast<double>(J);
    const double correction =
        (c1 == 0.0) ? 0.0
                    : std::pow(c1, k) * power_tail(Jd, q1) +
                          k * std::pow(c1, k - 1) * c2 * power_tail(Jd, q1 + 2.0);
    double bound = 0.0;
    if (c1 != 0.0) {
      const double next_series =
          std::abs(k * std::pow(c1, k - 1) * c3 +
                   0.5 * k * (k - 1) * std::pow(c1, k - 2) * c2 * c2) *
          power_tail(Jd, q1 + 4.0);
      const double next_em = std::abs(std::pow(c1, k)) * q1 * (q1 + 1.0) *
                             (q1 + 2.0) * (q1 + 3.0) * (q1 + 4.0) *
                             std::pow(Jd, -q1 - 5.0) / 30240.0;
      bound = 4.0 * (next_series + next_em);
    }
    if (bound <= tail_tol || J >= (std::int64_t{1} << 27)) {
      out.value = 1.0 + 2.0 * (sum + correction);  // r(0)^k = 1
      out.tail_bound = 2.0 * bound;
      out.cutoff = J;
      if (bound > tail_tol)
        throw numeric_error("b_coefficient: tail tolerance unreachable");
      return out;
    }
    J *= 2;
  }
}

inline double factorial_as_double(int k) {
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f *= static_cast<double>(j);
  return f;
}

}  // namespace detail

/// Boundary constant iota(rank) = 2 ((2k-1)(k-1) / (2k^2))^k.
inline double iota_constant(int rank) {
  if (rank < 1) throw std::invalid_argument("iota_constant: rank must be >= 1");
  const double k = static_cast<double>(rank);
  return 2.0 * std::pow((2.0 * k - 1.0) * (k - 1.0) / (2.0 * k * k), k);
}

/// Super-boundary constant
/// kappa(H, rank) = H^k (2H-1)^k / ((1 - k(1-H)) (1 - 2k(1-H))).
inline double kappa_constant(double H, int rank) {
  const double k = static_cast<double>(rank);
  if (!(H > 1.0 - 1.0 / (2.0 * k) && H < 1.0))
    throw inconsistency_error("kappa_constant: H not above the boundary");
  return std::pow(H, k) * std::pow(2.0 * H - 1.0, k) /
         ((1.0 - k * (1.0 - H)) * (1.0 - 2.0 * k * (1.0 - H)));
}

/// Per-axis coefficient b^{(k)} of the limiting variance: the correlation
/// power series below the boundary, iota/kappa at k = rank otherwise, zero
/// for k > rank at or above the boundary.
inline SeriesValue b_coefficient(double H, int k, int rank,
                                 double tail_tol = 1e-10) {
  check_hurst(H);
  if (k < 1 || rank < 1)
    throw std::invalid_argument("b_coefficient: k and rank must be >= 1");
  const RegimeReport rep = classify_regime(std::span<const double>(&H, 1), rank);
  switch (rep.axis_class[0]) {
    case AxisClass::SubBoundary:
      return detail::sub_boundary_series(H, k, tail_tol);
    case AxisClass::Boundary:
      if (k == rank) return {iota_constant(rank), 0.0, 0};
      if (k > rank) return {0.0, 0.0, 0};
      break;
    case AxisClass::SuperBoundary:
      if (k == rank) return {kappa_constant(H, rank), 0.0, 0};
      if (k > rank) return {0.0, 0.0, 0};
      break;
  }
  throw inconsistency_error("b_coefficient: k below the expansion rank");
}

/// Limiting variance constant Lambda.  In the central regime this is the sum
/// of k! a_k^2 <b^{(k)}> from max(rank, 2); in the non-central regime only the
/// rank term contributes, rank! a_rank^2 <b^{(rank)}> (equal to a_1^2 when
/// rank = 1).
inline double lambda_constant(std::span<const double> H,
                              const HermiteExpansion& e,
                              double tail_tol = 1e-10) {
  if (e.coeffs.empty())
    throw std::invalid_argument("lambda_constant: empty expansion");
  const int rank = e.rank;
  const RegimeReport rep = classify_regime(H, rank);
  if (rep.regime == Regime::NCLT) {
    double prod = 1.0;
    for (double h : H) prod *= kappa_constant(h, rank);
    const double ar = e.a(rank);
    return detail::factorial_as_double(rank) * ar * ar * prod;
  }
  double lambda = 0.0;
  for (const auto& [k, ak] : e.coeffs) {
    if (k < std::max(rank, 2)) continue;
    double prod = 1.0;
    for (double h : H) {
      prod *= b_coefficient(h, k, rank, tail_tol).value;
      if (prod == 0.0) break;
    }
    lambda += detail::factorial_as_double(k) * ak * ak * prod;
  }
  return lambda;
}

/// Covariance R_{H~}(s, t) of the limit process (delegates to the sheet
/// covariance with the shifted Hurst vector).
inline double limit_covariance(std::span<const double> H_shifted,
                               std::span<const double> s,
                               std::span<const double> t) {
  return fbs_covariance(H_shifted, s, t);
}

}  // namespace fbsvar
