// Generalized, rescaled and power variation processes on the lattice, the
// fluctuation decomposition around the law-of-large-numbers limit, and the
// multilinear interpolation operator.  A variation process stores its values
// on the full (m+1)^d point grid t = i/m; off-lattice evaluation is either
// piecewise-constant or multilinear, always by explicit choice.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fbsvar/hermite.hpp"
#include "fbsvar/lattice.hpp"
#include "fbsvar/limits.hpp"

namespace fbsvar {

inline double int_pow(double x, int p) {
  double acc = 1.0;
  for (int i = 0; i < p; ++i) acc *= x;
  return acc;
}

enum class VariationKind { RawU, RescaledU, PowerV, Fluctuation };
enum class EvalMode { PiecewiseConstant, Multilinear };

/// Multilinear weight of one corner of the cell containing t:
/// prod over axes of {m t} (corner bit 1) or 1 - {m t} (corner bit 0).
inline double interpolation_weight(std::span<const double> t,
                                   const LatticeShape& m,
                                   std::span<const int> corner) {
  if (static_cast<int>(t.size()) != m.dim() ||
      static_cast<int>(corner.size()) != m.dim())
    throw std::invalid_argument("interpolation_weight: dimension mismatch");
  double w = 1.0;
  for (int nu = 0; nu < m.dim(); ++nu) {
    if (!(t[nu] >= 0.0 && t[nu] <= 1.0))
      throw std::domain_error("interpolation_weight: t outside [0,1]^d");
    const double mt = static_cast<double>(m.extent(nu)) * t[nu];
    const double frac = mt - std::floor(mt);
    w *= corner[nu] ? frac : 1.0 - frac;
  }
  return w;
}

/// Multilinear interpolation of a point-anchored field sampled on the grid
/// t = i/m (extents m+1).  Agrees with g at lattice points and is continuous;
/// corners with zero weight are skipped, so t on the upper faces is safe.
inline double multilinear_interpolate(const LatticeField& g,
                                      std::span<const double> t) {
  if (g.anchor() != Anchor::LatticePoints)
    throw std::invalid_argument(
        "multilinear_interpolate: field must be point-anchored");
  const int d = g.dim();
  if (static_cast<int>(t.size()) != d)
    throw std::invalid_argument("multilinear_interpolate: dimension mismatch");
  std::vector<std::int64_t> cells(d);
  std::vector<double> frac(d);
  std::int64_t base = 0;
  for (int nu = 0; nu < d; ++nu) {
    if (!(t[nu] >= 0.0 && t[nu] <= 1.0))
      throw std::domain_error("multilinear_interpolate: t outside [0,1]^d");
    cells[nu] = g.shape().extent(nu) - 1;
    const double mt = static_cast<double>(cells[nu]) * t[nu];
    const double fl = std::floor(mt);
    frac[nu] = mt - fl;
    base += static_cast<std::int64_t>(fl) * g.shape().stride(nu);
  }
  double acc = 0.0;
  for_each_corner(d, [&](std::span<const int> corner, int) {
    double w = 1.0;
    std::int64_t offset = 0;
    for (int nu = 0; nu < d; ++nu) {
      w *= corner[nu] ? frac[nu] : 1.0 - frac[nu];
      offset += corner[nu] ? g.shape().stride(nu) : 0;
    }
    if (w != 0.0) acc += g[base + offset] * w;
  });
  return acc;
}

struct VariationMeta {
  LatticeShape m;       // cells per axis of the generating increment field
  VariationKind kind;
  int power = 0;        // p for power variations, 0 otherwise
};

struct VariationProcess {
  LatticeField values;  // point-anchored, extents m+1
  VariationMeta meta;

  /// Value at an off-lattice point; the evaluation mode is explicit because
  /// the piecewise-constant and multilinear readings differ asymptotically.
  double value_at(std::span<const double> t, EvalMode mode) const {
    if (mode == EvalMode::Multilinear) return multilinear_interpolate(values, t);
    const MultiIndex i = floor_scale(RealVec(t.begin(), t.end()), meta.m);
    std::int64_t flat = 0;
    for (int nu = 0; nu < values.dim(); ++nu)
      flat += i[nu] * values.shape().stride(nu);
    return values[flat];
  }
};

namespace detail {

template <class F>
VariationProcess variation_from_cells(const LatticeField& incr, F&& f,
                                      VariationKind kind, int power) {
  if (incr.anchor() != Anchor::UnitCells)
    throw std::invalid_argument("variation: input must be cell-anchored");
  LatticeField cells(incr.shape(), Anchor::UnitCells);
  for (std::int64_t i = 0; i < incr.shape().total(); ++i) {
    const double v = f(incr[i]);
    if (!std::isfinite(v))
      throw std::domain_error("variation: non-finite functional value");
    cells[i] = v;
  }
  return VariationProcess{cumulative_field(cells),
                          VariationMeta{incr.shape(), kind, power}};
}

}  // namespace detail

/// U_f: rectangular partial sums of f over the standardized increments; value
/// at lattice point i is the sum of f over all cells <= i.
inline VariationProcess generalized_variation(
    const LatticeField& incr, const std::function<double(double)>& f) {
  return detail::variation_from_cells(incr, f, VariationKind::RawU, 0);
}

inline VariationProcess generalized_variation(const LatticeField& incr,
                                              const HermiteExpansion& e) {
  return detail::variation_from_cells(
      incr, [&](double u) { return e.evaluate(u); }, VariationKind::RawU, 0);
}

/// Entrywise division of a raw variation by <c>^{1/2}.
inline VariationProcess rescaled_variation(const VariationProcess& u,
                                           std::span<const double> H,
                                           int rank) {
  if (u.meta.kind != VariationKind::RawU)
    throw std::invalid_argument("rescaled_variation: input must be a raw variation");
  const double c = scaling_factor(H, rank, u.meta.m).product;
  VariationProcess out = u;
  const double inv = 1.0 / std::sqrt(c);
  for (auto& v : out.values.values()) v *= inv;
  out.meta.kind = VariationKind::RescaledU;
  return out;
}

/// V_p: prefix sums of p-th powers of the standardized increments scaled by
/// <m>^{-1} (identical to the conventional normalization of signed power
/// variations of the underlying sheet).
inline VariationProcess power_variation(const LatticeField& incr, int p) {
  if (p < 1) throw std::invalid_argument("power_variation: p must be >= 1");
  VariationProcess out = detail::variation_from_cells(
      incr, [p](double u) { return int_pow(u, p); }, VariationKind::PowerV, p);
  const double inv = 1.0 / static_cast<double>(incr.shape().total());
  for (auto& v : out.values.values()) v *= inv;
  return out;
}

/// Deterministic remainder beta_p(t) of the fluctuation decomposition:
/// (<m>/<c>^{1/2}) gamma_p (<t> - <floor(mt)/m>).  Vanishes identically for
/// odd p and at every lattice point.
inline double beta_remainder(std::span<const double> H, const LatticeShape& m,
                             int p, std::span<const double> t) {
  if (p < 1) throw std::invalid_argument("beta_remainder: p must be >= 1");
  const double gamma_p = gaussian_moment(p);
  if (gamma_p == 0.0) return 0.0;
  const int rank = power_expansion(p).rank;
  const double c = scaling_factor(H, rank, m).product;
  double prod_t = 1.0, prod_floor = 1.0;
  for (int nu = 0; nu < m.dim(); ++nu) {
    if (!(t[nu] >= 0.0 && t[nu] <= 1.0))
      throw std::domain_error("beta_remainder: t outside [0,1]^d");
    const double mv = static_cast<double>(m.extent(nu));
    prod_t *= t[nu];
    prod_floor *= std::floor(mv * t[nu]) / mv;
  }
  const double scale = static_cast<double>(m.total()) / std::sqrt(c);
  return scale * gamma_p * (prod_t - prod_floor);
}

/// Rescaled power-variation fluctuation together with its decomposition
/// terms.  At lattice points the fluctuation equals the rescaled variation of
/// rho_p = y^p - gamma_p (the remainder vanishes there); off-lattice it is
/// the piecewise-constant reading minus beta.
struct FluctuationDecomposition {
  VariationProcess power_v;     // V_p
  VariationProcess rescaled_u;  // rescaled variation of rho_p
  VariationProcess fluct;       // fluctuation sampled at lattice points
  RealVec H;
  int p = 0;
  int rank = 0;
  double scale = 0.0;  // <m>/<c>^{1/2}

  double beta(std::span<const double> t) const {
    return beta_remainder(H, power_v.meta.m, p, t);
  }

  double fluctuation_at(std::span<const double> t) const {
    return rescaled_u.value_at(t, EvalMode::PiecewiseConstant) - beta(t);
  }

  /// Multilinear interpolation of the fluctuation; the interpolated remainder
  /// vanishes identically, so this is the interpolated rescaled variation.
  double interpolated_at(std::span<const double> t) const {
    return multilinear_interpolate(fluct.values, t);
  }
};

inline FluctuationDecomposition fluctuation(const LatticeField& incr,
                                            const RealVec& H, int p) {
  if (p < 1) throw std::invalid_argument("fluctuation: p must be >= 1");
  if (static_cast<int>(H.size()) != incr.dim())
    throw std::invalid_argument("fluctuation: dimension mismatch");
  const int rank = power_expansion(p).rank;
  const double gamma_p = gaussian_moment(p);

  VariationProcess power_v = power_variation(incr, p);
  VariationProcess raw = detail::variation_from_cells(
      incr, [p, gamma_p](double u) { return int_pow(u, p) - gamma_p; },
      VariationKind::RawU, p);
  VariationProcess rescaled_u = rescaled_variation(raw, H, rank);
  rescaled_u.meta.power = p;
  VariationProcess fluct = rescaled_u;
  fluct.meta.kind = VariationKind::Fluctuation;
  const double c = scaling_factor(H, rank, incr.shape()).product;
  const double scale =
      static_cast<double>(incr.shape().total()) / std::sqrt(c);
  return FluctuationDecomposition{std::move(power_v), std::move(rescaled_u),
                                  std::move(fluct), H, p, rank, scale};
}

}  // namespace fbsvar
