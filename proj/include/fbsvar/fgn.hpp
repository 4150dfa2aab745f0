// Exact sampling of the rescaled-increment Gaussian field of a fractional
// Brownian sheet.  The increment covariance is a tensor product of
// one-dimensional fractional Gaussian noise covariances, so a draw is white
// noise pushed through one Toeplitz square root per axis (circulant embedding
// by default, dense Cholesky as fallback).

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbsvar/errors.hpp"
#include "fbsvar/fft.hpp"
#include "fbsvar/lattice.hpp"
#include "fbsvar/rng.hpp"

namespace fbsvar {

inline void check_hurst(double H) {
  if (!(H > 0.0 && H < 1.0))
    throw std::domain_error("Hurst parameter must lie in (0,1)");
}

inline void check_hurst(std::span<const double> H) {
  if (H.empty()) throw std::invalid_argument("Hurst vector must be non-empty");
  for (double h : H) check_hurst(h);
}

/// Autocovariance r_H(j) of unit-spaced fractional Gaussian noise,
/// (|j+1|^{2H} - 2|j|^{2H} + |j-1|^{2H}) / 2.  r_H(0) = 1.
inline double fgn_autocovariance(double H, std::int64_t j) {
  check_hurst(H);
  const double aj = std::abs(static_cast<double>(j));
  const double e = 2.0 * H;
  return 0.5 * (std::pow(aj + 1.0, e) - 2.0 * std::pow(aj, e) +
                std::pow(std::abs(aj - 1.0), e));
}

/// One-axis fractional Brownian motion covariance
/// (|s|^{2H} + |t|^{2H} - |s-t|^{2H}) / 2.
inline double fbm_covariance(double H, double s, double t) {
  check_hurst(H);
  const double e = 2.0 * H;
  return 0.5 * (std::pow(std::abs(s), e) + std::pow(std::abs(t), e) -
                std::pow(std::abs(s - t), e));
}

/// Product covariance of the anisotropic fractional Brownian sheet.
inline double fbs_covariance(std::span<const double> H,
                             std::span<const double> s,
                             std::span<const double> t) {
  if (H.size() != s.size() || H.size() != t.size())
    throw std::invalid_argument("fbs_covariance: dimension mismatch");
  double prod = 1.0;
  for (std::size_t nu = 0; nu < H.size(); ++nu)
    prod *= fbm_covariance(H[nu], s[nu], t[nu]);
  return prod;
}

enum class FactorMethod { Circulant, Cholesky };

struct FactorOptions {
  FactorMethod method = FactorMethod::Circulant;
  double eps_clip = 1e-9;
  bool allow_fallback = true;  // retry with Cholesky on a bad embedding
};

/// Linear map taking standard white noise to one axis of fractional Gaussian
/// noise with autocovariance r_H.  Immutable and safe to share across threads.
class FgnFactor {
 public:
  static FgnFactor build(double H, std::int64_t m, FactorOptions opts = {}) {
    check_hurst(H);
    if (m < 1) throw std::invalid_argument("FgnFactor: m must be >= 1");
    if (opts.eps_clip < 0.0)
      throw std::invalid_argument("FgnFactor: eps_clip must be >= 0");
    if (opts.method == FactorMethod::Circulant) {
      FgnFactor f;
      if (f.build_circulant(H, m, opts.eps_clip)) return f;
      if (!opts.allow_fallback)
        throw numeric_error(
            "FgnFactor: circulant embedding eigenvalue below -eps_clip");
    }
    FgnFactor f;
    f.build_cholesky(H, m);
    return f;
  }

  FactorMethod method() const { return method_; }
  std::int64_t input_length() const {
    return method_ == FactorMethod::Circulant ? embed_ : m_;
  }
  std::int64_t output_length() const { return m_; }

  /// Circulant eigenvalues (diagnostic; empty for the Cholesky method).
  std::span<const double> spectrum() const { return eigs_; }

  /// Applies the factor to one strided input line.
  void apply(const double* in, std::int64_t in_stride, double* out,
             std::int64_t out_stride) const {
    if (method_ == FactorMethod::Circulant) {
      std::vector<std::complex<double>> z(static_cast<std::size_t>(embed_));
      for (std::int64_t j = 0; j < embed_; ++j) z[j] = in[j * in_stride];
      fft_pow2(z, false);
      for (std::int64_t j = 0; j < embed_; ++j) z[j] *= sqrt_eigs_[j];
      fft_pow2(z, true);
      for (std::int64_t j = 0; j < m_; ++j) out[j * out_stride] = z[j].real();
    } else {
      // y = L x, lower-triangular Toeplitz factor applied densely
      for (std::int64_t i = m_ - 1; i >= 0; --i) {
        double acc = 0.0;
        const double* row = lower_.data() + i * m_;
        for (std::int64_t j = 0; j <= i; ++j) acc += row[j] * in[j * in_stride];
        out[i * out_stride] = acc;
      }
    }
  }

  /// Realized covariance A A^T (m x m, row-major); test/diagnostic use.
  std::vector<double> realized_covariance() const {
    const std::int64_t n = input_length();
    std::vector<double> basis(static_cast<std::size_t>(n), 0.0);
    std::vector<double> col(static_cast<std::size_t>(m_));
    std::vector<double> a(static_cast<std::size_t>(m_ * n));
    for (std::int64_t j = 0; j < n; ++j) {
      basis[j] = 1.0;
      apply(basis.data(), 1, col.data(), 1);
      basis[j] = 0.0;
      for (std::int64_t i = 0; i < m_; ++i) a[i * n + j] = col[i];
    }
    std::vector<double> cov(static_cast<std::size_t>(m_ * m_), 0.0);
    for (std::int64_t i = 0; i < m_; ++i)
      for (std::int64_t k = 0; k < m_; ++k) {
        double acc = 0.0;
        for (std::int64_t j = 0; j < n; ++j) acc += a[i * n + j] * a[k * n + j];
        cov[i * m_ + k] = acc;
      }
    return cov;
  }

 private:
  bool build_circulant(double H, std::int64_t m, double eps_clip) {
    m_ = m;
    method_ = FactorMethod::Circulant;
    embed_ = next_pow2(std::max<std::int64_t>(2 * (m - 1), 1));
    // First circulant row: r(j) up to the midpoint, mirrored beyond it.
    std::vector<std::complex<double>> c(static_cast<std::size_t>(embed_));
    for (std::int64_t j = 0; j < embed_; ++j) {
      const std::int64_t lag = std::min(j, embed_ - j);
      c[j] = fgn_autocovariance(H, lag);
    }
    fft_pow2(c, false);
    eigs_.resize(static_cast<std::size_t>(embed_));
    sqrt_eigs_.resize(static_cast<std::size_t>(embed_));
    for (std::int64_t j = 0; j < embed_; ++j) {
      double lambda = c[j].real();
      if (lambda < -eps_clip) return false;
      if (lambda < 0.0) lambda = 0.0;
      eigs_[j] = lambda;
      sqrt_eigs_[j] = std::sqrt(lambda);
    }
    return true;
  }

  void build_cholesky(double H, std::int64_t m) {
    m_ = m;
    method_ = FactorMethod::Cholesky;
    lower_.assign(static_cast<std::size_t>(m * m), 0.0);
    std::vector<double> r(static_cast<std::size_t>(m));
    for (std::int64_t j = 0; j < m; ++j) r[j] = fgn_autocovariance(H, j);
    for (std::int64_t i = 0; i < m; ++i) {
      for (std::int64_t j = 0; j <= i; ++j) {
        double acc = r[i - j];
        for (std::int64_t k = 0; k < j; ++k)
          acc -= lower_[i * m + k] * lower_[j * m + k];
        if (i == j) {
          if (acc <= 0.0)
            throw numeric_error(
                "FgnFactor: Cholesky breakdown, covariance not positive "
                "definite");
          lower_[i * m + j] = std::sqrt(acc);
        } else {
          lower_[i * m + j] = acc / lower_[j * m + j];
        }
      }
    }
  }

  std::int64_t m_ = 0;
  std::int64_t embed_ = 0;
  FactorMethod method_ = FactorMethod::Circulant;
  std::vector<double> eigs_;
  std::vector<double> sqrt_eigs_;
  std::vector<double> lower_;
};

/// Samples the standardized increment field of a fractional Brownian sheet on
/// a fixed lattice.  Construction factorizes the per-axis covariances once;
/// sample() is const and thread-safe, and a given seed yields a bit-identical
/// field regardless of scheduling.
class IncrementFieldSampler {
 public:
  IncrementFieldSampler(RealVec H, LatticeShape m, FactorOptions opts = {})
      : H_(std::move(H)), m_(std::move(m)) {
    check_hurst(H_);
    if (static_cast<int>(H_.size()) != m_.dim())
      throw std::invalid_argument(
          "IncrementFieldSampler: Hurst/shape dimension mismatch");
    for (int nu = 0; nu < m_.dim(); ++nu)
      factors_.push_back(FgnFactor::build(H_[nu], m_.extent(nu), opts));
  }

  const RealVec& hurst() const { return H_; }
  const LatticeShape& shape() const { return m_; }
  const std::vector<FgnFactor>& factors() const { return factors_; }

  /// One draw of the unit-variance increment field {Z_i}.
  LatticeField sample(SeedSpec seed) const {
    const int d = m_.dim();
    std::vector<std::int64_t> dims(d);
    for (int nu = 0; nu < d; ++nu) dims[nu] = factors_[nu].input_length();

    LatticeShape cur_shape{dims};
    std::vector<double> cur(static_cast<std::size_t>(cur_shape.total()));
    CounterRng rng(seed);
    for (std::size_t i = 0; i < cur.size(); ++i)
      cur[i] = rng.gaussian_at(static_cast<std::uint64_t>(i));

    // One batched 1-D transform per axis; axis lengths shrink from the
    // embedding length to m as each factor is applied.
    for (int axis = 0; axis < d; ++axis) {
      dims[axis] = factors_[axis].output_length();
      LatticeShape next_shape{dims};
      std::vector<double> next(static_cast<std::size_t>(next_shape.total()));
      detail::for_each_line(
          cur_shape, axis,
          [&](std::int64_t base, std::int64_t, std::int64_t stride) {
            // Line bases enumerate the non-axis index combinations in the same
            // order for both shapes, so recompute the output base directly.
            MultiIndex idx = cur_shape.unflatten(base);
            std::int64_t out_base = 0;
            for (int nu = 0; nu < d; ++nu)
              if (nu != axis) out_base += idx[nu] * next_shape.stride(nu);
            factors_[axis].apply(cur.data() + base, stride,
                                 next.data() + out_base,
                                 next_shape.stride(axis));
          });
      cur_shape = next_shape;
      cur = std::move(next);
    }
    return LatticeField(m_, Anchor::UnitCells, std::move(cur));
  }

  /// fBs values on the (m+1)^d lattice t = i/m: the increment draw rescaled
  /// by <m^-H> and integrated; zero on every face with a zero coordinate.
  LatticeField sample_fbs(SeedSpec seed) const {
    LatticeField incr = sample(seed);
    double scale = 1.0;
    for (int nu = 0; nu < m_.dim(); ++nu)
      scale *= std::pow(static_cast<double>(m_.extent(nu)), -H_[nu]);
    for (double& v : incr.values()) v *= scale;
    return cumulative_field(incr);
  }

 private:
  RealVec H_;
  LatticeShape m_;
  std::vector<FgnFactor> factors_;
};

inline LatticeField sample_increment_field(const RealVec& H,
                                           const LatticeShape& m, SeedSpec seed,
                                           FactorOptions opts = {}) {
  return IncrementFieldSampler(H, m, opts).sample(seed);
}

inline LatticeField sample_fbs_lattice(const RealVec& H, const LatticeShape& m,
                                       SeedSpec seed, FactorOptions opts = {}) {
  return IncrementFieldSampler(H, m, opts).sample_fbs(seed);
}

}  // namespace fbsvar
