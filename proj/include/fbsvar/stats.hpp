// Sample statistics and seeded nonparametric bootstrap used by the
// experiment harness.  Bootstrap resampling is driven by the counter RNG, so
// standard errors are reproducible and independent of thread count.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbsvar/rng.hpp"

namespace fbsvar {

inline double sample_mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("sample_mean: empty sample");
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double sample_variance(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("sample_variance: need n >= 2");
  const double m = sample_mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(n - 1);
}

inline double sample_covariance(std::span<const double> x,
                                std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("sample_covariance: bad sample sizes");
  const double mx = sample_mean(x), my = sample_mean(y);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - mx) * (y[i] - my);
  return acc / static_cast<double>(x.size() - 1);
}

inline double sample_correlation(std::span<const double> x,
                                 std::span<const double> y) {
  const double c = sample_covariance(x, y);
  const double sx = std::sqrt(sample_variance(x));
  const double sy = std::sqrt(sample_variance(y));
  if (sx == 0.0 || sy == 0.0) return 0.0;
  return c / (sx * sy);
}

/// Standardized third moment (g1).
inline double sample_skewness(std::span<const double> x) {
  const double m = sample_mean(x);
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= static_cast<double>(x.size());
  m3 /= static_cast<double>(x.size());
  if (m2 == 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

/// Standardized fourth moment minus 3 (g2).
inline double sample_excess_kurtosis(std::span<const double> x) {
  const double m = sample_mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(x.size());
  m4 /= static_cast<double>(x.size());
  if (m2 == 0.0) return 0.0;
  return m4 / (m2 * m2) - 3.0;
}

inline double sample_median(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("sample_median: empty sample");
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return (n % 2 == 1) ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

struct BootstrapResult {
  double se = 0.0;
  double lo = 0.0;   // 1st percentile of the bootstrap distribution
  double hi = 0.0;   // 99th percentile
};

/// Nonparametric bootstrap over replication indices.  The statistic receives
/// a with-replacement resample of {0,...,n-1}; resamples are derived from the
/// seed alone.
inline BootstrapResult bootstrap(
    std::int64_t n, int resamples, SeedSpec seed,
    const std::function<double(std::span<const std::int64_t>)>& statistic) {
  if (n < 2 || resamples < 2)
    throw std::invalid_argument("bootstrap: need n >= 2 and resamples >= 2");
  CounterRng rng(seed);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  std::vector<double> reps(static_cast<std::size_t>(resamples));
  std::uint64_t counter = 0;
  for (int b = 0; b < resamples; ++b) {
    for (std::int64_t i = 0; i < n; ++i)
      idx[i] = static_cast<std::int64_t>(rng.bits_at(counter++) %
                                         static_cast<std::uint64_t>(n));
    reps[b] = statistic(idx);
  }
  const double m = sample_mean(reps);
  double acc = 0.0;
  for (double v : reps) acc += (v - m) * (v - m);
  BootstrapResult out;
  out.se = std::sqrt(acc / static_cast<double>(resamples - 1));
  std::sort(reps.begin(), reps.end());
  const auto pct = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return (i + 1 < reps.size()) ? reps[i] * (1.0 - frac) + reps[i + 1] * frac
                                 : reps.back();
  };
  out.lo = pct(0.01);
  out.hi = pct(0.99);
  return out;
}

}  // namespace fbsvar
