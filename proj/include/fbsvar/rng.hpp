// Counter-based random number generation.  A (master seed, stream id) pair
// addresses an independent substream; every draw is a pure function of
// (seed, stream, counter), so results do not depend on scheduling.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <utility>

namespace fbsvar {

struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;
};

namespace detail {

// Philox2x64-10 (Salmon et al. round constants).
inline constexpr std::uint64_t kPhiloxM = 0xD2B74407B1CE6E93ULL;
inline constexpr std::uint64_t kPhiloxW = 0x9E3779B97F4A7C15ULL;

inline std::pair<std::uint64_t, std::uint64_t> philox2x64(std::uint64_t key,
                                                          std::uint64_t c0,
                                                          std::uint64_t c1) {
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 prod =
        static_cast<unsigned __int128>(kPhiloxM) * c0;
    const std::uint64_t lo = static_cast<std::uint64_t>(prod);
    const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
    c0 = hi ^ key ^ c1;
    c1 = lo;
    key += kPhiloxW;
  }
  return {c0, c1};
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// 64-bit FNV-1a, used to derive stream ids from experiment names.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Stream id for replication r of the experiment identified by tag.
inline std::uint64_t stream_for(std::uint64_t tag, std::uint64_t r) {
  return detail::splitmix64(tag ^ detail::splitmix64(r + 1));
}

/// Quantile of the standard normal distribution (Wichura's AS241, PPND16).
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("inverse_normal_cdf: p must lie in (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) *
                    r +
                4.5921953931549871457e+4) *
                   r +
               1.3731693765509461125e+4) *
                  r +
              1.9715909503065514427e+3) *
                 r +
             1.3314166789178437745e+2) *
                r +
            3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) *
                    r +
                2.1213794301586595867e+4) *
                   r +
               5.3941960214247511077e+3) *
                  r +
              6.8718700749205790830e+2) *
                 r +
             4.2313330701600911252e+1) *
                r +
            1.0);
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double num, den;
  if (r <= 5.0) {
    r -= 1.6;
    num = ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
               2.41780725177450611770e-1) *
                  r +
              1.27045825245236838258e+0) *
                 r +
             3.64784832476320460504e+0) *
                r +
            5.76949722146069140550e+0) *
               r +
           4.63033784615654529590e+0) *
              r +
          1.42343711074968357734e+0;
    den = ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
               1.51986665636164571966e-2) *
                  r +
              1.48103976427480074590e-1) *
                 r +
             6.89767334985100004550e-1) *
                r +
            1.67638483018380384940e+0) *
               r +
           2.05319162663775882187e+0) *
              r +
          1.0;
  } else {
    r -= 5.0;
    num = ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
               1.24266094738807843860e-3) *
                  r +
              2.65321895265761230930e-2) *
                 r +
             2.96560571828504891230e-1) *
                r +
            1.78482653991729133580e+0) *
               r +
           5.46378491116411436990e+0) *
              r +
          6.65790464350110377720e+0;
    den = ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
               1.84631831751005468180e-5) *
                  r +
              7.86869131145613259100e-4) *
                 r +
             1.48753612908506148525e-2) *
                r +
            1.36929880922735805310e-1) *
               r +
           5.99832206555887937690e-1) *
              r +
          1.0;
  }
  const double v = num / den;
  return (q < 0.0) ? -v : v;
}

/// Reproducible substream of uniforms/Gaussians addressed by a running counter.
class CounterRng {
 public:
  explicit CounterRng(SeedSpec seed) : key_(seed.master), hi_(seed.stream) {}

  /// 64 random bits for counter index i (stateless).
  std::uint64_t bits_at(std::uint64_t i) const {
    const auto block = detail::philox2x64(key_, hi_, i >> 1);
    return (i & 1u) ? block.second : block.first;
  }

  /// Uniform in the open interval (0,1) for counter index i.
  double uniform_at(std::uint64_t i) const {
    return (static_cast<double>(bits_at(i) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard Gaussian via inverse-CDF transform for counter index i.
  double gaussian_at(std::uint64_t i) const {
    return inverse_normal_cdf(uniform_at(i));
  }

  // sequential interface
  std::uint64_t next_bits() { return bits_at(counter_++); }
  double next_uniform() { return uniform_at(counter_++); }
  double next_gaussian() { return gaussian_at(counter_++); }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t hi_;
  std::uint64_t counter_ = 0;
};

}  // namespace fbsvar
