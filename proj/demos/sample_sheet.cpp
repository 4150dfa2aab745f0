// Samples an anisotropic fractional Brownian sheet, forms the rescaled
// quadratic-variation fluctuation, and prints a short trace along the
// diagonal in both evaluation modes.

#include <cstdio>

#include "fbsvar/fgn.hpp"
#include "fbsvar/variations.hpp"

int main() {
  const fbsvar::RealVec H = {0.3, 0.7};
  const fbsvar::LatticeShape m{{64, 64}};
  const fbsvar::IncrementFieldSampler sampler(H, m);

  const fbsvar::LatticeField incr = sampler.sample({/*master=*/42, /*stream=*/0});
  const auto fl = fbsvar::fluctuation(incr, H, /*p=*/2);

  std::printf("%8s %16s %16s %12s\n", "t", "piecewise", "multilinear", "beta");
  for (int i = 1; i <= 8; ++i) {
    const double tv = i / 8.0 - 1.0 / 128.0;  // off-lattice diagonal points
    const fbsvar::RealVec t = {tv, tv};
    std::printf("%8.4f %16.8f %16.8f %12.6f\n", tv, fl.fluctuation_at(t),
                fl.interpolated_at(t), fl.beta(t));
  }
  return 0;
}
