// Prints the limit regime, shifted Hurst parameter and variance constant for
// the quadratic functional across a sweep of Hurst parameters.

#include <cstdio>

#include "fbsvar/hermite.hpp"
#include "fbsvar/limits.hpp"

int main() {
  fbsvar::HermiteExpansion p2;
  p2.coeffs[2] = 1.0;
  p2.rank = 2;
  p2.truncation = 2;

  std::printf("%6s %8s %10s %14s\n", "H", "regime", "H_tilde", "Lambda");
  for (double h = 0.15; h < 1.0; h += 0.1) {
    const fbsvar::RealVec H = {h};
    const auto regime = fbsvar::classify_regime(H, p2.rank);
    const auto shifted = fbsvar::hurst_shift(H, p2.rank);
    const double lambda = fbsvar::lambda_constant(H, p2);
    std::printf("%6.2f %8s %10.4f %14.8f\n", h,
                regime.regime == fbsvar::Regime::NCLT ? "NCLT" : "CLT",
                shifted[0], lambda);
  }
  return 0;
}
