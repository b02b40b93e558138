#pragma once

#include <cmath>

namespace testsupport {

/// One-sided sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
/// Ties are expected to be dropped by the caller.
inline double sign_test_p(int wins, int losses) {
  const int n = wins + losses;
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                              std::lgamma(n - k + 1.0);
    p += std::exp(log_choose - n * std::log(2.0));
  }
  return p;
}

}  // namespace testsupport
