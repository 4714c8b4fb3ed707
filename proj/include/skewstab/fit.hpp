#pragma once

#include <cstddef>
#include <vector>

namespace skewstab {

struct ExponentialFit {
  double rate = 0.0;      ///< exp(slope) of the log-linear fit
  double constant = 0.0;  ///< exp(intercept)
  double r2 = 1.0;
  std::size_t points = 0;
  bool collapsed = false;  ///< fewer than two values above the floor
};

/// Least-squares fit of log v_k = log C + k log r over the values above
/// `floor`. Collapsed fits report rate 0.
ExponentialFit fit_exponential(const std::vector<double>& ks, const std::vector<double>& values, double floor);

}  // namespace skewstab
