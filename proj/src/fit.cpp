#include "skewstab/fit.hpp"

#include <cmath>

#include "skewstab/error.hpp"

namespace skewstab {

ExponentialFit fit_exponential(const std::vector<double>& ks, const std::vector<double>& values, double floor) {
  if (ks.size() != values.size()) throw PreconditionError("fit_exponential: size mismatch");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double v = std::abs(values[i]);
    if (v > floor && std::isfinite(v)) {
      x.push_back(ks[i]);
      y.push_back(std::log(v));
    }
  }
  ExponentialFit fit;
  fit.points = x.size();
  if (x.size() < 2) {
    fit.collapsed = true;
    fit.rate = 0.0;
    fit.constant = x.empty() ? 0.0 : std::exp(y[0]);
    return fit;
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw PreconditionError("fit_exponential: abscissae must not all coincide");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  fit.rate = std::exp(slope);
  fit.constant = std::exp(intercept);
  if (syy <= 1e-300) {
    fit.r2 = 1.0;
  } else {
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - (intercept + slope * x[i]);
      sse += r * r;
    }
    fit.r2 = 1.0 - sse / syy;
  }
  return fit;
}

}  // namespace skewstab
