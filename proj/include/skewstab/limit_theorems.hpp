#pragma once

#include <cstdint>
#include <vector>

#include "skewstab/disintegration.hpp"
#include "skewstab/fit.hpp"
#include "skewstab/skew_product.hpp"

namespace skewstab {

/// phi(x, y) = h_{x_0..x_{k-1}}(y) with one piecewise-linear fiber function per depth-k word.
class Observable {
 public:
  Observable(WordSetPtr words, std::vector<PiecewiseLinearFn> fibers);
  static Observable constant(const TransitionMatrix& matrix, double c);
  /// phi(x, y) = y.
  static Observable fiber_identity(const TransitionMatrix& matrix);
  static Observable base_only(const CylinderFunction& f);
  /// phi(x, y) = 1 if x_0 == symbol.
  static Observable symbol_indicator(const TransitionMatrix& matrix, Symbol symbol);

  int depth() const { return words_->depth(); }
  const WordSetPtr& words() const noexcept { return words_; }
  const PiecewiseLinearFn& fiber(std::size_t index) const { return fibers_[index]; }
  const std::vector<PiecewiseLinearFn>& fibers() const noexcept { return fibers_; }
  bool base_only() const noexcept;
  double sup_norm() const noexcept;
  /// Largest fiber slope.
  double fiber_lipschitz() const noexcept;
  /// max over word pairs of sup_y |h_u - h_v| / word_distance.
  double base_lipschitz(Theta theta) const;
  /// base_lipschitz + fiber_lipschitz.
  double lipschitz(Theta theta) const;
  Observable shifted(double c) const;
  Observable scaled(double c) const;
  /// phi evaluated at the fiber over any word whose depth-k prefix has this code.
  double operator()(std::uint64_t prefix_code, double y) const { return fibers_[words_->index_of_code(prefix_code)](y); }

 private:
  WordSetPtr words_;
  std::vector<PiecewiseLinearFn> fibers_;
};

/// sum_w m([w]) int h_{w prefix} d mu|_w.
double integrate_observable(const Disintegration& mu, const Observable& phi, const BaseWeights& weights);

struct FiberAverage {
  CylinderFunction s;    ///< at the depth of mu
  double lip_s = 0.0;
  double bound = 0.0;    ///< max{L, ||phi||} lip(mu) + L
  double margin = 0.0;   ///< bound - lip_s
};

FiberAverage fiber_average(const Disintegration& mu0, const Observable& phi, Theta theta);

struct CorrelationOptions {
  std::size_t word_budget = std::size_t{1} << 14;
  std::size_t mc_samples = 200000;
  int burn_in = 40;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct CorrelationCurve {
  std::vector<int> lags;
  std::vector<double> values;
  std::vector<double> std_errors;  ///< 0 for exact lags
  std::vector<bool> exact;
  ExponentialFit fit;              ///< over lags >= 1 with |C_n| > 1e-13 (exact lags when available)
};

/// C_n = int f (g o F^n) d mu0 - int f d mu0 int (g o F^n) d mu0 for n = 0..nmax.
/// Exact word sums while the word count fits the budget, Monte Carlo beyond.
CorrelationCurve correlation_curve(const SystemSpec& sys, const Disintegration& mu0, const Observable& f,
                                   const Observable& g, int nmax, const CorrelationOptions& opts = {});

/// Exact value for a single lag; throws BudgetError when the word sum is too large.
double exact_covariance(const SystemSpec& sys, const Disintegration& mu0, const Observable& f, const Observable& g,
                        int lag, std::size_t word_budget = std::size_t{1} << 14, unsigned threads = 1);

/// int (psi o F^n) phi d mu0 - int psi int phi for base-only psi, via the fiber average of phi.
double base_composed_correlation(const SystemSpec& sys, const Disintegration& mu0, const Observable& psi,
                                 const Observable& phi, int lag);

struct GordinNorms {
  std::vector<double> norms;         ///< ||E(phi - int phi | F_n)||_2, n = 0..nmax
  std::vector<double> partial_sums;
  ExponentialFit fit;
  double ratio_margin = 1.0;         ///< 1 - max successive ratio over the tail
  bool degenerate = false;           ///< all norms below 1e-14
};

GordinNorms gordin_norms(const SystemSpec& sys, const Disintegration& mu0, const Observable& phi, int nmax);

struct VarianceEstimate {
  double sigma2 = 0.0;
  double tail_bound = 0.0;
  double std_error = 0.0;    ///< Monte Carlo contribution
  bool coboundary = false;
  CorrelationCurve curve;
};

/// C_0 + 2 sum_{j=1..J} C_j with tail bound 2 C tau^{J+1} / (1 - tau).
VarianceEstimate asymptotic_variance(const SystemSpec& sys, const Disintegration& mu0, const Observable& phi, int J,
                                     const CorrelationOptions& opts = {});

struct CltResult {
  double ks = 0.0;
  double critical = 0.0;
  bool pass = false;
  double sigma_hat = 0.0;
  double sigma2 = 0.0;
  double mean = 0.0;
  std::vector<double> sums;  ///< S_n / sqrt(n) per trial
};

inline constexpr int kMinTrials = 100;
inline constexpr double kKsSlack = 1.3;

/// Samples `trials` orbits, compares S_n / sqrt(n) to N(0, sigma2) by Kolmogorov-Smirnov.
CltResult clt_experiment(const SystemSpec& sys, const Observable& phi, double mean, const VarianceEstimate& variance,
                         int n, int trials, std::uint64_t seed, unsigned threads = 1, int burn_in = 40);

double ks_statistic_normal(std::vector<double> samples, double sigma);

}  // namespace skewstab
