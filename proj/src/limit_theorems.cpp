#include "skewstab/limit_theorems.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "skewstab/error.hpp"
#include "skewstab/parallel.hpp"

namespace skewstab {

namespace {

constexpr double kCollapse = 1e-14;
constexpr double kFitFloor = 1e-13;

std::uint64_t ipow(int base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::uint64_t>(base);
  return r;
}

// Admissible word count at depth n (sum of the entries of A^(n-1)).
double count_words(const TransitionMatrix& a, int n) {
  if (n <= 0) return 1.0;
  std::vector<double> v(static_cast<std::size_t>(a.size()), 1.0);
  for (int k = 1; k < n; ++k) {
    std::vector<double> next(v.size(), 0.0);
    for (int i = 0; i < a.size(); ++i)
      for (int j = 0; j < a.size(); ++j)
        if (a.allowed(i, j)) next[static_cast<std::size_t>(j)] += v[static_cast<std::size_t>(i)];
    v = std::move(next);
  }
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

int covariance_depth(const SystemSpec& sys, const Disintegration& mu0, const Observable& f, const Observable& g, int lag) {
  int depth = std::max({mu0.depth(), f.depth(), lag + g.depth(), 1});
  if (lag >= 1) depth = std::max(depth, lag - 1 + sys.offset_depth());
  return depth;
}

void check_compatible(const SystemSpec& sys, const Disintegration& mu0, const Observable& phi) {
  if (mu0.words->alphabet() != sys.alphabet() || phi.words()->alphabet() != sys.alphabet())
    throw PreconditionError("observable, measure and system use different alphabets");
  if (mu0.depth() < sys.offset_depth() - 1)
    throw PreconditionError("invariant-measure depth is below offset depth - 1");
}

double normal_cdf(double x, double sigma) { return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))); }

}  // namespace

// ---------------------------------------------------------------- Observable

Observable::Observable(WordSetPtr words, std::vector<PiecewiseLinearFn> fibers)
    : words_(std::move(words)), fibers_(std::move(fibers)) {
  if (!words_ || words_->depth() < 1) throw PreconditionError("observable needs a word set of depth >= 1");
  if (fibers_.size() != words_->size()) throw PreconditionError("observable needs one fiber function per admissible word");
}

Observable Observable::constant(const TransitionMatrix& matrix, double c) {
  auto words = make_word_set(matrix, 1);
  return Observable(words, std::vector<PiecewiseLinearFn>(words->size(), PiecewiseLinearFn::constant(c)));
}

Observable Observable::fiber_identity(const TransitionMatrix& matrix) {
  auto words = make_word_set(matrix, 1);
  return Observable(words, std::vector<PiecewiseLinearFn>(words->size(), PiecewiseLinearFn::identity()));
}

Observable Observable::base_only(const CylinderFunction& f) {
  std::vector<PiecewiseLinearFn> h;
  h.reserve(f.size());
  for (double v : f.values) h.push_back(PiecewiseLinearFn::constant(v));
  return Observable(f.words, std::move(h));
}

Observable Observable::symbol_indicator(const TransitionMatrix& matrix, Symbol symbol) {
  if (symbol < 0 || symbol >= matrix.size()) throw PreconditionError("indicator symbol outside the alphabet");
  auto words = make_word_set(matrix, 1);
  std::vector<double> v(words->size(), 0.0);
  for (std::size_t i = 0; i < words->size(); ++i) v[i] = words->word(i)[0] == symbol ? 1.0 : 0.0;
  return base_only(CylinderFunction(words, std::move(v)));
}

bool Observable::base_only() const noexcept {
  return std::all_of(fibers_.begin(), fibers_.end(), [](const PiecewiseLinearFn& h) { return h.is_constant(); });
}

double Observable::sup_norm() const noexcept {
  double s = 0.0;
  for (const auto& h : fibers_) s = std::max(s, h.sup_norm());
  return s;
}

double Observable::fiber_lipschitz() const noexcept {
  double l = 0.0;
  for (const auto& h : fibers_) l = std::max(l, h.lipschitz());
  return l;
}

double Observable::base_lipschitz(Theta theta) const {
  auto gap = [&](std::size_t i, std::size_t j) {
    // The difference is piecewise linear with breakpoints in the union.
    double best = 0.0;
    for (const auto* h : {&fibers_[i], &fibers_[j]})
      for (double y : h->breakpoints()) best = std::max(best, std::abs(fibers_[i](y) - fibers_[j](y)));
    return best;
  };
  return max_pair_ratio(*words_, theta, gap).value;
}

double Observable::lipschitz(Theta theta) const { return base_lipschitz(theta) + fiber_lipschitz(); }

Observable Observable::shifted(double c) const {
  std::vector<PiecewiseLinearFn> h;
  h.reserve(fibers_.size());
  for (const auto& f : fibers_) h.push_back(f.shifted(c));
  return Observable(words_, std::move(h));
}

Observable Observable::scaled(double c) const {
  std::vector<PiecewiseLinearFn> h;
  h.reserve(fibers_.size());
  for (const auto& f : fibers_) h.push_back(f.scaled(c));
  return Observable(words_, std::move(h));
}

// ---------------------------------------------------------------- integrals

double integrate_observable(const Disintegration& mu, const Observable& phi, const BaseWeights& weights) {
  if (phi.depth() > mu.depth()) throw PreconditionError("observable depth exceeds the disintegration depth");
  if (phi.words()->alphabet() != mu.words->alphabet()) throw PreconditionError("observable alphabet mismatch");
  const std::uint64_t drop = ipow(mu.words->alphabet(), mu.depth() - phi.depth());
  const auto masses = cylinder_masses(*mu.words, weights);
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    s += masses[i] * integrate(mu.fibers[i], phi.fiber(phi.words()->index_of_code(mu.words->code(i) / drop)));
  return s;
}

FiberAverage fiber_average(const Disintegration& mu0, const Observable& phi, Theta theta) {
  if (phi.depth() > mu0.depth()) throw PreconditionError("observable depth exceeds the disintegration depth");
  const std::uint64_t drop = ipow(mu0.words->alphabet(), mu0.depth() - phi.depth());
  std::vector<double> s(mu0.size());
  for (std::size_t i = 0; i < mu0.size(); ++i) {
    const double mass = mu0.fibers[i].total_weight();
    if (!(mass > 0.0)) throw PreconditionError("fiber average undefined: vanishing marginal density");
    s[i] = integrate(mu0.fibers[i], phi.fiber(phi.words()->index_of_code(mu0.words->code(i) / drop))) / mass;
  }
  FiberAverage out;
  out.s = CylinderFunction(mu0.words, std::move(s));
  out.lip_s = lipschitz_seminorm(out.s, theta).value;
  const double l = phi.lipschitz(theta);
  out.bound = std::max(l, phi.sup_norm()) * lip_constant(mu0, theta).value + l;
  out.margin = out.bound - out.lip_s;
  return out;
}

// ---------------------------------------------------------------- correlations

namespace {

CylinderFunction base_values(const Observable& phi) {
  std::vector<double> v(phi.words()->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = phi.fiber(i)(0.0);
  return CylinderFunction(phi.words(), std::move(v));
}

}  // namespace

double exact_covariance(const SystemSpec& sys, const Disintegration& mu0, const Observable& f, const Observable& g,
                        int lag, std::size_t word_budget, unsigned threads) {
  if (lag < 0) throw PreconditionError("lag must be >= 0");
  check_compatible(sys, mu0, f);
  check_compatible(sys, mu0, g);
  const int depth = covariance_depth(sys, mu0, f, g, lag);
  if (count_words(sys.matrix(), depth) > static_cast<double>(word_budget))
    throw BudgetError("word sum at depth " + std::to_string(depth) + " exceeds the word budget");
  const WordSet words(sys.matrix(), depth);
  const int n = sys.alphabet();
  const int d = sys.offset_depth();
  const std::uint64_t to_mu = ipow(n, depth - mu0.depth());
  const std::uint64_t to_f = ipow(n, depth - f.depth());
  const std::uint64_t to_g = ipow(n, depth - lag - g.depth());
  const std::uint64_t g_mod = ipow(n, g.depth());
  const std::uint64_t d_mod = ipow(n, d);

  std::vector<double> cross(words.size()), fs(words.size()), gs(words.size());
  parallel_for(words.size(), threads, [&](std::size_t t) {
    const std::uint64_t code = words.code(t);
    const double mass = cylinder_mass(sys.weights(), words.word(t));
    AffineMap orbit{1.0, 0.0};
    for (int j = 0; j < lag; ++j) {
      const std::uint64_t window = (code / ipow(n, depth - j - d)) % d_mod;
      orbit = sys.fiber_map_by_code(window).after(orbit);
    }
    const auto& hf = f.fiber(f.words()->index_of_code(code / to_f));
    const auto& hg = g.fiber(g.words()->index_of_code((code / to_g) % g_mod));
    double a = 0.0, b = 0.0, c = 0.0;
    for (const auto& atom : mu0.fibers[mu0.words->index_of_code(code / to_mu)].atoms()) {
      const double fv = hf(atom.position);
      const double gv = hg(orbit(atom.position));
      a += atom.weight * fv * gv;
      b += atom.weight * fv;
      c += atom.weight * gv;
    }
    cross[t] = mass * a;
    fs[t] = mass * b;
    gs[t] = mass * c;
  });
  double a = 0.0, b = 0.0, c = 0.0;
  for (std::size_t t = 0; t < words.size(); ++t) {
    a += cross[t];
    b += fs[t];
    c += gs[t];
  }
  return a - b * c;
}

CorrelationCurve correlation_curve(const SystemSpec& sys, const Disintegration& mu0, const Observable& f,
                                   const Observable& g, int nmax, const CorrelationOptions& opts) {
  if (nmax < 0) throw PreconditionError("nmax must be >= 0");
  check_compatible(sys, mu0, f);
  check_compatible(sys, mu0, g);
  CorrelationCurve curve;
  // Base-only pairs are exact at every lag through powers of the transition matrix.
  const bool symbolic = f.base_only() && g.base_only();
  int last_exact = -1;
  for (int lag = 0; lag <= nmax; ++lag) {
    if (!symbolic &&
        count_words(sys.matrix(), covariance_depth(sys, mu0, f, g, lag)) > static_cast<double>(opts.word_budget))
      break;
    curve.lags.push_back(lag);
    curve.values.push_back(symbolic ? base_correlation(sys.weights(), base_values(g), base_values(f), lag)
                                    : exact_covariance(sys, mu0, f, g, lag, opts.word_budget, opts.threads));
    curve.std_errors.push_back(0.0);
    curve.exact.push_back(true);
    last_exact = lag;
  }

  if (last_exact < nmax) {
    const double fbar = integrate_observable(mu0, f, sys.weights());
    const double gbar = integrate_observable(mu0, g, sys.weights());
    const int first = last_exact + 1;
    const auto lags = static_cast<std::size_t>(nmax - first + 1);
    constexpr std::size_t kBlock = 1000;
    const std::size_t samples = std::max<std::size_t>(opts.mc_samples, 2);
    const std::size_t blocks = (samples + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> sum(blocks, std::vector<double>(lags, 0.0));
    std::vector<std::vector<double>> sum2(blocks, std::vector<double>(lags, 0.0));
    const int lookahead = std::max(f.depth(), g.depth());
    const std::uint64_t f_mod = ipow(sys.alphabet(), f.depth());
    const std::uint64_t g_mod = ipow(sys.alphabet(), g.depth());
    parallel_for(blocks, opts.threads, [&](std::size_t b) {
      const std::size_t end = std::min(samples, (b + 1) * kBlock);
      for (std::size_t s = b * kBlock; s < end; ++s) {
        const auto orbit = sample_orbit(sys, mix_seed(opts.seed, s), nmax + 1, opts.burn_in, lookahead);
        auto window = [&](std::size_t t, int k, std::uint64_t mod) {
          std::uint64_t c = 0;
          for (int i = 0; i < k; ++i) c = c * static_cast<std::uint64_t>(sys.alphabet()) + static_cast<std::uint64_t>(orbit.symbols[t + static_cast<std::size_t>(i)]);
          return c % mod;
        };
        const double f0 = f(window(0, f.depth(), f_mod), orbit.y[0]) - fbar;
        for (std::size_t l = 0; l < lags; ++l) {
          const std::size_t t = static_cast<std::size_t>(first) + l;
          const double p = f0 * (g(window(t, g.depth(), g_mod), orbit.y[t]) - gbar);
          sum[b][l] += p;
          sum2[b][l] += p * p;
        }
      }
    });
    const auto m = static_cast<double>(samples);
    for (std::size_t l = 0; l < lags; ++l) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t b = 0; b < blocks; ++b) {
        s += sum[b][l];
        s2 += sum2[b][l];
      }
      const double mean = s / m;
      curve.lags.push_back(first + static_cast<int>(l));
      curve.values.push_back(mean);
      curve.std_errors.push_back(std::sqrt(std::max(0.0, s2 / m - mean * mean) / m));
      curve.exact.push_back(false);
    }
  }

  std::vector<double> ks, vs;
  for (std::size_t i = 0; i < curve.lags.size(); ++i)
    if (curve.lags[i] >= 1 && curve.exact[i]) {
      ks.push_back(curve.lags[i]);
      vs.push_back(curve.values[i]);
    }
  std::size_t usable = 0;
  for (double v : vs) usable += std::abs(v) > kFitFloor;
  if (usable < 2) {
    ks.clear();
    vs.clear();
    for (std::size_t i = 0; i < curve.lags.size(); ++i)
      if (curve.lags[i] >= 1 && std::abs(curve.values[i]) > 3.0 * curve.std_errors[i]) {
        ks.push_back(curve.lags[i]);
        vs.push_back(curve.values[i]);
      }
  }
  curve.fit = ks.empty() ? ExponentialFit{0.0, 0.0, 1.0, 0, true} : fit_exponential(ks, vs, kFitFloor);
  return curve;
}

double base_composed_correlation(const SystemSpec& sys, const Disintegration& mu0, const Observable& psi,
                                 const Observable& phi, int lag) {
  if (!psi.base_only()) throw PreconditionError("psi must be constant along fibers");
  const auto avg = fiber_average(mu0, phi, sys.theta());
  return base_correlation(sys.weights(), base_values(psi), avg.s, lag);
}

// ---------------------------------------------------------------- Gordin

GordinNorms gordin_norms(const SystemSpec& sys, const Disintegration& mu0, const Observable& phi, int nmax) {
  if (nmax < 1) throw PreconditionError("gordin_norms needs nmax >= 1");
  check_compatible(sys, mu0, phi);
  const auto& weights = sys.weights();
  const auto avg = fiber_average(mu0, phi, sys.theta());
  const WordSet& words = *mu0.words;
  const int k = words.depth();
  const int n_sym = sys.alphabet();
  const auto masses = cylinder_masses(words, weights);
  double mean = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) mean += masses[i] * avg.s.values[i];
  std::vector<double> s(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) s[i] = avg.s.values[i] - mean;

  Eigen::MatrixXd p(n_sym, n_sym);
  for (int i = 0; i < n_sym; ++i)
    for (int j = 0; j < n_sym; ++j) p(i, j) = weights.transition(i, j);
  Eigen::RowVectorXd left = Eigen::RowVectorXd::Zero(n_sym);
  for (std::size_t i = 0; i < words.size(); ++i) left(words.word(i).back()) += masses[i] * s[i];

  GordinNorms out;
  for (int n = 0; n <= nmax; ++n) {
    double sq = 0.0;
    if (n == 0) {
      for (std::size_t i = 0; i < words.size(); ++i) sq += masses[i] * s[i] * s[i];
    } else if (n < k) {
      // Condition on the tail word x_n .. x_{k-1}.
      const WordSet tails(sys.matrix(), k - n);
      std::vector<double> acc(tails.size(), 0.0);
      const std::uint64_t mod = ipow(n_sym, k - n);
      for (std::size_t i = 0; i < words.size(); ++i) acc[tails.index_of_code(words.code(i) % mod)] += masses[i] * s[i];
      for (std::size_t v = 0; v < tails.size(); ++v) sq += acc[v] * acc[v] / cylinder_mass(weights, tails.word(v));
    } else {
      Eigen::MatrixXd bridge = Eigen::MatrixXd::Identity(n_sym, n_sym);
      for (int j = 0; j < n - k + 1; ++j) bridge = bridge * p;
      const Eigen::RowVectorXd row = left * bridge;
      for (int v = 0; v < n_sym; ++v) sq += row(v) * row(v) / weights.stationary(v);
    }
    out.norms.push_back(std::sqrt(std::max(0.0, sq)));
  }
  double acc = 0.0;
  for (double v : out.norms) out.partial_sums.push_back(acc += v);

  out.degenerate = std::all_of(out.norms.begin(), out.norms.end(), [](double v) { return v < kCollapse; });
  if (out.degenerate) {
    out.fit = ExponentialFit{0.0, 0.0, 1.0, 0, true};
    out.ratio_margin = 1.0;
    return out;
  }
  std::vector<double> ks;
  for (int n = 0; n <= nmax; ++n) ks.push_back(n);
  out.fit = fit_exponential(ks, out.norms, kCollapse);
  double worst = 0.0;
  for (int n = nmax / 2; n < nmax; ++n) {
    const double a = out.norms[static_cast<std::size_t>(n)];
    if (a < kCollapse) continue;
    worst = std::max(worst, out.norms[static_cast<std::size_t>(n) + 1] / a);
  }
  out.ratio_margin = 1.0 - worst;
  return out;
}

// ---------------------------------------------------------------- variance and CLT

VarianceEstimate asymptotic_variance(const SystemSpec& sys, const Disintegration& mu0, const Observable& phi, int J,
                                     const CorrelationOptions& opts) {
  if (J < 1) throw PreconditionError("truncation J must be >= 1");
  VarianceEstimate est;
  est.curve = correlation_curve(sys, mu0, phi, phi, J, opts);
  const auto& c = est.curve.values;
  est.sigma2 = c[0];
  for (int j = 1; j <= J; ++j) {
    est.sigma2 += 2.0 * c[static_cast<std::size_t>(j)];
    est.std_error += 2.0 * est.curve.std_errors[static_cast<std::size_t>(j)];
  }
  const auto& fit = est.curve.fit;
  if (fit.collapsed || fit.rate == 0.0)
    est.tail_bound = 0.0;
  else if (fit.rate >= 1.0)
    est.tail_bound = std::numeric_limits<double>::infinity();
  else
    est.tail_bound = 2.0 * fit.constant * std::pow(fit.rate, J + 1) / (1.0 - fit.rate);
  const double slack = est.tail_bound + 3.0 * est.std_error + 1e-12 * std::abs(c[0]);
  if (est.sigma2 < -slack)
    throw ConvergenceError("asymptotic variance " + std::to_string(est.sigma2) + " is below -tailBound: inconsistent truncation");
  est.coboundary = std::abs(est.sigma2) <= slack;
  return est;
}

double ks_statistic_normal(std::vector<double> samples, double sigma) {
  if (samples.empty()) throw PreconditionError("KS statistic needs samples");
  if (!(sigma > 0.0)) throw PreconditionError("KS reference needs sigma > 0");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf(samples[i], sigma);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

CltResult clt_experiment(const SystemSpec& sys, const Observable& phi, double mean, const VarianceEstimate& variance,
                         int n, int trials, std::uint64_t seed, unsigned threads, int burn_in) {
  if (trials < kMinTrials)
    throw PreconditionError("CLT needs at least " + std::to_string(kMinTrials) + " trials (got " + std::to_string(trials) + ")");
  if (n < 1) throw PreconditionError("CLT needs n >= 1");
  if (variance.coboundary || !(variance.sigma2 > variance.tail_bound))
    throw PreconditionError("coboundary regime, CLT statement vacuous");
  CltResult out;
  out.sigma2 = variance.sigma2;
  out.sigma_hat = std::sqrt(variance.sigma2);
  out.mean = mean;
  out.sums.assign(static_cast<std::size_t>(trials), 0.0);
  const int k = phi.depth();
  const auto alphabet = static_cast<std::uint64_t>(sys.alphabet());
  const std::uint64_t mod = ipow(sys.alphabet(), k);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    const auto orbit = sample_orbit(sys, mix_seed(seed, t), n, burn_in, k);
    std::uint64_t code = 0;
    for (int i = 0; i < k - 1; ++i) code = code * alphabet + static_cast<std::uint64_t>(orbit.symbols[static_cast<std::size_t>(i)]);
    double s = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
      code = (code * alphabet + static_cast<std::uint64_t>(orbit.symbols[i + static_cast<std::size_t>(k) - 1])) % mod;
      s += phi(code, orbit.y[i]) - mean;
    }
    out.sums[t] = s / std::sqrt(static_cast<double>(n));
  });
  out.ks = ks_statistic_normal(out.sums, out.sigma_hat);
  out.critical = 1.36 / std::sqrt(static_cast<double>(trials)) * kKsSlack;
  out.pass = out.ks <= out.critical;
  return out;
}

}  // namespace skewstab
