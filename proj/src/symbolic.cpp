#include "skewstab/symbolic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "skewstab/error.hpp"
#include "skewstab/fit.hpp"

namespace skewstab {

namespace {

constexpr double kStochasticTol = 1e-12;

bool is_primitive(int n, const std::vector<std::uint8_t>& a) {
  // Wielandt: a primitive n x n matrix has A^k > 0 for k = (n-1)^2 + 1.
  const int bound = (n - 1) * (n - 1) + 1;
  std::vector<std::uint8_t> power = a;
  for (int k = 1; k <= bound; ++k) {
    if (std::all_of(power.begin(), power.end(), [](std::uint8_t v) { return v != 0; })) return true;
    std::vector<std::uint8_t> next(a.size(), 0);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l) {
        if (!power[static_cast<std::size_t>(i * n + l)]) continue;
        for (int j = 0; j < n; ++j)
          if (a[static_cast<std::size_t>(l * n + j)]) next[static_cast<std::size_t>(i * n + j)] = 1;
      }
    power = std::move(next);
  }
  return false;
}

std::uint64_t checked_power(int base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > (std::uint64_t{1} << 58) / static_cast<std::uint64_t>(base))
      throw BudgetError("word codes overflow 64 bits at depth " + std::to_string(exp));
    r *= static_cast<std::uint64_t>(base);
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------- TransitionMatrix

TransitionMatrix::TransitionMatrix(const std::vector<std::vector<int>>& rows) : n_(static_cast<int>(rows.size())) {
  if (n_ == 0) throw HypothesisViolation("transition matrix must be non-empty");
  entries_.assign(static_cast<std::size_t>(n_ * n_), 0);
  for (int i = 0; i < n_; ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != n_)
      throw HypothesisViolation("transition matrix must be square (row " + std::to_string(i) + ")");
    for (int j = 0; j < n_; ++j) {
      const int v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (v != 0 && v != 1) throw HypothesisViolation("transition matrix entries must be 0 or 1");
      entries_[static_cast<std::size_t>(i * n_ + j)] = static_cast<std::uint8_t>(v);
    }
  }
  for (int i = 0; i < n_; ++i) {
    bool row = false, col = false;
    for (int j = 0; j < n_; ++j) {
      row = row || allowed(i, j);
      col = col || allowed(j, i);
    }
    if (!row || !col) throw HypothesisViolation("symbol " + std::to_string(i) + " has an empty row or column");
  }
  if (!is_primitive(n_, entries_)) throw HypothesisViolation("transition matrix is not aperiodic (primitive)");
}

TransitionMatrix TransitionMatrix::full(int alphabet) {
  return TransitionMatrix(std::vector<std::vector<int>>(static_cast<std::size_t>(alphabet),
                                                        std::vector<int>(static_cast<std::size_t>(alphabet), 1)));
}

bool TransitionMatrix::is_full() const noexcept {
  return std::all_of(entries_.begin(), entries_.end(), [](std::uint8_t v) { return v != 0; });
}

bool TransitionMatrix::admissible(std::span<const Symbol> word) const noexcept {
  for (Symbol s : word)
    if (s < 0 || s >= n_) return false;
  for (std::size_t i = 1; i < word.size(); ++i)
    if (!allowed(word[i - 1], word[i])) return false;
  return true;
}

std::vector<std::vector<int>> TransitionMatrix::rows() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n_), std::vector<int>(static_cast<std::size_t>(n_)));
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = allowed(i, j);
  return out;
}

Theta::Theta(double value) : value_(value) {
  if (!(value > 0.0 && value < 1.0)) throw PreconditionError("theta must lie in (0, 1)");
}

// ---------------------------------------------------------------- BaseWeights

BaseWeights::BaseWeights(Kind kind, TransitionMatrix matrix, std::vector<double> pi, std::vector<double> p)
    : kind_(kind), matrix_(std::move(matrix)), pi_(std::move(pi)), p_(std::move(p)) {}

BaseWeights BaseWeights::bernoulli(std::vector<double> p, const TransitionMatrix& matrix) {
  const int n = matrix.size();
  if (static_cast<int>(p.size()) != n) throw HypothesisViolation("probability vector length must equal the alphabet size");
  if (!matrix.is_full()) throw HypothesisViolation("Bernoulli weights require the full shift");
  double sum = 0.0;
  for (double v : p) {
    if (!(v > 0.0)) throw HypothesisViolation("Bernoulli probabilities must be positive");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kStochasticTol) throw HypothesisViolation("weights must sum to 1");
  std::vector<double> rows(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rows[static_cast<std::size_t>(i * n + j)] = p[static_cast<std::size_t>(j)];
  return BaseWeights(Kind::Bernoulli, matrix, std::move(p), std::move(rows));
}

BaseWeights BaseWeights::markov(const std::vector<std::vector<double>>& transition, const TransitionMatrix& matrix,
                                std::optional<std::vector<double>> stationary) {
  const int n = matrix.size();
  if (static_cast<int>(transition.size()) != n) throw HypothesisViolation("stochastic matrix must be N x N");
  std::vector<double> p(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    const auto& row = transition[static_cast<std::size_t>(i)];
    if (static_cast<int>(row.size()) != n) throw HypothesisViolation("stochastic matrix must be N x N");
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = row[static_cast<std::size_t>(j)];
      if (matrix.allowed(i, j) ? !(v > 0.0) : v != 0.0)
        throw HypothesisViolation("stochastic matrix entry (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") incompatible with the transition matrix");
      sum += v;
      p[static_cast<std::size_t>(i * n + j)] = v;
    }
    if (std::abs(sum - 1.0) > kStochasticTol)
      throw HypothesisViolation("row " + std::to_string(i) + " of the stochastic matrix must sum to 1");
  }

  std::vector<double> pi;
  if (stationary) {
    pi = *stationary;
    if (static_cast<int>(pi.size()) != n) throw HypothesisViolation("stationary vector length must equal N");
  } else {
    // Solve pi (P - I) = 0 with sum(pi) = 1 by replacing one equation.
    Eigen::MatrixXd system(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) system(j, i) = p[static_cast<std::size_t>(i * n + j)] - (i == j ? 1.0 : 0.0);
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    const Eigen::VectorXd sol = system.fullPivLu().solve(rhs);
    pi.assign(sol.data(), sol.data() + n);
  }
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    if (!(pi[static_cast<std::size_t>(j)] > 0.0)) throw HypothesisViolation("stationary vector must be positive");
    total += pi[static_cast<std::size_t>(j)];
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += pi[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(i * n + j)];
    if (std::abs(acc - pi[static_cast<std::size_t>(j)]) > kStochasticTol)
      throw HypothesisViolation("stationary vector does not satisfy piP = pi");
  }
  if (std::abs(total - 1.0) > kStochasticTol) throw HypothesisViolation("stationary vector must sum to 1");
  return BaseWeights(Kind::Markov, matrix, std::move(pi), std::move(p));
}

std::vector<std::vector<double>> BaseWeights::transition_rows() const {
  const int n = size();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)].assign(p_.begin() + i * n, p_.begin() + (i + 1) * n);
  return out;
}

// ---------------------------------------------------------------- WordSet

WordSet::WordSet(const TransitionMatrix& matrix, int depth) : n_(matrix.size()), depth_(depth) {
  if (depth < 0) throw PreconditionError("word depth must be non-negative");
  const std::uint64_t span = checked_power(n_, depth);
  const auto words = enumerate_words(matrix, depth);
  symbols_.reserve(words.size() * static_cast<std::size_t>(depth));
  codes_.reserve(words.size());
  for (const auto& w : words) {
    symbols_.insert(symbols_.end(), w.begin(), w.end());
    std::uint64_t c = 0;
    for (Symbol s : w) c = c * static_cast<std::uint64_t>(n_) + static_cast<std::uint64_t>(s);
    codes_.push_back(c);
  }
  if (span <= (std::uint64_t{1} << 22)) {
    dense_.assign(static_cast<std::size_t>(span), -1);
    for (std::size_t i = 0; i < codes_.size(); ++i) dense_[static_cast<std::size_t>(codes_[i])] = static_cast<std::int32_t>(i);
  }
}

std::optional<std::size_t> WordSet::find_code(std::uint64_t code) const {
  if (!dense_.empty()) {
    if (code >= dense_.size() || dense_[static_cast<std::size_t>(code)] < 0) return std::nullopt;
    return static_cast<std::size_t>(dense_[static_cast<std::size_t>(code)]);
  }
  const auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
  if (it == codes_.end() || *it != code) return std::nullopt;
  return static_cast<std::size_t>(it - codes_.begin());
}

std::uint64_t WordSet::code_of(std::span<const Symbol> word) const {
  std::uint64_t c = 0;
  for (Symbol s : word) c = c * static_cast<std::uint64_t>(n_) + static_cast<std::uint64_t>(s);
  return c;
}

std::optional<std::size_t> WordSet::find(std::span<const Symbol> word) const {
  if (static_cast<int>(word.size()) != depth_) return std::nullopt;
  for (Symbol s : word)
    if (s < 0 || s >= n_) return std::nullopt;
  return find_code(code_of(word));
}

std::size_t WordSet::index_of(std::span<const Symbol> word) const {
  const auto idx = find(word);
  if (!idx) throw PreconditionError("word is not admissible at depth " + std::to_string(depth_));
  return *idx;
}

std::size_t WordSet::index_of_code(std::uint64_t code) const {
  const auto idx = find_code(code);
  if (!idx) throw PreconditionError("word code is not admissible at depth " + std::to_string(depth_));
  return *idx;
}

WordSetPtr make_word_set(const TransitionMatrix& matrix, int depth) {
  return std::make_shared<const WordSet>(matrix, depth);
}

CylinderFunction::CylinderFunction(WordSetPtr set, std::vector<double> vals) : words(std::move(set)), values(std::move(vals)) {
  if (!words) throw PreconditionError("cylinder function needs a word set");
  if (values.size() != words->size())
    throw PreconditionError("cylinder function value count must equal the admissible-word count");
}

CylinderFunction CylinderFunction::constant(WordSetPtr set, double value) {
  const auto n = set->size();
  return CylinderFunction(std::move(set), std::vector<double>(n, value));
}

// ---------------------------------------------------------------- free functions

std::vector<Word> enumerate_words(const TransitionMatrix& matrix, int n) {
  std::vector<Word> out;
  if (n <= 0) {
    out.emplace_back();
    return out;
  }
  Word current;
  current.reserve(static_cast<std::size_t>(n));
  auto extend = [&](auto&& self) -> void {
    if (static_cast<int>(current.size()) == n) {
      out.push_back(current);
      return;
    }
    for (Symbol s = 0; s < matrix.size(); ++s) {
      if (!current.empty() && !matrix.allowed(current.back(), s)) continue;
      current.push_back(s);
      self(self);
      current.pop_back();
    }
  };
  extend(extend);
  return out;
}

double word_distance(std::span<const Symbol> w1, std::span<const Symbol> w2, Theta theta) {
  if (w1.size() != w2.size()) throw PreconditionError("word_distance needs words of equal depth");
  double d = 0.0, power = 1.0;
  for (std::size_t i = 0; i < w1.size(); ++i) {
    if (w1[i] != w2[i]) d += power;
    power *= theta.value();
  }
  return d;
}

double word_tail_diameter(int n, Theta theta) {
  return std::pow(theta.value(), n) / (1.0 - theta.value());
}

double cylinder_mass(const BaseWeights& weights, std::span<const Symbol> word) {
  if (word.empty()) return 1.0;
  if (!weights.matrix().admissible(word)) throw PreconditionError("cylinder_mass of an inadmissible word");
  double m = weights.stationary(word[0]);
  for (std::size_t i = 1; i < word.size(); ++i) m *= weights.transition(word[i - 1], word[i]);
  return m;
}

double jacobian_weight(const BaseWeights& weights, Symbol i, std::span<const Symbol> word) {
  if (word.empty()) return weights.stationary(i);
  const Symbol first = word[0];
  if (!weights.matrix().allowed(i, first)) return 0.0;
  if (weights.kind() == BaseWeights::Kind::Bernoulli) return weights.stationary(i);
  return weights.stationary(i) * weights.transition(i, first) / weights.stationary(first);
}

std::vector<double> cylinder_masses(const WordSet& words, const BaseWeights& weights) {
  std::vector<double> m(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) m[i] = cylinder_mass(weights, words.word(i));
  return m;
}

CylinderFunction ruelle_apply(const CylinderFunction& f, const BaseWeights& weights) {
  const WordSet& words = *f.words;
  const int n = words.depth();
  if (n < 1) throw PreconditionError("ruelle_apply needs depth >= 1");
  const auto alphabet = static_cast<std::uint64_t>(words.alphabet());
  std::uint64_t lead = 1;
  for (int k = 1; k < n; ++k) lead *= alphabet;
  std::vector<double> out(words.size(), 0.0);
  for (std::size_t idx = 0; idx < words.size(); ++idx) {
    const auto w = words.word(idx);
    const std::uint64_t tail = words.code(idx) / alphabet;  // w[0..n-2]
    double acc = 0.0;
    for (Symbol i = 0; i < words.alphabet(); ++i) {
      const double g = jacobian_weight(weights, i, w);
      if (g == 0.0) continue;
      acc += g * f.values[words.index_of_code(static_cast<std::uint64_t>(i) * lead + tail)];
    }
    out[idx] = acc;
  }
  return CylinderFunction(f.words, std::move(out));
}

double base_mean(const CylinderFunction& f, const BaseWeights& weights) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += cylinder_mass(weights, f.words->word(i)) * f.values[i];
  return acc;
}

double sup_norm(const CylinderFunction& f) {
  double s = 0.0;
  for (double v : f.values) s = std::max(s, std::abs(v));
  return s;
}

LipschitzEstimate lipschitz_seminorm(const CylinderFunction& f, Theta theta) {
  return max_pair_ratio(*f.words, theta, [&](std::size_t i, std::size_t j) { return std::abs(f.values[i] - f.values[j]); });
}

double theta_norm(const CylinderFunction& f, Theta theta) {
  return sup_norm(f) + lipschitz_seminorm(f, theta).value;
}

CylinderFunction refine(const CylinderFunction& f, const WordSetPtr& deeper) {
  const int shallow = f.depth();
  const int deep = deeper->depth();
  if (deep < shallow) throw PreconditionError("refine needs a deeper word set");
  std::uint64_t drop = 1;
  for (int k = shallow; k < deep; ++k) drop *= static_cast<std::uint64_t>(deeper->alphabet());
  std::vector<double> out(deeper->size());
  for (std::size_t i = 0; i < deeper->size(); ++i) out[i] = f.values[f.words->index_of_code(deeper->code(i) / drop)];
  return CylinderFunction(deeper, std::move(out));
}

GapEstimate base_gap_estimate(const BaseWeights& weights, Theta theta, int depth, int iters, std::uint64_t seed,
                              int samples) {
  if (depth < 2) throw PreconditionError("base_gap_estimate needs depth >= 2");
  if (iters < 1) throw PreconditionError("base_gap_estimate needs iters >= 1");
  auto words = make_word_set(weights.matrix(), depth);
  const auto masses = cylinder_masses(*words, weights);
  GapEstimate est;
  est.norms.assign(static_cast<std::size_t>(iters) + 1, 0.0);
  Rng rng(seed);
  for (int s = 0; s < std::max(samples, 1); ++s) {
    std::vector<double> vals(words->size());
    for (auto& v : vals) v = rng.uniform(-1.0, 1.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) mean += masses[i] * vals[i];
    for (auto& v : vals) v -= mean;
    CylinderFunction f(words, std::move(vals));
    const double base = theta_norm(f, theta);
    if (base == 0.0) continue;
    est.norms[0] = std::max(est.norms[0], 1.0);
    for (int k = 1; k <= iters; ++k) {
      f = ruelle_apply(f, weights);
      auto& slot = est.norms[static_cast<std::size_t>(k)];
      slot = std::max(slot, theta_norm(f, theta) / base);
    }
  }

  constexpr double kFloor = 1e-14;
  const auto first_zero = std::find_if(est.norms.begin() + 1, est.norms.end(), [](double v) { return v < kFloor; });
  if (first_zero != est.norms.end()) {
    est.collapsed = true;
    est.rate = 0.0;
    est.constant = *std::max_element(est.norms.begin(), first_zero);
    return est;
  }
  // Fit the post-transient window: the first depth-1 steps only shorten the
  // function's effective depth.
  const int start = std::min(depth - 1, iters / 2);
  std::vector<double> ks, vs;
  for (int k = start; k <= iters; ++k) {
    ks.push_back(k);
    vs.push_back(est.norms[static_cast<std::size_t>(k)]);
  }
  const auto fit = fit_exponential(ks, vs, kFloor);
  est.rate = fit.rate;
  est.constant = 0.0;
  for (int k = 0; k <= iters; ++k) {
    const double scale = std::pow(est.rate, k);
    if (scale > 0.0) est.constant = std::max(est.constant, est.norms[static_cast<std::size_t>(k)] / scale);
  }
  return est;
}

double base_correlation(const BaseWeights& weights, const CylinderFunction& psi, const CylinderFunction& s, int lag) {
  if (lag < 0) throw PreconditionError("base_correlation needs lag >= 0");
  const int ks = s.depth();
  const int kp = psi.depth();
  if (ks < 1 || kp < 1) throw PreconditionError("base_correlation needs depth >= 1 observables");
  const double mean_product = base_mean(psi, weights) * base_mean(s, weights);
  const TransitionMatrix& matrix = weights.matrix();

  if (lag >= ks) {
    // Separated blocks: s reads x[0..ks-1], psi reads x[lag..lag+kp-1];
    // the Markov chain joins them through P^(lag-ks+1).
    const int n = weights.size();
    Eigen::MatrixXd p(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) p(i, j) = weights.transition(i, j);
    Eigen::MatrixXd bridge = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < lag - ks + 1; ++k) bridge = bridge * p;
    Eigen::VectorXd left = Eigen::VectorXd::Zero(n);  // sum of m([u]) s(u) by last symbol
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto u = s.words->word(i);
      left(u.back()) += cylinder_mass(weights, u) * s.values[i];
    }
    Eigen::VectorXd right = Eigen::VectorXd::Zero(n);  // sum of m([v])/pi(v0) psi(v) by first symbol
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const auto v = psi.words->word(i);
      right(v.front()) += cylinder_mass(weights, v) / weights.stationary(v.front()) * psi.values[i];
    }
    return left.dot(bridge * right) - mean_product;
  }

  const int depth = std::max(ks, lag + kp);
  const WordSet words(matrix, depth);
  std::uint64_t drop_s = 1, drop_p = 1, keep_p = 1;
  for (int k = ks; k < depth; ++k) drop_s *= static_cast<std::uint64_t>(matrix.size());
  for (int k = lag + kp; k < depth; ++k) drop_p *= static_cast<std::uint64_t>(matrix.size());
  for (int k = 0; k < kp; ++k) keep_p *= static_cast<std::uint64_t>(matrix.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::uint64_t c = words.code(i);
    const double sv = s.values[s.words->index_of_code(c / drop_s)];
    const double pv = psi.values[psi.words->index_of_code((c / drop_p) % keep_p)];
    acc += cylinder_mass(weights, words.word(i)) * sv * pv;
  }
  return acc - mean_product;
}

}  // namespace skewstab
