#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "skewstab/random.hpp"

namespace skewstab {

using Symbol = int;
using Word = std::vector<Symbol>;

/// 0/1 transition matrix of a one-sided subshift of finite type. Construction
/// rejects matrices with an empty row or column and matrices that are not
/// primitive (no power with all entries positive).
class TransitionMatrix {
 public:
  explicit TransitionMatrix(const std::vector<std::vector<int>>& rows);
  static TransitionMatrix full(int alphabet);

  int size() const noexcept { return n_; }
  bool allowed(Symbol from, Symbol to) const noexcept {
    return entries_[static_cast<std::size_t>(from * n_ + to)] != 0;
  }
  bool is_full() const noexcept;
  bool admissible(std::span<const Symbol> word) const noexcept;
  std::vector<std::vector<int>> rows() const;

  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

 private:
  int n_ = 0;
  std::vector<std::uint8_t> entries_;
};

/// Metric parameter of d_theta; 0 < theta < 1.
class Theta {
 public:
  explicit Theta(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Shift-invariant base measure: Bernoulli (product) or stationary Markov.
/// Both are stored as (stationary vector, stochastic matrix); a Bernoulli
/// measure has every row equal to p and requires the full shift.
class BaseWeights {
 public:
  enum class Kind { Bernoulli, Markov };

  static BaseWeights bernoulli(std::vector<double> p, const TransitionMatrix& matrix);
  /// The stationary vector is solved for when not supplied; a supplied one is
  /// checked against piP = pi.
  static BaseWeights markov(const std::vector<std::vector<double>>& transition, const TransitionMatrix& matrix,
                            std::optional<std::vector<double>> stationary = std::nullopt);

  Kind kind() const noexcept { return kind_; }
  int size() const noexcept { return matrix_.size(); }
  const TransitionMatrix& matrix() const noexcept { return matrix_; }
  double stationary(Symbol i) const { return pi_[static_cast<std::size_t>(i)]; }
  double transition(Symbol i, Symbol j) const { return p_[static_cast<std::size_t>(i * size() + j)]; }
  const std::vector<double>& stationary_vector() const noexcept { return pi_; }
  std::vector<std::vector<double>> transition_rows() const;

 private:
  BaseWeights(Kind kind, TransitionMatrix matrix, std::vector<double> pi, std::vector<double> p);

  Kind kind_;
  TransitionMatrix matrix_;
  std::vector<double> pi_;
  std::vector<double> p_;
};

/// All admissible words of one depth, sorted lexicographically, with O(1) or
/// O(log W) lookup by base-N code (first symbol most significant).
class WordSet {
 public:
  WordSet(const TransitionMatrix& matrix, int depth);

  int depth() const noexcept { return depth_; }
  int alphabet() const noexcept { return n_; }
  std::size_t size() const noexcept { return codes_.size(); }
  std::span<const Symbol> word(std::size_t index) const {
    return {symbols_.data() + index * static_cast<std::size_t>(depth_), static_cast<std::size_t>(depth_)};
  }
  std::uint64_t code(std::size_t index) const { return codes_[index]; }
  std::optional<std::size_t> find_code(std::uint64_t code) const;
  std::optional<std::size_t> find(std::span<const Symbol> word) const;
  /// Throws PreconditionError when the word is not in the set.
  std::size_t index_of(std::span<const Symbol> word) const;
  std::size_t index_of_code(std::uint64_t code) const;
  std::uint64_t code_of(std::span<const Symbol> word) const;

 private:
  int n_;
  int depth_;
  std::vector<Symbol> symbols_;
  std::vector<std::uint64_t> codes_;
  std::vector<std::int32_t> dense_;
};

using WordSetPtr = std::shared_ptr<const WordSet>;
WordSetPtr make_word_set(const TransitionMatrix& matrix, int depth);

/// Function on the base that is constant on cylinders of one depth.
struct CylinderFunction {
  WordSetPtr words;
  std::vector<double> values;

  CylinderFunction() = default;
  CylinderFunction(WordSetPtr set, std::vector<double> vals);
  static CylinderFunction constant(WordSetPtr set, double value);

  int depth() const { return words->depth(); }
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

/// Lexicographically sorted admissible words. n = 0 yields the empty word.
std::vector<Word> enumerate_words(const TransitionMatrix& matrix, int n);

/// Sum of theta^i over disagreeing positions of two equal-length words.
double word_distance(std::span<const Symbol> w1, std::span<const Symbol> w2, Theta theta);

/// theta^n / (1 - theta): diameter of the set of points sharing an n-prefix.
double word_tail_diameter(int n, Theta theta);

double cylinder_mass(const BaseWeights& weights, std::span<const Symbol> word);

/// g(i.word) = 1/J: the weight of the i-th inverse branch at a point whose
/// first symbol is word[0]. Inadmissible transitions give 0.
double jacobian_weight(const BaseWeights& weights, Symbol i, std::span<const Symbol> word);

/// Transfer operator of the shift acting on a cylinder function.
CylinderFunction ruelle_apply(const CylinderFunction& f, const BaseWeights& weights);

/// Integral against the base measure.
double base_mean(const CylinderFunction& f, const BaseWeights& weights);
std::vector<double> cylinder_masses(const WordSet& words, const BaseWeights& weights);

struct LipschitzEstimate {
  double value = 0.0;
  bool exhaustive = true;
  std::size_t pairs = 0;
};

inline constexpr std::size_t kExhaustivePairWords = 2000;
inline constexpr std::size_t kSampledPairs = 100000;

/// max over word pairs of diff(i, j) / word_distance. Exhaustive up to
/// kExhaustivePairWords words, otherwise a seeded sample of kSampledPairs
/// pairs (then a lower estimate).
template <class DiffFn>
LipschitzEstimate max_pair_ratio(const WordSet& words, Theta theta, DiffFn&& diff, std::uint64_t seed = 7) {
  LipschitzEstimate est;
  const std::size_t count = words.size();
  if (count < 2) return est;
  auto ratio = [&](std::size_t i, std::size_t j) {
    const double d = word_distance(words.word(i), words.word(j), theta);
    return d > 0.0 ? diff(i, j) / d : 0.0;
  };
  if (count <= kExhaustivePairWords) {
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i + 1; j < count; ++j) {
        const double r = ratio(i, j);
        if (r > est.value) est.value = r;
        ++est.pairs;
      }
    return est;
  }
  est.exhaustive = false;
  Rng rng(seed);
  for (std::size_t k = 0; k < kSampledPairs; ++k) {
    const auto i = static_cast<std::size_t>(rng.below(count));
    auto j = static_cast<std::size_t>(rng.below(count - 1));
    if (j >= i) ++j;
    const double r = ratio(i, j);
    if (r > est.value) est.value = r;
    ++est.pairs;
  }
  return est;
}

double sup_norm(const CylinderFunction& f);
LipschitzEstimate lipschitz_seminorm(const CylinderFunction& f, Theta theta);
/// ||f||_theta = max|f| + |f|_theta.
double theta_norm(const CylinderFunction& f, Theta theta);

/// Lifts f to a deeper word set (values copied from prefixes).
CylinderFunction refine(const CylinderFunction& f, const WordSetPtr& deeper);

struct GapEstimate {
  double rate = 0.0;
  double constant = 0.0;
  bool collapsed = false;   ///< norms fell below 1e-14 (exact collapse)
  std::vector<double> norms;  ///< envelope of ||P^k f|| / ||f|| for k = 0..iters
};

/// Power-iterates the shift transfer operator on seeded random zero-mean
/// cylinder functions and fits ||P^k f||_theta <= C r^k.
GapEstimate base_gap_estimate(const BaseWeights& weights, Theta theta, int depth, int iters, std::uint64_t seed = 11,
                              int samples = 4);

/// Exact covariance int (psi o sigma^lag) s dm - int psi dm int s dm.
double base_correlation(const BaseWeights& weights, const CylinderFunction& psi, const CylinderFunction& s, int lag);

}  // namespace skewstab
