#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skewstab/fiber_measure.hpp"
#include "skewstab/symbolic.hpp"

namespace skewstab {

struct FiberMapSpec {
  double slope = 0.0;
  double offset = 0.0;
};

struct BaseSystem {
  TransitionMatrix matrix;
  Theta theta;
  BaseWeights weights;
};

/// Skew product F(x, y) = (sigma x, G(x, y)) with
/// G(x, y) = a_{x0} y + b_{x0} + c(x_0 .. x_{d-1}).
class SystemSpec {
 public:
  /// `corrections` lists one value per admissible depth-d word in
  /// lexicographic order (empty means all zero).
  SystemSpec(BaseSystem base, std::vector<FiberMapSpec> maps, int offset_depth = 1, std::vector<double> corrections = {});

  const TransitionMatrix& matrix() const noexcept { return base_.matrix; }
  Theta theta() const noexcept { return base_.theta; }
  const BaseWeights& weights() const noexcept { return base_.weights; }
  const BaseSystem& base() const noexcept { return base_; }
  int alphabet() const noexcept { return base_.matrix.size(); }
  int offset_depth() const noexcept { return offset_depth_; }
  const std::vector<FiberMapSpec>& maps() const noexcept { return maps_; }
  const WordSet& offset_words() const noexcept { return *offset_words_; }
  const std::vector<double>& corrections() const noexcept { return corrections_; }
  bool symbol_only() const noexcept;

  /// Fiber map over any point whose first offset_depth symbols are `prefix`.
  AffineMap fiber_map(std::span<const Symbol> prefix) const;
  AffineMap fiber_map_by_code(std::uint64_t offset_code) const { return realized_[offset_words_->index_of_code(offset_code)]; }
  /// Realized map for every admissible depth-d word, in WordSet order.
  const std::vector<AffineMap>& realized_maps() const noexcept { return realized_; }

  SystemSpec with_weights(BaseWeights weights) const;
  SystemSpec with_maps(std::vector<FiberMapSpec> maps) const;

 private:
  BaseSystem base_;
  std::vector<FiberMapSpec> maps_;
  int offset_depth_;
  WordSetPtr offset_words_;
  std::vector<double> corrections_;
  std::vector<AffineMap> realized_;
};

/// max |a_i|; throws HypothesisViolation naming the first symbol with |a_i| >= 1.
double verify_g1(const SystemSpec& sys);

inline constexpr int kHGridPoints = 101;

/// max over a 101-point y grid and depth-d word pairs of |G(u, y) - G(v, y)| / d(u, v).
double estimate_h(const SystemSpec& sys);

/// |g|_theta of the Jacobian weight as a depth-2 cylinder function.
double jacobian_lipschitz(const BaseWeights& weights, Theta theta);

/// max{H theta + theta N |g|_theta, 2}.
double c1_constant(const SystemSpec& sys);

struct Orbit {
  std::vector<Symbol> symbols;  ///< x_0 .. x_{n + lookahead - 1}
  std::vector<double> y;        ///< fiber coordinate at times 0 .. n-1
};

/// Samples a stationary base path and its fiber coordinate. The fiber starts
/// at 1/2 burn_in steps in the past, so y_0 is within alpha^burn_in of the
/// stationary conditional law.
Orbit sample_orbit(const SystemSpec& sys, std::uint64_t seed, int length, int burn_in, int lookahead = 0);

/// Draws a base path of the given length from the stationary measure.
std::vector<Symbol> sample_base_path(const BaseWeights& weights, Rng& rng, std::size_t length);

}  // namespace skewstab
