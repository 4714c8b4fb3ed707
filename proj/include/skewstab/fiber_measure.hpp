#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace skewstab {

struct Atom {
  double position = 0.0;
  double weight = 0.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite signed measure on [0, 1]: strictly increasing positions, nonzero weights.
class AtomicSignedMeasure {
 public:
  AtomicSignedMeasure() = default;
  /// Validates the invariants; throws PreconditionError otherwise.
  explicit AtomicSignedMeasure(std::vector<Atom> atoms);
  /// Sorts, merges coincident positions and drops zero weights.
  static AtomicSignedMeasure from_unsorted(std::vector<Atom> atoms);
  static AtomicSignedMeasure dirac(double position, double weight = 1.0);

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }
  double total_weight() const noexcept;
  double total_variation() const noexcept;
  bool nonnegative() const noexcept;

  friend bool operator==(const AtomicSignedMeasure&, const AtomicSignedMeasure&) = default;

 private:
  std::vector<Atom> atoms_;
};

/// y -> slope * y + offset.
struct AffineMap {
  double slope = 0.0;
  double offset = 0.0;

  double operator()(double y) const noexcept { return slope * y + offset; }
  /// (this o inner)(y) = this(inner(y)).
  AffineMap after(const AffineMap& inner) const noexcept {
    return {slope * inner.slope, slope * inner.offset + offset};
  }
  bool is_self_contraction(double tol = 1e-12) const noexcept;
};

/// Continuous piecewise-linear function on [0, 1] through (breakpoint, value) pairs.
class PiecewiseLinearFn {
 public:
  PiecewiseLinearFn(std::vector<double> breakpoints, std::vector<double> values);
  static PiecewiseLinearFn constant(double c);
  static PiecewiseLinearFn identity();
  static PiecewiseLinearFn affine(double slope, double intercept);

  double operator()(double y) const;
  double lipschitz() const noexcept;
  double sup_norm() const noexcept;
  PiecewiseLinearFn shifted(double c) const;
  PiecewiseLinearFn scaled(double c) const;
  bool is_constant() const noexcept;
  const std::vector<double>& breakpoints() const noexcept { return x_; }
  const std::vector<double>& values() const noexcept { return v_; }

 private:
  std::vector<double> x_;
  std::vector<double> v_;
};

/// Image measure under an affine self-contraction of [0, 1].
AtomicSignedMeasure pushforward(const AtomicSignedMeasure& mu, const AffineMap& map);

/// alpha * mu + beta * nu.
AtomicSignedMeasure combine(double alpha, const AtomicSignedMeasure& mu, double beta, const AtomicSignedMeasure& nu);

/// sup { int g d mu : |g| <= 1, Lip(g) <= 1 } over functions on [0, 1].
double wk_norm(const AtomicSignedMeasure& mu);
/// wk_norm(mu - nu).
double wk_distance(const AtomicSignedMeasure& mu, const AtomicSignedMeasure& nu);
/// Same value for a raw, sorted atom list that may repeat positions.
double wk_norm_sorted(std::span<const Atom> atoms);

struct Quantized {
  AtomicSignedMeasure measure;
  double bound = 0.0;  ///< total_variation / (2G)
};

/// Snaps atoms to the nearest of the G + 1 points k/G and merges.
Quantized quantize(const AtomicSignedMeasure& mu, int grid);

double integrate(const AtomicSignedMeasure& mu, const PiecewiseLinearFn& h);

/// sum over words a of length k of p_a (phi_{a_1} o ... o phi_{a_k})# start.
AtomicSignedMeasure hutchinson_iterate(std::span<const AffineMap> maps, std::span<const double> probabilities,
                                       const AtomicSignedMeasure& start, int depth);

}  // namespace skewstab
