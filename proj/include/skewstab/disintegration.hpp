#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "skewstab/fiber_measure.hpp"
#include "skewstab/skew_product.hpp"
#include "skewstab/symbolic.hpp"

namespace skewstab {

/// Fiber restrictions mu|_w for every admissible word of one depth.
struct Disintegration {
  WordSetPtr words;
  std::vector<AtomicSignedMeasure> fibers;
  double error_bound = 0.0;

  Disintegration() = default;
  Disintegration(WordSetPtr set, std::vector<AtomicSignedMeasure> f, double err = 0.0);
  /// m x nu: every fiber equals nu (marginal density constant = nu's mass).
  static Disintegration product(WordSetPtr set, const AtomicSignedMeasure& nu);
  static Disintegration zero(WordSetPtr set);

  int depth() const { return words->depth(); }
  std::size_t size() const { return fibers.size(); }
  std::size_t atom_count() const;
  bool nonnegative() const;
};

Disintegration scale(const Disintegration& mu, double c);
/// alpha mu + beta nu on a common word set.
Disintegration combine(double alpha, const Disintegration& mu, double beta, const Disintegration& nu);

double norm_inf(const Disintegration& mu);
CylinderFunction marginal_density(const Disintegration& mu);
double norm_s_inf(const Disintegration& mu, Theta theta);
LipschitzEstimate lip_constant(const Disintegration& mu, Theta theta, unsigned threads = 1);
/// max over words of wk_distance(mu|_w, nu|_w).
double max_fiber_distance(const Disintegration& mu, const Disintegration& nu, unsigned threads = 1);

/// One step of the fiberwise transfer operator of `sys`.
Disintegration transfer_apply(const SystemSpec& sys, const Disintegration& mu, unsigned threads = 1);

inline constexpr std::size_t kAtomBudget = std::size_t{1} << 24;

/// k-step image of m x nu0 evaluated directly as a sum over length-k
/// preimage words. grid > 0 quantizes each fiber once at the end.
Disintegration word_sum_iterate(const SystemSpec& sys, const AtomicSignedMeasure& nu0, int k, int depth, int grid = 0,
                                unsigned threads = 1);

enum class FixedPointStart { DiracHalf, UniformGrid };

struct FixedPointResult {
  Disintegration measure;
  int iterations = 0;
  double last_change = 0.0;
  double alpha = 0.0;
  double quantization_bound = 0.0;  ///< per-step wk error of the quantizer
  double certified_error = 0.0;     ///< bound on max_w wk(measure|_w, mu0|_w)
};

/// Quantized iteration F* from m x delta_{1/2} (or the uniform grid measure)
/// until successive iterates differ by < tol in every fiber.
FixedPointResult fixed_point(const SystemSpec& sys, int depth, double tol, int grid,
                             FixedPointStart start = FixedPointStart::DiracHalf, unsigned threads = 1);

struct LyRow {
  int n = 0;
  double lip = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool exhaustive = true;
};

struct LyReport {
  double lip0 = 0.0;
  double sup0 = 0.0;
  double c1 = 0.0;
  std::vector<LyRow> rows;
  double min_margin = 0.0;
};

/// Checks |F*^n mu|_theta <= theta^n |mu|_theta + C1/(1-theta) ||mu||_inf, n = 1..nmax.
LyReport verify_ly(const SystemSpec& sys, const Disintegration& mu, int nmax, unsigned threads = 1);

struct DecayFit {
  std::vector<double> norms;  ///< norm_inf(F*^n mu), n = 0..nmax
  double rate = 0.0;
  double constant = 0.0;
  double r2 = 1.0;
  bool collapsed = false;
};

/// Fits norm_inf(F*^n mu) <= C beta^n over n = 1..nmax for mu with zero-mean marginal.
DecayFit equilibrium_decay(const SystemSpec& sys, const Disintegration& mu, int nmax, unsigned threads = 1);

std::string disintegration_to_json(const Disintegration& mu);
Disintegration disintegration_from_json(const std::string& text, const TransitionMatrix& matrix);

}  // namespace skewstab
