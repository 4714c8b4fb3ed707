#pragma once

#include <string>
#include <vector>

#include "skewstab/disintegration.hpp"
#include "skewstab/skew_product.hpp"

namespace skewstab {

/// delta -> F_delta: fiber offsets b_i + delta v_i and, for a Bernoulli base,
/// probabilities p + delta w (sum w = 0). The shift itself never changes.
struct PerturbationFamily {
  SystemSpec base;
  std::vector<double> offset_shift;  ///< per symbol; empty = none
  std::vector<double> weight_shift;  ///< per symbol; empty = none
  double delta_max = 1.0;            ///< admissible radius delta_1
  double k5 = 1.0;                   ///< intended linear rate R(delta) = k5 delta

  enum class Kind { FiberShift, BaseWeights, Combined, Trivial };
  Kind kind() const noexcept;
};

std::string to_string(PerturbationFamily::Kind kind);

/// The realized system at delta. Throws PreconditionError outside [0, delta_1)
/// and HypothesisViolation when the realized maps or weights are inadmissible.
SystemSpec realize(const PerturbationFamily& fam, double delta);

struct AdmissibilityRow {
  double delta = 0.0;
  double u21 = 0.0;      ///< max_w sum_i |g_delta(iw) - g_0(iw)|
  double u22 = 0.0;      ///< max |G_0 - G_delta| over the y grid and depth-d words
  double u3 = 0.0;       ///< max cylinder mass ratio m_delta / m_0 at the working depth
  double c1 = 0.0;       ///< C_{1, delta}
  double r = 0.0;        ///< max(u21, u22)
  double gap_rate = 0.0; ///< fitted base transfer-operator rate at delta
  double gap_constant = 0.0;
};

struct AdmissibilityReport {
  std::vector<AdmissibilityRow> rows;
  double c1_sup = 0.0;
  bool c1_finite = true;
  double a1_rate = 0.0;      ///< common envelope beta_3
  double a1_constant = 0.0;  ///< common envelope B_3
  bool a1_ok = true;
  bool u3_finite_depth_only = false;  ///< base weights move (strict U3 fails at infinite depth)
};

AdmissibilityReport admissibility_report(const PerturbationFamily& fam, const std::vector<double>& deltas, int depth);

/// R(delta) of a single member.
double r_delta(const PerturbationFamily& fam, double delta);

struct GapCheck {
  double gap = 0.0;
  double bound = 0.0;
  bool ok = true;
};

/// max over words and branches of wk(G_0 branch push, G_delta branch push)
/// of the same source fiber; bound R max_w ||mu|_w||_W.
GapCheck fiber_op_gap(const SystemSpec& sys0, const SystemSpec& sys_delta, const Disintegration& mu, double r);

/// ||(F_0* - F_delta*) mu_delta||_inf against (2 + B_u) R.
GapCheck operator_gap(const PerturbationFamily& fam, double delta, const Disintegration& mu_delta, double bu,
                      unsigned threads = 1);

struct BuEstimate {
  double bu = 0.0;
  double bound = 0.0;  ///< sup_delta C_{1,delta} / (1 - theta)
  bool ok = true;
};

/// max over the grid of lip_constant of the supplied fixed points.
BuEstimate bu_estimate(const PerturbationFamily& fam, const std::vector<double>& deltas,
                       const std::vector<Disintegration>& fixed_points);

struct StabilityRow {
  double delta = 0.0;
  double r = 0.0;
  double Delta = 0.0;
  double ratio = 0.0;
  double err_bound = 0.0;
  int iterations = 0;
  bool ok = true;
  std::string error;
};

struct StabilitySweep {
  std::vector<StabilityRow> rows;
  double D = 0.0;
  int base_iterations = 0;
  double base_error = 0.0;
  bool decreasing = true;
};

StabilitySweep stability_sweep(const PerturbationFamily& fam, const std::vector<double>& deltas, int depth, double tol,
                               int grid, unsigned threads = 1);

}  // namespace skewstab
