#include "skewstab/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "skewstab/error.hpp"
#include "skewstab/parallel.hpp"

namespace skewstab {

namespace {

bool nonzero(const std::vector<double>& v) {
  return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
}

}  // namespace

PerturbationFamily::Kind PerturbationFamily::kind() const noexcept {
  const bool fiber = nonzero(offset_shift);
  const bool weights = nonzero(weight_shift);
  if (fiber && weights) return Kind::Combined;
  if (fiber) return Kind::FiberShift;
  if (weights) return Kind::BaseWeights;
  return Kind::Trivial;
}

std::string to_string(PerturbationFamily::Kind kind) {
  switch (kind) {
    case PerturbationFamily::Kind::FiberShift: return "FiberShift";
    case PerturbationFamily::Kind::BaseWeights: return "BaseWeights";
    case PerturbationFamily::Kind::Combined: return "Combined";
    case PerturbationFamily::Kind::Trivial: return "Trivial";
  }
  return "Trivial";
}

SystemSpec realize(const PerturbationFamily& fam, double delta) {
  if (!(delta >= 0.0 && delta < fam.delta_max))
    throw PreconditionError("delta = " + std::to_string(delta) + " outside [0, delta_1 = " + std::to_string(fam.delta_max) + ")");
  if (delta == 0.0) return fam.base;
  const int n = fam.base.alphabet();
  SystemSpec sys = fam.base;
  if (nonzero(fam.offset_shift)) {
    if (static_cast<int>(fam.offset_shift.size()) != n) throw PreconditionError("offset direction needs one entry per symbol");
    auto maps = sys.maps();
    for (int i = 0; i < n; ++i) maps[static_cast<std::size_t>(i)].offset += delta * fam.offset_shift[static_cast<std::size_t>(i)];
    sys = sys.with_maps(std::move(maps));
  }
  if (nonzero(fam.weight_shift)) {
    if (static_cast<int>(fam.weight_shift.size()) != n) throw PreconditionError("weight direction needs one entry per symbol");
    if (sys.weights().kind() != BaseWeights::Kind::Bernoulli)
      throw PreconditionError("base-weight perturbations are supported for Bernoulli bases only");
    double sum = 0.0;
    for (double v : fam.weight_shift) sum += v;
    if (std::abs(sum) > 1e-12) throw PreconditionError("weight direction must sum to 0");
    std::vector<double> p = sys.weights().stationary_vector();
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] += delta * fam.weight_shift[static_cast<std::size_t>(i)];
    sys = sys.with_weights(BaseWeights::bernoulli(std::move(p), sys.matrix()));
  }
  return sys;
}

namespace {

double u21_quantity(const BaseWeights& w0, const BaseWeights& wd) {
  double best = 0.0;
  for (Symbol first = 0; first < w0.size(); ++first) {
    const Symbol word[1] = {first};
    double s = 0.0;
    for (Symbol i = 0; i < w0.size(); ++i)
      s += std::abs(jacobian_weight(wd, i, std::span<const Symbol>(word, 1)) - jacobian_weight(w0, i, std::span<const Symbol>(word, 1)));
    best = std::max(best, s);
  }
  return best;
}

double u22_quantity(const SystemSpec& s0, const SystemSpec& sd) {
  double best = 0.0;
  const auto& m0 = s0.realized_maps();
  const auto& md = sd.realized_maps();
  for (std::size_t w = 0; w < m0.size(); ++w)
    for (int k = 0; k < kHGridPoints; ++k) {
      const double y = static_cast<double>(k) / (kHGridPoints - 1);
      best = std::max(best, std::abs(m0[w](y) - md[w](y)));
    }
  return best;
}

}  // namespace

double r_delta(const PerturbationFamily& fam, double delta) {
  const SystemSpec sd = realize(fam, delta);
  return std::max(u21_quantity(fam.base.weights(), sd.weights()), u22_quantity(fam.base, sd));
}

AdmissibilityReport admissibility_report(const PerturbationFamily& fam, const std::vector<double>& deltas, int depth) {
  if (deltas.empty()) throw PreconditionError("admissibility_report needs a nonempty delta grid");
  AdmissibilityReport report;
  report.u3_finite_depth_only = nonzero(fam.weight_shift);
  const WordSet words(fam.base.matrix(), depth);
  const auto m0 = cylinder_masses(words, fam.base.weights());
  for (double delta : deltas) {
    const SystemSpec sd = realize(fam, delta);
    AdmissibilityRow row;
    row.delta = delta;
    row.u21 = u21_quantity(fam.base.weights(), sd.weights());
    row.u22 = u22_quantity(fam.base, sd);
    const auto md = cylinder_masses(words, sd.weights());
    for (std::size_t i = 0; i < words.size(); ++i) row.u3 = std::max(row.u3, md[i] / m0[i]);
    row.c1 = c1_constant(sd);
    row.r = std::max(row.u21, row.u22);
    const auto gap = base_gap_estimate(sd.weights(), sd.theta(), std::max(depth, 3), 12);
    row.gap_rate = gap.rate;
    row.gap_constant = gap.constant;
    report.c1_sup = std::max(report.c1_sup, row.c1);
    report.a1_rate = std::max(report.a1_rate, row.gap_rate);
    report.a1_constant = std::max(report.a1_constant, row.gap_constant);
    report.rows.push_back(row);
  }
  report.c1_finite = std::isfinite(report.c1_sup);
  report.a1_ok = report.a1_rate < 1.0 && std::isfinite(report.a1_constant);
  return report;
}

GapCheck fiber_op_gap(const SystemSpec& sys0, const SystemSpec& sys_delta, const Disintegration& mu, double r) {
  const WordSet& words = *mu.words;
  const int n = words.depth();
  const int d = sys0.offset_depth();
  if (sys_delta.offset_depth() != d || d > n) throw PreconditionError("fiber_op_gap needs a common offset depth <= depth");
  const auto alphabet = static_cast<std::uint64_t>(sys0.alphabet());
  std::uint64_t lead = 1, lead_point = 1, drop = 1;
  for (int k = 0; k < n - 1; ++k) lead *= alphabet;
  lead_point = lead * alphabet;
  for (int k = 0; k < n + 1 - d; ++k) drop *= alphabet;
  GapCheck check;
  for (std::size_t t = 0; t < words.size(); ++t) {
    const auto w = words.word(t);
    for (Symbol i = 0; i < sys0.alphabet(); ++i) {
      if (!sys0.matrix().allowed(i, w[0])) continue;
      const auto& source = mu.fibers[words.index_of_code(static_cast<std::uint64_t>(i) * lead + words.code(t) / alphabet)];
      const std::uint64_t pc = (static_cast<std::uint64_t>(i) * lead_point + words.code(t)) / drop;
      check.gap = std::max(check.gap, wk_distance(pushforward(source, sys0.fiber_map_by_code(pc)),
                                                  pushforward(source, sys_delta.fiber_map_by_code(pc))));
    }
  }
  check.bound = r * norm_inf(mu);
  check.ok = check.gap <= check.bound + 1e-10;
  return check;
}

GapCheck operator_gap(const PerturbationFamily& fam, double delta, const Disintegration& mu_delta, double bu,
                      unsigned threads) {
  const SystemSpec sd = realize(fam, delta);
  GapCheck check;
  check.gap = max_fiber_distance(transfer_apply(fam.base, mu_delta, threads), transfer_apply(sd, mu_delta, threads), threads);
  check.bound = (2.0 + bu) * r_delta(fam, delta);
  check.ok = check.gap <= check.bound + 1e-8;
  return check;
}

BuEstimate bu_estimate(const PerturbationFamily& fam, const std::vector<double>& deltas,
                       const std::vector<Disintegration>& fixed_points) {
  if (deltas.size() != fixed_points.size() || deltas.empty())
    throw PreconditionError("bu_estimate needs one fixed point per delta");
  BuEstimate est;
  double c1_sup = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const SystemSpec sd = realize(fam, deltas[i]);
    c1_sup = std::max(c1_sup, c1_constant(sd));
    est.bu = std::max(est.bu, lip_constant(fixed_points[i], sd.theta()).value);
  }
  est.bound = c1_sup / (1.0 - fam.base.theta().value());
  est.ok = est.bu <= est.bound + 1e-6;
  return est;
}

StabilitySweep stability_sweep(const PerturbationFamily& fam, const std::vector<double>& deltas, int depth, double tol,
                               int grid, unsigned threads) {
  if (deltas.empty()) throw PreconditionError("stability sweep needs at least one delta");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0 && deltas[i] < fam.delta_max))
      throw PreconditionError("sweep deltas must lie in (0, delta_1); got " + std::to_string(deltas[i]));
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw PreconditionError("sweep deltas must be sorted descending");
  }
  StabilitySweep sweep;
  const auto base = fixed_point(fam.base, depth, tol, grid, FixedPointStart::DiracHalf, threads);
  sweep.base_iterations = base.iterations;
  sweep.base_error = base.certified_error;

  sweep.rows.resize(deltas.size());
  parallel_for(deltas.size(), threads, [&](std::size_t k) {
    StabilityRow& row = sweep.rows[k];
    row.delta = deltas[k];
    try {
      row.r = r_delta(fam, row.delta);
      const auto fp = fixed_point(realize(fam, row.delta), depth, tol, grid);
      row.Delta = max_fiber_distance(fp.measure, base.measure);
      row.iterations = fp.iterations;
      row.err_bound = fp.certified_error + base.certified_error;
      row.ratio = row.r > 0.0 ? row.Delta / (row.r * std::abs(std::log(row.delta))) : 0.0;
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
  });
  double previous = std::numeric_limits<double>::infinity();
  for (const auto& row : sweep.rows) {
    if (!row.ok) continue;
    sweep.D = std::max(sweep.D, row.ratio);
    if (!(row.Delta < previous)) sweep.decreasing = false;
    previous = row.Delta;
  }
  return sweep;
}

}  // namespace skewstab
