// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "skewstab/config.hpp"
#include "skewstab/experiment.hpp"
#include "skewstab/sampling.hpp"

using namespace skewstab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0 when no runtime limit applies
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

unsigned threads() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

const ExperimentConfig& cantor_cfg() {
  static const auto cfg = parse_config(std::string(SKEWSTAB_CONFIG_DIR) + "/cantor-demo.json");
  return cfg;
}

const ExperimentConfig& offset_cfg() {
  static const auto cfg = parse_config(std::string(SKEWSTAB_CONFIG_DIR) + "/offset-coupled.json");
  return cfg;
}

const FixedPointResult& cantor_fp() {
  static const auto fp = [] {
    const auto& c = cantor_cfg();
    return fixed_point(c.sys(), 6, 1e-6, 512, FixedPointStart::DiracHalf, threads());
  }();
  return fp;
}

Outcome normalization() {
  Rng rng(101);
  const AtomicSignedMeasure zero;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) worst = std::max(worst, std::abs(wk_distance(random_positive_measure(rng, 12), zero) - 1.0));
  return {worst <= 1e-12, "max |d(mu,0) - 1| = " + fmt(worst) + " <= 1e-12"};
}

Outcome oracle_equivalence() {
  Rng rng(202);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto a = random_signed_measure(rng, 8, -2.0, 2.0), b = random_signed_measure(rng, 8, -2.0, 2.0);
    const double lp = wk_distance(a, b);
    worst = std::max(worst, std::abs(lp - oracle::bl_norm_grid(combine(1.0, a, -1.0, b).atoms(), 1000)));
  }
  return {worst <= 2e-3, "max |solver - lattice| = " + fmt(worst) + " <= 2e-3"};
}

Outcome weak_contraction() {
  const auto& cfg = cantor_cfg();
  const auto fam = build_family(cfg);
  auto words = make_word_set(cfg.sys().matrix(), cfg.depth);
  Rng rng(303);
  double worst = -1.0;
  for (double d : {0.0, 0.05}) {
    const auto sys = realize(fam, d);
    for (int k = 0; k < 50; ++k) {
      const auto mu = random_signed_disintegration(words, rng, 6);
      worst = std::max(worst, norm_inf(transfer_apply(sys, mu, threads())) - norm_inf(mu));
    }
  }
  return {worst <= 1e-10, "max excess = " + fmt(worst) + " <= 1e-10"};
}

Outcome invariant_norms() {
  const auto& fp = cantor_fp();
  const double a = norm_inf(fp.measure);
  const double b = norm_s_inf(fp.measure, cantor_cfg().sys().theta());
  const bool ok = std::abs(a - 1.0) <= 1e-6 && std::abs(b - 2.0) <= 1e-6;
  return {ok, "norm_inf = " + fmt(a) + ", norm_s_inf = " + fmt(b) + " (targets 1, 2 within 1e-6)"};
}

Outcome product_structure() {
  const auto& sys = cantor_cfg().sys();
  const auto& fp = cantor_fp();
  std::vector<double> probs;
  std::vector<AffineMap> maps;
  for (Symbol i = 0; i < sys.alphabet(); ++i) {
    probs.push_back(sys.weights().stationary(i));
    maps.push_back({sys.maps()[static_cast<std::size_t>(i)].slope, sys.maps()[static_cast<std::size_t>(i)].offset});
  }
  const auto ref = hutchinson_iterate(maps, probs, AtomicSignedMeasure::dirac(0.5), 12);
  double worst = 0.0;
  for (const auto& f : fp.measure.fibers) worst = std::max(worst, wk_distance(f, ref));
  const double lip = lip_constant(fp.measure, sys.theta(), threads()).value;
  const double bound = fp.certified_error + 1e-4;
  return {worst <= bound && lip <= 1e-6,
          "max wk to reference = " + fmt(worst) + " <= " + fmt(bound) + ", lip = " + fmt(lip) + " <= 1e-6"};
}

Outcome lasota_yorke() {
  const auto& cfg = cantor_cfg();
  auto words = make_word_set(cfg.sys().matrix(), 3);
  Rng rng(606);
  double margin = 1e300;
  for (int k = 0; k < 20; ++k) {
    const auto mu = random_positive_disintegration(words, rng, 5);
    margin = std::min(margin, verify_ly(cfg.sys(), mu, 10, threads()).min_margin);
  }
  const auto& theta = cfg.sys().theta();
  const double lc = lip_constant(cantor_fp().measure, theta).value;
  const double bc = c1_constant(cfg.sys()) / (1.0 - theta.value());
  const auto& oc = offset_cfg();
  const auto ofp = fixed_point(oc.sys(), oc.depth, oc.tolerance, oc.grid, FixedPointStart::DiracHalf, threads());
  const double lo = lip_constant(ofp.measure, oc.sys().theta()).value;
  const double bo = c1_constant(oc.sys()) / (1.0 - oc.sys().theta().value());
  const bool ok = margin >= -1e-8 && lc <= bc && lo <= bo;
  return {ok, "min LY margin = " + fmt(margin) + " >= -1e-8, lip cantor " + fmt(lc) + " <= " + fmt(bc) +
                  ", lip offset-coupled " + fmt(lo) + " <= " + fmt(bo)};
}

Outcome equilibrium() {
  const auto& cfg = cantor_cfg();
  auto words = make_word_set(cfg.sys().matrix(), 3);
  Rng rng(707);
  double rate = 0.0, r2 = 1.0;
  for (int k = 0; k < 20; ++k) {
    const auto mu = random_vanishing_disintegration(words, cfg.sys().weights(), rng, 5);
    const auto fit = equilibrium_decay(cfg.sys(), mu, 10, threads());
    rate = std::max(rate, fit.rate);
    if (!fit.collapsed) r2 = std::min(r2, fit.r2);
  }
  return {rate <= 0.4 && r2 >= 0.95, "max beta = " + fmt(rate) + " <= 0.4, min R^2 = " + fmt(r2) + " >= 0.95"};
}

Outcome operator_gaps() {
  const auto& cfg = cantor_cfg();
  const auto fam = build_family(cfg);
  const auto& sb = *cfg.stability;
  const std::vector<double> deltas{0.1, 0.01};
  std::vector<Disintegration> fps;
  for (double d : deltas)
    fps.push_back(fixed_point(realize(fam, d), sb.depth, sb.tolerance, sb.grid, FixedPointStart::DiracHalf, threads()).measure);
  const auto bu = bu_estimate(fam, deltas, fps);
  double fiber = -1e300, op = -1e300;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double r = r_delta(fam, deltas[i]);
    const auto fg = fiber_op_gap(fam.base, realize(fam, deltas[i]), fps[i], r);
    const auto og = operator_gap(fam, deltas[i], fps[i], bu.bu, threads());
    fiber = std::max(fiber, fg.gap - fg.bound);
    op = std::max(op, og.gap - (2.0 + bu.bu) * r);
  }
  return {fiber <= 1e-10 && op <= 1e-8,
          "fiber gap - R max norm = " + fmt(fiber) + " <= 1e-10, op gap - (2+B_u) R = " + fmt(op) + " <= 1e-8"};
}

Outcome stability() {
  const auto& cfg = cantor_cfg();
  const auto fam = build_family(cfg);
  const auto& sb = *cfg.stability;
  const std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
  const auto sweep = stability_sweep(fam, deltas, sb.depth, sb.tolerance, sb.grid, threads());
  bool rows_ok = true;
  std::string list;
  for (const auto& r : sweep.rows) {
    rows_ok = rows_ok && r.ok && r.ratio <= sweep.D;
    list += (list.empty() ? "" : " ") + fmt(r.Delta);
  }
  const auto& last = sweep.rows.back();
  const double a = sweep.rows[2].ratio, b = last.ratio;
  const double spread = std::max(a, b) / std::max(std::min(a, b), 1e-300);
  const bool ok = rows_ok && sweep.decreasing && last.Delta <= 1e-2 && spread < 2.0;
  return {ok, "Delta = [" + list + "], decreasing " + (sweep.decreasing ? "yes" : "no") + ", Delta(1e-4) <= 1e-2, D = " +
                  fmt(sweep.D) + ", spread " + fmt(spread) + " < 2"};
}

Outcome correlations() {
  const auto& cfg = cantor_cfg();
  const auto& sys = cfg.sys();
  const auto& mu = cantor_fp().measure;
  // (a) iid base, base-only depth-k observables
  Rng rng(1010);
  double worst = 0.0;
  for (int k = 1; k <= 3; ++k) {
    auto ws = make_word_set(sys.matrix(), k);
    std::vector<double> u(ws->size()), v(ws->size());
    for (auto& x : u) x = rng.uniform(-1.0, 1.0);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    const auto curve = correlation_curve(sys, mu, Observable::base_only(CylinderFunction(ws, u)),
                                         Observable::base_only(CylinderFunction(ws, v)), 12);
    for (int n = k; n <= 12; ++n) worst = std::max(worst, std::abs(curve.values[static_cast<std::size_t>(n)]));
  }
  // (b) first-symbol indicator against y
  CorrelationOptions opts;
  opts.threads = threads();
  opts.seed = cfg.seed;
  const auto curve = correlation_curve(sys, mu, Observable::symbol_indicator(sys.matrix(), 0),
                                       Observable::fiber_identity(sys.matrix()), 12, opts);
  const auto& fit = curve.fit;
  const bool ok = worst <= 1e-12 && fit.rate <= 0.45 && fit.r2 >= 0.9 && !fit.collapsed;
  return {ok, "(a) max |C_n|, n >= k = " + fmt(worst) + " <= 1e-12; (b) tau = " + fmt(fit.rate) + " <= 0.45, R^2 = " +
                  fmt(fit.r2) + " >= 0.9 over " + std::to_string(fit.points) + " lags"};
}

Outcome gordin() {
  const auto& sys = cantor_cfg().sys();
  const auto g = gordin_norms(sys, cantor_fp().measure, Observable::fiber_identity(sys.matrix()), 12);
  // For y on the Cantor demo every conditional expectation equals the mean, so all norms vanish.
  const bool ok = g.fit.rate <= 0.45 && g.ratio_margin > 0.5;
  return {ok, "tau = " + fmt(g.fit.rate) + " <= 0.45, ratio margin = " + fmt(g.ratio_margin) + " > 0.5" +
                  (g.degenerate ? " (all norms below 1e-14)" : "") + ", partial sum " + fmt(g.partial_sums.back())};
}

Outcome clt() {
  const auto& cfg = cantor_cfg();
  const auto& sys = cfg.sys();
  const auto& cb = *cfg.clt;
  const auto phi = Observable::fiber_identity(sys.matrix());
  const auto fine = fixed_point(sys, std::max(cb.mean_depth, 1), cb.mean_tolerance, cb.mean_grid,
                                FixedPointStart::DiracHalf, threads());
  const double mean = integrate_observable(fine.measure, phi, sys.weights());
  const auto fp = fixed_point(sys, cfg.depth, cfg.tolerance, cfg.grid, FixedPointStart::DiracHalf, threads());
  CorrelationOptions opts;
  opts.threads = threads();
  opts.seed = cfg.seed;
  const auto v30 = asymptotic_variance(sys, fp.measure, phi, 30, opts);
  const auto v35 = asymptotic_variance(sys, fp.measure, phi, 35, opts);
  const double rel = std::abs(v35.sigma2 - v30.sigma2) / v30.sigma2;
  int passes = 0;
  double worst = 0.0;
  for (int s = 0; s < 5; ++s) {
    const auto r = clt_experiment(sys, phi, mean, v30, 2000, 5000, cfg.seed + static_cast<std::uint64_t>(s), threads());
    passes += r.pass;
    worst = std::max(worst, r.ks);
  }
  const double crit = 1.36 / std::sqrt(5000.0) * 1.3;
  const bool ok = rel <= 0.02 && passes >= 4;
  return {ok, "sigma2 = " + fmt(v30.sigma2) + ", J 30 -> 35 change " + fmt(rel) + " <= 0.02, " + std::to_string(passes) +
                  "/5 seeds with KS <= " + fmt(crit) + " (max KS " + fmt(worst) + ")"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "skewstab_acceptance";
  fs::remove_all(root);
  RunOptions opts;
  opts.threads = threads();
  for (const char* run : {"a", "b"}) write_report(run_experiment("verify", cantor_cfg(), opts), (root / run).string());
  std::size_t files = 0, diffs = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    const auto name = e.path().filename();
    if (name == "timing.json") continue;
    ++files;
    if (!fs::exists(root / "b" / name) || slurp(e.path()) != slurp(root / "b" / name)) ++diffs;
  }
  std::size_t other = 0;
  for (const auto& e : fs::directory_iterator(root / "b")) other += e.path().filename() != "timing.json";
  fs::remove_all(root);
  const bool ok = files > 0 && diffs == 0 && other == files;
  return {ok, std::to_string(files) + " report files, " + std::to_string(diffs) + " differ"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "probability normalization", 1.0, normalization},
      {2, "dual solver vs lattice oracle", 30.0, oracle_equivalence},
      {3, "weak contraction", 30.0, weak_contraction},
      {4, "invariant measure norms", 0.0, invariant_norms},
      {5, "product structure", 60.0, product_structure},
      {6, "lasota-yorke and regularity", 60.0, lasota_yorke},
      {7, "exponential convergence to equilibrium", 60.0, equilibrium},
      {8, "operator gaps", 0.0, operator_gaps},
      {9, "quantitative stability", 180.0, stability},
      {10, "decay of correlations", 60.0, correlations},
      {11, "gordin summability", 60.0, gordin},
      {12, "central limit theorem", 120.0, clt},
      {13, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && secs >= c.budget_s) {
      out.pass = false;
      out.detail += "; runtime over " + fmt(c.budget_s) + " s";
    }
    failed += !out.pass;
    std::printf("%s %2d %-40s %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
