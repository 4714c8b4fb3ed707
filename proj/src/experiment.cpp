#include "skewstab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "skewstab/sampling.hpp"

#ifndef SKEWSTAB_VERSION
#define SKEWSTAB_VERSION "0.0.0"
#endif

namespace skewstab {

using nlohmann::json;

std::string cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string cell(int v) { return std::to_string(v); }
std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }

std::string Table::csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + row[i];
    out += '\n';
  }
  return out;
}

bool RunReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

namespace {

// json numbers go through cell() so the summary has the same bytes as the CSVs.
json num(double v) {
  if (!std::isfinite(v)) return cell(v);
  return json::parse(cell(v));
}

}  // namespace

json RunReport::to_json() const {
  json j;
  j["id"] = id;
  j["digest"] = digest;
  j["seed"] = seed;
  j["version"] = version;
  j["pass"] = all_pass();
  json vs = json::array();
  for (const auto& v : verdicts)
    vs.push_back({{"name", v.name}, {"pass", v.pass}, {"value", num(v.value)}, {"bound", num(v.bound)}, {"detail", v.detail}});
  j["verdicts"] = vs;
  json ts = json::array();
  for (const auto& t : tables) ts.push_back(t.name + ".csv");
  j["tables"] = ts;
  j["summary"] = summary;
  return j;
}

void write_report(const RunReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (fs::path(dir) / name).string());
    out << text;
  };
  for (const auto& t : report.tables) write(t.name + ".csv", t.csv());
  write("summary.json", report.to_json().dump(2) + "\n");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", report.wall_clock);
  write("timing.json", std::string("{\n  \"wall_clock_seconds\": ") + buf + "\n}\n");
}

namespace {

struct Context {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  RunReport& report;
  std::uint64_t seed;
  unsigned threads;
  std::optional<FixedPointResult> fp;

  const SystemSpec& sys() const { return cfg.sys(); }

  void log(const std::string& msg) const {
    if (opts.log) *opts.log << "[" << report.id << "] " << msg << std::endl;
  }

  // Bounds are checked as value <= bound.
  void check(const std::string& name, double value, double bound, std::string detail = {}) {
    report.verdicts.push_back({name, value <= bound, value, bound, std::move(detail)});
    log(name + ": " + (value <= bound ? "pass" : "FAIL") + " (" + cell(value) + " <= " + cell(bound) + ")");
  }
  void check_flag(const std::string& name, bool ok, std::string detail = {}) {
    log(name + ": " + (ok ? "pass" : "FAIL") + (detail.empty() ? "" : " (" + detail + ")"));
    report.verdicts.push_back({name, ok, ok ? 1.0 : 0.0, 1.0, std::move(detail)});
  }

  Rng rng(std::uint64_t stream) const { return Rng(mix_seed(seed, stream)); }

  const FixedPointResult& fixed() {
    if (!fp) {
      log("fixed point at depth " + std::to_string(cfg.depth) + ", grid " + std::to_string(cfg.grid));
      fp = fixed_point(sys(), cfg.depth, cfg.tolerance, cfg.grid, FixedPointStart::DiracHalf, threads);
    }
    return *fp;
  }

  int sample_depth() const {
    const int d = cfg.spectral ? cfg.spectral->depth : 3;
    return std::max(d, sys().offset_depth());
  }
};

std::string word_string(std::span<const Symbol> w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "." : "") + std::to_string(w[i]);
  return s;
}

// ---------------------------------------------------------------- fiber metric

void run_metric_checks(Context& ctx) {
  Rng rng = ctx.rng(1);
  double worst_norm = 0.0;
  for (int k = 0; k < 100; ++k) worst_norm = std::max(worst_norm, std::abs(wk_norm(random_positive_measure(rng, 12)) - 1.0));
  ctx.check("probability_normalization", worst_norm, 1e-12, "100 random probability measures");

  double sym = 0.0, tri = -1.0, hom = 0.0, contraction = -1.0;
  for (int k = 0; k < 100; ++k) {
    const auto a = random_signed_measure(rng, 8, -2.0, 2.0);
    const auto b = random_signed_measure(rng, 8, -2.0, 2.0);
    const auto c = random_signed_measure(rng, 8, -2.0, 2.0);
    const double ab = wk_distance(a, b);
    sym = std::max(sym, std::abs(ab - wk_distance(b, a)));
    tri = std::max(tri, wk_distance(a, c) - ab - wk_distance(b, c));
    hom = std::max(hom, std::abs(wk_norm(combine(0.5, a, 0.0, a)) - 0.5 * wk_norm(a)));
    for (const auto& m : ctx.sys().realized_maps())
      contraction = std::max(contraction, wk_distance(pushforward(a, m), pushforward(b, m)) - ab);
  }
  ctx.check("metric_symmetry", sym, 1e-12);
  ctx.check("metric_triangle", tri, 1e-12);
  ctx.check("metric_homogeneity", hom, 1e-12);
  ctx.check("fiber_map_nonexpansion", contraction, 1e-12);
}

// ---------------------------------------------------------------- transfer operator

void run_operator_checks(Context& ctx) {
  const auto& sys = ctx.sys();
  const int depth = ctx.sample_depth();
  auto words = make_word_set(sys.matrix(), depth);
  std::vector<std::pair<std::string, SystemSpec>> members{{"0", sys}};
  if (ctx.cfg.stability) {
    const auto fam = build_family(ctx.cfg);
    const double d = ctx.cfg.stability->deltas.front();
    members.emplace_back(cell(d), realize(fam, d));
  }
  Rng rng = ctx.rng(2);
  std::vector<Disintegration> samples;
  for (int k = 0; k < 50; ++k) samples.push_back(random_signed_disintegration(words, rng, 4));

  Table t{"weak_contraction", {"delta", "sample", "norm_in", "norm_out", "margin"}, {}};
  for (const auto& [label, member] : members) {
    double worst = -1.0, marginal = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const auto out = transfer_apply(member, samples[k], ctx.threads);
      const double a = norm_inf(samples[k]), b = norm_inf(out);
      worst = std::max(worst, b - a);
      t.add({label, cell(k), cell(a), cell(b), cell(a - b)});
      const auto lhs = marginal_density(out);
      const auto rhs = ruelle_apply(marginal_density(samples[k]), member.weights());
      for (std::size_t i = 0; i < lhs.size(); ++i) marginal = std::max(marginal, std::abs(lhs[i] - rhs[i]));
    }
    ctx.check("weak_contraction[delta=" + label + "]", worst, 1e-10, "50 random signed disintegrations");
    ctx.check("marginal_consistency[delta=" + label + "]", marginal, 1e-10);
  }
  ctx.report.tables.push_back(std::move(t));

  double mass = 0.0;
  bool positive = true;
  for (int k = 0; k < 10; ++k) {
    const auto mu = random_positive_disintegration(words, rng, 4);
    const auto out = transfer_apply(sys, mu, ctx.threads);
    mass = std::max(mass, std::abs(base_mean(marginal_density(out), sys.weights()) -
                                   base_mean(marginal_density(mu), sys.weights())));
    positive = positive && out.nonnegative();
  }
  ctx.check("mass_preservation", mass, 1e-12);
  ctx.check_flag("positivity_preservation", positive);

  Table ws{"word_sum", {"k", "distance"}, {}};
  double worst = 0.0;
  Disintegration iter = Disintegration::product(words, AtomicSignedMeasure::dirac(0.5));
  for (int k = 1; k <= 3; ++k) {
    iter = transfer_apply(sys, iter, ctx.threads);
    const auto direct = word_sum_iterate(sys, AtomicSignedMeasure::dirac(0.5), k, depth, 0, ctx.threads);
    const double d = max_fiber_distance(iter, direct, ctx.threads);
    worst = std::max(worst, d);
    ws.add({cell(k), cell(d)});
  }
  ctx.report.tables.push_back(std::move(ws));
  ctx.check("word_sum_matches_transfer", worst, 1e-12, "k = 1..3 from m x delta_1/2");
}

// ---------------------------------------------------------------- fixed point

void run_fixed_point(Context& ctx, bool verify) {
  const auto& sys = ctx.sys();
  const auto& fp = ctx.fixed();
  const auto& mu = fp.measure;
  const Theta theta = sys.theta();
  const double ni = norm_inf(mu);
  const double ns = norm_s_inf(mu, theta);
  const auto lip = lip_constant(mu, theta, ctx.threads);
  const double c1 = c1_constant(sys);
  const double reg_bound = c1 / (1.0 - theta.value());

  Table t{"fixed_point", {"word", "atoms", "mass", "norm_W", "err_bound"}, {}};
  const auto masses = cylinder_masses(*mu.words, sys.weights());
  for (std::size_t i = 0; i < mu.size(); ++i)
    t.add({word_string(mu.words->word(i)), cell(mu.fibers[i].size()), cell(masses[i]), cell(wk_norm(mu.fibers[i])),
           cell(fp.certified_error)});
  ctx.report.tables.push_back(std::move(t));

  ctx.report.summary["fixedPoint"] = {{"depth", mu.depth()},
                                      {"iterations", fp.iterations},
                                      {"lastChange", num(fp.last_change)},
                                      {"alpha", num(fp.alpha)},
                                      {"quantizationBound", num(fp.quantization_bound)},
                                      {"certifiedError", num(fp.certified_error)},
                                      {"normInf", num(ni)},
                                      {"normSInf", num(ns)},
                                      {"lip", num(lip.value)},
                                      {"lipExhaustive", lip.exhaustive},
                                      {"C1", num(c1)},
                                      {"regularityBound", num(reg_bound)}};

  ctx.check("fixed_point_norm_inf", std::abs(ni - 1.0), 1e-6, "norm_inf(mu0) = 1");
  ctx.check("fixed_point_norm_s_inf", std::abs(ns - 2.0), 1e-6, "norm_s_inf(mu0) = 2");
  ctx.check("fixed_point_regularity", lip.value, reg_bound, "lip(mu0) <= C1/(1-theta)");
  ctx.check_flag("fixed_point_nonnegative", mu.nonnegative());
  if (!verify) return;

  const double idem = max_fiber_distance(transfer_apply(sys, mu, ctx.threads), mu, ctx.threads);
  ctx.check("fixed_point_idempotence", idem, 2.0 * fp.certified_error + 1e-12);
  const auto other = fixed_point(sys, ctx.cfg.depth, ctx.cfg.tolerance, ctx.cfg.grid, FixedPointStart::UniformGrid,
                                 ctx.threads);
  const double uniq = max_fiber_distance(other.measure, mu, ctx.threads);
  ctx.check("fixed_point_uniqueness", uniq, fp.certified_error + other.certified_error + 1e-12,
            "uniform-grid start against Dirac start");
}

// ---------------------------------------------------------------- spectral

void run_spectral(Context& ctx) {
  const auto& sys = ctx.sys();
  const SpectralBlock sb = ctx.cfg.spectral.value_or(SpectralBlock{});
  const int depth = std::max(sb.depth, sys.offset_depth());
  auto words = make_word_set(sys.matrix(), depth);
  Rng rng = ctx.rng(3);

  Table ly{"lasota_yorke", {"sample", "n", "lip", "bound", "margin", "exhaustive"}, {}};
  double worst_ly = std::numeric_limits<double>::infinity();
  for (int s = 0; s < sb.samples; ++s) {
    const auto mu = random_positive_disintegration(words, rng, 3);
    const auto rep = verify_ly(sys, mu, sb.nmax, ctx.threads);
    for (const auto& row : rep.rows)
      ly.add({cell(s), cell(row.n), cell(row.lip), cell(row.bound), cell(row.margin), cell(row.exhaustive)});
    worst_ly = std::min(worst_ly, rep.min_margin);
  }
  ctx.report.tables.push_back(std::move(ly));
  ctx.check("lasota_yorke", -worst_ly, 1e-8, "min margin over samples, n = 1.." + std::to_string(sb.nmax));

  Table dec{"equilibrium_decay", {"sample", "n", "norm_inf"}, {}};
  Table fits{"equilibrium_fit", {"sample", "rate", "constant", "r2", "collapsed"}, {}};
  double worst_rate = 0.0, worst_r2 = 1.0;
  for (int s = 0; s < sb.samples; ++s) {
    const auto mu = random_vanishing_disintegration(words, sys.weights(), rng, 3);
    const auto fit = equilibrium_decay(sys, mu, sb.nmax, ctx.threads);
    for (std::size_t n = 0; n < fit.norms.size(); ++n) dec.add({cell(s), cell(n), cell(fit.norms[n])});
    fits.add({cell(s), cell(fit.rate), cell(fit.constant), cell(fit.r2), cell(fit.collapsed)});
    worst_rate = std::max(worst_rate, fit.rate);
    if (!fit.collapsed) worst_r2 = std::min(worst_r2, fit.r2);
  }
  ctx.report.tables.push_back(std::move(dec));
  ctx.report.tables.push_back(std::move(fits));
  ctx.check("equilibrium_rate", worst_rate, 1.0 - 1e-9, "fitted beta < 1");
  ctx.check("equilibrium_fit_r2", -worst_r2, -0.95, "R^2 >= 0.95");

  const auto gap = base_gap_estimate(sys.weights(), sys.theta(), sb.gap_depth, sb.gap_iters, mix_seed(ctx.seed, 4));
  Table gt{"base_gap", {"k", "norm"}, {}};
  for (std::size_t k = 0; k < gap.norms.size(); ++k) gt.add({cell(k), cell(gap.norms[k])});
  ctx.report.tables.push_back(std::move(gt));
  ctx.check("base_spectral_gap", gap.rate, 1.0 - 1e-9, gap.collapsed ? "exact collapse" : "fitted rate < 1");

  ctx.report.summary["spectral"] = {{"depth", depth},
                                    {"lyMinMargin", num(worst_ly)},
                                    {"decayRate", num(worst_rate)},
                                    {"decayR2", num(worst_r2)},
                                    {"baseGapRate", num(gap.rate)},
                                    {"baseGapConstant", num(gap.constant)},
                                    {"alpha", num(verify_g1(sys))}};
}

// ---------------------------------------------------------------- stability

void run_stability(Context& ctx) {
  if (!ctx.cfg.stability) throw ConfigError("/stability", "stability needs a stability block");
  const auto& sb = *ctx.cfg.stability;
  const auto fam = build_family(ctx.cfg);
  ctx.log("family " + to_string(fam.kind()) + ", " + std::to_string(sb.deltas.size()) + " deltas");

  const auto adm = admissibility_report(fam, sb.deltas, sb.depth);
  Table at{"admissibility", {"delta", "u21", "u22", "u3", "C1", "R_delta", "gap_rate", "gap_constant"}, {}};
  for (const auto& r : adm.rows)
    at.add({cell(r.delta), cell(r.u21), cell(r.u22), cell(r.u3), cell(r.c1), cell(r.r), cell(r.gap_rate),
            cell(r.gap_constant)});
  ctx.report.tables.push_back(std::move(at));
  ctx.check_flag("admissibility_c1_finite", adm.c1_finite);
  ctx.check_flag("admissibility_uniform_gap", adm.a1_ok, "common envelope rate " + cell(adm.a1_rate));

  const auto sweep = stability_sweep(fam, sb.deltas, sb.depth, sb.tolerance, sb.grid, ctx.threads);
  Table st{"stability", {"delta", "R_delta", "Delta", "ratio", "err_bound", "iterations"}, {}};
  bool rows_ok = true;
  for (const auto& r : sweep.rows) {
    st.add({cell(r.delta), cell(r.r), cell(r.Delta), cell(r.ratio), cell(r.err_bound), cell(r.iterations)});
    if (!r.ok) {
      rows_ok = false;
      ctx.log("delta " + cell(r.delta) + ": " + r.error);
    }
  }
  ctx.report.tables.push_back(std::move(st));
  ctx.check_flag("stability_rows_converged", rows_ok);
  ctx.check_flag("stability_decreasing", sweep.decreasing, "Delta strictly decreasing as delta shrinks");
  double spread = 1.0;
  if (sweep.rows.size() >= 2) {
    const double a = sweep.rows[sweep.rows.size() - 2].ratio, b = sweep.rows.back().ratio;
    spread = std::max(a, b) / std::max(std::min(a, b), 1e-300);
  }
  ctx.check("stability_ratio_spread", spread, 2.0, "ratio variation over the two smallest deltas");

  // Operator gaps for the two largest deltas.
  const std::size_t ng = std::min<std::size_t>(2, sb.deltas.size());
  std::vector<double> gd(sb.deltas.begin(), sb.deltas.begin() + static_cast<std::ptrdiff_t>(ng));
  std::vector<Disintegration> fps;
  for (double d : gd) fps.push_back(fixed_point(realize(fam, d), sb.depth, sb.tolerance, sb.grid,
                                                FixedPointStart::DiracHalf, ctx.threads).measure);
  const auto bu = bu_estimate(fam, gd, fps);
  ctx.check("uniform_regularity_bu", bu.bu, bu.bound);
  Table gt{"operator_gaps", {"delta", "R_delta", "fiber_gap", "fiber_bound", "op_gap", "op_bound"}, {}};
  double fiber_excess = -1.0, op_excess = -1.0;
  for (std::size_t i = 0; i < ng; ++i) {
    const double r = r_delta(fam, gd[i]);
    const auto fg = fiber_op_gap(fam.base, realize(fam, gd[i]), fps[i], r);
    const auto og = operator_gap(fam, gd[i], fps[i], bu.bu, ctx.threads);
    gt.add({cell(gd[i]), cell(r), cell(fg.gap), cell(fg.bound), cell(og.gap), cell(og.bound)});
    fiber_excess = std::max(fiber_excess, fg.gap - fg.bound);
    op_excess = std::max(op_excess, og.gap - og.bound);
  }
  ctx.report.tables.push_back(std::move(gt));
  ctx.check("fiber_operator_gap", fiber_excess, 1e-10, "gap - R max fiber norm");
  ctx.check("operator_gap", op_excess, 1e-8, "gap - (2 + B_u) R");

  ctx.report.summary["stability"] = {{"family", to_string(fam.kind())},
                                     {"D", num(sweep.D)},
                                     {"baseIterations", sweep.base_iterations},
                                     {"baseError", num(sweep.base_error)},
                                     {"Bu", num(bu.bu)},
                                     {"c1Sup", num(adm.c1_sup)},
                                     {"u3FiniteDepthOnly", adm.u3_finite_depth_only}};
}

// ---------------------------------------------------------------- correlations

CorrelationOptions corr_options(const Context& ctx, std::size_t samples, std::uint64_t stream) {
  CorrelationOptions o;
  o.mc_samples = samples;
  o.seed = mix_seed(ctx.seed, stream);
  o.threads = ctx.threads;
  return o;
}

void run_correlations(Context& ctx) {
  if (!ctx.cfg.correlations) throw ConfigError("/correlations", "correlations needs a correlations block");
  const auto& cb = *ctx.cfg.correlations;
  const auto& sys = ctx.sys();
  const auto psi = build_observable(cb.psi, sys.matrix(), "/correlations/psi");
  const auto phi = build_observable(cb.phi, sys.matrix(), "/correlations/phi");
  const auto& mu0 = ctx.fixed().measure;

  const auto curve = correlation_curve(sys, mu0, psi, phi, cb.lags, corr_options(ctx, cb.mc_samples, 5));
  Table t{"correlations", {"lag", "value", "fit", "std_error", "exact", "composed"}, {}};
  for (std::size_t i = 0; i < curve.lags.size(); ++i) {
    const int n = curve.lags[i];
    const double fit = curve.fit.collapsed ? 0.0 : curve.fit.constant * std::pow(curve.fit.rate, n);
    t.add({cell(n), cell(curve.values[i]), cell(fit), cell(curve.std_errors[i]), cell(static_cast<bool>(curve.exact[i])),
           cell(base_composed_correlation(sys, mu0, psi, phi, n))});
  }
  ctx.report.tables.push_back(std::move(t));
  if (curve.fit.collapsed) {
    ctx.check_flag("correlation_decay", true, "correlations vanish beyond the observable depth");
  } else {
    ctx.check("correlation_decay_rate", curve.fit.rate, 1.0 - 1e-9, "fitted tau < 1");
    ctx.check("correlation_fit_r2", -curve.fit.r2, -0.9, "R^2 >= 0.9");
  }

  const auto fa = fiber_average(mu0, phi, sys.theta());
  ctx.check("fiber_average_regularity", -fa.margin, 1e-12);

  const auto g = gordin_norms(sys, mu0, phi, cb.gordin_lags);
  Table gt{"gordin", {"n", "norm", "partial_sum"}, {}};
  for (std::size_t n = 0; n < g.norms.size(); ++n) gt.add({cell(n), cell(g.norms[n]), cell(g.partial_sums[n])});
  ctx.report.tables.push_back(std::move(gt));
  if (g.degenerate) {
    ctx.check_flag("gordin_summability", true, "conditional expectations vanish identically");
  } else {
    ctx.check("gordin_rate", g.fit.rate, 1.0 - 1e-9);
    ctx.check("gordin_ratio_margin", -g.ratio_margin, -0.5, "ratio test margin > 0.5");
  }
  ctx.report.summary["correlations"] = {{"tau", num(curve.fit.rate)},
                                        {"r2", num(curve.fit.r2)},
                                        {"collapsed", curve.fit.collapsed},
                                        {"gordinRate", num(g.fit.rate)},
                                        {"gordinRatioMargin", num(g.ratio_margin)},
                                        {"gordinDegenerate", g.degenerate}};
}

// ---------------------------------------------------------------- CLT

void run_clt(Context& ctx, bool single_seed) {
  if (!ctx.cfg.clt) throw ConfigError("/clt", "clt needs a clt block");
  const auto& cb = *ctx.cfg.clt;
  const auto& sys = ctx.sys();
  const auto phi = build_observable(cb.observable, sys.matrix(), "/clt/observable");
  const int mean_depth = std::max(cb.mean_depth, phi.depth());
  const auto fine = fixed_point(sys, mean_depth, cb.mean_tolerance, cb.mean_grid, FixedPointStart::DiracHalf, ctx.threads);
  const double mean = integrate_observable(fine.measure, phi, sys.weights());
  const auto& mu0 = ctx.fixed().measure;

  const auto v = asymptotic_variance(sys, mu0, phi, cb.J, corr_options(ctx, cb.mc_samples, 6));
  const auto vc = asymptotic_variance(sys, mu0, phi, cb.J_check, corr_options(ctx, cb.mc_samples, 6));
  Table vt{"variance", {"J", "sigma2", "tail_bound", "std_error", "coboundary"}, {}};
  vt.add({cell(cb.J), cell(v.sigma2), cell(v.tail_bound), cell(v.std_error), cell(v.coboundary)});
  vt.add({cell(cb.J_check), cell(vc.sigma2), cell(vc.tail_bound), cell(vc.std_error), cell(vc.coboundary)});
  ctx.report.tables.push_back(std::move(vt));
  const double rel = std::abs(vc.sigma2 - v.sigma2) / std::max(std::abs(v.sigma2), 1e-300);
  ctx.check("variance_truncation_stability", rel, 0.02, "J -> J_check relative change");

  const int seeds = single_seed ? 1 : cb.seeds;
  Table ct{"clt", {"seed", "ks", "critical", "pass", "sigma_hat", "sample_mean"}, {}};
  int passes = 0;
  CltResult first;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t sd = ctx.seed + static_cast<std::uint64_t>(s);
    ctx.log("clt seed " + std::to_string(sd));
    const auto r = clt_experiment(sys, phi, mean, v, cb.n, cb.trials, sd, ctx.threads, cb.burn_in);
    double m = 0.0;
    for (double x : r.sums) m += x;
    m /= static_cast<double>(r.sums.size());
    ct.add({std::to_string(sd), cell(r.ks), cell(r.critical), cell(r.pass), cell(r.sigma_hat), cell(m)});
    passes += r.pass ? 1 : 0;
    if (s == 0) first = r;
  }
  ctx.report.tables.push_back(std::move(ct));
  const int needed = (4 * seeds + 4) / 5;
  ctx.check("clt_ks", static_cast<double>(needed - passes), 0.0,
            std::to_string(passes) + "/" + std::to_string(seeds) + " seeds within the KS critical value");
  ctx.report.summary["clt"] = {{"sigma2", num(v.sigma2)},
                               {"tailBound", num(v.tail_bound)},
                               {"stdError", num(v.std_error)},
                               {"ks", num(first.ks)},
                               {"critical", num(first.critical)},
                               {"pass", passes >= needed},
                               {"seed", ctx.seed},
                               {"mean", num(mean)},
                               {"seedsPassed", passes},
                               {"seeds", seeds}};
}

}  // namespace

RunReport run_experiment(const std::string& subcommand, const ExperimentConfig& cfg, const RunOptions& opts) {
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
    throw PreconditionError("unknown subcommand \"" + subcommand + "\"");
  if (!cfg.system) throw PreconditionError("config has no system");
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.id = subcommand;
  report.digest = cfg.digest;
  report.seed = opts.seed.value_or(cfg.seed);
  report.version = SKEWSTAB_VERSION;
  Context ctx{cfg, opts, report, report.seed, std::max(1u, opts.threads), std::nullopt};

  report.summary["system"] = {{"alphabet", cfg.sys().alphabet()},
                              {"theta", num(cfg.sys().theta().value())},
                              {"alpha", num(verify_g1(cfg.sys()))},
                              {"offsetDepth", cfg.sys().offset_depth()},
                              {"C1", num(c1_constant(cfg.sys()))},
                              {"H", num(estimate_h(cfg.sys()))}};

  if (subcommand == "verify") {
    run_metric_checks(ctx);
    run_operator_checks(ctx);
    run_fixed_point(ctx, true);
    run_spectral(ctx);
    if (cfg.stability) run_stability(ctx);
    if (cfg.correlations) run_correlations(ctx);
    if (cfg.clt) run_clt(ctx, true);
    Table t{"checks", {"name", "pass", "value", "bound"}, {}};
    for (const auto& v : report.verdicts) t.add({v.name, cell(v.pass), cell(v.value), cell(v.bound)});
    report.tables.insert(report.tables.begin(), std::move(t));
  } else if (subcommand == "fixed-point") {
    run_fixed_point(ctx, false);
  } else if (subcommand == "spectral") {
    run_spectral(ctx);
  } else if (subcommand == "stability") {
    run_stability(ctx);
  } else if (subcommand == "correlations") {
    run_correlations(ctx);
  } else {
    run_clt(ctx, false);
  }
  report.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace skewstab
