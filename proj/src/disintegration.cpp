#include "skewstab/disintegration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "json.hpp"

#include "skewstab/error.hpp"
#include "skewstab/fit.hpp"
#include "skewstab/parallel.hpp"

namespace skewstab {

namespace {

std::uint64_t ipow(int base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::uint64_t>(base);
  return r;
}

void require_same_words(const Disintegration& a, const Disintegration& b) {
  if (a.words != b.words && (a.depth() != b.depth() || a.size() != b.size()))
    throw PreconditionError("disintegrations live on different word sets");
}

}  // namespace

Disintegration::Disintegration(WordSetPtr set, std::vector<AtomicSignedMeasure> f, double err)
    : words(std::move(set)), fibers(std::move(f)), error_bound(err) {
  if (!words) throw PreconditionError("disintegration needs a word set");
  if (fibers.size() != words->size()) throw PreconditionError("one fiber measure per admissible word is required");
}

Disintegration Disintegration::product(WordSetPtr set, const AtomicSignedMeasure& nu) {
  const auto n = set->size();
  return Disintegration(std::move(set), std::vector<AtomicSignedMeasure>(n, nu));
}

Disintegration Disintegration::zero(WordSetPtr set) { return product(std::move(set), AtomicSignedMeasure{}); }

std::size_t Disintegration::atom_count() const {
  std::size_t n = 0;
  for (const auto& f : fibers) n += f.size();
  return n;
}

bool Disintegration::nonnegative() const {
  return std::all_of(fibers.begin(), fibers.end(), [](const AtomicSignedMeasure& f) { return f.nonnegative(); });
}

Disintegration scale(const Disintegration& mu, double c) {
  std::vector<AtomicSignedMeasure> f;
  f.reserve(mu.size());
  for (const auto& x : mu.fibers) f.push_back(combine(c, x, 0.0, AtomicSignedMeasure{}));
  return Disintegration(mu.words, std::move(f), std::abs(c) * mu.error_bound);
}

Disintegration combine(double alpha, const Disintegration& mu, double beta, const Disintegration& nu) {
  require_same_words(mu, nu);
  std::vector<AtomicSignedMeasure> f;
  f.reserve(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) f.push_back(combine(alpha, mu.fibers[i], beta, nu.fibers[i]));
  return Disintegration(mu.words, std::move(f), std::abs(alpha) * mu.error_bound + std::abs(beta) * nu.error_bound);
}

double norm_inf(const Disintegration& mu) {
  double s = 0.0;
  for (const auto& f : mu.fibers) s = std::max(s, wk_norm(f));
  return s;
}

CylinderFunction marginal_density(const Disintegration& mu) {
  std::vector<double> v(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) v[i] = mu.fibers[i].total_weight();
  return CylinderFunction(mu.words, std::move(v));
}

double norm_s_inf(const Disintegration& mu, Theta theta) {
  return theta_norm(marginal_density(mu), theta) + norm_inf(mu);
}

LipschitzEstimate lip_constant(const Disintegration& mu, Theta theta, unsigned threads) {
  const auto& words = *mu.words;
  if (threads <= 1 || words.size() > kExhaustivePairWords)
    return max_pair_ratio(words, theta, [&](std::size_t i, std::size_t j) { return wk_distance(mu.fibers[i], mu.fibers[j]); });
  // Exhaustive case split by first index.
  std::vector<double> best(words.size(), 0.0);
  parallel_for(words.size(), threads, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < words.size(); ++j) {
      const double d = word_distance(words.word(i), words.word(j), theta);
      best[i] = std::max(best[i], wk_distance(mu.fibers[i], mu.fibers[j]) / d);
    }
  });
  LipschitzEstimate est;
  est.value = *std::max_element(best.begin(), best.end());
  est.pairs = words.size() * (words.size() - 1) / 2;
  return est;
}

double max_fiber_distance(const Disintegration& mu, const Disintegration& nu, unsigned threads) {
  require_same_words(mu, nu);
  std::vector<double> d(mu.size());
  parallel_for(mu.size(), threads, [&](std::size_t i) { d[i] = wk_distance(mu.fibers[i], nu.fibers[i]); });
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

Disintegration transfer_apply(const SystemSpec& sys, const Disintegration& mu, unsigned threads) {
  const WordSet& words = *mu.words;
  const int n = words.depth();
  const int d = sys.offset_depth();
  if (n < 1) throw PreconditionError("transfer_apply needs depth >= 1");
  if (d > n) throw PreconditionError("offset depth " + std::to_string(d) + " exceeds working depth " + std::to_string(n));
  if (words.alphabet() != sys.alphabet()) throw PreconditionError("disintegration alphabet does not match the system");
  const int alphabet = sys.alphabet();
  const std::uint64_t lead = ipow(alphabet, n - 1);
  const std::uint64_t lead_point = ipow(alphabet, n);
  const std::uint64_t drop = ipow(alphabet, n + 1 - d);

  std::vector<AtomicSignedMeasure> out(words.size());
  parallel_for(words.size(), threads, [&](std::size_t t) {
    const auto w = words.word(t);
    const std::uint64_t code = words.code(t);
    AtomicSignedMeasure acc;
    for (Symbol i = 0; i < alphabet; ++i) {
      const double g = jacobian_weight(sys.weights(), i, w);
      if (g == 0.0) continue;
      const auto& source = mu.fibers[words.index_of_code(static_cast<std::uint64_t>(i) * lead + code / static_cast<std::uint64_t>(alphabet))];
      const AffineMap map = sys.fiber_map_by_code((static_cast<std::uint64_t>(i) * lead_point + code) / drop);
      acc = combine(1.0, acc, g, pushforward(source, map));
    }
    out[t] = std::move(acc);
  });
  return Disintegration(mu.words, std::move(out), mu.error_bound);
}

Disintegration word_sum_iterate(const SystemSpec& sys, const AtomicSignedMeasure& nu0, int k, int depth, int grid,
                                unsigned threads) {
  if (k < 1) throw PreconditionError("word_sum_iterate needs k >= 1");
  const int d = sys.offset_depth();
  if (depth < std::max(d, 1)) throw PreconditionError("working depth must be >= offset depth");
  const int alphabet = sys.alphabet();
  auto words = make_word_set(sys.matrix(), depth);
  const double paths = std::pow(static_cast<double>(alphabet), k) * static_cast<double>(words->size()) *
                       static_cast<double>(std::max<std::size_t>(nu0.size(), 1));
  if (paths > static_cast<double>(kAtomBudget))
    throw BudgetError("word sum of " + std::to_string(k) + " steps exceeds the atom budget; use transfer iteration with a quantization grid");
  const std::uint64_t top = ipow(alphabet, d - 1);
  const std::uint64_t to_prefix = ipow(alphabet, depth - d);

  std::vector<AtomicSignedMeasure> out(words->size());
  std::vector<double> bounds(words->size(), 0.0);
  parallel_for(words->size(), threads, [&](std::size_t t) {
    std::vector<Atom> atoms;
    // Extends the preimage point one symbol to the left; `outer` is applied
    // after every map chosen so far.
    auto extend = [&](auto&& self, int remaining, std::uint64_t prefix, double weight, AffineMap outer) -> void {
      if (remaining == 0) {
        for (const auto& a : nu0.atoms()) atoms.push_back({outer(a.position), weight * a.weight});
        return;
      }
      const auto first = static_cast<Symbol>(prefix / top);
      for (Symbol i = 0; i < alphabet; ++i) {
        if (!sys.matrix().allowed(i, first)) continue;
        const Symbol head[1] = {first};
        const double g = jacobian_weight(sys.weights(), i, std::span<const Symbol>(head, 1));
        const std::uint64_t next = static_cast<std::uint64_t>(i) * top + prefix / static_cast<std::uint64_t>(alphabet);
        if (d > 1 && !sys.offset_words().find_code(next)) continue;
        self(self, remaining - 1, next, weight * g, outer.after(sys.fiber_map_by_code(next)));
      }
    };
    extend(extend, k, words->code(t) / to_prefix, 1.0, AffineMap{1.0, 0.0});
    out[t] = AtomicSignedMeasure::from_unsorted(std::move(atoms));
    if (grid > 0) {
      auto q = quantize(out[t], grid);
      out[t] = std::move(q.measure);
      bounds[t] = q.bound;
    }
  });
  return Disintegration(words, std::move(out), *std::max_element(bounds.begin(), bounds.end()));
}

FixedPointResult fixed_point(const SystemSpec& sys, int depth, double tol, int grid, FixedPointStart start,
                             unsigned threads) {
  if (!(tol > 0.0)) throw PreconditionError("fixed_point needs tol > 0");
  if (grid < 0 || grid == 1) throw PreconditionError("quantization grid must be 0 (off) or >= 2");
  const double alpha = verify_g1(sys);
  auto words = make_word_set(sys.matrix(), depth);

  AtomicSignedMeasure init = AtomicSignedMeasure::dirac(0.5);
  if (start == FixedPointStart::UniformGrid) {
    const int g = grid > 0 ? grid : 512;
    std::vector<Atom> atoms;
    for (int i = 0; i <= g; ++i) atoms.push_back({static_cast<double>(i) / g, 1.0 / (g + 1)});
    init = AtomicSignedMeasure(std::move(atoms));
  }
  Disintegration current = Disintegration::product(words, init);

  const int cap = alpha > 0.0 ? std::max(10, 10 * static_cast<int>(std::ceil(std::log(tol) / std::log(alpha)))) : 10;
  FixedPointResult result;
  result.alpha = alpha;
  for (int it = 1; it <= cap; ++it) {
    Disintegration next = transfer_apply(sys, current, threads);
    double q = 0.0;
    if (grid > 0) {
      std::vector<double> qb(next.size(), 0.0);
      parallel_for(next.size(), threads, [&](std::size_t i) {
        auto quantized = quantize(next.fibers[i], grid);
        next.fibers[i] = std::move(quantized.measure);
        qb[i] = quantized.bound;
      });
      q = *std::max_element(qb.begin(), qb.end());
    }
    if (next.atom_count() > kAtomBudget)
      throw BudgetError("fixed-point iterate exceeds the atom budget; set a quantization grid");
    const double change = max_fiber_distance(next, current, threads);
    current = std::move(next);
    result.iterations = it;
    result.last_change = change;
    result.quantization_bound = std::max(result.quantization_bound, q);
    if (change < tol) {
      result.certified_error = (alpha * change + result.quantization_bound) / (1.0 - alpha);
      current.error_bound = result.certified_error;
      result.measure = std::move(current);
      return result;
    }
  }
  throw ConvergenceError("fixed_point did not reach tol " + std::to_string(tol) + " within " + std::to_string(cap) +
                         " iterations (last change " + std::to_string(result.last_change) + ")");
}

LyReport verify_ly(const SystemSpec& sys, const Disintegration& mu, int nmax, unsigned threads) {
  if (!mu.nonnegative()) throw PreconditionError("verify_ly needs a positive disintegration");
  const double theta = sys.theta().value();
  LyReport report;
  report.c1 = c1_constant(sys);
  report.lip0 = lip_constant(mu, sys.theta(), threads).value;
  report.sup0 = norm_inf(mu);
  report.min_margin = std::numeric_limits<double>::infinity();
  Disintegration current = mu;
  for (int n = 1; n <= nmax; ++n) {
    current = transfer_apply(sys, current, threads);
    const auto lip = lip_constant(current, sys.theta(), threads);
    LyRow row;
    row.n = n;
    row.lip = lip.value;
    row.exhaustive = lip.exhaustive;
    row.bound = std::pow(theta, n) * report.lip0 + report.c1 / (1.0 - theta) * report.sup0;
    row.margin = row.bound - row.lip;
    report.min_margin = std::min(report.min_margin, row.margin);
    report.rows.push_back(row);
  }
  return report;
}

DecayFit equilibrium_decay(const SystemSpec& sys, const Disintegration& mu, int nmax, unsigned threads) {
  if (nmax < 2) throw PreconditionError("equilibrium_decay needs nmax >= 2");
  const double mean = base_mean(marginal_density(mu), sys.weights());
  if (std::abs(mean) > 1e-10)
    throw PreconditionError("input is not in the vanishing-marginal subspace (marginal mean " + std::to_string(mean) + ")");
  DecayFit fit;
  fit.norms.push_back(norm_inf(mu));
  Disintegration current = mu;
  for (int n = 1; n <= nmax; ++n) {
    current = transfer_apply(sys, current, threads);
    fit.norms.push_back(norm_inf(current));
  }
  std::vector<double> ks, vs;
  for (int n = 1; n <= nmax; ++n) {
    ks.push_back(n);
    vs.push_back(fit.norms[static_cast<std::size_t>(n)]);
  }
  const auto e = fit_exponential(ks, vs, 1e-14);
  fit.rate = e.rate;
  fit.constant = e.constant;
  fit.r2 = e.r2;
  fit.collapsed = e.collapsed;
  return fit;
}

std::string disintegration_to_json(const Disintegration& mu) {
  nlohmann::json words = nlohmann::json::array(), atoms = nlohmann::json::array(), weights = nlohmann::json::array();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto w = mu.words->word(i);
    words.push_back(std::vector<int>(w.begin(), w.end()));
    nlohmann::json pos = nlohmann::json::array(), wt = nlohmann::json::array();
    for (const auto& a : mu.fibers[i].atoms()) {
      pos.push_back(a.position);
      wt.push_back(a.weight);
    }
    atoms.push_back(std::move(pos));
    weights.push_back(std::move(wt));
  }
  nlohmann::json doc{{"depth", mu.depth()}, {"words", words}, {"atoms", atoms}, {"weights", weights}, {"errorBound", mu.error_bound}};
  return doc.dump();
}

Disintegration disintegration_from_json(const std::string& text, const TransitionMatrix& matrix) {
  const auto doc = nlohmann::json::parse(text);
  const int depth = doc.at("depth").get<int>();
  auto words = make_word_set(matrix, depth);
  const auto& w = doc.at("words");
  const auto& a = doc.at("atoms");
  const auto& g = doc.at("weights");
  if (w.size() != words->size() || a.size() != w.size() || g.size() != w.size())
    throw PreconditionError("disintegration document does not cover every admissible word");
  std::vector<AtomicSignedMeasure> fibers(words->size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto word = w[i].get<std::vector<int>>();
    const auto idx = words->index_of(word);
    const auto pos = a[i].get<std::vector<double>>();
    const auto wt = g[i].get<std::vector<double>>();
    if (pos.size() != wt.size()) throw PreconditionError("atom and weight lists differ in length");
    std::vector<Atom> atoms;
    for (std::size_t k = 0; k < pos.size(); ++k) atoms.push_back({pos[k], wt[k]});
    fibers[idx] = AtomicSignedMeasure(std::move(atoms));
  }
  return Disintegration(words, std::move(fibers), doc.at("errorBound").get<double>());
}

}  // namespace skewstab
