#include "skewstab/skew_product.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skewstab/error.hpp"

namespace skewstab {

SystemSpec::SystemSpec(BaseSystem base, std::vector<FiberMapSpec> maps, int offset_depth, std::vector<double> corrections)
    : base_(std::move(base)), maps_(std::move(maps)), offset_depth_(offset_depth), corrections_(std::move(corrections)) {
  if (base_.weights.matrix() != base_.matrix)
    throw HypothesisViolation("base weights were built for a different transition matrix");
  if (static_cast<int>(maps_.size()) != alphabet())
    throw HypothesisViolation("need exactly one fiber map per symbol (" + std::to_string(alphabet()) + ")");
  if (offset_depth_ < 1) throw HypothesisViolation("offset depth must be >= 1");
  offset_words_ = make_word_set(base_.matrix, offset_depth_);
  if (corrections_.empty()) corrections_.assign(offset_words_->size(), 0.0);
  if (corrections_.size() != offset_words_->size())
    throw HypothesisViolation("offset table must cover every admissible depth-" + std::to_string(offset_depth_) + " word");
  realized_.reserve(offset_words_->size());
  for (std::size_t i = 0; i < offset_words_->size(); ++i) {
    const Symbol s = offset_words_->word(i)[0];
    const auto& spec = maps_[static_cast<std::size_t>(s)];
    const AffineMap map{spec.slope, spec.offset + corrections_[i]};
    if (!(std::abs(map.slope) < 1.0))
      throw HypothesisViolation("fiber map of symbol " + std::to_string(s) + " is not contracting (|a| >= 1)");
    if (!map.is_self_contraction()) {
      std::string word;
      for (Symbol x : offset_words_->word(i)) word += std::to_string(x);
      throw HypothesisViolation("fiber map over word " + word + " does not map [0, 1] into itself");
    }
    realized_.push_back(map);
  }
}

bool SystemSpec::symbol_only() const noexcept {
  return std::all_of(corrections_.begin(), corrections_.end(), [](double c) { return c == 0.0; });
}

AffineMap SystemSpec::fiber_map(std::span<const Symbol> prefix) const {
  if (static_cast<int>(prefix.size()) < offset_depth_)
    throw PreconditionError("fiber_map needs at least offset_depth symbols");
  return realized_[offset_words_->index_of(prefix.first(static_cast<std::size_t>(offset_depth_)))];
}

SystemSpec SystemSpec::with_weights(BaseWeights weights) const {
  return SystemSpec(BaseSystem{base_.matrix, base_.theta, std::move(weights)}, maps_, offset_depth_, corrections_);
}

SystemSpec SystemSpec::with_maps(std::vector<FiberMapSpec> maps) const {
  return SystemSpec(base_, std::move(maps), offset_depth_, corrections_);
}

double verify_g1(const SystemSpec& sys) {
  double alpha = 0.0;
  for (std::size_t i = 0; i < sys.maps().size(); ++i) {
    const double a = std::abs(sys.maps()[i].slope);
    if (!(a < 1.0)) throw HypothesisViolation("G1 fails: fiber map of symbol " + std::to_string(i) + " has |a| >= 1");
    alpha = std::max(alpha, a);
  }
  return alpha;
}

double estimate_h(const SystemSpec& sys) {
  const WordSet& words = sys.offset_words();
  const auto& maps = sys.realized_maps();
  double h = 0.0;
  for (std::size_t u = 0; u < words.size(); ++u)
    for (std::size_t v = u + 1; v < words.size(); ++v) {
      const double d = word_distance(words.word(u), words.word(v), sys.theta());
      for (int k = 0; k < kHGridPoints; ++k) {
        const double y = static_cast<double>(k) / (kHGridPoints - 1);
        h = std::max(h, std::abs(maps[u](y) - maps[v](y)) / d);
      }
    }
  return h;
}

double jacobian_lipschitz(const BaseWeights& weights, Theta theta) {
  auto words = make_word_set(weights.matrix(), 2);
  std::vector<double> g(words->size());
  for (std::size_t i = 0; i < words->size(); ++i) {
    const auto w = words->word(i);
    g[i] = jacobian_weight(weights, w[0], w.subspan(1));
  }
  return lipschitz_seminorm(CylinderFunction(words, std::move(g)), theta).value;
}

double c1_constant(const SystemSpec& sys) {
  verify_g1(sys);
  const double theta = sys.theta().value();
  const double g_lip = jacobian_lipschitz(sys.weights(), sys.theta());
  return std::max(estimate_h(sys) * theta + theta * sys.alphabet() * g_lip, 2.0);
}

std::vector<Symbol> sample_base_path(const BaseWeights& weights, Rng& rng, std::size_t length) {
  const int n = weights.size();
  std::vector<Symbol> path(length);
  auto draw = [&](auto&& prob) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (Symbol s = 0; s < n - 1; ++s) {
      acc += prob(s);
      if (u < acc) return s;
    }
    // Land on the last symbol with positive probability.
    Symbol s = n - 1;
    while (s > 0 && prob(s) == 0.0) --s;
    return s;
  };
  for (std::size_t t = 0; t < length; ++t) {
    if (t == 0)
      path[t] = draw([&](Symbol s) { return weights.stationary(s); });
    else
      path[t] = draw([&](Symbol s) { return weights.transition(path[t - 1], s); });
  }
  return path;
}

Orbit sample_orbit(const SystemSpec& sys, std::uint64_t seed, int length, int burn_in, int lookahead) {
  if (length < 1) throw PreconditionError("sample_orbit needs length >= 1");
  if (burn_in < 0 || lookahead < 0) throw PreconditionError("sample_orbit needs burn_in, lookahead >= 0");
  const auto d = static_cast<std::size_t>(sys.offset_depth());
  const auto past = static_cast<std::size_t>(burn_in);
  const auto n = static_cast<std::size_t>(length);
  Rng rng(seed);
  const auto path = sample_base_path(sys.weights(), rng, past + n + std::max<std::size_t>(static_cast<std::size_t>(lookahead), d));
  const auto span = std::span<const Symbol>(path);
  double y = 0.5;
  for (std::size_t t = 0; t < past; ++t) y = sys.fiber_map(span.subspan(t, d))(y);
  Orbit orbit;
  orbit.y.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    orbit.y[t] = y;
    y = sys.fiber_map(span.subspan(past + t, d))(y);
  }
  orbit.symbols.assign(path.begin() + static_cast<std::ptrdiff_t>(past),
                       path.begin() + static_cast<std::ptrdiff_t>(past + n + static_cast<std::size_t>(lookahead)));
  return orbit;
}

}  // namespace skewstab
