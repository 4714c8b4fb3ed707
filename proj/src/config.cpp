#include "skewstab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace skewstab {

using nlohmann::json;

namespace {

std::string child(const std::string& pointer, const std::string& key) { return pointer + "/" + key; }
std::string child(const std::string& pointer, std::size_t index) { return pointer + "/" + std::to_string(index); }

// Tracks which keys of an object were consumed so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string pointer) : j_(j), pointer_(std::move(pointer)) {
    if (!j_.is_object()) throw ConfigError(pointer_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(child(pointer_, key), "required key is missing");
    seen_.insert(key);
    return j_.at(key);
  }

  const json* maybe(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string ptr(const std::string& key) const { return child(pointer_, key); }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(child(pointer_, key), "unknown key \"" + key + "\"");
  }

 private:
  const json& j_;
  std::string pointer_;
  std::set<std::string> seen_;
};

double number(const json& j, const std::string& pointer) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
      } else {
        const std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        std::size_t u1 = 0, u2 = 0;
        const double a = std::stod(num, &u1);
        const double b = std::stod(den, &u2);
        if (u1 == num.size() && u2 == den.size() && b != 0.0) return a / b;
      }
    } catch (const std::exception&) {
    }
    throw ConfigError(pointer, "cannot parse \"" + s + "\" as a number or fraction");
  }
  throw ConfigError(pointer, "expected a number");
}

int integer(const json& j, const std::string& pointer) {
  if (!j.is_number_integer()) throw ConfigError(pointer, "expected an integer");
  return j.get<int>();
}

std::vector<double> numbers(const json& j, const std::string& pointer) {
  if (!j.is_array()) throw ConfigError(pointer, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], child(pointer, i)));
  return out;
}

std::vector<std::vector<double>> matrix_of(const json& j, const std::string& pointer) {
  if (!j.is_array()) throw ConfigError(pointer, "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(numbers(j[i], child(pointer, i)));
  return out;
}

template <class Fn>
auto wrap(const std::string& pointer, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(pointer, e.what());
  }
}

BaseWeights parse_weights(const json& j, const std::string& pointer, const TransitionMatrix& matrix) {
  Reader r(j, pointer);
  const auto& kind_j = r.at("kind");
  if (!kind_j.is_string()) throw ConfigError(r.ptr("kind"), "expected \"bernoulli\" or \"markov\"");
  const auto kind = kind_j.get<std::string>();
  if (kind == "bernoulli") {
    auto p = numbers(r.at("p"), r.ptr("p"));
    r.finish();
    return wrap(r.ptr("p"), [&] { return BaseWeights::bernoulli(std::move(p), matrix); });
  }
  if (kind == "markov") {
    auto rows = matrix_of(r.at("P"), r.ptr("P"));
    std::optional<std::vector<double>> pi;
    if (const auto* pj = r.maybe("pi")) pi = numbers(*pj, r.ptr("pi"));
    r.finish();
    return wrap(pointer, [&] { return BaseWeights::markov(rows, matrix, pi); });
  }
  throw ConfigError(r.ptr("kind"), "unknown weight kind \"" + kind + "\"");
}

SystemSpec parse_system(const json& j, const std::string& pointer) {
  Reader r(j, pointer);
  const auto& tj = r.at("transitions");
  if (!tj.is_array()) throw ConfigError(r.ptr("transitions"), "expected a 0/1 matrix");
  std::vector<std::vector<int>> rows;
  for (std::size_t i = 0; i < tj.size(); ++i) {
    const auto row = numbers(tj[i], child(r.ptr("transitions"), i));
    std::vector<int> ints;
    for (double v : row) ints.push_back(static_cast<int>(v));
    for (std::size_t k = 0; k < row.size(); ++k)
      if (row[k] != 0.0 && row[k] != 1.0) throw ConfigError(child(child(r.ptr("transitions"), i), k), "entries must be 0 or 1");
    rows.push_back(std::move(ints));
  }
  const TransitionMatrix matrix = wrap(r.ptr("transitions"), [&] { return TransitionMatrix(rows); });
  const double theta_v = number(r.at("theta"), r.ptr("theta"));
  const Theta theta = wrap(r.ptr("theta"), [&] { return Theta(theta_v); });
  BaseWeights weights = parse_weights(r.at("weights"), r.ptr("weights"), matrix);

  const auto& mj = r.at("fiber_maps");
  if (!mj.is_array()) throw ConfigError(r.ptr("fiber_maps"), "expected one {slope, offset} per symbol");
  std::vector<FiberMapSpec> maps;
  for (std::size_t i = 0; i < mj.size(); ++i) {
    Reader m(mj[i], child(r.ptr("fiber_maps"), i));
    FiberMapSpec spec;
    spec.slope = number(m.at("slope"), m.ptr("slope"));
    spec.offset = number(m.at("offset"), m.ptr("offset"));
    m.finish();
    maps.push_back(spec);
  }
  int offset_depth = 1;
  if (const auto* dj = r.maybe("offset_depth")) offset_depth = integer(*dj, r.ptr("offset_depth"));
  if (offset_depth < 1) throw ConfigError(r.ptr("offset_depth"), "offset depth must be >= 1");

  std::vector<double> corrections;
  if (const auto* oj = r.maybe("offset_table")) {
    if (!oj->is_array()) throw ConfigError(r.ptr("offset_table"), "expected an array of {word, correction}");
    const WordSet words(matrix, offset_depth);
    corrections.assign(words.size(), 0.0);
    for (std::size_t i = 0; i < oj->size(); ++i) {
      const std::string ep = child(r.ptr("offset_table"), i);
      Reader e((*oj)[i], ep);
      const auto word_d = numbers(e.at("word"), e.ptr("word"));
      std::vector<int> word;
      for (double v : word_d) word.push_back(static_cast<int>(v));
      const auto idx = words.find(word);
      if (!idx) throw ConfigError(e.ptr("word"), "not an admissible word of length offset_depth");
      corrections[*idx] = number(e.at("correction"), e.ptr("correction"));
      e.finish();
    }
  }
  r.finish();
  return wrap(pointer, [&] {
    return SystemSpec(BaseSystem{matrix, theta, std::move(weights)}, std::move(maps), offset_depth, std::move(corrections));
  });
}

void validate_observable(const json& j, const std::string& pointer, const TransitionMatrix& matrix) {
  (void)build_observable(j, matrix, pointer);
}

}  // namespace

Observable build_observable(const json& spec, const TransitionMatrix& matrix, const std::string& pointer) {
  Reader r(spec, pointer);
  const auto& tj = r.at("type");
  if (!tj.is_string()) throw ConfigError(r.ptr("type"), "expected a string");
  const auto type = tj.get<std::string>();
  if (type == "fiber_identity") {
    r.finish();
    return Observable::fiber_identity(matrix);
  }
  if (type == "constant") {
    const double c = number(r.at("value"), r.ptr("value"));
    r.finish();
    return Observable::constant(matrix, c);
  }
  if (type == "first_symbol_indicator") {
    const int s = integer(r.at("symbol"), r.ptr("symbol"));
    r.finish();
    return wrap(r.ptr("symbol"), [&] { return Observable::symbol_indicator(matrix, s); });
  }
  if (type == "cylinder" || type == "piecewise_linear") {
    const int depth = integer(r.at("depth"), r.ptr("depth"));
    if (depth < 1 || depth > 12) throw ConfigError(r.ptr("depth"), "observable depth must lie in 1..12");
    auto words = make_word_set(matrix, depth);
    if (type == "cylinder") {
      auto values = numbers(r.at("values"), r.ptr("values"));
      r.finish();
      if (values.size() != words->size())
        throw ConfigError(r.ptr("values"), "expected " + std::to_string(words->size()) + " values (one per admissible word)");
      return Observable::base_only(CylinderFunction(words, std::move(values)));
    }
    const auto& fj = r.at("fibers");
    if (!fj.is_array() || fj.size() != words->size())
      throw ConfigError(r.ptr("fibers"), "expected " + std::to_string(words->size()) + " fiber functions");
    std::vector<PiecewiseLinearFn> fibers;
    for (std::size_t i = 0; i < fj.size(); ++i) {
      const std::string fp = child(r.ptr("fibers"), i);
      Reader f(fj[i], fp);
      auto x = numbers(f.at("breakpoints"), f.ptr("breakpoints"));
      auto v = numbers(f.at("values"), f.ptr("values"));
      f.finish();
      fibers.push_back(wrap(fp, [&] { return PiecewiseLinearFn(std::move(x), std::move(v)); }));
    }
    r.finish();
    return Observable(words, std::move(fibers));
  }
  throw ConfigError(r.ptr("type"), "unknown observable type \"" + type + "\"");
}

std::string digest_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config_json(const json& doc, const std::string& source) {
  ExperimentConfig cfg;
  cfg.raw = doc;
  cfg.source_path = source;
  cfg.digest = digest_hex(doc.dump());
  Reader r(doc, "");
  cfg.system = parse_system(r.at("system"), "/system");
  const SystemSpec& sys = *cfg.system;
  if (const auto* j = r.maybe("depth")) cfg.depth = integer(*j, "/depth");
  if (cfg.depth < std::max(1, sys.offset_depth()) || cfg.depth > 14)
    throw ConfigError("/depth", "working depth must lie in [max(1, offset_depth), 14]");
  if (const auto* j = r.maybe("grid")) cfg.grid = integer(*j, "/grid");
  if (cfg.grid < 0 || cfg.grid == 1) throw ConfigError("/grid", "quantization grid must be 0 (off) or >= 2");
  if (const auto* j = r.maybe("tolerance")) cfg.tolerance = number(*j, "/tolerance");
  if (!(cfg.tolerance > 0.0)) throw ConfigError("/tolerance", "tolerance must be > 0");
  if (const auto* j = r.maybe("seed")) {
    if (!j->is_number_integer() || (!j->is_number_unsigned() && j->get<std::int64_t>() < 0))
      throw ConfigError("/seed", "expected a non-negative integer");
    cfg.seed = j->get<std::uint64_t>();
  }

  if (const auto* j = r.maybe("spectral")) {
    Reader b(*j, "/spectral");
    SpectralBlock s;
    if (const auto* v = b.maybe("samples")) s.samples = integer(*v, b.ptr("samples"));
    if (const auto* v = b.maybe("nmax")) s.nmax = integer(*v, b.ptr("nmax"));
    if (const auto* v = b.maybe("depth")) s.depth = integer(*v, b.ptr("depth"));
    if (const auto* v = b.maybe("gap_depth")) s.gap_depth = integer(*v, b.ptr("gap_depth"));
    if (const auto* v = b.maybe("gap_iters")) s.gap_iters = integer(*v, b.ptr("gap_iters"));
    b.finish();
    if (s.samples < 1) throw ConfigError(b.ptr("samples"), "must be >= 1");
    if (s.nmax < 2) throw ConfigError(b.ptr("nmax"), "must be >= 2");
    if (s.depth < std::max(1, sys.offset_depth()) || s.depth > 8) throw ConfigError(b.ptr("depth"), "must lie in [offset_depth, 8]");
    if (s.gap_depth < 2 || s.gap_depth > 12) throw ConfigError(b.ptr("gap_depth"), "must lie in 2..12");
    if (s.gap_iters < 1) throw ConfigError(b.ptr("gap_iters"), "must be >= 1");
    cfg.spectral = s;
  }

  if (const auto* j = r.maybe("stability")) {
    Reader b(*j, "/stability");
    StabilityBlock s;
    if (const auto* v = b.maybe("offset_shift")) s.offset_shift = numbers(*v, b.ptr("offset_shift"));
    if (const auto* v = b.maybe("weight_shift")) s.weight_shift = numbers(*v, b.ptr("weight_shift"));
    if (const auto* v = b.maybe("delta_max")) s.delta_max = number(*v, b.ptr("delta_max"));
    if (const auto* v = b.maybe("k5")) s.k5 = number(*v, b.ptr("k5"));
    s.deltas = numbers(b.at("deltas"), b.ptr("deltas"));
    if (const auto* v = b.maybe("depth")) s.depth = integer(*v, b.ptr("depth"));
    if (const auto* v = b.maybe("grid")) s.grid = integer(*v, b.ptr("grid"));
    if (const auto* v = b.maybe("tolerance")) s.tolerance = number(*v, b.ptr("tolerance"));
    b.finish();
    if (!(s.delta_max > 0.0)) throw ConfigError(b.ptr("delta_max"), "must be > 0");
    if (s.deltas.empty()) throw ConfigError(b.ptr("deltas"), "must be nonempty");
    for (std::size_t i = 0; i < s.deltas.size(); ++i) {
      const std::string p = child(b.ptr("deltas"), i);
      if (!(s.deltas[i] > 0.0 && s.deltas[i] < s.delta_max)) throw ConfigError(p, "delta must lie in (0, delta_max)");
      if (i > 0 && !(s.deltas[i] < s.deltas[i - 1])) throw ConfigError(p, "deltas must be sorted descending");
    }
    if (s.depth < std::max(1, sys.offset_depth()) || s.depth > 10) throw ConfigError(b.ptr("depth"), "must lie in [offset_depth, 10]");
    if (s.grid < 0 || s.grid == 1) throw ConfigError(b.ptr("grid"), "must be 0 (off) or >= 2");
    if (!(s.tolerance > 0.0)) throw ConfigError(b.ptr("tolerance"), "must be > 0");
    cfg.stability = s;
    const auto fam = build_family(cfg);
    for (std::size_t i = 0; i < s.deltas.size(); ++i)
      wrap(child(b.ptr("deltas"), i), [&] { (void)realize(fam, s.deltas[i]); return 0; });
  }

  if (const auto* j = r.maybe("correlations")) {
    Reader b(*j, "/correlations");
    CorrelationBlock c;
    c.psi = b.at("psi");
    c.phi = b.at("phi");
    if (const auto* v = b.maybe("lags")) c.lags = integer(*v, b.ptr("lags"));
    if (const auto* v = b.maybe("gordin_lags")) c.gordin_lags = integer(*v, b.ptr("gordin_lags"));
    if (const auto* v = b.maybe("mc_samples")) c.mc_samples = static_cast<std::size_t>(integer(*v, b.ptr("mc_samples")));
    b.finish();
    validate_observable(c.psi, b.ptr("psi"), sys.matrix());
    validate_observable(c.phi, b.ptr("phi"), sys.matrix());
    if (!build_observable(c.psi, sys.matrix()).base_only()) throw ConfigError(b.ptr("psi"), "psi must be constant along fibers");
    if (build_observable(c.phi, sys.matrix()).depth() > cfg.depth) throw ConfigError(b.ptr("phi"), "observable depth exceeds working depth");
    if (c.lags < 2) throw ConfigError(b.ptr("lags"), "must be >= 2");
    if (c.gordin_lags < 2) throw ConfigError(b.ptr("gordin_lags"), "must be >= 2");
    if (c.mc_samples < 100) throw ConfigError(b.ptr("mc_samples"), "must be >= 100");
    cfg.correlations = c;
  }

  if (const auto* j = r.maybe("clt")) {
    Reader b(*j, "/clt");
    CltBlock c;
    c.observable = b.at("observable");
    if (const auto* v = b.maybe("n")) c.n = integer(*v, b.ptr("n"));
    if (const auto* v = b.maybe("trials")) c.trials = integer(*v, b.ptr("trials"));
    if (const auto* v = b.maybe("J")) c.J = integer(*v, b.ptr("J"));
    if (const auto* v = b.maybe("J_check")) c.J_check = integer(*v, b.ptr("J_check"));
    if (const auto* v = b.maybe("burn_in")) c.burn_in = integer(*v, b.ptr("burn_in"));
    if (const auto* v = b.maybe("seeds")) c.seeds = integer(*v, b.ptr("seeds"));
    if (const auto* v = b.maybe("mean_depth")) c.mean_depth = integer(*v, b.ptr("mean_depth"));
    if (const auto* v = b.maybe("mean_grid")) c.mean_grid = integer(*v, b.ptr("mean_grid"));
    if (const auto* v = b.maybe("mean_tolerance")) c.mean_tolerance = number(*v, b.ptr("mean_tolerance"));
    if (const auto* v = b.maybe("mc_samples")) c.mc_samples = static_cast<std::size_t>(integer(*v, b.ptr("mc_samples")));
    b.finish();
    validate_observable(c.observable, b.ptr("observable"), sys.matrix());
    if (c.n < 1) throw ConfigError(b.ptr("n"), "must be >= 1");
    if (c.trials < kMinTrials)
      throw ConfigError(b.ptr("trials"), "at least " + std::to_string(kMinTrials) + " trials are required for the KS critical value");
    if (c.J < 1) throw ConfigError(b.ptr("J"), "must be >= 1");
    if (c.J_check <= c.J) throw ConfigError(b.ptr("J_check"), "must exceed J");
    if (c.burn_in < 0) throw ConfigError(b.ptr("burn_in"), "must be >= 0");
    if (c.seeds < 1) throw ConfigError(b.ptr("seeds"), "must be >= 1");
    if (c.mean_depth < std::max(1, sys.offset_depth() - 1) || c.mean_depth > 8)
      throw ConfigError(b.ptr("mean_depth"), "must lie in [max(1, offset_depth - 1), 8]");
    if (c.mean_grid < 0 || c.mean_grid == 1) throw ConfigError(b.ptr("mean_grid"), "must be 0 (off) or >= 2");
    if (!(c.mean_tolerance > 0.0)) throw ConfigError(b.ptr("mean_tolerance"), "must be > 0");
    if (c.mc_samples < 100) throw ConfigError(b.ptr("mc_samples"), "must be >= 100");
    cfg.clt = c;
  }
  r.finish();
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_config_json(doc, source);
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

PerturbationFamily build_family(const ExperimentConfig& cfg) {
  if (!cfg.stability) throw ConfigError("/stability", "config has no stability block");
  const auto& s = *cfg.stability;
  const int n = cfg.sys().alphabet();
  if (!s.offset_shift.empty() && static_cast<int>(s.offset_shift.size()) != n)
    throw ConfigError("/stability/offset_shift", "expected one entry per symbol");
  if (!s.weight_shift.empty() && static_cast<int>(s.weight_shift.size()) != n)
    throw ConfigError("/stability/weight_shift", "expected one entry per symbol");
  return PerturbationFamily{cfg.sys(), s.offset_shift, s.weight_shift, s.delta_max, s.k5};
}

}  // namespace skewstab
