#include "skewstab/fiber_measure.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "skewstab/error.hpp"

namespace skewstab {

namespace {

constexpr double kPositionTol = 1e-12;

double clamp_unit(double y) {
  if (y < -kPositionTol || y > 1.0 + kPositionTol)
    throw PreconditionError("atom position " + std::to_string(y) + " outside [0, 1]");
  return std::clamp(y, 0.0, 1.0);
}

void merge_sorted(std::vector<Atom>& atoms) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < atoms.size();) {
    Atom a = atoms[i++];
    while (i < atoms.size() && atoms[i].position == a.position) a.weight += atoms[i++].weight;
    if (a.weight != 0.0) atoms[out++] = a;
  }
  atoms.resize(out);
}

// Concave piecewise-linear function on [-1, 1], stored as segments split at
// its maximum: L holds the increasing part, R the non-increasing part. Slopes
// carry a lazy offset so adding a linear term is O(1) before rebalancing.
class ConcaveProfile {
 public:
  ConcaveProfile() { right_.push_back({2.0, 0.0}); }

  // f(v) <- max over |u - v| <= d of f(u), restricted back to [-1, 1].
  void dilate(double d) {
    if (d <= 0.0) return;
    right_.push_front({2.0 * d, -offset_});
    trim_left(d);
    trim_right(d);
  }

  void add_linear(double c) {
    offset_ += c;
    value_lo_ -= c;
    while (!left_.empty() && left_.back().raw + offset_ <= 0.0) {
      const Segment s = left_.back();
      left_.pop_back();
      sum_len_ -= s.len;
      sum_len_raw_ -= s.len * s.raw;
      right_.push_front(s);
    }
    while (!right_.empty() && right_.front().raw + offset_ > 0.0) {
      const Segment s = right_.front();
      right_.pop_front();
      sum_len_ += s.len;
      sum_len_raw_ += s.len * s.raw;
      left_.push_back(s);
    }
  }

  double maximum() const { return value_lo_ + sum_len_raw_ + offset_ * sum_len_; }

 private:
  struct Segment {
    double len;
    double raw;
  };

  void trim_left(double d) {
    while (d > 0.0) {
      const bool from_left = !left_.empty();
      Segment& s = from_left ? left_.front() : right_.front();
      const double take = std::min(d, s.len);
      value_lo_ += take * (s.raw + offset_);
      if (from_left) {
        sum_len_ -= take;
        sum_len_raw_ -= take * s.raw;
      }
      s.len -= take;
      d -= take;
      if (s.len <= 0.0) from_left ? left_.pop_front() : right_.pop_front();
      if (left_.empty() && right_.empty()) break;
    }
  }

  void trim_right(double d) {
    while (d > 0.0) {
      const bool from_right = !right_.empty();
      Segment& s = from_right ? right_.back() : left_.back();
      const double take = std::min(d, s.len);
      if (!from_right) {
        sum_len_ -= take;
        sum_len_raw_ -= take * s.raw;
      }
      s.len -= take;
      d -= take;
      if (s.len <= 0.0) from_right ? right_.pop_back() : left_.pop_back();
      if (left_.empty() && right_.empty()) break;
    }
  }

  std::deque<Segment> left_;
  std::deque<Segment> right_;
  double offset_ = 0.0;
  double value_lo_ = 0.0;  // f(-1)
  double sum_len_ = 0.0;
  double sum_len_raw_ = 0.0;
};

}  // namespace

AtomicSignedMeasure::AtomicSignedMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const Atom& a = atoms_[i];
    if (!(a.position >= 0.0 && a.position <= 1.0)) throw PreconditionError("atom position outside [0, 1]");
    if (a.weight == 0.0 || !std::isfinite(a.weight)) throw PreconditionError("atom weights must be finite and nonzero");
    if (i > 0 && !(atoms_[i - 1].position < a.position))
      throw PreconditionError("atom positions must be strictly increasing");
  }
}

AtomicSignedMeasure AtomicSignedMeasure::from_unsorted(std::vector<Atom> atoms) {
  for (auto& a : atoms) a.position = clamp_unit(a.position);
  std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.position < y.position; });
  merge_sorted(atoms);
  AtomicSignedMeasure m;
  m.atoms_ = std::move(atoms);
  return m;
}

AtomicSignedMeasure AtomicSignedMeasure::dirac(double position, double weight) {
  if (weight == 0.0) return {};
  return AtomicSignedMeasure({{clamp_unit(position), weight}});
}

double AtomicSignedMeasure::total_weight() const noexcept {
  double s = 0.0;
  for (const auto& a : atoms_) s += a.weight;
  return s;
}

double AtomicSignedMeasure::total_variation() const noexcept {
  double s = 0.0;
  for (const auto& a : atoms_) s += std::abs(a.weight);
  return s;
}

bool AtomicSignedMeasure::nonnegative() const noexcept {
  return std::all_of(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.weight > 0.0; });
}

bool AffineMap::is_self_contraction(double tol) const noexcept {
  if (!(std::abs(slope) < 1.0) || !std::isfinite(offset)) return false;
  const double lo = std::min(offset, slope + offset);
  const double hi = std::max(offset, slope + offset);
  return lo >= -tol && hi <= 1.0 + tol;
}

// ---------------------------------------------------------------- PiecewiseLinearFn

PiecewiseLinearFn::PiecewiseLinearFn(std::vector<double> breakpoints, std::vector<double> values)
    : x_(std::move(breakpoints)), v_(std::move(values)) {
  if (x_.size() < 2 || x_.size() != v_.size())
    throw PreconditionError("piecewise-linear function needs matching breakpoints and values (at least 2)");
  if (x_.front() != 0.0 || x_.back() != 1.0) throw PreconditionError("breakpoints must start at 0 and end at 1");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i - 1] < x_[i])) throw PreconditionError("breakpoints must be strictly increasing");
  for (double v : v_)
    if (!std::isfinite(v)) throw PreconditionError("piecewise-linear values must be finite");
}

PiecewiseLinearFn PiecewiseLinearFn::constant(double c) { return PiecewiseLinearFn({0.0, 1.0}, {c, c}); }
PiecewiseLinearFn PiecewiseLinearFn::identity() { return PiecewiseLinearFn({0.0, 1.0}, {0.0, 1.0}); }
PiecewiseLinearFn PiecewiseLinearFn::affine(double slope, double intercept) {
  return PiecewiseLinearFn({0.0, 1.0}, {intercept, intercept + slope});
}

double PiecewiseLinearFn::operator()(double y) const {
  if (y <= 0.0) return v_.front();
  if (y >= 1.0) return v_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), y);
  const auto i = static_cast<std::size_t>(it - x_.begin());
  const double t = (y - x_[i - 1]) / (x_[i] - x_[i - 1]);
  return v_[i - 1] + t * (v_[i] - v_[i - 1]);
}

double PiecewiseLinearFn::lipschitz() const noexcept {
  double l = 0.0;
  for (std::size_t i = 1; i < x_.size(); ++i) l = std::max(l, std::abs(v_[i] - v_[i - 1]) / (x_[i] - x_[i - 1]));
  return l;
}

double PiecewiseLinearFn::sup_norm() const noexcept {
  double s = 0.0;
  for (double v : v_) s = std::max(s, std::abs(v));
  return s;
}

PiecewiseLinearFn PiecewiseLinearFn::shifted(double c) const {
  auto v = v_;
  for (auto& x : v) x += c;
  return PiecewiseLinearFn(x_, std::move(v));
}

PiecewiseLinearFn PiecewiseLinearFn::scaled(double c) const {
  auto v = v_;
  for (auto& x : v) x *= c;
  return PiecewiseLinearFn(x_, std::move(v));
}

bool PiecewiseLinearFn::is_constant() const noexcept {
  return std::all_of(v_.begin(), v_.end(), [&](double v) { return v == v_.front(); });
}

// ---------------------------------------------------------------- operations

AtomicSignedMeasure pushforward(const AtomicSignedMeasure& mu, const AffineMap& map) {
  if (!map.is_self_contraction()) throw HypothesisViolation("fiber map is not a self-contraction of [0, 1]");
  std::vector<Atom> out;
  out.reserve(mu.size());
  for (const auto& a : mu.atoms()) out.push_back({clamp_unit(map(a.position)), a.weight});
  if (map.slope < 0.0) std::reverse(out.begin(), out.end());
  merge_sorted(out);
  return AtomicSignedMeasure::from_unsorted(std::move(out));
}

AtomicSignedMeasure combine(double alpha, const AtomicSignedMeasure& mu, double beta, const AtomicSignedMeasure& nu) {
  std::vector<Atom> out;
  out.reserve(mu.size() + nu.size());
  const auto& a = mu.atoms();
  const auto& b = nu.atoms();
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].position < b[j].position)) {
      out.push_back({a[i].position, alpha * a[i].weight});
      ++i;
    } else if (i == a.size() || b[j].position < a[i].position) {
      out.push_back({b[j].position, beta * b[j].weight});
      ++j;
    } else {
      out.push_back({a[i].position, alpha * a[i].weight + beta * b[j].weight});
      ++i;
      ++j;
    }
  }
  std::erase_if(out, [](const Atom& x) { return x.weight == 0.0; });
  return AtomicSignedMeasure(std::move(out));
}

double wk_norm_sorted(std::span<const Atom> atoms) {
  if (atoms.empty()) return 0.0;
  // ||mu|| = ||-mu||; fixing the sign of the first weight makes that exact in floating point.
  const double sign = atoms.front().weight < 0.0 ? -1.0 : 1.0;
  ConcaveProfile profile;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i > 0) profile.dilate(atoms[i].position - atoms[i - 1].position);
    profile.add_linear(sign * atoms[i].weight);
  }
  return std::max(0.0, profile.maximum());
}

double wk_norm(const AtomicSignedMeasure& mu) { return wk_norm_sorted(mu.atoms()); }

double wk_distance(const AtomicSignedMeasure& mu, const AtomicSignedMeasure& nu) {
  return wk_norm(combine(1.0, mu, -1.0, nu));
}

Quantized quantize(const AtomicSignedMeasure& mu, int grid) {
  if (grid < 2) throw PreconditionError("quantization grid must be >= 2");
  const double g = static_cast<double>(grid);
  std::vector<Atom> out;
  out.reserve(mu.size());
  for (const auto& a : mu.atoms()) out.push_back({std::round(a.position * g) / g, a.weight});
  merge_sorted(out);
  return {AtomicSignedMeasure::from_unsorted(std::move(out)), mu.total_variation() / (2.0 * g)};
}

double integrate(const AtomicSignedMeasure& mu, const PiecewiseLinearFn& h) {
  double s = 0.0;
  for (const auto& a : mu.atoms()) s += a.weight * h(a.position);
  return s;
}

AtomicSignedMeasure hutchinson_iterate(std::span<const AffineMap> maps, std::span<const double> probabilities,
                                       const AtomicSignedMeasure& start, int depth) {
  if (maps.size() != probabilities.size() || maps.empty())
    throw PreconditionError("hutchinson_iterate needs one probability per map");
  if (depth < 0) throw PreconditionError("hutchinson_iterate needs depth >= 0");
  AtomicSignedMeasure mu = start;
  for (int k = 0; k < depth; ++k) {
    std::vector<Atom> next;
    next.reserve(mu.size() * maps.size());
    for (std::size_t i = 0; i < maps.size(); ++i)
      for (const auto& a : mu.atoms()) next.push_back({maps[i](a.position), probabilities[i] * a.weight});
    mu = AtomicSignedMeasure::from_unsorted(std::move(next));
  }
  return mu;
}

}  // namespace skewstab
