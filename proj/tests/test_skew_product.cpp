#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "skewstab/error.hpp"
#include "skewstab/random.hpp"

using namespace skewstab;

namespace {

SystemSpec with_slopes(double a0, double a1) {
  return fixture::cantor().with_maps({{a0, 0.0}, {a1, 0.0}});
}

}  // namespace

TEST_CASE("G1 contraction") {
  CHECK(verify_g1(fixture::cantor()) == doctest::Approx(1.0 / 3.0));
  CHECK(verify_g1(with_slopes(0.2, 0.9)) == doctest::Approx(0.9));
  CHECK_THROWS_WITH_AS(with_slopes(0.2, 1.1), doctest::Contains("symbol 1"), HypothesisViolation);
  // image leaves [0, 1]
  CHECK_THROWS_AS(fixture::cantor().with_maps({{0.5, 0.0}, {0.5, 0.6}}), HypothesisViolation);
  CHECK_THROWS_AS(fixture::cantor().with_maps({{0.5, 0.0}}), HypothesisViolation);
}

TEST_CASE("offset tables") {
  const auto sys = fixture::offset_coupled();
  CHECK(sys.offset_depth() == 2);
  CHECK_FALSE(sys.symbol_only());
  CHECK(fixture::cantor().symbol_only());
  const Word w01{0, 1}, w10{1, 0}, w11{1, 1};
  CHECK(sys.fiber_map(w01).offset == doctest::Approx(0.05));
  CHECK(sys.fiber_map(w10).offset == doctest::Approx(0.6));
  CHECK(sys.fiber_map(w11).offset == doctest::Approx(0.65));
  CHECK_THROWS_AS(SystemSpec(fixture::cantor().base(), {{1.0 / 3.0, 0.0}, {1.0 / 3.0, 0.6}}, 2, {0.0, 0.5, 0.0, 0.5}),
                  HypothesisViolation);
  CHECK_THROWS_AS(SystemSpec(fixture::cantor().base(), {{1.0 / 3.0, 0.0}, {1.0 / 3.0, 0.6}}, 2, {0.0, 0.05}),
                  HypothesisViolation);
}

TEST_CASE("G2 constant H") {
  CHECK(estimate_h(fixture::cantor()) == doctest::Approx(2.0 / 3.0));
  CHECK(estimate_h(fixture::cantor().with_maps({{0.5, 0.25}, {0.5, 0.25}})) == doctest::Approx(0.0));
  // 0.6 between 01 and 11 (index 0); the index-1 pairs give only 0.05 / theta.
  const auto sys = fixture::offset_coupled();
  CHECK(estimate_h(sys) == doctest::Approx(0.6));
  const SystemSpec small(sys.base(), sys.maps(), 2, {0.0, 0.03, 0.0, 0.03});
  const SystemSpec doubled(sys.base(), sys.maps(), 2, {0.0, 0.06, 0.0, 0.06});
  const double h = estimate_h(small);
  CHECK(estimate_h(doubled) <= 2.0 * h + 1e-12);
  CHECK(estimate_h(doubled) >= h - 1e-12);
  // the construction bound diam(I) / theta = 2
  CHECK(estimate_h(fixture::cantor()) <= 1.0 / 0.5);
}

TEST_CASE("C1 constant") {
  const auto cantor = fixture::cantor();
  CHECK(jacobian_lipschitz(cantor.weights(), cantor.theta()) == 0.0);
  CHECK(c1_constant(cantor) == doctest::Approx(2.0));
  const auto mk = fixture::markov();
  const double g = jacobian_lipschitz(mk.weights(), mk.theta());
  CHECK(g > 0.0);
  const double expected = std::max(estimate_h(mk) * 0.5 + 0.5 * 2 * g, 2.0);
  CHECK(c1_constant(mk) == doctest::Approx(expected));
  CHECK(c1_constant(mk) >= 2.0);
}

TEST_CASE("orbit sampling") {
  const auto sys = fixture::cantor();
  const AffineMap f0 = sys.fiber_map(Word{0});
  double y = 0.0;
  for (int i = 0; i < 50; ++i) y = f0(y);
  CHECK(y == 0.0);
  CHECK(std::pow(1.0 / 3.0, 40) < 1e-19);

  const auto a = sample_orbit(sys, 42, 100000, 40, 3);
  const auto b = sample_orbit(sys, 42, 100000, 40, 3);
  CHECK(a.symbols == b.symbols);
  CHECK(a.y == b.y);
  CHECK(a.symbols.size() == 100003);
  double mean = 0.0;
  bool inside = true;
  for (std::size_t t = 0; t < a.y.size(); ++t) {
    mean += a.y[t];
    inside = inside && a.y[t] >= 0.0 && a.y[t] <= 1.0;
    if (t + 1 < a.y.size()) CHECK(a.y[t + 1] == doctest::Approx(sys.fiber_map(std::span<const Symbol>(&a.symbols[t], 1))(a.y[t])).epsilon(1e-15));
  }
  CHECK(inside);
  CHECK(std::abs(mean / 1e5 - 0.5) <= 0.01);

  const auto c = sample_orbit(sys, 43, 1000, 40);
  CHECK(c.symbols != std::vector<Symbol>(a.symbols.begin(), a.symbols.begin() + 1000));
}

TEST_CASE("markov base path frequencies") {
  const auto mk = fixture::markov_weights();
  Rng rng(9);
  const auto path = sample_base_path(mk, rng, 200000);
  double zeros = 0.0, zz = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    zeros += path[t] == 0;
    if (t + 1 < path.size()) zz += path[t] == 0 && path[t + 1] == 0;
  }
  CHECK(zeros / 200000.0 == doctest::Approx(5.0 / 6.0).epsilon(0.01));
  CHECK(zz / 199999.0 == doctest::Approx(0.75).epsilon(0.01));
}
