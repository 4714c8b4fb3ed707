#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "skewstab/error.hpp"
#include "skewstab/limit_theorems.hpp"

using namespace skewstab;

namespace {

const FixedPointResult& cantor_fp() {
  static const auto fp = fixed_point(fixture::cantor(), 6, 1e-9, 1 << 14);
  return fp;
}

const FixedPointResult& markov_fp() {
  static const auto fp = fixed_point(fixture::markov(), 6, 1e-6, 1 << 14);
  return fp;
}

// Cov(1{x_0 = 0}, y_n) for the Cantor system: only the symbol x_0 feeds y_n, with weight 3^{-(n-1)} / 3.
double cantor_indicator_identity(int n) { return n == 0 ? 0.0 : -0.5 * std::pow(3.0, -n); }

}  // namespace

TEST_CASE("observables") {
  const auto a = fixture::full2();
  const auto id = Observable::fiber_identity(a);
  CHECK(id.fiber_lipschitz() == 1.0);
  CHECK(id.base_lipschitz(Theta(0.5)) == 0.0);
  CHECK_FALSE(id.base_only());
  const auto ind = Observable::symbol_indicator(a, 1);
  CHECK(ind.base_only());
  CHECK(ind.base_lipschitz(Theta(0.5)) == doctest::Approx(1.0));
  CHECK(ind.lipschitz(Theta(0.5)) == doctest::Approx(1.0));
  CHECK(ind(0, 0.3) == 0.0);
  CHECK(ind(1, 0.3) == 1.0);
  CHECK(id.shifted(-0.5)(0, 0.25) == doctest::Approx(-0.25));
  CHECK(id.scaled(3.0).sup_norm() == doctest::Approx(3.0));
  CHECK_THROWS_AS(Observable::symbol_indicator(a, 2), PreconditionError);
}

TEST_CASE("integration against the fixed point") {
  const auto sys = fixture::cantor();
  const auto& mu = cantor_fp().measure;
  const auto& w = sys.weights();
  CHECK(integrate_observable(mu, Observable::constant(sys.matrix(), 1.0), w) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(integrate_observable(mu, Observable::fiber_identity(sys.matrix()), w) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(integrate_observable(mu, Observable::symbol_indicator(sys.matrix(), 0), w) == doctest::Approx(0.5));
  const auto id = Observable::fiber_identity(sys.matrix());
  const double lin = integrate_observable(mu, id.scaled(2.0).shifted(1.0), w);
  CHECK(lin == doctest::Approx(2.0 * integrate_observable(mu, id, w) + 1.0));

  // Markov mean against a long orbit average
  const auto mk = fixture::markov();
  const auto orbit = sample_orbit(mk, 5, 400000, 40);
  double mean = 0.0;
  for (double y : orbit.y) mean += y;
  mean /= static_cast<double>(orbit.y.size());
  CHECK(std::abs(integrate_observable(markov_fp().measure, Observable::fiber_identity(mk.matrix()), mk.weights()) - mean) <= 3e-3);
}

TEST_CASE("fiber average") {
  const auto sys = fixture::cantor();
  const auto& mu = cantor_fp().measure;
  const auto fa = fiber_average(mu, Observable::fiber_identity(sys.matrix()), sys.theta());
  for (double v : fa.s.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(fa.margin >= 0.0);
  CHECK(fa.bound == doctest::Approx(fa.lip_s + fa.margin));
  const auto ind = fiber_average(mu, Observable::symbol_indicator(sys.matrix(), 0), sys.theta());
  for (std::size_t i = 0; i < ind.s.values.size(); ++i)
    CHECK(ind.s.values[i] == (ind.s.words->word(i)[0] == 0 ? 1.0 : 0.0));

  const auto mk = fixture::markov();
  const auto m = fiber_average(markov_fp().measure, Observable::fiber_identity(mk.matrix()), mk.theta());
  CHECK(m.margin >= -1e-9);
}

TEST_CASE("correlations: iid base observables") {
  const auto sys = fixture::cantor();
  auto w2 = make_word_set(sys.matrix(), 2);
  const auto psi = Observable::base_only(CylinderFunction(w2, {0.3, -1.0, 2.0, 0.5}));
  const auto curve = correlation_curve(sys, cantor_fp().measure, psi, psi, 6);
  REQUIRE(curve.values.size() == 7);
  CHECK(curve.values[0] > 0.1);
  for (int n = 2; n <= 6; ++n) {
    CHECK(curve.exact[n]);
    CHECK(std::abs(curve.values[n]) <= 1e-12);
  }
  const auto c = correlation_curve(sys, cantor_fp().measure, Observable::constant(sys.matrix(), 3.0),
                                   Observable::fiber_identity(sys.matrix()), 4);
  for (double v : c.values) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("correlations: cantor closed form") {
  const auto sys = fixture::cantor();
  const auto& mu = cantor_fp().measure;
  const auto psi = Observable::symbol_indicator(sys.matrix(), 0);
  const auto phi = Observable::fiber_identity(sys.matrix());
  const auto curve = correlation_curve(sys, mu, psi, phi, 10);
  for (int n = 0; n <= 10; ++n) CHECK(std::abs(curve.values[n] - cantor_indicator_identity(n)) <= 1e-5);
  CHECK(curve.fit.rate == doctest::Approx(1.0 / 3.0).epsilon(0.05));
  for (int n = 1; n <= 5; ++n) {
    CHECK(exact_covariance(sys, mu, psi, phi, n) == doctest::Approx(curve.values[n]).epsilon(1e-12));
    CHECK(base_composed_correlation(sys, mu, psi, phi, n) == doctest::Approx(0.0).epsilon(1e-9));
  }
  // Var of the Cantor measure is 1/8
  const auto self = correlation_curve(sys, mu, phi, phi, 4);
  CHECK(self.values[0] == doctest::Approx(0.125).epsilon(1e-3));
  for (int n = 1; n <= 4; ++n) CHECK(self.values[n] == doctest::Approx(0.125 * std::pow(3.0, -n)).epsilon(1e-3));
  CHECK_THROWS_AS(exact_covariance(sys, mu, psi, phi, 20, 1 << 10), BudgetError);
}

TEST_CASE("correlations: markov against orbit averages") {
  const auto sys = fixture::markov();
  const auto& mu = markov_fp().measure;
  const auto psi = Observable::symbol_indicator(sys.matrix(), 0);
  const auto phi = Observable::fiber_identity(sys.matrix());
  const auto orbit = sample_orbit(sys, 77, 1000000, 40);
  const std::size_t n = orbit.y.size() - 4;
  for (int lag : {0, 1, 3}) {
    double fg = 0.0, f = 0.0, g = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double a = orbit.symbols[t] == 0, b = orbit.y[t + lag];
      fg += a * b;
      f += a;
      g += b;
    }
    const double mc = fg / n - (f / n) * (g / n);
    CHECK(std::abs(exact_covariance(sys, mu, psi, phi, lag) - mc) <= 2e-3);
  }
  CorrelationOptions opts;
  opts.word_budget = 64;
  opts.mc_samples = 200000;
  opts.seed = 3;
  const auto curve = correlation_curve(sys, mu, psi, phi, 8, opts);
  for (int lag = 0; lag <= 8; ++lag) {
    if (curve.exact[lag]) continue;
    CHECK(curve.std_errors[lag] > 0.0);
    CHECK(std::abs(curve.values[lag] - exact_covariance(sys, mu, psi, phi, lag)) <= 5.0 * curve.std_errors[lag] + 1e-4);
  }
}

TEST_CASE("gordin norms") {
  const auto sys = fixture::cantor();
  const auto& mu = cantor_fp().measure;
  auto w1 = make_word_set(sys.matrix(), 1);
  const auto iid = gordin_norms(sys, mu, Observable::base_only(CylinderFunction(w1, {1.0, 0.0})), 6);
  // an indicator of x_0 is forgotten once x_0 leaves the conditioning window
  CHECK_FALSE(iid.degenerate);
  CHECK(iid.norms[0] == doctest::Approx(0.5));
  for (std::size_t n = 1; n < iid.norms.size(); ++n) CHECK(iid.norms[n] <= 1e-14);
  CHECK(iid.ratio_margin == 1.0);
  CHECK(gordin_norms(sys, mu, Observable::constant(sys.matrix(), 4.0), 5).degenerate);

  const auto mk = fixture::markov();
  const auto ind = Observable::symbol_indicator(mk.matrix(), 0);
  const auto g = gordin_norms(mk, markov_fp().measure, ind, 10);
  CHECK_FALSE(g.degenerate);
  // E(psi - pi_0 | F_n) depends on x_n only through P^n, so the norm decays like 0.4^n
  for (std::size_t n = 1; n + 1 < g.norms.size(); ++n)
    CHECK(g.norms[n + 1] / g.norms[n] == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(g.fit.rate == doctest::Approx(0.4).epsilon(0.01));
  CHECK(g.ratio_margin > 0.5);
  const auto fa = fiber_average(markov_fp().measure, ind, mk.theta());
  const double pi0 = 5.0 / 6.0;
  CHECK(g.norms[0] == doctest::Approx(std::sqrt(pi0 * (1 - pi0))).epsilon(1e-9));
  CHECK(fa.lip_s >= 0.0);
}

TEST_CASE("asymptotic variance") {
  const auto sys = fixture::cantor();
  const auto& mu = cantor_fp().measure;
  const auto phi = Observable::fiber_identity(sys.matrix());
  const auto v = asymptotic_variance(sys, mu, phi, 20);
  CHECK(v.sigma2 == doctest::Approx(0.25).epsilon(5e-3));
  CHECK_FALSE(v.coboundary);
  CHECK(v.tail_bound >= 0.0);
  CHECK(v.tail_bound <= 1e-6);
  const auto shifted = asymptotic_variance(sys, mu, phi.shifted(7.0), 20);
  CHECK(shifted.sigma2 == doctest::Approx(v.sigma2).epsilon(1e-9));
  CHECK(asymptotic_variance(sys, mu, Observable::constant(sys.matrix(), 2.0), 10).sigma2 == doctest::Approx(0.0));
  CHECK(asymptotic_variance(sys, mu, Observable::constant(sys.matrix(), 2.0), 10).coboundary);

  // u - u o sigma with u = 1{x_0 = 0} is a coboundary
  auto w2 = make_word_set(sys.matrix(), 2);
  const auto cob = Observable::base_only(CylinderFunction(w2, {0.0, 1.0, -1.0, 0.0}));
  const auto vc = asymptotic_variance(sys, mu, cob, 10);
  CHECK(std::abs(vc.sigma2) <= 1e-10);
  CHECK(vc.coboundary);

  // Markov indicator: sigma^2 = pi0 pi1 (1 + lambda) / (1 - lambda) with lambda = 0.4
  const auto mk = fixture::markov();
  const auto vm = asymptotic_variance(mk, markov_fp().measure, Observable::symbol_indicator(mk.matrix(), 0), 30);
  CHECK(vm.sigma2 == doctest::Approx(5.0 / 36.0 * 1.4 / 0.6).epsilon(1e-6));
}

TEST_CASE("clt experiment") {
  const auto sys = fixture::cantor();
  const auto& mu = cantor_fp().measure;
  const auto phi = Observable::fiber_identity(sys.matrix());
  const auto v = asymptotic_variance(sys, mu, phi, 20);
  CHECK_THROWS_AS(clt_experiment(sys, phi, 0.5, v, 500, 10, 1), PreconditionError);
  auto cob = v;
  cob.coboundary = true;
  CHECK_THROWS_AS(clt_experiment(sys, phi, 0.5, cob, 500, 200, 1), PreconditionError);

  const auto r = clt_experiment(sys, phi, 0.5, v, 1000, 1000, 11, 2);
  CHECK(r.sums.size() == 1000);
  CHECK(r.critical == doctest::Approx(1.36 / std::sqrt(1000.0) * kKsSlack));
  CHECK(r.pass);
  CHECK(r.sigma_hat == doctest::Approx(0.5).epsilon(0.1));
  const auto again = clt_experiment(sys, phi, 0.5, v, 1000, 1000, 11, 5);
  CHECK(again.sums == r.sums);

  // iid base indicator
  auto w1 = make_word_set(sys.matrix(), 1);
  const auto ind = Observable::base_only(CylinderFunction(w1, {1.0, 0.0}));
  const auto vi = asymptotic_variance(sys, mu, ind, 5);
  CHECK(vi.sigma2 == doctest::Approx(0.25));
  // large n keeps the lattice spacing of S_n / sqrt(n) well below the KS threshold
  CHECK(clt_experiment(sys, ind, 0.5, vi, 20000, 2000, 4).pass);
  // wrong variance is detected
  auto wrong = vi;
  wrong.sigma2 = 1.0;
  CHECK_FALSE(clt_experiment(sys, ind, 0.5, wrong, 20000, 2000, 4).pass);
}

TEST_CASE("ks statistic") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> xs(5000);
  for (auto& x : xs) x = normal(gen);
  CHECK(ks_statistic_normal(xs, 2.0) < 1.36 / std::sqrt(5000.0));
  CHECK(ks_statistic_normal(xs, 1.0) > 0.1);
  CHECK(ks_statistic_normal({0.0}, 1.0) == doctest::Approx(0.5));
}
