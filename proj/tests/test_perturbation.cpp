#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "skewstab/error.hpp"
#include "skewstab/perturbation.hpp"
#include "skewstab/sampling.hpp"

using namespace skewstab;

namespace {

PerturbationFamily fiber_shift() { return {fixture::cantor(), {0.0, -1.0}, {}, 0.2, 1.0}; }
PerturbationFamily weight_shift() { return {fixture::cantor(), {}, {1.0, -1.0}, 0.2, 2.0}; }

}  // namespace

TEST_CASE("realize") {
  const auto fam = fiber_shift();
  CHECK(fam.kind() == PerturbationFamily::Kind::FiberShift);
  CHECK(weight_shift().kind() == PerturbationFamily::Kind::BaseWeights);
  CHECK(to_string(PerturbationFamily::Kind::FiberShift) == "FiberShift");
  const auto s0 = realize(fam, 0.0);
  CHECK(s0.maps()[1].offset == fam.base.maps()[1].offset);
  const auto s1 = realize(fam, 0.01);
  CHECK(s1.maps()[1].offset == doctest::Approx(2.0 / 3.0 - 0.01));
  CHECK(s1.maps()[0].offset == 0.0);
  CHECK(s1.matrix() == fam.base.matrix());
  CHECK(s1.theta().value() == fam.base.theta().value());
  const auto w = realize(weight_shift(), 0.1);
  CHECK(w.weights().stationary(0) == doctest::Approx(0.6));
  CHECK(w.weights().stationary(1) == doctest::Approx(0.4));
  CHECK_THROWS_AS(realize(fam, -0.01), PreconditionError);
  CHECK_THROWS_AS(realize(fam, 0.2), PreconditionError);
  // pushes symbol 0 below zero
  const PerturbationFamily bad{fixture::cantor(), {-1.0, 0.0}, {}, 0.2, 1.0};
  CHECK_THROWS_AS(realize(bad, 0.1), HypothesisViolation);
}

TEST_CASE("admissibility report") {
  const auto rep = admissibility_report(fiber_shift(), {0.1, 0.01}, 3);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].u21 == 0.0);
  CHECK(rep.rows[0].r == doctest::Approx(0.1));
  CHECK(rep.rows[1].r == doctest::Approx(0.01));
  CHECK(rep.c1_finite);
  CHECK(rep.a1_ok);
  CHECK_FALSE(rep.u3_finite_depth_only);

  const PerturbationFamily half{fixture::cantor(), {}, {1.0, -1.0}, 0.2, 2.0};
  const auto w = admissibility_report(half, {0.01}, 6);
  CHECK(w.rows[0].u21 == doctest::Approx(0.02));
  CHECK(w.rows[0].u22 == 0.0);
  CHECK(w.rows[0].u3 == doctest::Approx(std::pow(0.51 / 0.5, 6)).epsilon(1e-12));
  CHECK(w.u3_finite_depth_only);
  CHECK(r_delta(fiber_shift(), 0.05) == doctest::Approx(0.05));
  CHECK(std::abs(r_delta(fiber_shift(), 1e-4) * std::log(1e-4)) < std::abs(r_delta(fiber_shift(), 1e-1) * std::log(1e-1)));
}

TEST_CASE("operator gaps") {
  const auto fam = fiber_shift();
  const auto fp0 = fixed_point(fam.base, 3, 1e-8, 1 << 16);
  const auto g0 = fiber_op_gap(fam.base, realize(fam, 0.0), fp0.measure, 0.0);
  CHECK(g0.gap == 0.0);
  const auto g1 = fiber_op_gap(fam.base, realize(fam, 0.01), fp0.measure, r_delta(fam, 0.01));
  CHECK(g1.gap <= 0.01 + 1e-10);
  CHECK(g1.ok);
  auto words = make_word_set(fam.base.matrix(), 3);
  const auto dirac = Disintegration::product(words, AtomicSignedMeasure::dirac(0.5));
  CHECK(fiber_op_gap(fam.base, realize(fam, 0.01), dirac, 0.01).gap == doctest::Approx(0.01).epsilon(1e-9));

  const auto fpd = fixed_point(realize(fam, 0.05), 3, 1e-8, 1 << 16);
  const auto bu = bu_estimate(fam, {0.05}, {fpd.measure});
  CHECK(bu.ok);
  CHECK(bu.bound == doctest::Approx(4.0));
  const auto og = operator_gap(fam, 0.05, fpd.measure, bu.bu);
  CHECK(og.gap >= 0.0);
  CHECK(og.gap <= (2.0 + bu.bu) * 0.05 + 1e-8);
  CHECK(og.ok);
  CHECK(operator_gap(fam, 0.0, fp0.measure, 0.0).gap == 0.0);
  CHECK(bu_estimate(fam, {0.0}, {fp0.measure}).bu == doctest::Approx(lip_constant(fp0.measure, Theta(0.5)).value));
}

TEST_CASE("perturbed weak contraction") {
  const auto fam = fiber_shift();
  auto words = make_word_set(fam.base.matrix(), 3);
  Rng rng(12);
  for (double d : {0.0, 0.05, 0.15}) {
    const auto sys = realize(fam, d);
    for (int k = 0; k < 20; ++k) {
      const auto mu = random_signed_disintegration(words, rng, 4);
      CHECK(norm_inf(transfer_apply(sys, mu)) <= norm_inf(mu) + 1e-10);
    }
  }
}

TEST_CASE("stability sweep") {
  const auto fam = fiber_shift();
  const auto sweep = stability_sweep(fam, {0.1, 0.01, 0.001}, 2, 1e-10, 1 << 18, 3);
  REQUIRE(sweep.rows.size() == 3);
  CHECK(sweep.decreasing);
  for (const auto& r : sweep.rows) {
    CHECK(r.ok);
    CHECK(r.ratio == doctest::Approx(r.Delta / (r.r * std::abs(std::log(r.delta)))));
    CHECK(r.ratio <= sweep.D);
  }
  const auto serial = stability_sweep(fam, {0.1, 0.01, 0.001}, 2, 1e-10, 1 << 18, 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(serial.rows[i].Delta == sweep.rows[i].Delta);
  CHECK_THROWS_AS(stability_sweep(fam, {0.0}, 2, 1e-10, 1 << 18), PreconditionError);
  CHECK_THROWS_AS(stability_sweep(fam, {0.01, 0.1}, 2, 1e-10, 1 << 18), PreconditionError);
  CHECK_THROWS_AS(stability_sweep(fam, {}, 2, 1e-10, 1 << 18), PreconditionError);
}
