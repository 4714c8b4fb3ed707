#pragma once

#include "skewstab/disintegration.hpp"
#include "skewstab/random.hpp"

namespace skewstab {

/// Random atoms in [0, 1] with positive weights summing to `mass`.
AtomicSignedMeasure random_positive_measure(Rng& rng, int max_atoms, double mass = 1.0);
/// Random atoms with weights uniform in [lo, hi].
AtomicSignedMeasure random_signed_measure(Rng& rng, int max_atoms, double lo, double hi);

Disintegration random_positive_disintegration(const WordSetPtr& words, Rng& rng, int max_atoms);
Disintegration random_signed_disintegration(const WordSetPtr& words, Rng& rng, int max_atoms);
/// Signed disintegration whose marginal density has zero mean under `weights`.
Disintegration random_vanishing_disintegration(const WordSetPtr& words, const BaseWeights& weights, Rng& rng,
                                               int max_atoms);

}  // namespace skewstab
