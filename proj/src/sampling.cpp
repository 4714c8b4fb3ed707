#include "skewstab/sampling.hpp"

#include "skewstab/error.hpp"

namespace skewstab {

namespace {

int atom_count(Rng& rng, int max_atoms) {
  if (max_atoms < 1) throw PreconditionError("max_atoms must be >= 1");
  return 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_atoms)));
}

}  // namespace

AtomicSignedMeasure random_positive_measure(Rng& rng, int max_atoms, double mass) {
  const int k = atom_count(rng, max_atoms);
  std::vector<Atom> atoms;
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    atoms.push_back({rng.uniform(), 0.05 + rng.uniform()});
    total += atoms.back().weight;
  }
  for (auto& a : atoms) a.weight *= mass / total;
  return AtomicSignedMeasure::from_unsorted(std::move(atoms));
}

AtomicSignedMeasure random_signed_measure(Rng& rng, int max_atoms, double lo, double hi) {
  const int k = atom_count(rng, max_atoms);
  std::vector<Atom> atoms;
  for (int i = 0; i < k; ++i) atoms.push_back({rng.uniform(), rng.uniform(lo, hi)});
  return AtomicSignedMeasure::from_unsorted(std::move(atoms));
}

Disintegration random_positive_disintegration(const WordSetPtr& words, Rng& rng, int max_atoms) {
  std::vector<AtomicSignedMeasure> fibers;
  for (std::size_t i = 0; i < words->size(); ++i) fibers.push_back(random_positive_measure(rng, max_atoms, 0.5 + rng.uniform()));
  return Disintegration(words, std::move(fibers));
}

Disintegration random_signed_disintegration(const WordSetPtr& words, Rng& rng, int max_atoms) {
  std::vector<AtomicSignedMeasure> fibers;
  for (std::size_t i = 0; i < words->size(); ++i) fibers.push_back(random_signed_measure(rng, max_atoms, -1.0, 1.0));
  return Disintegration(words, std::move(fibers));
}

Disintegration random_vanishing_disintegration(const WordSetPtr& words, const BaseWeights& weights, Rng& rng,
                                               int max_atoms) {
  Disintegration mu = random_signed_disintegration(words, rng, max_atoms);
  const double mean = base_mean(marginal_density(mu), weights);
  for (auto& f : mu.fibers) f = combine(1.0, f, 1.0, AtomicSignedMeasure::dirac(0.5, -mean));
  return mu;
}

}  // namespace skewstab
