#pragma once

#include "skewstab/skew_product.hpp"

namespace fixture {

using namespace skewstab;

inline TransitionMatrix full2() { return TransitionMatrix::full(2); }

inline SystemSpec cantor() {
  const auto a = full2();
  return SystemSpec(BaseSystem{a, Theta(0.5), BaseWeights::bernoulli({0.5, 0.5}, a)},
                    {{1.0 / 3.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0}});
}

// b = (0, 0.6) plus 0.05 whenever the second symbol is 1.
inline SystemSpec offset_coupled() {
  const auto a = full2();
  return SystemSpec(BaseSystem{a, Theta(0.5), BaseWeights::bernoulli({0.5, 0.5}, a)},
                    {{1.0 / 3.0, 0.0}, {1.0 / 3.0, 0.6}}, 2, {0.0, 0.05, 0.0, 0.05});
}

inline BaseWeights markov_weights() {
  return BaseWeights::markov({{0.9, 0.1}, {0.5, 0.5}}, full2(), std::vector<double>{5.0 / 6.0, 1.0 / 6.0});
}

inline SystemSpec markov() {
  return SystemSpec(BaseSystem{full2(), Theta(0.5), markov_weights()}, {{0.4, 0.0}, {0.5, 0.5}});
}

}  // namespace fixture
