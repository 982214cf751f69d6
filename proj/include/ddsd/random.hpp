// include/ddsd/random.hpp

// Copyright 2026  The ddsd Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Seeded draws built only on std::mt19937_64, whose output sequence is fixed
// by the standard. The std::*_distribution adaptors are not, so they are
// avoided wherever results must be reproducible across toolchains.

#ifndef DDSD_RANDOM_HPP_
#define DDSD_RANDOM_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "ddsd/text_util.hpp"

namespace ddsd::rnd {

using Engine = std::mt19937_64;

/// [0, 1)
inline double Uniform(Engine &rng) { return UnitFromBits(rng()); }

inline double Uniform(Engine &rng, double lo, double hi) {
  return lo + (hi - lo) * Uniform(rng);
}

/// [0, n)
inline std::size_t Index(Engine &rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

inline bool Bernoulli(Engine &rng, double p) { return Uniform(rng) < p; }

/// Box-Muller.
inline double Normal(Engine &rng) {
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = Uniform(rng);
  double u2 = Uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Fisher-Yates.
template <typename T>
void Shuffle(std::vector<T> &v, Engine &rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[Index(rng, i)]);
}

}  // namespace ddsd::rnd

#endif  // DDSD_RANDOM_HPP_
