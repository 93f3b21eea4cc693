#pragma once

#include <vector>

#include "ssm/disintegration.hpp"
#include "ssm/measure.hpp"
#include "ssm/model.hpp"

namespace ssm::test {

inline Rational R(long num, long den = 1) { return Rational(num, den); }

// {z/2, z/2 + 1} on the line
inline Ifs half_shift_ifs() {
  return Ifs({Similarity({0.5, 0.0}, {0.0, 0.0}), Similarity({0.5, 0.0}, {1.0, 0.0})},
             {R(1, 2), R(1, 2)});
}

// 4-corner OSC system: z/2 + {0, 1/2, i/2, (1+i)/2}, so depth-n cylinders
// tile [0,1)^2 by level-n dyadic squares
inline Ifs four_corner_ifs(std::vector<Rational> probs = {R(1, 4), R(1, 4), R(1, 4),
                                                          R(1, 4)}) {
  const Complex l{0.5, 0.0};
  return Ifs({Similarity(l, {0.0, 0.0}), Similarity(l, {0.5, 0.0}),
              Similarity(l, {0.0, 0.5}), Similarity(l, {0.5, 0.5})},
             std::move(probs));
}

// twindragon: lambda = (1+i)/2, digits {0,1}, uniform weights
inline Ifs twindragon_ifs() {
  const Complex l{0.5, 0.5};
  return Ifs({Similarity(l, {0.0, 0.0}), Similarity(l, {1.0, 0.0})}, {R(1, 2), R(1, 2)});
}

inline Model single_system_model(const Ifs& ifs, std::uint64_t seed = 1) {
  return Model({"A"}, {ifs}, SelectionProcess::bernoulli({R(1)}, seed));
}

// uniform measure on the 4^n dyadic grid of [0,1)^2 (atoms at cell corners)
inline DiscreteMeasure uniform_grid_measure(int n) {
  const int side = 1 << n;
  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  atoms.reserve(static_cast<size_t>(side) * side);
  const Rational w(1, static_cast<long>(side) * side);
  for (int x = 0; x < side; ++x)
    for (int y = 0; y < side; ++y) {
      atoms.emplace_back(x / static_cast<double>(side), y / static_cast<double>(side));
      weights.push_back(w);
    }
  return DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
}

// uniform measure on 2^n points of the horizontal segment [0,1) x {0}
inline DiscreteMeasure segment_measure(int n) {
  const int count = 1 << n;
  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  const Rational w(1, count);
  for (int x = 0; x < count; ++x) {
    atoms.emplace_back(x / static_cast<double>(count), 0.0);
    weights.push_back(w);
  }
  return DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
}

}  // namespace ssm::test
