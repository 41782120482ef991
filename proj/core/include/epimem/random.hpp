#pragma once

#include "epimem/numerics.hpp"

#include <cstdint>
#include <random>

namespace epimem {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a master seed and a label.
/// splitmix64 finaliser; stable across platforms.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (label + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                              double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                              double stddev = 1.0) {
  Rng rng(seed);
  return gaussian_matrix(rows, cols, rng, stddev);
}

}  // namespace epimem
