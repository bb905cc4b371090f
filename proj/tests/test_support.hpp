#pragma once

#include <random>

#include "debias/types.hpp"

namespace testing_support {

inline debias::Vector random_vector(debias::Index n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  debias::Vector v(n);
  for (debias::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline debias::Matrix random_matrix(debias::Index rows, debias::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  debias::Matrix m(rows, cols);
  for (debias::Index j = 0; j < cols; ++j)
    for (debias::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

inline debias::Vector random_integers(debias::Index n, int lo, int hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(lo, hi);
  debias::Vector v(n);
  for (debias::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// Periodic forward difference matrix built entry by entry.
inline debias::Matrix periodic_difference(debias::Index n) {
  debias::Matrix d = debias::Matrix::Zero(n, n);
  for (debias::Index i = 0; i < n; ++i) {
    d(i, i) -= 1.0;
    d(i, (i + 1) % n) += 1.0;
  }
  return d;
}

}  // namespace testing_support
