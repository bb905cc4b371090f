#pragma once

#include <cmath>
#include <limits>

#include "debias/nlm.hpp"

// Direct evaluation of the block-wise nonlocal-means sums, one pixel pair at a time.
namespace nlm_reference {

using debias::Index;
using debias::Matrix;
using debias::Vector;

inline Index wrap(Index i, Index n) { return ((i % n) + n) % n; }

inline Index neighbor(Index i, Index dr, Index dc, Index rows, Index cols) {
  return wrap(i / cols + dr, rows) * cols + wrap(i % cols + dc, cols);
}

inline double patch_distance(const Vector& x, Index i, Index j, int p, Index rows, Index cols) {
  double d = 0.0;
  for (int a = -p; a <= p; ++a)
    for (int b = -p; b <= p; ++b) {
      const double diff = x[neighbor(i, a, b, rows, cols)] - x[neighbor(j, a, b, rows, cols)];
      d += diff * diff;
    }
  return d;
}

struct Reference {
  Matrix w;     // w(i, j), zero outside the search window
  Matrix wbar;  // sum_k w(i - k, j - k)

  Vector apply(const Vector& x) const {
    Vector out(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      double num = 0.0;
      double den = 0.0;
      for (Index j = 0; j < x.size(); ++j) {
        if (wbar(i, j) == 0.0) continue;
        num += wbar(i, j) * x[j];
        den += wbar(i, j);
      }
      out[i] = num / den;
    }
    return out;
  }
};

inline Reference brute_force(const debias::Signal& f, const debias::NlmConfig& cfg) {
  const Index rows = f.shape().rows;
  const Index cols = f.shape().cols;
  const Index n = f.size();
  const int p = cfg.patch_half;
  const int s = cfg.window_half;
  Reference ref{Matrix::Zero(n, n), Matrix::Zero(n, n)};
  for (Index i = 0; i < n; ++i)
    for (int dr = -s; dr <= s; ++dr)
      for (int dc = -s; dc <= s; ++dc) {
        const Index j = neighbor(i, dr, dc, rows, cols);
        const double d = patch_distance(f.values(), i, j, p, rows, cols);
        ref.w(i, j) = cfg.kernel(d / (2.0 * cfg.noise_sigma * cfg.noise_sigma));
      }
  for (Index i = 0; i < n; ++i)
    for (int dr = -s; dr <= s; ++dr)
      for (int dc = -s; dc <= s; ++dc) {
        const Index j = neighbor(i, dr, dc, rows, cols);
        double acc = 0.0;
        for (int a = -p; a <= p; ++a)
          for (int b = -p; b <= p; ++b)
            acc += ref.w(neighbor(i, -a, -b, rows, cols), neighbor(j, -a, -b, rows, cols));
        ref.wbar(i, j) = acc;
      }
  return ref;
}

// Smallest gap between a scaled patch distance and any kernel cutoff.
inline double min_cutoff_distance(const debias::Signal& f, const debias::NlmConfig& cfg) {
  const Index rows = f.shape().rows;
  const Index cols = f.shape().cols;
  double gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < f.size(); ++i)
    for (int dr = -cfg.window_half; dr <= cfg.window_half; ++dr)
      for (int dc = -cfg.window_half; dc <= cfg.window_half; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const Index j = neighbor(i, dr, dc, rows, cols);
        const double d = patch_distance(f.values(), i, j, cfg.patch_half, rows, cols) /
                         (2.0 * cfg.noise_sigma * cfg.noise_sigma);
        for (double c : cfg.kernel_cutoffs) gap = std::min(gap, std::abs(d - c));
      }
  return gap;
}

}  // namespace nlm_reference
