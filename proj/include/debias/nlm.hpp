#pragma once

#include <vector>

#include "debias/types.hpp"

namespace debias {

/// Block-wise nonlocal means with a piecewise-constant kernel.
///
/// The kernel is phi(d) = #{c in kernel_cutoffs : c >= d} / kernel_levels,
/// evaluated at d = ||P_i f - P_j f||^2 / (2 noise_sigma^2). With the default
/// cutoffs this is floor(Q exp(-d)) / Q.
struct NlmConfig {
  int patch_half = 1;   // p: patches are (2p+1) x (2p+1)
  int window_half = 3;  // s: search offsets in [-s, s]^2
  double noise_sigma = 20.0;
  int kernel_levels = 16;
  std::vector<double> kernel_cutoffs;

  /// Quantized exp(-d) on `levels` uniform bins of [0, 1].
  static NlmConfig exponential(int patch_half, int window_half, double noise_sigma,
                               int levels = 16);

  double kernel(double distance) const;
  void validate() const;
};

struct WindowOffset {
  int dr;
  int dc;
};

/// Per-offset weight planes: weights[o][i] = w_{i, i+o} and
/// aggregated[o][i] = sum_k w_{i-k, i+o-k} over k in [-p, p]^2.
struct NlmWeights {
  Shape shape;
  int patch_half = 0;
  int window_half = 0;
  std::vector<WindowOffset> offsets;
  std::vector<Vector> weights;
  std::vector<Vector> aggregated;
  Vector normalizer;  // sum over offsets of aggregated
};

/// Periodic (2r+1) x (2r+1) box sum of a row-major plane via running sums.
Vector box_sum_periodic(const Vector& plane, Index rows, Index cols, int radius);

/// Weights frozen at f. Cost O(N s^2), independent of the patch size.
NlmWeights nlm_weights(const Signal& f, const NlmConfig& cfg);

/// u*_i = sum_j wbar_ij f_j / sum_j wbar_ij.
Signal nlm_apply(const Signal& f, const NlmWeights& weights);

/// Jacobian of the filter at the weights' image, applied to delta.
Signal nlm_jvp(const Signal& delta, const NlmWeights& weights);

}  // namespace debias
