#include "debias/nlm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "debias/errors.hpp"

namespace debias {
namespace {

Index wrap(Index i, Index n) {
  const Index r = i % n;
  return r < 0 ? r + n : r;
}

// Circularly shifted copy: out(r, c) = x(r + dr, c + dc).
Vector shifted(const Vector& x, Index rows, Index cols, int dr, int dc) {
  Vector out(x.size());
  for (Index r = 0; r < rows; ++r) {
    const Index src_r = wrap(r + dr, rows);
    for (Index c = 0; c < cols; ++c) out[r * cols + c] = x[src_r * cols + wrap(c + dc, cols)];
  }
  return out;
}

Vector weighted_average(const Vector& x, const NlmWeights& w) {
  const Index rows = w.shape.rows;
  const Index cols = w.shape.cols;
  Vector acc = Vector::Zero(x.size());
  for (std::size_t o = 0; o < w.offsets.size(); ++o) {
    const auto [dr, dc] = w.offsets[o];
    const Vector& plane = w.aggregated[o];
    for (Index r = 0; r < rows; ++r) {
      const Index src_r = wrap(r + dr, rows);
      for (Index c = 0; c < cols; ++c) {
        const Index i = r * cols + c;
        acc[i] += plane[i] * x[src_r * cols + wrap(c + dc, cols)];
      }
    }
  }
  return acc.cwiseQuotient(w.normalizer);
}

void check_image(const Signal& f) {
  if (!f.shape().two_dimensional) throw InvalidDimension("nonlocal means needs a 2D image");
}

}  // namespace

NlmConfig NlmConfig::exponential(int patch_half, int window_half, double noise_sigma, int levels) {
  NlmConfig cfg;
  cfg.patch_half = patch_half;
  cfg.window_half = window_half;
  cfg.noise_sigma = noise_sigma;
  cfg.kernel_levels = levels;
  if (levels < 2) throw ParameterError("kernel needs at least 2 levels");
  cfg.kernel_cutoffs.reserve(static_cast<std::size_t>(levels));
  // exp(-d) >= (Q - j) / Q  <=>  d <= -log((Q - j) / Q)
  for (int j = 0; j < levels; ++j) {
    cfg.kernel_cutoffs.push_back(
        -std::log(static_cast<double>(levels - j) / static_cast<double>(levels)));
  }
  cfg.validate();
  return cfg;
}

double NlmConfig::kernel(double distance) const {
  const auto first_ge =
      std::lower_bound(kernel_cutoffs.begin(), kernel_cutoffs.end(), distance);
  const auto count = std::distance(first_ge, kernel_cutoffs.end());
  return static_cast<double>(count) / static_cast<double>(kernel_levels);
}

void NlmConfig::validate() const {
  if (patch_half < 0) throw ParameterError("patch half-size must be >= 0");
  if (window_half < 1) throw ParameterError("window half-size must be >= 1");
  if (!(noise_sigma > 0.0) || !std::isfinite(noise_sigma)) {
    throw ParameterError("noise sigma must be positive");
  }
  if (kernel_levels < 2) throw ParameterError("kernel needs at least 2 levels");
  if (static_cast<int>(kernel_cutoffs.size()) != kernel_levels) {
    throw ParameterError("kernel needs one cutoff per level");
  }
  if (kernel_cutoffs.front() < 0.0) throw ParameterError("kernel cutoffs must be >= 0");
  for (std::size_t i = 1; i < kernel_cutoffs.size(); ++i) {
    if (!(kernel_cutoffs[i] > kernel_cutoffs[i - 1])) {
      throw ParameterError("kernel cutoffs must be strictly increasing");
    }
  }
}

Vector box_sum_periodic(const Vector& plane, Index rows, Index cols, int radius) {
  if (plane.size() != rows * cols) throw InvalidDimension("box sum: plane size mismatch");
  if (radius == 0) return plane;
  const Index width = 2 * radius + 1;
  Vector along_rows(plane.size());
  std::vector<double> prefix(static_cast<std::size_t>(cols + width) + 1);
  for (Index r = 0; r < rows; ++r) {
    prefix[0] = 0.0;
    for (Index t = 0; t < cols + width - 1; ++t) {
      prefix[static_cast<std::size_t>(t + 1)] =
          prefix[static_cast<std::size_t>(t)] + plane[r * cols + wrap(t - radius, cols)];
    }
    for (Index c = 0; c < cols; ++c) {
      along_rows[r * cols + c] =
          prefix[static_cast<std::size_t>(c + width)] - prefix[static_cast<std::size_t>(c)];
    }
  }
  Vector out(plane.size());
  prefix.assign(static_cast<std::size_t>(rows + width) + 1, 0.0);
  for (Index c = 0; c < cols; ++c) {
    prefix[0] = 0.0;
    for (Index t = 0; t < rows + width - 1; ++t) {
      prefix[static_cast<std::size_t>(t + 1)] =
          prefix[static_cast<std::size_t>(t)] + along_rows[wrap(t - radius, rows) * cols + c];
    }
    for (Index r = 0; r < rows; ++r) {
      out[r * cols + c] =
          prefix[static_cast<std::size_t>(r + width)] - prefix[static_cast<std::size_t>(r)];
    }
  }
  return out;
}

NlmWeights nlm_weights(const Signal& f, const NlmConfig& cfg) {
  check_image(f);
  cfg.validate();
  const Index rows = f.shape().rows;
  const Index cols = f.shape().cols;
  const Index patch = 2 * cfg.patch_half + 1;
  if (rows < patch || cols < patch) {
    throw InvalidDimension("image " + f.shape().describe() + " smaller than patch size " +
                           std::to_string(patch));
  }
  NlmWeights w;
  w.shape = f.shape();
  w.patch_half = cfg.patch_half;
  w.window_half = cfg.window_half;
  w.normalizer = Vector::Zero(f.size());
  const double scale = 1.0 / (2.0 * cfg.noise_sigma * cfg.noise_sigma);
  const Vector& x = f.values();

  for (int dr = -cfg.window_half; dr <= cfg.window_half; ++dr) {
    for (int dc = -cfg.window_half; dc <= cfg.window_half; ++dc) {
      const Vector diff = (x - shifted(x, rows, cols, dr, dc)).array().square().matrix();
      const Vector dist = box_sum_periodic(diff, rows, cols, cfg.patch_half);
      Vector plane(dist.size());
      for (Index i = 0; i < dist.size(); ++i) plane[i] = cfg.kernel(dist[i] * scale);
      Vector agg = box_sum_periodic(plane, rows, cols, cfg.patch_half);
      w.normalizer += agg;
      w.offsets.push_back({dr, dc});
      w.weights.push_back(std::move(plane));
      w.aggregated.push_back(std::move(agg));
    }
  }
  return w;
}

Signal nlm_apply(const Signal& f, const NlmWeights& weights) {
  check_image(f);
  if (!(f.shape() == weights.shape)) throw InvalidDimension("image shape differs from weights");
  return Signal(weighted_average(f.values(), weights), f.shape());
}

Signal nlm_jvp(const Signal& delta, const NlmWeights& weights) {
  return nlm_apply(delta, weights);
}

}  // namespace debias
