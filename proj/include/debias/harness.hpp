#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "debias/debias_iter.hpp"
#include "debias/l1_analysis.hpp"
#include "debias/nlm.hpp"
#include "debias/types.hpp"

namespace debias {

enum class ExperimentKind { Tv1d, Tv2dDeconv, Nlm, Lasso, DebiasGeneral };

std::string to_string(ExperimentKind kind);

/// Closed-form estimators available to the generic debiasing runner.
enum class GeneralEstimator { Soft, Hard, Tikhonov };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Tv1d;
  double lambda = 0.0;
  double noise_sigma = 0.0;
  double blur_bandwidth = 2.0;  // tv2d-deconv only
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> input;  // PGM; synthetic when unset
  std::filesystem::path output_dir;            // nothing written when empty

  // 1D generator (tv1d, debias-general).
  Index length = 256;
  int pieces = 4;
  Index min_piece_len = 16;
  // 2D generators (tv2d-deconv, nlm).
  Index rows = 64;
  Index cols = 64;
  int texture_period = 8;
  // lasso: N unknowns, P measurements, K nonzeros.
  Index lasso_unknowns = 64;
  Index lasso_measurements = 48;
  Index lasso_nonzeros = 6;

  GeneralEstimator estimator = GeneralEstimator::Soft;
  NlmConfig nlm = NlmConfig::exponential(1, 3, 60.0);

  std::optional<int> max_iters;
  std::optional<double> tol;
  std::optional<double> beta;
  DebiasConfig debias;

  bool trace = false;
  /// When false runtime_s is written as 0 so repeated runs are byte-identical.
  bool record_runtime = true;
};

struct MetricsRow {
  std::string method;
  double psnr_db = 0.0;
  double method_bias_norm = 0.0;
  double model_bias_norm = 0.0;
  double runtime_s = 0.0;
  int iters = 0;
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  Signal clean;
  Signal observed;
  Signal biased;
  Signal debiased;
  std::vector<PdTraceRow> pd_trace;
  std::optional<DebiasRun> debias_run;
};

// Kernel scale sigma * (2p+1), i.e. patch distances averaged per pixel.
NlmConfig nlm_default_config(double noise_sigma, int patch_half = 1, int window_half = 3);

/// Piecewise-constant signal with `pieces` segments of at least
/// `min_piece_len` samples and values uniform in [lo, hi].

Signal gen_pwc_1d(Index n, int pieces, double lo, double hi, Index min_piece_len,
                  std::uint64_t seed);

/// Piecewise-constant 8-bit-range image made of rectangles and discs.
Signal gen_cartoon_2d(Index rows, Index cols, std::uint64_t seed);

/// Image tiled with a random period x period motif.
Signal gen_texture_2d(Index rows, Index cols, int period, std::uint64_t seed);

/// Sparse spikes: `nonzeros` entries of magnitude in [50, 150] with random signs.
Signal gen_sparse_1d(Index n, Index nonzeros, std::uint64_t seed);

/// f + w, w i.i.d. N(0, sigma^2).
Signal awgn(const Signal& f, double sigma, std::uint64_t seed);

/// 10 log10(peak^2 / MSE); +inf when u == ref.
double psnr(const Signal& u, const Signal& ref, double peak = 255.0);

struct DeconvTrial {
  Signal observed;
  PdDebiasedResult solve;
  double observed_psnr = 0.0;
  double biased_psnr = 0.0;
  double debiased_psnr = 0.0;
};

/// One blurred-and-noisy realization of `clean` restored by anisotropic TV
/// with its joint debiasing.
DeconvTrial run_deconv_trial(const Signal& clean, double bandwidth, double noise_sigma,
                             double lambda, std::uint64_t seed, const PdParams& params);

/// Runs one experiment, writing metrics.csv (and signals, images, trace)
/// into spec.output_dir when it is set.
ExperimentResult run_experiment(const ExperimentSpec& spec);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

}  // namespace debias
