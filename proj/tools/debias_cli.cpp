#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "debias/errors.hpp"
#include "debias/harness.hpp"
#include "debias/io.hpp"

namespace {

using debias::ExperimentKind;
using debias::ExperimentSpec;

struct Flags {
  std::optional<double> lambda;
  std::optional<double> sigma;
  std::uint64_t seed = 0;
  std::string input;
  std::string out;
  std::optional<int> max_iters;
  std::optional<double> tol;
  std::optional<double> beta;
  std::optional<double> epsilon;
  bool trace = false;
  bool no_timing = false;
  double bandwidth = 2.0;
  debias::Index length = 256;
  int pieces = 4;
  debias::Index min_piece_len = 16;
  debias::Index rows = 64;
  debias::Index cols = 64;
  int texture_period = 8;
  debias::Index unknowns = 64;
  debias::Index measurements = 48;
  debias::Index nonzeros = 6;
  int patch_half = 1;
  int window_half = 3;
  std::optional<double> nlm_h;
  int levels = 16;
  std::string estimator = "soft";
};

struct Defaults {
  double lambda;
  double sigma;
};

const std::map<ExperimentKind, Defaults> kDefaults = {
    {ExperimentKind::Tv1d, {20.0, 10.0}},
    {ExperimentKind::Tv2dDeconv, {6.0, 20.0}},
    {ExperimentKind::Nlm, {0.0, 20.0}},
    {ExperimentKind::Lasso, {10.0, 5.0}},
    {ExperimentKind::DebiasGeneral, {20.0, 10.0}},
};

void print_error(const std::string& kind, const std::string& message) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += c == '\n' ? ' ' : c;
  }
  std::cerr << "error: kind=" << kind << " message=\"" << escaped << "\"\n";
}

ExperimentSpec make_spec(ExperimentKind kind, const Flags& fl) {
  const Defaults d = kDefaults.at(kind);
  ExperimentSpec spec;
  spec.kind = kind;
  spec.lambda = fl.lambda.value_or(d.lambda);
  spec.noise_sigma = fl.sigma.value_or(d.sigma);
  spec.seed = fl.seed;
  if (!fl.input.empty()) spec.input = fl.input;
  spec.output_dir = fl.out;
  spec.blur_bandwidth = fl.bandwidth;
  spec.length = fl.length;
  spec.pieces = fl.pieces;
  spec.min_piece_len = fl.min_piece_len;
  spec.rows = fl.rows;
  spec.cols = fl.cols;
  spec.texture_period = fl.texture_period;
  spec.lasso_unknowns = fl.unknowns;
  spec.lasso_measurements = fl.measurements;
  spec.lasso_nonzeros = fl.nonzeros;
  spec.trace = fl.trace;
  spec.record_runtime = !fl.no_timing;
  spec.debias.seed = fl.seed;
  spec.debias.epsilon = fl.epsilon;

  const bool iterative_debias = kind == ExperimentKind::Nlm || kind == ExperimentKind::DebiasGeneral;
  if (iterative_debias) {
    if (fl.max_iters) spec.debias.max_dirs = *fl.max_iters;
    if (fl.tol) spec.debias.stop_tol = *fl.tol;
    if (fl.beta) throw debias::ParameterError("--beta applies to primal-dual subcommands only");
  } else {
    spec.max_iters = fl.max_iters;
    spec.tol = fl.tol;
    spec.beta = fl.beta;
    if (fl.epsilon) throw debias::ParameterError("--epsilon applies to nlm and debias-general only");
  }
  if (kind == ExperimentKind::Nlm) {
    const double scale = fl.nlm_h.value_or(
        debias::nlm_default_config(spec.noise_sigma, fl.patch_half, fl.window_half).noise_sigma);
    spec.nlm = debias::NlmConfig::exponential(fl.patch_half, fl.window_half, scale, fl.levels);
  }
  if (kind == ExperimentKind::DebiasGeneral) {
    if (fl.estimator == "soft") {
      spec.estimator = debias::GeneralEstimator::Soft;
    } else if (fl.estimator == "hard") {
      spec.estimator = debias::GeneralEstimator::Hard;
    } else if (fl.estimator == "tikhonov") {
      spec.estimator = debias::GeneralEstimator::Tikhonov;
    } else {
      throw debias::ParameterError("unknown estimator " + fl.estimator);
    }
  }
  if ((kind == ExperimentKind::Tv1d || kind == ExperimentKind::Lasso ||
       kind == ExperimentKind::DebiasGeneral) &&
      spec.input) {
    throw debias::ParameterError("--input is only accepted by 2D subcommands");
  }
  return spec;
}

void add_common(CLI::App* sub, Flags& fl, ExperimentKind kind) {
  const Defaults& d = kDefaults.at(kind);
  sub->add_option("--lambda", fl.lambda, "Regularization weight")
      ->default_str(debias::format_real(d.lambda));
  sub->add_option("--sigma", fl.sigma, "Noise standard deviation")
      ->default_str(debias::format_real(d.sigma));
  sub->add_option("--seed", fl.seed, "Random seed")->capture_default_str();
  sub->add_option("--input", fl.input, "Input PGM image (2D subcommands)");
  sub->add_option("--out", fl.out, "Output directory")->required();
  sub->add_option("--max-iters", fl.max_iters, "Iteration cap");
  sub->add_option("--tol", fl.tol, "Relative stopping tolerance");
  sub->add_option("--beta", fl.beta, "Support gating margin");
  sub->add_option("--epsilon", fl.epsilon, "Residual perturbation size");
  sub->add_flag("--trace", fl.trace, "Write trace.csv");
  sub->add_flag("--no-timing", fl.no_timing, "Report runtime_s as 0");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bias removal for restoration estimators"};
  app.require_subcommand(1);
  Flags fl;

  const std::pair<ExperimentKind, const char*> subcommands[] = {
      {ExperimentKind::Tv1d, "1D total-variation denoising"},
      {ExperimentKind::Tv2dDeconv, "2D total-variation deconvolution"},
      {ExperimentKind::Nlm, "Block-wise nonlocal means"},
      {ExperimentKind::Lasso, "Sparse recovery by l1 synthesis"},
      {ExperimentKind::DebiasGeneral, "Iterative debiasing of a closed-form estimator"},
  };
  std::map<CLI::App*, ExperimentKind> kinds;
  for (const auto& [kind, help] : subcommands) {
    CLI::App* sub = app.add_subcommand(debias::to_string(kind), help);
    add_common(sub, fl, kind);
    kinds[sub] = kind;
    switch (kind) {
      case ExperimentKind::Tv1d:
        sub->add_option("--length", fl.length, "Signal length")->capture_default_str();
        sub->add_option("--pieces", fl.pieces, "Number of constant pieces")->capture_default_str();
        sub->add_option("--min-piece-len", fl.min_piece_len)->capture_default_str();
        break;
      case ExperimentKind::Tv2dDeconv:
        sub->add_option("--bandwidth", fl.bandwidth, "Gaussian blur bandwidth")->capture_default_str();
        sub->add_option("--rows", fl.rows)->capture_default_str();
        sub->add_option("--cols", fl.cols)->capture_default_str();
        break;
      case ExperimentKind::Nlm:
        sub->add_option("--rows", fl.rows)->capture_default_str();
        sub->add_option("--cols", fl.cols)->capture_default_str();
        sub->add_option("--texture-period", fl.texture_period)->capture_default_str();
        sub->add_option("--patch-half", fl.patch_half)->capture_default_str();
        sub->add_option("--window-half", fl.window_half)->capture_default_str();
        sub->add_option("--nlm-h", fl.nlm_h, "Kernel scale (defaults to sigma * (2p+1))");
        sub->add_option("--levels", fl.levels, "Kernel quantization levels")->capture_default_str();
        break;
      case ExperimentKind::Lasso:
        sub->add_option("--unknowns", fl.unknowns)->capture_default_str();
        sub->add_option("--measurements", fl.measurements)->capture_default_str();
        sub->add_option("--nonzeros", fl.nonzeros)->capture_default_str();
        break;
      case ExperimentKind::DebiasGeneral:
        sub->add_option("--estimator", fl.estimator, "soft, hard or tikhonov")->capture_default_str();
        sub->add_option("--length", fl.length)->capture_default_str();
        sub->add_option("--pieces", fl.pieces)->capture_default_str();
        sub->add_option("--min-piece-len", fl.min_piece_len)->capture_default_str();
        sub->add_option("--nonzeros", fl.nonzeros)->capture_default_str();
        break;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    ExperimentKind kind = ExperimentKind::Tv1d;
    for (const auto& [sub, k] : kinds)
      if (sub->parsed()) kind = k;
    const ExperimentSpec spec = make_spec(kind, fl);
    const auto result = debias::run_experiment(spec);
    for (const auto& row : result.rows) {
      std::printf("%-24s psnr=%.4f iters=%d\n", row.method.c_str(), row.psnr_db, row.iters);
    }
  } catch (const debias::Error& e) {
    print_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
