#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "debias/linops.hpp"
#include "debias/subspace.hpp"

namespace debias {

/// Step sizes and stopping rule of the primal-dual iteration.
struct PdParams {
  double sigma = 0.0;
  double tau = 0.0;
  double theta = 1.0;
  /// Gating margin of the debiased dual projection; must stay below
  /// alpha * sigma where alpha is the smallest nonzero |Gamma u*|.
  double beta = std::numeric_limits<double>::min();
  int max_iters = 100000;
  /// Relative iterate change ||u^{k+1} - u^k|| / max(1, ||u^k||).
  double tol = 1e-9;

  /// sigma = tau = 0.99 / ||Gamma||, theta = 1.
  static PdParams defaults_for(const LinearMap& gamma);

  /// Throws ParameterError unless sigma * tau * ||Gamma||^2 < 1 and the
  /// remaining fields are in range.
  void validate(double gamma_norm) const;
};

/// ||Gamma||_2 used by the step rule: the operator's analytic bound when it
/// carries one, the exact spectral norm of small dense operators, otherwise
/// an inflated power-iteration estimate.
double step_norm(const LinearMap& gamma);

/// Co-support I of an analysis solution and the signs of Gamma u* on it.
struct SupportInfo {
  std::vector<Index> cosupport;
  Vector signs;  // aligned with cosupport, entries +-1
  /// Smallest |Gamma u*|_i over the co-support (0 when empty).
  double alpha = 0.0;
};

/// I = {i : |g_i| > 1e-8 max(1, ||g||_inf)} for g = Gamma u.
SupportInfo support_from_analysis(const Vector& gamma_u);

struct PdState {
  Vector u, v, z;
  Vector tilde_u, tilde_v, tilde_z;
  int iter = 0;
};

struct PdTraceRow {
  int iteration = 0;
  double energy = 0.0;
  Index active_set = 0;
  double change = 0.0;
  double tilde_change = 0.0;
};

using PdTraceSink = std::function<void(const PdTraceRow&)>;

struct PdResult {
  Vector u_star;
  Vector z_star;
  int iters = 0;
  bool converged = false;
};

struct PdDebiasedResult {
  Vector u_star;
  Vector tilde_u_star;
  /// Gated active set at the last iteration, with signs of the gating
  /// quantity and the empirical alpha = min |Gamma u*|_I.
  SupportInfo support;
  PdState state;
  int iters = 0;
  bool converged = false;
  /// Last iteration at which the gated active set changed (0 if never).
  int support_changed_at = 0;
};

/// Solver for (Id + tau Phi^t Phi) x = r, factored once and reused.
class DataResolvent {
 public:
  DataResolvent(const LinearMap& phi, double tau);

  Vector solve(const Vector& r) const;
  /// Same, seeding the iterative path with `warm`.
  Vector solve(const Vector& r, const Vector& warm) const;

 private:
  enum class Kind { Identity, Dense, Separable, Iterative };
  struct Spectral {
    Matrix row_vectors, col_vectors;
    Matrix inverse_gains;  // rows x cols, 1 / (1 + tau * mu_r * mu_c)
  };
  Kind kind_;
  LinearMap phi_;
  double tau_;
  std::shared_ptr<const Eigen::LLT<Matrix>> factor_;
  std::shared_ptr<const Spectral> spectral_;
};

DataResolvent resolvent_data(const LinearMap& phi, double tau);

/// 0.5 ||Phi u - f||^2 + lambda ||Gamma u||_1.
double l1_energy(const LinearMap& phi, const LinearMap& gamma, double lambda, const Vector& f,
                 const Vector& u);

/// Primal-dual iteration for min_u 0.5 ||Phi u - f||^2 + lambda ||Gamma u||_1
/// from zero initialization.
PdResult solve_pd(const LinearMap& phi, const LinearMap& gamma, double lambda, const Vector& f,
                  const PdParams& params, const PdTraceSink& trace = {});

/// Runs the primal-dual iteration and its debiased shadow in lockstep. The
/// shadow dual keeps coordinates where |z^k + sigma Gamma v^k|_i <= lambda + beta
/// and zeroes the rest.
PdDebiasedResult solve_pd_debiased(const LinearMap& phi, const LinearMap& gamma, double lambda,
                                   const Vector& f, const PdParams& params,
                                   const PdTraceSink& trace = {});

/// {i : |z + sigma Gamma v|_i > lambda + beta}.
std::vector<Index> detect_support(const Vector& z, const Vector& v, const LinearMap& gamma,
                                  double sigma, double lambda, double beta);

/// Basis of Ker[Gamma_{I^c}]. Difference operators use connected components
/// of the zero-gradient graph; anything else goes through a dense SVD.
Matrix cosupport_model_basis(const LinearMap& gamma, const std::vector<Index>& cosupport);

/// u* = U (Phi U)^+ f - lambda U (U^t Phi^t Phi U)^{-1} U^t (Gamma^t)_I s_I.
Vector explicit_solution(const LinearMap& phi, const LinearMap& gamma, double lambda,
                         const Vector& f, const SupportInfo& support);

/// u~* = U (Phi U)^+ f.
Vector explicit_debias(const LinearMap& phi, const LinearMap& gamma, const Vector& f,
                       const SupportInfo& support);

struct OracleResult {
  SupportInfo support;
  Vector u_star;
};

/// Exhaustive search over co-supports and signs, each candidate certified by
/// the subdifferential optimality conditions. Requires L <= 12.
OracleResult cosupport_bruteforce(const LinearMap& phi, const LinearMap& gamma, double lambda,
                                  const Vector& f);

}  // namespace debias
