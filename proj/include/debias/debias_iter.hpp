#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "debias/linops.hpp"
#include "debias/subspace.hpp"

namespace debias {

/// delta in R^P -> J* delta in R^N.
using Jvp = std::function<Vector(const Vector&)>;

struct DebiasConfig {
  /// Perturbation strength; defaults to 0.01 ||f|| / sqrt(P).
  std::optional<double> epsilon;
  int max_dirs = 50;
  /// Stop once ||u~_{k} - u~_{k-1}|| / ||u~_{k-1}|| drops below this.
  double stop_tol = 1e-6;
  std::uint64_t seed = 0;
  /// Directions whose orthogonal residual is below drop_tol max(1, ||u'||)
  /// are discarded as already spanned.
  double drop_tol = 1e-8;
};

struct DebiasStep {
  int iteration = 0;
  double direction_norm = 0.0;  // ||e|| before normalization
  bool kept = false;
  double residual_norm = 0.0;   // ||f - Phi u~|| after the update
  double change = 0.0;          // relative change of u~
  bool rank_deficient = false;  // Phi U hit the SVD cutoff
};

struct DebiasRun {
  SubspaceBasis basis;  // orthonormal family of Im[J*]
  Vector tilde_u;
  std::vector<DebiasStep> history;
  double epsilon = 0.0;
  bool converged = false;
};

/// Residual-guided randomized debiasing of a locally affine estimator given
/// only its Jacobian-vector product.
DebiasRun debias_general(const Vector& f, const Vector& u_star, const Jvp& jvp,
                         const LinearMap& phi, const DebiasConfig& cfg = {});

/// Appends the normalized component of u_prime orthogonal to U when it is
/// not already spanned; U must be orthonormal.
SubspaceBasis gs_append(const SubspaceBasis& basis, const Vector& u_prime, double drop_tol);

void write_history_csv(std::ostream& os, const DebiasRun& run);

}  // namespace debias
