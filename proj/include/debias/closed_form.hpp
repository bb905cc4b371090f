#pragma once

#include <optional>
#include <vector>

#include "debias/linops.hpp"
#include "debias/subspace.hpp"

namespace debias {

/// An estimate paired with the model subspace it commits to at f.
struct EstimateWithModel {
  Vector estimate;
  SubspaceBasis model;
  /// Known weak bias at the evaluation point, when it has a closed form.
  std::optional<Vector> weak_bias;
  /// Support I_f for the thresholding estimators.
  std::vector<Index> support;
};

/// Minimum-norm least squares Phi^+ f, model Im[Phi^t].
EstimateWithModel least_squares(const LinearMap& phi, const Vector& f);

/// (Phi^t Phi + lambda Gamma^t Gamma)^{-1} Phi^t f, model Im[Phi^t].
/// Dense solve up to kFactorLimit unknowns, conjugate gradient above; the
/// model is only materialized when `compute_model` is set.
EstimateWithModel tikhonov(const LinearMap& phi, const LinearMap& gamma, double lambda,
                           const Vector& f, bool compute_model = true);

/// Keeps f_i where |f_i| > lambda.
EstimateWithModel hard_threshold(const Vector& f, double lambda);

/// Shrinks f_i toward zero by lambda where |f_i| > lambda.
EstimateWithModel soft_threshold(const Vector& f, double lambda);

/// Indices with |f_i| > lambda (strict).
std::vector<Index> threshold_support(const Vector& f, double lambda);

/// Columns e_i, i in `support`, of the N x N identity.
Matrix identity_columns(Index n, const std::vector<Index>& support);

inline double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Largest system size solved through a dense factorization.
inline constexpr Index kFactorLimit = 1024;

}  // namespace debias
