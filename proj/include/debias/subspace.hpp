#pragma once

#include "debias/linops.hpp"
#include "debias/types.hpp"

namespace debias {

/// Relative singular-value cutoff shared by pseudo-inverses and rank checks.
inline constexpr double kRankTolerance = 1e-10;

/// Affine subspace offset + Im[columns] of R^N.
struct SubspaceBasis {
  Matrix columns;  // N x n
  Vector offset;   // length N
  bool orthonormal = false;

  static SubspaceBasis linear(Matrix columns);
  static SubspaceBasis affine(Matrix columns, Vector offset);
  /// The single point {offset} (zero-dimensional subspace).
  static SubspaceBasis point(Vector offset);

  Index ambient_dim() const { return offset.size(); }
  Index dim() const { return columns.cols(); }
};

struct BiasReport {
  Vector method_bias;
  Vector model_bias;
  Vector total_bias;
  double method_norm = 0.0;
  double model_norm = 0.0;
  double total_norm = 0.0;
};

/// Same span and offset with orthonormal columns. Directions whose
/// Gram-Schmidt residual falls below `rel_tol` times the largest input column
/// norm are dropped.
SubspaceBasis orthonormalize(const SubspaceBasis& basis, double rel_tol = kRankTolerance);

/// offset + Pi_span(u - offset).
Vector project(const Vector& u, const SubspaceBasis& basis);

/// method = u_f0 - Pi_M(u0), model = u0 - Pi_M(u0), total = u_f0 - u0, so
/// that total == method - model.
BiasReport bias_decompose(const Vector& u_f0, const Vector& u0, const SubspaceBasis& model);

/// Constrained least-squares refit on u_star + Im[U]:
///   u_star + U (Phi U)^+ (f - Phi u_star).
/// Throws SingularRestriction if Phi U is column-rank deficient.
Vector debias_cls(const Vector& u_star, const SubspaceBasis& basis, const LinearMap& phi,
                  const Vector& f);

struct ClsResult {
  Vector solution;
  SubspaceBasis model;
};

/// Minimum-norm least squares over C = b + Im[A]: b + A (Phi A)^+ (f - Phi b),
/// with model subspace b + Im[A (Phi A)^t].
ClsResult cls(const LinearMap& phi, const Vector& f, const Vector& b, const Matrix& a);

// Dense helpers.

/// Columns of `a` pushed through `phi`.
Matrix apply_columns(const LinearMap& phi, const Matrix& a);

/// x = M^+ rhs using an SVD with relative cutoff.
Vector pinv_solve(const Matrix& m, const Vector& rhs, double rel_cutoff = kRankTolerance);

Matrix pseudo_inverse(const Matrix& m, double rel_cutoff = kRankTolerance);

/// True when the smallest singular value exceeds rel_tol times the largest
/// and the matrix has at least as many rows as columns.
bool has_full_column_rank(const Matrix& m, double rel_tol = kRankTolerance);

/// Orthonormal basis of Ker[m] (columns), from the SVD.
Matrix nullspace(const Matrix& m, double rel_tol = kRankTolerance);

/// Component of v orthogonal to the orthonormal columns of q (two passes of
/// classical Gram-Schmidt).
Vector orthogonal_residual(const Matrix& q, const Vector& v);

}  // namespace debias
