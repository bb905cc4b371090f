#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "debias/types.hpp"

namespace debias {

/// Row of a difference operator: (A u)_row = u[plus] - u[minus].
struct DifferenceEdge {
  Index plus;
  Index minus;
};

/// Largest domain dimension for which dense materialization is allowed.
inline constexpr Index kDenseLimit = 4096;

// A = row (x) col acting on row-major images: A vec(X) = vec(row * X * col^t).
struct KroneckerFactors {
  Matrix row;
  Matrix col;
};

/// Matrix-free linear operator R^N -> R^P with its adjoint.
///
/// Instances are immutable and cheap to copy; the callables and the optional
/// dense cache are shared.
class LinearMap {
 public:
  using Apply = std::function<Vector(const Vector&)>;

  LinearMap(Index domain_dim, Index codomain_dim, Apply forward, Apply adjoint,
            std::optional<double> norm_bound = std::nullopt);

  static LinearMap from_matrix(Matrix m);
  static LinearMap identity(Index n);
  static LinearMap zero(Index domain_dim, Index codomain_dim);

  Index domain_dim() const { return domain_dim_; }
  Index codomain_dim() const { return codomain_dim_; }
  std::optional<double> norm_bound() const { return norm_bound_; }
  bool is_identity() const { return identity_; }

  Vector apply(const Vector& x) const;
  Vector apply_adjoint(const Vector& y) const;

  /// P x N matrix. Uses the stored matrix when built from one, otherwise
  /// applies the operator to the canonical basis. Throws InvalidDimension
  /// above kDenseLimit.
  Matrix dense() const;
  bool dense_feasible() const { return matrix_ != nullptr || domain_dim_ <= kDenseLimit; }

  /// Non-null when every row is a single difference u[plus] - u[minus].
  const std::vector<DifferenceEdge>* difference_edges() const { return edges_.get(); }

  LinearMap with_difference_edges(std::vector<DifferenceEdge> edges) const;
  const KroneckerFactors* kronecker() const { return kron_.get(); }
  LinearMap with_kronecker(Matrix row, Matrix col) const;

 private:
  Index domain_dim_;
  Index codomain_dim_;
  Apply forward_;
  Apply adjoint_;
  std::optional<double> norm_bound_;
  std::shared_ptr<const Matrix> matrix_;
  std::shared_ptr<const std::vector<DifferenceEdge>> edges_;
  std::shared_ptr<const KroneckerFactors> kron_;
  bool identity_ = false;
};

/// Periodic forward difference (u_{i+1 mod n} - u_i) on R^n.
LinearMap grad_1d(Index n);

/// Periodic forward differences of a rows x cols image. The first block
/// holds row-direction (vertical) differences, the second column-direction
/// (horizontal) differences; codomain length 2 * rows * cols.
LinearMap grad_2d(const Shape& shape);

/// Normalized discrete Gaussian of the given bandwidth (standard deviation
/// in pixels), truncated at ceil(4 * bandwidth).
std::vector<double> gaussian_kernel_1d(double bandwidth);
Matrix circulant_matrix(Index n, const std::vector<double>& kernel);

/// Circular 2D convolution with a separable normalized Gaussian. Self-adjoint.
LinearMap gauss_conv(const Shape& shape, double bandwidth);

struct CgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Conjugate gradient for a symmetric positive definite `apply`, started at x0.
CgResult solve_cg(const LinearMap::Apply& apply, const Vector& rhs, const Vector& x0,
                  double rel_tol, int max_iters);

/// Power-iteration estimate of the spectral norm, deterministic in `seed`.
double op_norm(const LinearMap& a, int iters, std::uint64_t seed);

}  // namespace debias
