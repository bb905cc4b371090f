#include "debias/closed_form.hpp"

#include <cmath>

#include "debias/errors.hpp"

namespace debias {
namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be positive");
}

}  // namespace

std::vector<Index> threshold_support(const Vector& f, double lambda) {
  std::vector<Index> support;
  for (Index i = 0; i < f.size(); ++i)
    if (std::abs(f[i]) > lambda) support.push_back(i);
  return support;
}

Matrix identity_columns(Index n, const std::vector<Index>& support) {
  Matrix m = Matrix::Zero(n, static_cast<Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) m(support[k], static_cast<Index>(k)) = 1.0;
  return m;
}

EstimateWithModel least_squares(const LinearMap& phi, const Vector& f) {
  if (f.size() != phi.codomain_dim()) throw InvalidDimension("least_squares: f length mismatch");
  const Matrix a = phi.dense();
  EstimateWithModel out;
  out.estimate = pinv_solve(a, f);
  out.model = orthonormalize(SubspaceBasis::linear(a.transpose()));
  out.weak_bias = Vector::Zero(phi.domain_dim());
  return out;
}

EstimateWithModel tikhonov(const LinearMap& phi, const LinearMap& gamma, double lambda,
                           const Vector& f, bool compute_model) {
  check_lambda(lambda);
  if (f.size() != phi.codomain_dim()) throw InvalidDimension("tikhonov: f length mismatch");
  if (gamma.domain_dim() != phi.domain_dim()) {
    throw InvalidDimension("tikhonov: Phi and Gamma domains differ");
  }
  const Index n = phi.domain_dim();
  const Vector rhs = phi.apply_adjoint(f);
  EstimateWithModel out;

  if (n <= kFactorLimit) {
    const Matrix a = phi.dense();
    const Matrix g = gamma.dense();
    const Matrix h = a.transpose() * a + lambda * g.transpose() * g;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    if (!(eig.eigenvalues().minCoeff() > 1e-12)) {
      throw KernelOverlap("Ker Phi and Ker Gamma intersect: normal system is singular");
    }
    out.estimate = eig.eigenvectors() *
                   (eig.eigenvalues().cwiseInverse().asDiagonal() *
                    (eig.eigenvectors().transpose() * rhs));
    if (compute_model) out.model = orthonormalize(SubspaceBasis::linear(a.transpose()));
  } else {
    auto normal = [&](const Vector& x) -> Vector {
      return phi.apply_adjoint(phi.apply(x)) + lambda * gamma.apply_adjoint(gamma.apply(x));
    };
    const CgResult cg = solve_cg(normal, rhs, Vector::Zero(n), 1e-12, static_cast<int>(4 * n));
    if (!cg.converged) {
      throw KernelOverlap("conjugate gradient failed on the normal system (singular?)");
    }
    out.estimate = cg.x;
    if (compute_model) {
      out.model = orthonormalize(SubspaceBasis::linear(phi.dense().transpose()));
    }
  }
  if (!compute_model) out.model = SubspaceBasis::point(Vector::Zero(n));
  return out;
}

EstimateWithModel hard_threshold(const Vector& f, double lambda) {
  check_lambda(lambda);
  EstimateWithModel out;
  out.support = threshold_support(f, lambda);
  out.estimate = Vector::Zero(f.size());
  for (Index i : out.support) out.estimate[i] = f[i];
  out.model = SubspaceBasis::linear(identity_columns(f.size(), out.support));
  out.model.orthonormal = true;
  out.weak_bias = Vector::Zero(f.size());
  return out;
}

EstimateWithModel soft_threshold(const Vector& f, double lambda) {
  check_lambda(lambda);
  EstimateWithModel out;
  out.support = threshold_support(f, lambda);
  out.estimate = Vector::Zero(f.size());
  Vector bias = Vector::Zero(f.size());
  for (Index i : out.support) {
    out.estimate[i] = f[i] - lambda * sign_of(f[i]);
    bias[i] = -lambda * sign_of(f[i]);
  }
  out.model = SubspaceBasis::linear(identity_columns(f.size(), out.support));
  out.model.orthonormal = true;
  out.weak_bias = std::move(bias);
  return out;
}

}  // namespace debias
