#include "debias/subspace.hpp"

#include <string>

#include "debias/errors.hpp"

namespace debias {
namespace {

void require_length(const Vector& v, Index n, const char* what) {
  if (v.size() != n) {
    throw InvalidDimension(std::string(what) + ": expected length " + std::to_string(n) +
                           ", got " + std::to_string(v.size()));
  }
}

const Matrix& orthonormal_columns(const SubspaceBasis& basis, Matrix& storage) {
  if (basis.orthonormal) return basis.columns;
  storage = orthonormalize(basis).columns;
  return storage;
}

Eigen::BDCSVD<Matrix> thin_svd(const Matrix& m) {
  return Eigen::BDCSVD<Matrix>(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

}  // namespace

SubspaceBasis SubspaceBasis::linear(Matrix columns) {
  const Index n = columns.rows();
  return SubspaceBasis{std::move(columns), Vector::Zero(n), false};
}

SubspaceBasis SubspaceBasis::affine(Matrix columns, Vector offset) {
  if (columns.rows() != offset.size()) {
    throw InvalidDimension("subspace offset length must match basis rows");
  }
  return SubspaceBasis{std::move(columns), std::move(offset), false};
}

SubspaceBasis SubspaceBasis::point(Vector offset) {
  const Index n = offset.size();
  return SubspaceBasis{Matrix(n, 0), std::move(offset), true};
}

Vector orthogonal_residual(const Matrix& q, const Vector& v) {
  Vector e = v;
  if (q.cols() == 0) return e;
  for (int pass = 0; pass < 2; ++pass) e -= q * (q.transpose() * e);
  return e;
}

SubspaceBasis orthonormalize(const SubspaceBasis& basis, double rel_tol) {
  const Index n = basis.columns.rows();
  const Index m = basis.columns.cols();
  double scale = 0.0;
  for (Index j = 0; j < m; ++j) scale = std::max(scale, basis.columns.col(j).norm());

  Matrix q(n, m);
  Index kept = 0;
  if (scale > 0.0) {
    for (Index j = 0; j < m; ++j) {
      Vector e = orthogonal_residual(q.leftCols(kept), basis.columns.col(j));
      const double norm = e.norm();
      if (norm > rel_tol * scale) q.col(kept++) = e / norm;
    }
  }
  return SubspaceBasis{q.leftCols(kept), basis.offset, true};
}

Vector project(const Vector& u, const SubspaceBasis& basis) {
  require_length(u, basis.ambient_dim(), "project");
  Matrix storage;
  const Matrix& q = orthonormal_columns(basis, storage);
  const Vector centered = u - basis.offset;
  if (q.cols() == 0) return basis.offset;
  return basis.offset + q * (q.transpose() * centered);
}

BiasReport bias_decompose(const Vector& u_f0, const Vector& u0, const SubspaceBasis& model) {
  require_length(u_f0, model.ambient_dim(), "bias_decompose u_f0");
  require_length(u0, model.ambient_dim(), "bias_decompose u0");
  const Vector projected = project(u0, model);
  BiasReport report;
  report.method_bias = u_f0 - projected;
  report.model_bias = u0 - projected;
  report.total_bias = u_f0 - u0;
  report.method_norm = report.method_bias.norm();
  report.model_norm = report.model_bias.norm();
  report.total_norm = report.total_bias.norm();
  return report;
}

Matrix apply_columns(const LinearMap& phi, const Matrix& a) {
  if (a.rows() != phi.domain_dim()) {
    throw InvalidDimension("basis rows must match operator domain");
  }
  Matrix out(phi.codomain_dim(), a.cols());
  for (Index j = 0; j < a.cols(); ++j) out.col(j) = phi.apply(a.col(j));
  return out;
}

Vector pinv_solve(const Matrix& m, const Vector& rhs, double rel_cutoff) {
  if (m.rows() != rhs.size()) throw InvalidDimension("pinv_solve: rhs length mismatch");
  if (m.cols() == 0) return Vector(0);
  const auto svd = thin_svd(m);
  const Vector& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rel_cutoff * s[0] : 0.0;
  Vector coeff = svd.matrixU().transpose() * rhs;
  for (Index i = 0; i < s.size(); ++i) coeff[i] = s[i] > cutoff && s[i] > 0.0 ? coeff[i] / s[i] : 0.0;
  return svd.matrixV() * coeff;
}

Matrix pseudo_inverse(const Matrix& m, double rel_cutoff) {
  if (m.rows() == 0 || m.cols() == 0) return Matrix::Zero(m.cols(), m.rows());
  const auto svd = thin_svd(m);
  const Vector& s = svd.singularValues();
  const double cutoff = rel_cutoff * s[0];
  Vector inv(s.size());
  for (Index i = 0; i < s.size(); ++i) inv[i] = s[i] > cutoff && s[i] > 0.0 ? 1.0 / s[i] : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

bool has_full_column_rank(const Matrix& m, double rel_tol) {
  if (m.cols() == 0) return true;
  if (m.rows() < m.cols()) return false;
  const Vector s = thin_svd(m).singularValues();
  return s[0] > 0.0 && s[s.size() - 1] > rel_tol * s[0];
}

Matrix nullspace(const Matrix& m, double rel_tol) {
  const Index n = m.cols();
  if (m.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  Index rank = 0;
  if (s.size() > 0 && s[0] > 0.0) {
    while (rank < s.size() && s[rank] > rel_tol * s[0]) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

Vector debias_cls(const Vector& u_star, const SubspaceBasis& basis, const LinearMap& phi,
                  const Vector& f) {
  require_length(u_star, phi.domain_dim(), "debias_cls u_star");
  require_length(f, phi.codomain_dim(), "debias_cls f");
  if (basis.columns.rows() != u_star.size()) {
    throw InvalidDimension("debias_cls: basis rows must match u_star");
  }
  if (basis.dim() == 0) return u_star;
  const Matrix phi_u = apply_columns(phi, basis.columns);
  if (!has_full_column_rank(phi_u)) {
    throw SingularRestriction(
        "Phi U is column-rank deficient: Phi is not invertible on the model subspace");
  }
  const Vector residual = f - phi.apply(u_star);
  return u_star + basis.columns * pinv_solve(phi_u, residual);
}

ClsResult cls(const LinearMap& phi, const Vector& f, const Vector& b, const Matrix& a) {
  require_length(f, phi.codomain_dim(), "cls f");
  require_length(b, phi.domain_dim(), "cls b");
  if (a.rows() != phi.domain_dim()) throw InvalidDimension("cls: A rows must match Phi domain");
  const Matrix phi_a = apply_columns(phi, a);
  const Vector coeff = pinv_solve(phi_a, f - phi.apply(b));
  ClsResult out;
  out.solution = b + a * coeff;
  out.model = orthonormalize(SubspaceBasis::affine(a * phi_a.transpose(), b));
  return out;
}

}  // namespace debias
