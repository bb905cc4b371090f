#include "debias/linops.hpp"

#include <cmath>
#include <random>
#include <string>

#include "debias/errors.hpp"

namespace debias {
namespace {

void check_length(const Vector& x, Index expected, const char* what) {
  if (x.size() != expected) {
    throw InvalidDimension(std::string(what) + ": expected length " + std::to_string(expected) +
                           ", got " + std::to_string(x.size()));
  }
}

Index wrap(Index i, Index n) {
  const Index r = i % n;
  return r < 0 ? r + n : r;
}

// Circular 1D convolution of every row (axis = 1) or column (axis = 0) of a
// row-major rows x cols image with a centered odd-length kernel.
Vector convolve_axis(const Vector& x, Index rows, Index cols, const std::vector<double>& kernel,
                     int axis) {
  const Index radius = static_cast<Index>(kernel.size() / 2);
  Vector out = Vector::Zero(x.size());
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Index k = -radius; k <= radius; ++k) {
        const double w = kernel[static_cast<std::size_t>(k + radius)];
        const Index src = axis == 1 ? r * cols + wrap(c - k, cols) : wrap(r - k, rows) * cols + c;
        acc += w * x[src];
      }
      out[r * cols + c] = acc;
    }
  }
  return out;
}

}  // namespace

LinearMap::LinearMap(Index domain_dim, Index codomain_dim, Apply forward, Apply adjoint,
                     std::optional<double> norm_bound)
    : domain_dim_(domain_dim),
      codomain_dim_(codomain_dim),
      forward_(std::move(forward)),
      adjoint_(std::move(adjoint)),
      norm_bound_(norm_bound) {
  if (domain_dim_ < 1 || codomain_dim_ < 1) {
    throw InvalidDimension("linear map dimensions must be positive");
  }
  if (norm_bound_ && *norm_bound_ < 0.0) throw ParameterError("norm bound must be nonnegative");
}

LinearMap LinearMap::from_matrix(Matrix m) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidDimension("matrix operator must be non-empty");
  auto mat = std::make_shared<const Matrix>(std::move(m));
  LinearMap map(
      mat->cols(), mat->rows(), [mat](const Vector& x) -> Vector { return *mat * x; },
      [mat](const Vector& y) -> Vector { return mat->transpose() * y; });
  map.matrix_ = mat;
  return map;
}

LinearMap LinearMap::identity(Index n) {
  auto id = [](const Vector& x) -> Vector { return x; };
  LinearMap map(n, n, id, id, 1.0);
  map.identity_ = true;
  return map;
}

LinearMap LinearMap::zero(Index domain_dim, Index codomain_dim) {
  return LinearMap(
      domain_dim, codomain_dim,
      [codomain_dim](const Vector&) -> Vector { return Vector::Zero(codomain_dim); },
      [domain_dim](const Vector&) -> Vector { return Vector::Zero(domain_dim); }, 0.0);
}

Vector LinearMap::apply(const Vector& x) const {
  check_length(x, domain_dim_, "forward");
  Vector y = forward_(x);
  check_length(y, codomain_dim_, "forward result");
  return y;
}

Vector LinearMap::apply_adjoint(const Vector& y) const {
  check_length(y, codomain_dim_, "adjoint");
  Vector x = adjoint_(y);
  check_length(x, domain_dim_, "adjoint result");
  return x;
}

Matrix LinearMap::dense() const {
  if (matrix_) return *matrix_;
  if (domain_dim_ > kDenseLimit) {
    throw InvalidDimension("dense materialization refused for domain dimension " +
                           std::to_string(domain_dim_));
  }
  Matrix m(codomain_dim_, domain_dim_);
  Vector e = Vector::Zero(domain_dim_);
  for (Index j = 0; j < domain_dim_; ++j) {
    e[j] = 1.0;
    m.col(j) = apply(e);
    e[j] = 0.0;
  }
  return m;
}

LinearMap LinearMap::with_difference_edges(std::vector<DifferenceEdge> edges) const {
  if (static_cast<Index>(edges.size()) != codomain_dim_) {
    throw InvalidDimension("one difference edge per codomain row is required");
  }
  LinearMap out = *this;
  out.edges_ = std::make_shared<const std::vector<DifferenceEdge>>(std::move(edges));
  return out;
}

LinearMap LinearMap::with_kronecker(Matrix row, Matrix col) const {
  if (row.rows() * col.rows() != codomain_dim_ || row.cols() * col.cols() != domain_dim_) {
    throw InvalidDimension("kronecker factors do not match the map dimensions");
  }
  LinearMap out = *this;
  out.kron_ = std::make_shared<const KroneckerFactors>(KroneckerFactors{std::move(row), std::move(col)});
  return out;
}

LinearMap grad_1d(Index n) {
  if (n < 2) throw InvalidDimension("grad_1d needs n >= 2");
  auto forward = [n](const Vector& u) -> Vector {
    Vector d(n);
    for (Index i = 0; i < n; ++i) d[i] = u[(i + 1) % n] - u[i];
    return d;
  };
  // Adjoint: -(backward difference), (G^t p)_i = p_{i-1} - p_i.
  auto adjoint = [n](const Vector& p) -> Vector {
    Vector u(n);
    for (Index i = 0; i < n; ++i) u[i] = p[(i + n - 1) % n] - p[i];
    return u;
  };
  std::vector<DifferenceEdge> edges;
  edges.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) edges.push_back({(i + 1) % n, i});
  return LinearMap(n, n, forward, adjoint, 2.0).with_difference_edges(std::move(edges));
}

LinearMap grad_2d(const Shape& shape) {
  if (!shape.two_dimensional || shape.rows < 2 || shape.cols < 2) {
    throw InvalidDimension("grad_2d needs a 2D shape with rows, cols >= 2");
  }
  const Index rows = shape.rows;
  const Index cols = shape.cols;
  const Index n = rows * cols;
  std::vector<DifferenceEdge> edges;
  edges.reserve(static_cast<std::size_t>(2 * n));
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) edges.push_back({((r + 1) % rows) * cols + c, r * cols + c});
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) edges.push_back({r * cols + (c + 1) % cols, r * cols + c});

  auto shared_edges = std::make_shared<const std::vector<DifferenceEdge>>(edges);
  auto forward = [shared_edges, n](const Vector& u) -> Vector {
    Vector d(2 * n);
    for (Index k = 0; k < 2 * n; ++k) {
      const auto& e = (*shared_edges)[static_cast<std::size_t>(k)];
      d[k] = u[e.plus] - u[e.minus];
    }
    return d;
  };
  auto adjoint = [shared_edges, n](const Vector& p) -> Vector {
    Vector u = Vector::Zero(n);
    for (Index k = 0; k < 2 * n; ++k) {
      const auto& e = (*shared_edges)[static_cast<std::size_t>(k)];
      u[e.plus] += p[k];
      u[e.minus] -= p[k];
    }
    return u;
  };
  return LinearMap(n, 2 * n, forward, adjoint, std::sqrt(8.0))
      .with_difference_edges(std::move(edges));
}

std::vector<double> gaussian_kernel_1d(double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ParameterError("Gaussian bandwidth must be positive");
  }
  const auto radius = static_cast<Index>(std::ceil(4.0 * bandwidth));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (Index i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (bandwidth * bandwidth));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  return k;
}

LinearMap gauss_conv(const Shape& shape, double bandwidth) {
  if (!shape.two_dimensional) throw InvalidDimension("gauss_conv needs a 2D shape");
  auto kernel = std::make_shared<const std::vector<double>>(gaussian_kernel_1d(bandwidth));
  const Index rows = shape.rows;
  const Index cols = shape.cols;
  auto conv = [kernel, rows, cols](const Vector& x) -> Vector {
    return convolve_axis(convolve_axis(x, rows, cols, *kernel, 1), rows, cols, *kernel, 0);
  };
  // Nonnegative kernel with unit mass: ||K||_2 <= ||K||_1 = 1.
  return LinearMap(shape.size(), shape.size(), conv, conv, 1.0)
      .with_kronecker(circulant_matrix(rows, *kernel), circulant_matrix(cols, *kernel));
}

Matrix circulant_matrix(Index n, const std::vector<double>& kernel) {
  if (n < 1) throw InvalidDimension("circulant_matrix needs n >= 1");
  const Index radius = static_cast<Index>(kernel.size() / 2);
  Matrix m = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index k = -radius; k <= radius; ++k)
      m(i, wrap(i - k, n)) += kernel[static_cast<std::size_t>(k + radius)];
  return m;
}

double op_norm(const LinearMap& a, int iters, std::uint64_t seed) {
  if (iters < 1) throw ParameterError("op_norm needs iters >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector x(a.domain_dim());
  for (Index i = 0; i < x.size(); ++i) x[i] = gauss(rng);
  x.normalize();
  double best = 0.0;
  for (int k = 0; k < iters; ++k) {
    const Vector ax = a.apply(x);
    best = std::max(best, ax.norm());
    Vector next = a.apply_adjoint(ax);
    const double nn = next.norm();
    if (nn == 0.0) break;
    x = next / nn;
  }
  return best;
}

}  // namespace debias

namespace debias {

CgResult solve_cg(const LinearMap::Apply& apply, const Vector& rhs, const Vector& x0,
                  double rel_tol, int max_iters) {
  CgResult out;
  out.x = x0;
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    out.x.setZero();
    out.converged = true;
    return out;
  }
  Vector r = rhs - apply(out.x);
  Vector p = r;
  double rr = r.squaredNorm();
  for (int k = 0; k < max_iters; ++k) {
    out.relative_residual = std::sqrt(rr) / rhs_norm;
    if (out.relative_residual <= rel_tol) {
      out.converged = true;
      return out;
    }
    const Vector ap = apply(p);
    const double curvature = p.dot(ap);
    if (!(curvature > 0.0)) return out;
    const double alpha = rr / curvature;
    out.x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    out.iterations = k + 1;
  }
  out.relative_residual = std::sqrt(rr) / rhs_norm;
  out.converged = out.relative_residual <= rel_tol;
  return out;
}

}  // namespace debias
