#include "debias/l1_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "debias/closed_form.hpp"
#include "debias/errors.hpp"

namespace debias {
namespace {

constexpr double kSupportTol = 1e-8;
constexpr double kKktTol = 1e-9;

void check_problem(const LinearMap& phi, const LinearMap& gamma, double lambda, const Vector& f) {
  if (gamma.domain_dim() != phi.domain_dim()) {
    throw InvalidDimension("Phi and Gamma must share their domain");
  }
  if (f.size() != phi.codomain_dim()) throw InvalidDimension("f length must match Phi codomain");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be >= 0");
  if (!f.allFinite()) throw NonFiniteValue("f has non-finite entries");
}

double relative_change(const Vector& next, const Vector& prev) {
  return (next - prev).norm() / std::max(1.0, prev.norm());
}

Vector clip(const Vector& z, double lambda) { return z.cwiseMax(-lambda).cwiseMin(lambda); }

// Union-find over the pixels joined by zero-gradient rows.
Matrix component_indicators(Index n, const std::vector<DifferenceEdge>& edges,
                            const std::vector<bool>& in_cosupport) {
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  };
  for (std::size_t row = 0; row < edges.size(); ++row) {
    if (in_cosupport[row]) continue;
    const Index a = find(edges[row].plus);
    const Index b = find(edges[row].minus);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::vector<Index> label(static_cast<std::size_t>(n), -1);
  std::vector<Index> count;
  Index components = 0;
  std::vector<Index> comp_of(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index root = find(i);
    auto& l = label[static_cast<std::size_t>(root)];
    if (l < 0) {
      l = components++;
      count.push_back(0);
    }
    comp_of[static_cast<std::size_t>(i)] = l;
    ++count[static_cast<std::size_t>(l)];
  }
  Matrix u = Matrix::Zero(n, components);
  for (Index i = 0; i < n; ++i) {
    const Index c = comp_of[static_cast<std::size_t>(i)];
    u(i, c) = 1.0 / std::sqrt(static_cast<double>(count[static_cast<std::size_t>(c)]));
  }
  return u;
}

std::vector<bool> membership(Index length, const std::vector<Index>& indices) {
  std::vector<bool> in(static_cast<std::size_t>(length), false);
  for (Index i : indices) {
    if (i < 0 || i >= length) throw InvalidDimension("co-support index out of range");
    in[static_cast<std::size_t>(i)] = true;
  }
  return in;
}

// Scatter s_I into a length-L dual vector.
Vector scatter_signs(Index length, const SupportInfo& support) {
  if (support.signs.size() != static_cast<Index>(support.cosupport.size())) {
    throw InvalidDimension("support signs must align with the co-support");
  }
  Vector s = Vector::Zero(length);
  for (std::size_t k = 0; k < support.cosupport.size(); ++k)
    s[support.cosupport[k]] = support.signs[static_cast<Index>(k)];
  return s;
}

// min_t ||v0 + K t||_inf by enumerating vertices of the epigraph LP.
double min_inf_norm(const Vector& v0, const Matrix& k) {
  const Index m = v0.size();
  const Index dof = k.cols();
  if (m == 0) return 0.0;
  if (dof == 0) return v0.lpNorm<Eigen::Infinity>();
  const Index rows = 2 * m;
  const Index pick = dof + 1;
  if (pick > rows) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Index> choice(static_cast<std::size_t>(pick));
  std::iota(choice.begin(), choice.end(), Index{0});
  Matrix a(pick, pick);
  Vector b(pick);
  while (true) {
    for (Index r = 0; r < pick; ++r) {
      const Index c = choice[static_cast<std::size_t>(r)];
      const Index i = c % m;
      const double sgn = c < m ? 1.0 : -1.0;
      a.row(r).head(dof) = sgn * k.row(i);
      a(r, dof) = -1.0;
      b[r] = -sgn * v0[i];
    }
    Eigen::FullPivLU<Matrix> lu(a);
    if (lu.isInvertible()) {
      const Vector x = lu.solve(b);
      const double value = (v0 + k * x.head(dof)).lpNorm<Eigen::Infinity>();
      best = std::min(best, value);
    }
    Index pos = pick - 1;
    while (pos >= 0 && choice[static_cast<std::size_t>(pos)] == rows - pick + pos) --pos;
    if (pos < 0) break;
    ++choice[static_cast<std::size_t>(pos)];
    for (Index r = pos + 1; r < pick; ++r)
      choice[static_cast<std::size_t>(r)] = choice[static_cast<std::size_t>(r - 1)] + 1;
  }
  return best;
}

}  // namespace

PdParams PdParams::defaults_for(const LinearMap& gamma) {
  PdParams p;
  const double norm = step_norm(gamma);
  const double step = norm > 0.0 ? 0.99 / norm : 1.0;
  p.sigma = step;
  p.tau = step;
  return p;
}

void PdParams::validate(double gamma_norm) const {
  if (!(sigma > 0.0) || !(tau > 0.0)) throw ParameterError("sigma and tau must be positive");
  if (!(sigma * tau * gamma_norm * gamma_norm < 1.0)) {
    throw ParameterError("step rule violated: sigma * tau must be < 1 / ||Gamma||^2");
  }
  if (!(theta >= 0.0 && theta <= 1.0)) throw ParameterError("theta must lie in [0, 1]");
  if (!(beta > 0.0)) throw ParameterError("beta must be positive");
  if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
  if (!(tol > 0.0)) throw ParameterError("tol must be positive");
}

double step_norm(const LinearMap& gamma) {
  if (gamma.norm_bound()) return *gamma.norm_bound();
  if (gamma.domain_dim() <= 256 && gamma.codomain_dim() <= 4096) {
    const Matrix g = gamma.dense();
    return Eigen::BDCSVD<Matrix>(g).singularValues()[0];
  }
  return 1.01 * op_norm(gamma, 1000, 0);
}

SupportInfo support_from_analysis(const Vector& gamma_u) {
  SupportInfo info;
  const double tol = kSupportTol * std::max(1.0, gamma_u.lpNorm<Eigen::Infinity>());
  std::vector<double> signs;
  double alpha = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < gamma_u.size(); ++i) {
    if (std::abs(gamma_u[i]) > tol) {
      info.cosupport.push_back(i);
      signs.push_back(sign_of(gamma_u[i]));
      alpha = std::min(alpha, std::abs(gamma_u[i]));
    }
  }
  info.signs = Eigen::Map<const Vector>(signs.data(), static_cast<Index>(signs.size()));
  info.alpha = info.cosupport.empty() ? 0.0 : alpha;
  return info;
}

DataResolvent::DataResolvent(const LinearMap& phi, double tau) : phi_(phi), tau_(tau) {
  if (!(tau > 0.0)) throw ParameterError("resolvent needs tau > 0");
  if (phi.is_identity()) {
    kind_ = Kind::Identity;
  } else if (phi.domain_dim() <= kFactorLimit) {
    kind_ = Kind::Dense;
    const Matrix a = phi.dense();
    const Matrix h = Matrix::Identity(a.cols(), a.cols()) + tau * a.transpose() * a;
    factor_ = std::make_shared<const Eigen::LLT<Matrix>>(h);
  } else if (const KroneckerFactors* k = phi.kronecker()) {
    kind_ = Kind::Separable;
    Eigen::SelfAdjointEigenSolver<Matrix> er(k->row.transpose() * k->row);
    Eigen::SelfAdjointEigenSolver<Matrix> ec(k->col.transpose() * k->col);
    auto sp = std::make_shared<Spectral>();
    sp->row_vectors = er.eigenvectors();
    sp->col_vectors = ec.eigenvectors();
    sp->inverse_gains = (1.0 + tau * (er.eigenvalues() * ec.eigenvalues().transpose()).array())
                            .inverse()
                            .matrix();
    spectral_ = std::move(sp);
  } else {
    kind_ = Kind::Iterative;
  }
}

Vector DataResolvent::solve(const Vector& r) const { return solve(r, r); }

Vector DataResolvent::solve(const Vector& r, const Vector& warm) const {
  switch (kind_) {
    case Kind::Identity:
      return r / (1.0 + tau_);
    case Kind::Dense:
      return factor_->solve(r);
    case Kind::Separable: {
      using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
      const Spectral& sp = *spectral_;
      const Index rows = sp.row_vectors.rows();
      const Index cols = sp.col_vectors.rows();
      const Eigen::Map<const RowMajor> x(r.data(), rows, cols);
      RowMajor y = sp.row_vectors.transpose() * x * sp.col_vectors;
      y.array() *= sp.inverse_gains.array();
      RowMajor out = sp.row_vectors * y * sp.col_vectors.transpose();
      return Eigen::Map<const Vector>(out.data(), out.size());
    }
    case Kind::Iterative:
      break;
  }
  auto op = [this](const Vector& x) -> Vector {
    return x + tau_ * phi_.apply_adjoint(phi_.apply(x));
  };
  return solve_cg(op, r, warm, 1e-12, 1000).x;
}

DataResolvent resolvent_data(const LinearMap& phi, double tau) { return DataResolvent(phi, tau); }

double l1_energy(const LinearMap& phi, const LinearMap& gamma, double lambda, const Vector& f,
                 const Vector& u) {
  return 0.5 * (phi.apply(u) - f).squaredNorm() + lambda * gamma.apply(u).lpNorm<1>();
}

std::vector<Index> detect_support(const Vector& z, const Vector& v, const LinearMap& gamma,
                                  double sigma, double lambda, double beta) {
  if (z.size() != gamma.codomain_dim() || v.size() != gamma.domain_dim()) {
    throw InvalidDimension("detect_support: z/v lengths do not match Gamma");
  }
  const Vector g = z + sigma * gamma.apply(v);
  std::vector<Index> active;
  for (Index i = 0; i < g.size(); ++i)
    if (std::abs(g[i]) > lambda + beta) active.push_back(i);
  return active;
}

PdResult solve_pd(const LinearMap& phi, const LinearMap& gamma, double lambda, const Vector& f,
                  const PdParams& params, const PdTraceSink& trace) {
  check_problem(phi, gamma, lambda, f);
  params.validate(step_norm(gamma));
  const Index n = phi.domain_dim();
  const DataResolvent resolvent(phi, params.tau);
  const Vector phit_f = phi.apply_adjoint(f);

  Vector u = Vector::Zero(n);
  Vector v = Vector::Zero(n);
  Vector z = Vector::Zero(gamma.codomain_dim());
  PdResult out;
  for (int k = 1; k <= params.max_iters; ++k) {
    z = clip(z + params.sigma * gamma.apply(v), lambda);
    const Vector u_next =
        resolvent.solve(u + params.tau * (phit_f - gamma.apply_adjoint(z)), u);
    v = u_next + params.theta * (u_next - u);
    const double change = relative_change(u_next, u);
    u = u_next;
    out.iters = k;
    if (trace) {
      const Index active = static_cast<Index>((z.array().abs() >= lambda).count());
      trace({k, l1_energy(phi, gamma, lambda, f, u), active, change, 0.0});
    }
    if (change < params.tol) {
      out.converged = true;
      break;
    }
  }
  out.u_star = std::move(u);
  out.z_star = std::move(z);
  return out;
}

PdDebiasedResult solve_pd_debiased(const LinearMap& phi, const LinearMap& gamma, double lambda,
                                   const Vector& f, const PdParams& params,
                                   const PdTraceSink& trace) {
  check_problem(phi, gamma, lambda, f);
  params.validate(step_norm(gamma));
  const Index n = phi.domain_dim();
  const Index l = gamma.codomain_dim();
  const DataResolvent resolvent(phi, params.tau);
  const Vector phit_f = phi.apply_adjoint(f);
  const double gate = lambda + params.beta;

  PdState s;
  s.u = s.v = s.tilde_u = s.tilde_v = Vector::Zero(n);
  s.z = s.tilde_z = Vector::Zero(l);
  std::vector<char> active(static_cast<std::size_t>(l), 0);
  PdDebiasedResult out;

  for (int k = 1; k <= params.max_iters; ++k) {
    const Vector g = s.z + params.sigma * gamma.apply(s.v);
    Vector tilde_g = s.tilde_z + params.sigma * gamma.apply(s.tilde_v);
    bool support_changed = false;
    for (Index i = 0; i < l; ++i) {
      const char now = std::abs(g[i]) > gate ? 1 : 0;
      if (now != active[static_cast<std::size_t>(i)]) support_changed = true;
      active[static_cast<std::size_t>(i)] = now;
      if (now) tilde_g[i] = 0.0;
    }
    if (support_changed) out.support_changed_at = k;
    s.z = clip(g, lambda);
    s.tilde_z = std::move(tilde_g);

    const Vector u_next =
        resolvent.solve(s.u + params.tau * (phit_f - gamma.apply_adjoint(s.z)), s.u);
    const Vector tu_next =
        resolvent.solve(s.tilde_u + params.tau * (phit_f - gamma.apply_adjoint(s.tilde_z)),
                        s.tilde_u);
    const double change = relative_change(u_next, s.u);
    const double tilde_change = relative_change(tu_next, s.tilde_u);
    s.v = u_next + params.theta * (u_next - s.u);
    s.tilde_v = tu_next + params.theta * (tu_next - s.tilde_u);
    s.u = u_next;
    s.tilde_u = tu_next;
    s.iter = k;
    out.iters = k;
    if (trace) {
      const auto active_count =
          static_cast<Index>(std::count(active.begin(), active.end(), char{1}));
      trace({k, l1_energy(phi, gamma, lambda, f, s.u), active_count, change, tilde_change});
    }
    if (change < params.tol && tilde_change < params.tol) {
      out.converged = true;
      break;
    }
  }

  const Vector last_gate = s.z + params.sigma * gamma.apply(s.v);
  const Vector gamma_u = gamma.apply(s.u);
  std::vector<double> signs;
  double alpha = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < l; ++i) {
    if (std::abs(last_gate[i]) > gate) {
      out.support.cosupport.push_back(i);
      signs.push_back(sign_of(last_gate[i]));
      alpha = std::min(alpha, std::abs(gamma_u[i]));
    }
  }
  out.support.signs = Eigen::Map<const Vector>(signs.data(), static_cast<Index>(signs.size()));
  out.support.alpha = out.support.cosupport.empty() ? 0.0 : alpha;
  out.u_star = s.u;
  out.tilde_u_star = s.tilde_u;
  out.state = std::move(s);
  return out;
}

Matrix cosupport_model_basis(const LinearMap& gamma, const std::vector<Index>& cosupport) {
  const auto in = membership(gamma.codomain_dim(), cosupport);
  if (const auto* edges = gamma.difference_edges()) {
    return component_indicators(gamma.domain_dim(), *edges, in);
  }
  const Matrix g = gamma.dense();
  std::vector<Index> free_rows;
  for (Index i = 0; i < g.rows(); ++i)
    if (!in[static_cast<std::size_t>(i)]) free_rows.push_back(i);
  return nullspace(g(free_rows, Eigen::all));
}

namespace {

struct RestrictedSystem {
  Matrix basis;      // U
  Matrix phi_basis;  // Phi U
  Matrix pinv;       // (Phi U)^+
};

RestrictedSystem restrict_to_cosupport(const LinearMap& phi, const Matrix& basis) {
  RestrictedSystem sys;
  sys.basis = basis;
  sys.phi_basis = apply_columns(phi, basis);
  if (!has_full_column_rank(sys.phi_basis)) {
    throw SingularRestriction("Phi U does not have full column rank on Ker[Gamma_{I^c}]");
  }
  sys.pinv = pseudo_inverse(sys.phi_basis);
  return sys;
}

Vector evaluate_solution(const RestrictedSystem& sys, const LinearMap& gamma, double lambda,
                         const Vector& f, const Vector& scattered_signs) {
  Vector u = sys.basis * (sys.pinv * f);
  if (lambda != 0.0 && sys.basis.cols() > 0) {
    const Vector gts = gamma.apply_adjoint(scattered_signs);
    u -= lambda * sys.basis * (sys.pinv * (sys.pinv.transpose() * (sys.basis.transpose() * gts)));
  }
  return u;
}

}  // namespace

Vector explicit_solution(const LinearMap& phi, const LinearMap& gamma, double lambda,
                         const Vector& f, const SupportInfo& support) {
  check_problem(phi, gamma, lambda, f);
  const auto sys = restrict_to_cosupport(phi, cosupport_model_basis(gamma, support.cosupport));
  return evaluate_solution(sys, gamma, lambda, f, scatter_signs(gamma.codomain_dim(), support));
}

Vector explicit_debias(const LinearMap& phi, const LinearMap& gamma, const Vector& f,
                       const SupportInfo& support) {
  check_problem(phi, gamma, 0.0, f);
  const auto sys = restrict_to_cosupport(phi, cosupport_model_basis(gamma, support.cosupport));
  return sys.basis * (sys.pinv * f);
}

OracleResult cosupport_bruteforce(const LinearMap& phi, const LinearMap& gamma, double lambda,
                                  const Vector& f) {
  check_problem(phi, gamma, lambda, f);
  if (!(lambda > 0.0)) throw ParameterError("brute-force oracle needs lambda > 0");
  const Index l = gamma.codomain_dim();
  if (l > 12) throw ParameterError("brute-force oracle limited to L <= 12");
  const Matrix g = gamma.dense();
  const Matrix a = phi.dense();

  OracleResult best;
  double best_energy = std::numeric_limits<double>::infinity();
  bool found = false;

  for (std::uint32_t mask = 0; mask < (1u << l); ++mask) {
    std::vector<Index> on, off;
    for (Index i = 0; i < l; ++i) ((mask >> i) & 1u ? on : off).push_back(i);
    const Matrix g_off = g(off, Eigen::all);
    const Matrix basis = off.empty() ? Matrix::Identity(g.cols(), g.cols()) : nullspace(g_off);
    const Matrix phi_basis = a * basis;
    if (!has_full_column_rank(phi_basis)) continue;
    const Matrix pinv = pseudo_inverse(phi_basis);
    const Matrix constraint = g_off.transpose();  // N x |I^c|
    Matrix constraint_pinv, constraint_kernel(0, 0);
    if (!off.empty()) {
      constraint_pinv = pseudo_inverse(constraint);
      constraint_kernel = nullspace(constraint);
    }

    const auto n_on = static_cast<std::uint32_t>(on.size());
    for (std::uint32_t pattern = 0; pattern < (1u << n_on); ++pattern) {
      Vector s_full = Vector::Zero(l);
      for (std::uint32_t k = 0; k < n_on; ++k)
        s_full[on[k]] = ((pattern >> k) & 1u) ? -1.0 : 1.0;

      Vector u = basis * (pinv * f);
      if (basis.cols() > 0) {
        u -= lambda * basis * (pinv * (pinv.transpose() * (basis.transpose() * (g.transpose() * s_full))));
      }
      const Vector gu = g * u;
      const double tol = kSupportTol * std::max(1.0, gu.lpNorm<Eigen::Infinity>());
      bool consistent = true;
      for (Index i : on) consistent = consistent && s_full[i] * gu[i] > tol;
      for (Index i : off) consistent = consistent && std::abs(gu[i]) <= tol;
      if (!consistent) continue;

      // Need v_{I^c}: Gamma_{I^c}^t v = -(Phi^t (Phi u - f) + lambda Gamma_I^t s_I) / lambda.
      const Vector rhs = -(a.transpose() * (a * u - f) + lambda * g.transpose() * s_full) / lambda;
      Vector v0 = off.empty() ? Vector(0) : Vector(constraint_pinv * rhs);
      const Vector resid = off.empty() ? rhs : Vector(constraint * v0 - rhs);
      if (resid.norm() > 1e-8 * std::max(1.0, rhs.norm())) continue;
      if (min_inf_norm(v0, constraint_kernel) > 1.0 + kKktTol) continue;

      const double energy = 0.5 * (a * u - f).squaredNorm() + lambda * gu.lpNorm<1>();
      if (energy < best_energy) {
        best_energy = energy;
        best.u_star = u;
        found = true;
      }
    }
  }
  if (!found) throw OracleFailure("no co-support candidate satisfied the optimality conditions");
  best.support = support_from_analysis(g * best.u_star);
  return best;
}

}  // namespace debias
