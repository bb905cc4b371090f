#include "debias/debias_iter.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "debias/errors.hpp"
#include "debias/io.hpp"

namespace debias {
namespace {

// Returns the new unit column, or an empty vector when u_prime is spanned.
Vector orthonormal_extension(const Matrix& q, const Vector& u_prime, double drop_tol,
                             double* residual_norm) {
  Vector e = orthogonal_residual(q, u_prime);
  const double norm = e.norm();
  *residual_norm = norm;
  if (!(norm > drop_tol * std::max(1.0, u_prime.norm()))) return Vector(0);
  return e / norm;
}

}  // namespace

SubspaceBasis gs_append(const SubspaceBasis& basis, const Vector& u_prime, double drop_tol) {
  if (u_prime.size() != basis.columns.rows()) throw InvalidDimension("gs_append: length mismatch");
  if (!basis.orthonormal && basis.dim() > 0) {
    throw ParameterError("gs_append expects an orthonormal basis");
  }
  double norm = 0.0;
  const Vector col = orthonormal_extension(basis.columns, u_prime, drop_tol, &norm);
  if (col.size() == 0) return basis;
  SubspaceBasis out = basis;
  out.columns.conservativeResize(Eigen::NoChange, basis.dim() + 1);
  out.columns.col(basis.dim()) = col;
  out.orthonormal = true;
  return out;
}

DebiasRun debias_general(const Vector& f, const Vector& u_star, const Jvp& jvp,
                         const LinearMap& phi, const DebiasConfig& cfg) {
  const Index p = phi.codomain_dim();
  const Index n = phi.domain_dim();
  if (f.size() != p) throw InvalidDimension("debias_general: f length must match Phi codomain");
  if (u_star.size() != n) throw InvalidDimension("debias_general: u* length must match Phi domain");
  if (cfg.max_dirs < 1) throw ParameterError("max_dirs must be >= 1");
  if (!(cfg.stop_tol >= 0.0)) throw ParameterError("stop_tol must be >= 0");

  DebiasRun run;
  run.epsilon = cfg.epsilon.value_or(0.01 * f.norm() / std::sqrt(static_cast<double>(p)));
  if (!(run.epsilon > 0.0)) throw ParameterError("epsilon must be positive");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix q(n, 0);
  Matrix phi_q(p, 0);
  const Vector base_residual = f - phi.apply(u_star);
  run.tilde_u = u_star;

  for (int it = 1; it <= cfg.max_dirs; ++it) {
    Vector eta(p);
    for (Index i = 0; i < p; ++i) eta[i] = gauss(rng);
    const Vector delta = eta / eta.norm();

    const Vector u_prime = jvp(f - phi.apply(run.tilde_u) + run.epsilon * delta);
    if (u_prime.size() != n) throw InvalidDimension("jvp returned a vector of the wrong length");
    if (!u_prime.allFinite()) throw NonFiniteValue("jvp returned non-finite values");

    DebiasStep step;
    step.iteration = it;
    const Vector col = orthonormal_extension(q, u_prime, cfg.drop_tol, &step.direction_norm);
    step.kept = col.size() > 0;
    if (!step.kept) {
      step.residual_norm = (f - phi.apply(run.tilde_u)).norm();
      run.history.push_back(step);
      run.converged = true;
      break;
    }
    q.conservativeResize(Eigen::NoChange, q.cols() + 1);
    q.col(q.cols() - 1) = col;
    phi_q.conservativeResize(Eigen::NoChange, phi_q.cols() + 1);
    phi_q.col(phi_q.cols() - 1) = phi.apply(col);

    step.rank_deficient = !has_full_column_rank(phi_q);
    const Vector next = u_star + q * pinv_solve(phi_q, base_residual);
    const double prev_norm = run.tilde_u.norm();
    step.change = (next - run.tilde_u).norm() / (prev_norm > 0.0 ? prev_norm : 1.0);
    run.tilde_u = next;
    step.residual_norm = (f - phi.apply(run.tilde_u)).norm();
    run.history.push_back(step);
    if (step.change < cfg.stop_tol) {
      run.converged = true;
      break;
    }
  }
  run.basis = SubspaceBasis::linear(std::move(q));
  run.basis.orthonormal = true;
  return run;
}

void write_history_csv(std::ostream& os, const DebiasRun& run) {
  os << "iteration,direction_norm,kept,residual_norm,change,rank_deficient\n";
  for (const auto& s : run.history) {
    os << s.iteration << ',' << format_real(s.direction_norm) << ',' << (s.kept ? 1 : 0) << ','
       << format_real(s.residual_norm) << ',' << format_real(s.change) << ','
       << (s.rank_deficient ? 1 : 0) << '\n';
  }
}

}  // namespace debias
