#ifndef NSMPC_JACOBIAN_HPP
#define NSMPC_JACOBIAN_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "nsmpc/complementarity.hpp"
#include "nsmpc/errors.hpp"
#include "nsmpc/kkt_residual.hpp"
#include "nsmpc/problem.hpp"
#include "nsmpc/prox.hpp"

namespace nsmpc {

enum class JacobianMode { Analytic, FiniteDifference };

/// Partial derivatives of F(z, x1).
struct ResidualJacobians {
  Matrix dz;   // N x N
  Matrix dx1;  // N x n
};

namespace detail {

inline void require_finite_matrix(const Matrix& mat) {
  for (Eigen::Index c = 0; c < mat.cols(); ++c) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      if (!std::isfinite(mat(r, c))) {
        throw JacobianError(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      }
    }
  }
}

// Chain rule through the forward state and backward costate sensitivity
// recursions. Columns are [z | x1].
inline ResidualJacobians analytic_jacobians(const ProblemSpec& spec, const ResidualModel& model,
                                            const DecisionVector& z, const Vector& x1) {
  const int T = spec.horizon();
  const int n = spec.n(), m = spec.m(), ni = spec.ni(), ne = spec.ne();
  const int s = spec.dims().stage_size();
  const Eigen::Index N = spec.dims().decision_size();
  const Eigen::Index W = N + n;

  const TrajectoryPair traj = trajectory(spec, x1, z);

  std::vector<Matrix> fx(T), fu(T);
  std::vector<HamiltonianHessians> hess(T);
  for (int k = 0; k < T; ++k) {
    const Vector u = z.u(k);
    fx[k] = spec.f_x(traj.states[k], u);
    fu[k] = spec.f_u(traj.states[k], u);
    hess[k] = spec.hamiltonian_hessians(traj.states[k], u, z.mu(k), z.nu(k), traj.costates[k]);
  }

  // dx^k / d[z; x1]
  std::vector<Matrix> dx(T + 1, Matrix::Zero(n, W));
  dx[0].rightCols(n).setIdentity();
  for (int k = 0; k < T; ++k) {
    dx[k + 1].noalias() = fx[k] * dx[k];
    dx[k + 1].middleCols(k * s, m) += fu[k];
  }

  // d costates[k] / d[z; x1]
  std::vector<Matrix> dp(T, Matrix::Zero(n, W));
  dp[T - 1].noalias() = spec.terminal_hessian(traj.states[T]) * dx[T];
  for (int k = T - 1; k >= 1; --k) {
    dp[k - 1].noalias() = hess[k].xx * dx[k] + fx[k].transpose() * dp[k];
    dp[k - 1].middleCols(k * s, m) += hess[k].ux.transpose();
  }

  const double w = model.kind == ResidualKind::Smoothed
                       ? smoothing_weight(spec.regularizer())
                       : 0.0;

  Matrix jac = Matrix::Zero(N, W);
  for (int k = 0; k < T; ++k) {
    const Eigen::Index row0 = static_cast<Eigen::Index>(k) * s;
    const Vector u = z.u(k);
    const Matrix gu = spec.g_u(u);
    const Matrix hu = spec.h_u(u);

    // dJ^k / d[z; x1]
    Matrix dJ = hess[k].ux * dx[k] + fu[k].transpose() * dp[k];
    dJ.middleCols(row0, m) += hess[k].uu;
    if (ni > 0) dJ.middleCols(row0 + m, ni) += gu.transpose();
    if (ne > 0) dJ.middleCols(row0 + m + ni, ne) += hu.transpose();

    auto rows_u = jac.middleRows(row0, m);
    if (model.kind == ResidualKind::Proximal) {
      const Vector J = hamiltonian_grad_u(spec, traj.states[k], u, z.mu(k), z.nu(k),
                                          traj.costates[k]);
      const Vector D =
          prox_generalized_jacobian(spec.regularizer(), u - model.gamma * J, model.gamma);
      rows_u = model.gamma * D.asDiagonal() * dJ;
      rows_u.middleCols(row0, m).diagonal() += (Vector::Ones(m) - D);
    } else {
      rows_u = dJ;
      for (int i = 0; i < m; ++i) {
        const double c = std::cosh(u[i] / model.epsilon);
        rows_u(i, row0 + i) += w / (model.epsilon * c * c);
      }
    }

    if (ni > 0) {
      const Vector gv = spec.g(u);
      for (int i = 0; i < ni; ++i) {
        const auto [da, db] = ncp_partials(-gv[i], z.mu(k)[i], model.ncp);
        jac.row(row0 + m + i).segment(row0, m) = -da * gu.row(i);
        jac(row0 + m + i, row0 + m + i) += db;
      }
    }
    if (ne > 0) jac.block(row0 + m + ni, row0, ne, m) = hu;
  }

  require_finite_matrix(jac);
  return {jac.leftCols(N), jac.rightCols(n)};
}

inline ResidualJacobians fd_jacobians(const ProblemSpec& spec, const ResidualModel& model,
                                      const DecisionVector& z, const Vector& x1,
                                      double fd_step) {
  const Eigen::Index N = z.size();
  const Vector f0 = residual(spec, model, z, x1);
  ResidualJacobians out{Matrix(N, N), Matrix(N, spec.n())};
  DecisionVector zp = z;
  for (Eigen::Index j = 0; j < N; ++j) {
    const double step = fd_step * (1.0 + std::abs(z.values()[j]));
    zp.values()[j] = z.values()[j] + step;
    out.dz.col(j) = (residual(spec, model, zp, x1) - f0) / step;
    zp.values()[j] = z.values()[j];
  }
  Vector xp = x1;
  for (int j = 0; j < spec.n(); ++j) {
    const double step = fd_step * (1.0 + std::abs(x1[j]));
    xp[j] = x1[j] + step;
    out.dx1.col(j) = (residual(spec, model, z, xp) - f0) / step;
    xp[j] = x1[j];
  }
  require_finite_matrix(out.dz);
  require_finite_matrix(out.dx1);
  return out;
}

}  // namespace detail

/// Both partial Jacobians of F at (z, x1).
///
/// The analytic mode returns a selected element of the generalized Jacobian:
/// the flat branch at soft-threshold kinks, and the symmetric element at the
/// Fischer-Burmeister origin.
inline ResidualJacobians residual_jacobians(const ProblemSpec& spec, const ResidualModel& model,
                                            const DecisionVector& z, const Vector& x1,
                                            JacobianMode mode = JacobianMode::Analytic,
                                            double fd_step = 1e-6) {
  detail::check_inputs(spec, x1, z);
  if (mode == JacobianMode::Analytic) return detail::analytic_jacobians(spec, model, z, x1);
  return detail::fd_jacobians(spec, model, z, x1, fd_step);
}

inline Matrix jacobian_z(const ProblemSpec& spec, const DecisionVector& z, const Vector& x1,
                         double gamma, JacobianMode mode = JacobianMode::Analytic,
                         double fd_step = 1e-6) {
  return residual_jacobians(spec, ResidualModel::proximal(gamma), z, x1, mode, fd_step).dz;
}

inline Matrix jacobian_x1(const ProblemSpec& spec, const DecisionVector& z, const Vector& x1,
                          double gamma, JacobianMode mode = JacobianMode::Analytic,
                          double fd_step = 1e-6) {
  return residual_jacobians(spec, ResidualModel::proximal(gamma), z, x1, mode, fd_step).dx1;
}

}  // namespace nsmpc

#endif  // NSMPC_JACOBIAN_HPP
