#ifndef NSMPC_LINSOLVE_HPP
#define NSMPC_LINSOLVE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "nsmpc/errors.hpp"
#include "nsmpc/jacobian.hpp"
#include "nsmpc/prox.hpp"

namespace nsmpc {

enum class LinearSolverMethod { DenseLU, Gmres };

struct LinearSolverConfig {
  LinearSolverMethod method = LinearSolverMethod::DenseLU;
  JacobianMode jacobian = JacobianMode::Analytic;
  int gmres_restart = 30;
  double gmres_tol = 1e-8;
  int gmres_max_iter = 200;
  double fd_step = 1e-6;
  double damping = 0.0;  // Tikhonov term added to the diagonal before factorizing.

  void validate() const {
    if (gmres_restart < 1) throw ConfigError("gmres_restart", "must be positive");
    if (!(gmres_tol > 0.0 && gmres_tol < 1.0)) throw ConfigError("gmres_tol", "must lie in (0, 1)");
    if (gmres_max_iter < 1) throw ConfigError("gmres_max_iter", "must be positive");
    if (!(fd_step > 0.0)) throw ConfigError("fd_step", "must be positive");
    if (!(damping >= 0.0)) throw ConfigError("damping", "must be nonnegative");
  }
};

/// Solves A x = b with partially pivoted LU. Throws SingularMatrixError naming
/// the first pivot that vanishes relative to the largest entry of A.
inline Vector lu_solve(const Matrix& A, const Vector& b, double damping = 0.0) {
  if (A.rows() != A.cols()) throw DimensionError("lu_solve: matrix is not square");
  detail::expect_size("lu_solve rhs", b.size(), A.rows());
  if (A.rows() == 0) return Vector(0);
  if (!A.allFinite() || !b.allFinite()) throw Error("lu_solve: non-finite input");

  Matrix Ad = A;
  if (damping > 0.0) Ad.diagonal().array() += damping;
  const Eigen::PartialPivLU<Matrix> lu(Ad);
  const double scale = std::max(Ad.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double tol = static_cast<double>(A.rows()) * std::numeric_limits<double>::epsilon() * scale;
  const auto diag = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(std::abs(diag[i]) > tol)) throw SingularMatrixError(static_cast<std::size_t>(i));
  }
  Vector x = lu.solve(b);
  // One step of iterative refinement.
  const Vector r = b - Ad * x;
  x += lu.solve(r);
  return x;
}

struct GmresReport {
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
  double relative_residual = 0.0;
};

struct GmresResult {
  Vector x;
  GmresReport report;
};

/// Restarted GMRES(k) from a zero initial guess. `apply` may be matrix-free.
inline GmresResult gmres_solve(const std::function<Vector(const Vector&)>& apply,
                               const Vector& b, const LinearSolverConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = b.size();
  GmresResult result{Vector::Zero(n), {}};
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    result.report.converged = true;
    return result;
  }
  const int restart = static_cast<int>(std::min<Eigen::Index>(cfg.gmres_restart, std::max<Eigen::Index>(n, 1)));

  Vector& x = result.x;
  Vector r = b;
  double rnorm = bnorm;
  int total = 0;

  while (total < cfg.gmres_max_iter) {
    Matrix V(n, restart + 1);
    Matrix H = Matrix::Zero(restart + 1, restart);
    Vector cs = Vector::Zero(restart), sn = Vector::Zero(restart);
    Vector gvec = Vector::Zero(restart + 1);
    V.col(0) = r / rnorm;
    gvec[0] = rnorm;

    int j = 0;
    bool stop = false;
    for (; j < restart && total < cfg.gmres_max_iter; ++j) {
      ++total;
      Vector w = apply(V.col(j));
      // Modified Gram-Schmidt.
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w -= H(i, j) * V.col(i);
      }
      H(j + 1, j) = w.norm();
      const bool broke = !(H(j + 1, j) > 1e-14 * bnorm);
      if (!broke) V.col(j + 1) = w / H(j + 1, j);

      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double denom = std::hypot(H(j, j), H(j + 1, j));
      if (denom == 0.0) {
        result.report.breakdown = true;
        stop = true;
        break;
      }
      cs[j] = H(j, j) / denom;
      sn[j] = H(j + 1, j) / denom;
      H(j, j) = denom;
      H(j + 1, j) = 0.0;
      gvec[j + 1] = -sn[j] * gvec[j];
      gvec[j] = cs[j] * gvec[j];

      if (std::abs(gvec[j + 1]) <= cfg.gmres_tol * bnorm) {
        ++j;
        break;
      }
      if (broke) {
        result.report.breakdown = true;
        ++j;
        stop = true;
        break;
      }
    }

    if (j > 0) {
      const Vector y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(gvec.head(j));
      x.noalias() += V.leftCols(j) * y;
    }
    r = b - apply(x);
    rnorm = r.norm();
    if (rnorm <= cfg.gmres_tol * bnorm) {
      result.report.converged = true;
      break;
    }
    if (stop || rnorm == 0.0) break;
  }
  result.report.iterations = total;
  result.report.relative_residual = rnorm / bnorm;
  return result;
}

}  // namespace nsmpc

#endif  // NSMPC_LINSOLVE_HPP
