#ifndef NSMPC_NEWTON_HPP
#define NSMPC_NEWTON_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "nsmpc/errors.hpp"
#include "nsmpc/prox.hpp"

namespace nsmpc {

struct NewtonOptions {
  int max_iter = 1;
  double step_size = 1.0;
  double tol = 1e-8;  // on the infinity norm of the residual
};

struct NewtonReport {
  int iterations = 0;
  int linear_iterations = 0;
  double residual_inf = 0.0;
  bool converged = false;
  bool failed = false;  // linear solve failed; x holds the best iterate
  std::string message;
};

/// Damped (semismooth) Newton iteration x <- x + a d with  J(x) d = -F(x).
///
/// `residual(x)` returns F(x). `solve(x, rhs, linear_iters)` returns the
/// Newton direction for right-hand side rhs and may add to linear_iters.
/// Solver errors stop the iteration and leave the best iterate in x.
template <typename ResidualFn, typename SolveFn>
NewtonReport newton_iterate(Vector& x, ResidualFn&& residual, SolveFn&& solve,
                            const NewtonOptions& opts) {
  NewtonReport report;
  Vector F = residual(x);
  double norm = F.size() ? F.cwiseAbs().maxCoeff() : 0.0;
  Vector best = x;
  double best_norm = norm;

  while (true) {
    if (norm <= opts.tol) {
      report.converged = true;
      break;
    }
    if (report.iterations >= opts.max_iter) break;
    Vector d;
    try {
      d = solve(x, Vector(-F), report.linear_iterations);
    } catch (const Error& e) {
      report.failed = true;
      report.message = e.what();
      break;
    }
    x += opts.step_size * d;
    ++report.iterations;
    try {
      F = residual(x);
    } catch (const Error& e) {
      report.failed = true;
      report.message = e.what();
      break;
    }
    norm = F.size() ? F.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(norm)) {
      report.failed = true;
      report.message = "residual is not finite";
      break;
    }
    if (norm < best_norm) {
      best = x;
      best_norm = norm;
    }
  }
  if (report.failed) {
    x = best;
    norm = best_norm;
  }
  report.residual_inf = norm;
  return report;
}

}  // namespace nsmpc

#endif  // NSMPC_NEWTON_HPP
