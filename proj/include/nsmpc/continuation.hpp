#ifndef NSMPC_CONTINUATION_HPP
#define NSMPC_CONTINUATION_HPP

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nsmpc/errors.hpp"
#include "nsmpc/jacobian.hpp"
#include "nsmpc/kkt_residual.hpp"
#include "nsmpc/linsolve.hpp"
#include "nsmpc/newton.hpp"
#include "nsmpc/problem.hpp"

namespace nsmpc {

struct ContinuationConfig {
  double zeta_c = 0.4;  // per-sample gain on -F in the continuation update
  double gamma = 0.5;
  ResidualKind residual = ResidualKind::Proximal;
  double epsilon = 1e-2;  // smoothing, Smoothed residual only
  int newton_steps = 1;
  double newton_step_size = 0.8;
  double init_tol = 1e-8;
  int init_max_iter = 100;
  LinearSolverConfig solver;

  ResidualModel model() const {
    ResidualModel m;
    m.kind = residual;
    m.gamma = gamma;
    m.epsilon = epsilon;
    return m;
  }

  void validate() const {
    if (!(zeta_c > 0.0)) throw ConfigError("zeta_c", "must be positive");
    if (!(gamma > 0.0)) throw ConfigError("gamma", "must be positive");
    if (residual == ResidualKind::Smoothed && !(epsilon > 0.0)) {
      throw ConfigError("epsilon", "must be positive");
    }
    if (newton_steps < 0) throw ConfigError("newton_steps", "must be nonnegative");
    if (!(newton_step_size > 0.0 && newton_step_size <= 1.0)) {
      throw ConfigError("newton_step_size", "must lie in (0, 1]");
    }
    if (!(init_tol > 0.0)) throw ConfigError("init_tol", "must be positive");
    if (init_max_iter < 1) throw ConfigError("init_max_iter", "must be positive");
    solver.validate();
  }
};

struct ContinuationState {
  DecisionVector z;
  Vector x1;  // initial state the plan z refers to
  double last_residual_norm = 0.0;
  long step_count = 0;
};

enum class LinearSystemKind { Continuation, Newton };

/// Called with every dense linear system solved (DenseLU solver only).
using LinearSystemObserver = std::function<void(LinearSystemKind, const Matrix& A,
                                                const Vector& b, const Vector& x)>;

namespace detail {

inline double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Directional difference of F along v, step scaled to the size of the base point.
template <typename Fn>
Vector directional_difference(Fn&& eval, const Vector& base_value, double base_scale,
                              const Vector& v, double fd_step) {
  const double vnorm = inf_norm(v);
  if (vnorm == 0.0) return Vector::Zero(base_value.size());
  const double h = fd_step * (1.0 + base_scale) / vnorm;
  return (eval(h) - base_value) / h;
}

inline Vector gmres_direction(const ProblemSpec& spec, const ResidualModel& model,
                              const DecisionVector& z, const Vector& x1, const Vector& F,
                              const Vector& rhs, const LinearSolverConfig& cfg,
                              int& linear_iters) {
  const double zscale = inf_norm(z.values());
  auto apply = [&](const Vector& v) {
    return directional_difference(
        [&](double h) {
          DecisionVector zp(z.dims(), z.values() + h * v);
          return residual(spec, model, zp, x1);
        },
        F, zscale, v, cfg.fd_step);
  };
  const GmresResult res = gmres_solve(apply, rhs, cfg);
  linear_iters += res.report.iterations;
  if (!res.report.converged) {
    throw Error("GMRES did not converge (relative residual " +
                std::to_string(res.report.relative_residual) + ")");
  }
  return res.x;
}

inline Vector newton_direction(const ProblemSpec& spec, const ResidualModel& model,
                               const DecisionVector& z, const Vector& x1, const Vector& rhs,
                               const LinearSolverConfig& cfg, const LinearSystemObserver& obs,
                               int& linear_iters) {
  if (cfg.method == LinearSolverMethod::Gmres) {
    return gmres_direction(spec, model, z, x1, -rhs, rhs, cfg, linear_iters);
  }
  const Matrix A = residual_jacobians(spec, model, z, x1, cfg.jacobian, cfg.fd_step).dz;
  Vector d = lu_solve(A, rhs, cfg.damping);
  ++linear_iters;
  if (obs) obs(LinearSystemKind::Newton, A, rhs, d);
  return d;
}

}  // namespace detail

/// Damped Newton on F(., x1) = 0 starting from z.
inline NewtonReport newton_refine(const ProblemSpec& spec, DecisionVector& z, const Vector& x1,
                                  const ResidualModel& model, const LinearSolverConfig& solver,
                                  const NewtonOptions& opts,
                                  const LinearSystemObserver& observer = {}) {
  detail::check_inputs(spec, x1, z);
  const ProblemDims dims = z.dims();
  Vector values = z.values();
  auto eval = [&](const Vector& v) {
    return residual(spec, model, DecisionVector(dims, v), x1);
  };
  auto solve = [&](const Vector& v, const Vector& rhs, int& iters) {
    return detail::newton_direction(spec, model, DecisionVector(dims, v), x1, rhs, solver,
                                    observer, iters);
  };
  NewtonReport report = newton_iterate(values, eval, solve, opts);
  z.values() = std::move(values);
  return report;
}

/// Refinement as configured for the closed loop: cfg.newton_steps iterations
/// of step cfg.newton_step_size, stopping early once ||F||_inf <= cfg.init_tol.
inline NewtonReport newton_refine(const ProblemSpec& spec, DecisionVector& z, const Vector& x1,
                                  const ContinuationConfig& cfg,
                                  const LinearSystemObserver& observer = {}) {
  return newton_refine(spec, z, x1, cfg.model(), cfg.solver,
                       {cfg.newton_steps, cfg.newton_step_size, cfg.init_tol}, observer);
}

/// Full-step Newton from z0 until ||F||_inf <= cfg.init_tol. Throws
/// ConvergenceError carrying the best residual norm on failure.
inline ContinuationState initialize(const ProblemSpec& spec, const Vector& x1,
                                    DecisionVector z0, const ContinuationConfig& cfg) {
  cfg.validate();
  const NewtonReport report = newton_refine(spec, z0, x1, cfg.model(), cfg.solver,
                                            {cfg.init_max_iter, 1.0, cfg.init_tol});
  if (!report.converged) {
    throw ConvergenceError("Newton initialization did not converge after " +
                               std::to_string(report.iterations) + " iterations" +
                               (report.message.empty() ? "" : ": " + report.message),
                           report.residual_inf);
  }
  return ContinuationState{std::move(z0), x1, report.residual_inf, 0};
}

inline ContinuationState initialize(const ProblemSpec& spec, const Vector& x1,
                                    const ContinuationConfig& cfg) {
  return initialize(spec, x1, DecisionVector(spec.dims()), cfg);
}

struct StepReport {
  Vector x_pred;
  Vector applied_input;
  double residual_before = 0.0;         // ||F(z, x_obs)||_inf at entry
  double residual_pre_refine_inf = 0.0;  // after the continuation update
  double residual_pre_refine_l1 = 0.0;
  double residual_inf = 0.0;  // after refinement, at x_pred
  double residual_l1 = 0.0;
  int linear_iterations = 0;
  bool ok = true;
  std::string error;
};

/// One sampling instant: solve
///   dF/dz d = -dF/dx1 (x_pred - x_obs) - zeta_c F(z, x_obs),
/// set z <- z + d, refine with Newton on F(., x_pred), and set x1 <- x_pred
/// where x_pred = f(x_obs, u^1). If the continuation system cannot be solved
/// z is held and the error is reported.
inline StepReport continuation_step(const ProblemSpec& spec, ContinuationState& state,
                                    const Vector& x_obs, const ContinuationConfig& cfg,
                                    const LinearSystemObserver& observer = {}) {
  detail::check_inputs(spec, x_obs, state.z);
  const ResidualModel model = cfg.model();
  StepReport report;
  report.applied_input = state.z.u(0);
  report.x_pred = spec.f(x_obs, report.applied_input);
  const Vector dx = report.x_pred - x_obs;

  try {
    const Vector F = residual(spec, model, state.z, x_obs);
    report.residual_before = detail::inf_norm(F);
    Vector d;
    if (cfg.solver.method == LinearSolverMethod::DenseLU) {
      const ResidualJacobians jac =
          residual_jacobians(spec, model, state.z, x_obs, cfg.solver.jacobian, cfg.solver.fd_step);
      const Vector rhs = -jac.dx1 * dx - cfg.zeta_c * F;
      d = lu_solve(jac.dz, rhs, cfg.solver.damping);
      ++report.linear_iterations;
      if (observer) observer(LinearSystemKind::Continuation, jac.dz, rhs, d);
    } else {
      const Vector Fx = detail::directional_difference(
          [&](double h) { return residual(spec, model, state.z, Vector(x_obs + h * dx)); }, F,
          detail::inf_norm(x_obs), dx, cfg.solver.fd_step);
      const Vector rhs = -Fx - cfg.zeta_c * F;
      d = detail::gmres_direction(spec, model, state.z, x_obs, F, rhs, cfg.solver,
                                  report.linear_iterations);
    }
    state.z.values() += d;
  } catch (const Error& e) {
    report.ok = false;
    report.error = e.what();
  }

  try {
    const Vector Fp = residual(spec, model, state.z, report.x_pred);
    report.residual_pre_refine_inf = detail::inf_norm(Fp);
    report.residual_pre_refine_l1 = Fp.lpNorm<1>();
    if (report.ok && cfg.newton_steps > 0) {
      const NewtonReport nr = newton_refine(spec, state.z, report.x_pred, cfg, observer);
      report.linear_iterations += nr.linear_iterations;
      if (nr.failed) {
        report.ok = false;
        report.error = "refinement: " + nr.message;
      }
    }
    const Vector Fa = residual(spec, model, state.z, report.x_pred);
    report.residual_inf = detail::inf_norm(Fa);
    report.residual_l1 = Fa.lpNorm<1>();
  } catch (const Error& e) {
    report.ok = false;
    report.error = e.what();
    report.residual_inf = report.residual_l1 = std::numeric_limits<double>::quiet_NaN();
  }

  state.x1 = report.x_pred;
  state.last_residual_norm = report.residual_inf;
  ++state.step_count;
  return report;
}

struct SimRecord {
  long step = 0;
  double time = 0.0;
  Vector state;  // observed
  Vector input;  // applied
  double residual_inf = 0.0;
  double residual_l1 = 0.0;
  double residual_pre_refine_inf = 0.0;
  double residual_pre_refine_l1 = 0.0;
  int solver_iterations = 0;
  double wall_seconds = 0.0;
  bool ok = true;
  std::string error;
};

struct SimTrace {
  std::vector<SimRecord> records;
  std::size_t failures() const {
    std::size_t count = 0;
    for (const auto& r : records) count += r.ok ? 0 : 1;
    return count;
  }
};

using PlantFn = std::function<Vector(const Vector& x, const Vector& u)>;

/// Closed loop: at each sampling instant apply u^1, log, run one continuation
/// step, and advance the plant. `plant` defaults to the prediction model.
/// Step failures are logged and the loop continues with the held plan.
inline SimTrace closed_loop(const ProblemSpec& spec, ContinuationState& state,
                            const Vector& x_init, int steps, double sample_period,
                            const ContinuationConfig& cfg, const PlantFn& plant = {},
                            const LinearSystemObserver& observer = {}) {
  cfg.validate();
  if (steps < 0) throw ConfigError("steps", "must be nonnegative");
  detail::expect_size("x_init", x_init.size(), spec.n());
  SimTrace trace;
  trace.records.reserve(static_cast<std::size_t>(steps));
  Vector x = x_init;
  for (int s = 0; s < steps; ++s) {
    const auto start = std::chrono::steady_clock::now();
    StepReport step = continuation_step(spec, state, x, cfg, observer);
    const auto stop = std::chrono::steady_clock::now();

    SimRecord rec;
    rec.step = s;
    rec.time = s * sample_period;
    rec.state = x;
    rec.input = step.applied_input;
    rec.residual_inf = step.residual_inf;
    rec.residual_l1 = step.residual_l1;
    rec.residual_pre_refine_inf = step.residual_pre_refine_inf;
    rec.residual_pre_refine_l1 = step.residual_pre_refine_l1;
    rec.solver_iterations = step.linear_iterations;
    rec.wall_seconds = std::chrono::duration<double>(stop - start).count();
    rec.ok = step.ok;
    rec.error = std::move(step.error);
    trace.records.push_back(std::move(rec));

    x = plant ? plant(x, step.applied_input) : spec.f(x, step.applied_input);
  }
  return trace;
}

}  // namespace nsmpc

#endif  // NSMPC_CONTINUATION_HPP
