#ifndef NSMPC_KKT_RESIDUAL_HPP
#define NSMPC_KKT_RESIDUAL_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "nsmpc/complementarity.hpp"
#include "nsmpc/errors.hpp"
#include "nsmpc/problem.hpp"
#include "nsmpc/prox.hpp"

namespace nsmpc {

/// Which equation system is tracked.
///  - Proximal:  u - prox_gamma(u - gamma * grad_u H)
///  - Smoothed:  w * tanh(u / epsilon) + grad_u H   (log-cosh surrogate of w||u||_1)
enum class ResidualKind { Proximal, Smoothed };

struct ResidualModel {
  ResidualKind kind = ResidualKind::Proximal;
  double gamma = 0.5;
  double epsilon = 1e-2;
  NcpFunction ncp = NcpFunction::FischerBurmeister;

  static ResidualModel proximal(double gamma) {
    return {ResidualKind::Proximal, gamma, 1e-2, NcpFunction::FischerBurmeister};
  }
  static ResidualModel smoothed(double epsilon) {
    return {ResidualKind::Smoothed, 0.5, epsilon, NcpFunction::FischerBurmeister};
  }
};

namespace detail {

inline void require_finite(const Vector& v, const char* what, std::size_t stage) {
  if (!v.allFinite()) throw DivergenceError(std::string(what) + " is not finite", stage);
}

inline void check_inputs(const ProblemSpec& spec, const Vector& x1,
                         const DecisionVector& z) {
  expect_size("x1", x1.size(), spec.n());
  expect_size("decision vector", z.size(), spec.dims().decision_size());
  if (z.dims().m != spec.m() || z.dims().ni != spec.ni() || z.dims().ne != spec.ne() ||
      z.dims().horizon != spec.horizon()) {
    throw DimensionError("decision vector layout does not match the problem");
  }
}

/// Weight of the l1 term replaced by the smooth surrogate (0 for r = 0).
inline double smoothing_weight(const Regularizer& reg) {
  if (reg.is_zero()) return 0.0;
  if (const auto* l1 = reg.as_l1()) return l1->weight();
  throw CapabilityError("smoothed residual requires a ScaledL1 or zero regularizer");
}

}  // namespace detail

/// States x^2..x^{T+1} by forward simulation of the dynamics.
inline std::vector<Vector> rollout(const ProblemSpec& spec, const Vector& x1,
                                   const DecisionVector& z) {
  detail::check_inputs(spec, x1, z);
  std::vector<Vector> out;
  out.reserve(spec.horizon());
  Vector x = x1;
  for (int k = 0; k < spec.horizon(); ++k) {
    x = spec.f(x, z.u(k));
    detail::require_finite(x, "rollout state", static_cast<std::size_t>(k));
    out.push_back(x);
  }
  return out;
}

/// Costates p^2..p^{T+1} given the full state sequence x^1..x^{T+1}.
inline std::vector<Vector> costates(const ProblemSpec& spec, const std::vector<Vector>& states,
                                    const DecisionVector& z) {
  const int T = spec.horizon();
  if (static_cast<int>(states.size()) != T + 1) {
    throw DimensionError("costates: expected T+1 states");
  }
  std::vector<Vector> p(T);
  p[T - 1] = spec.terminal_grad(states[T]);
  detail::require_finite(p[T - 1], "terminal costate", static_cast<std::size_t>(T));
  for (int k = T - 1; k >= 1; --k) {
    p[k - 1] = spec.hamiltonian_grad_x(states[k], z.u(k), p[k]);
    detail::require_finite(p[k - 1], "costate", static_cast<std::size_t>(k));
  }
  return p;
}

inline TrajectoryPair trajectory(const ProblemSpec& spec, const Vector& x1,
                                 const DecisionVector& z) {
  TrajectoryPair traj;
  traj.states.reserve(spec.horizon() + 1);
  traj.states.push_back(x1);
  for (auto& x : rollout(spec, x1, z)) traj.states.push_back(std::move(x));
  traj.costates = costates(spec, traj.states, z);
  return traj;
}

/// grad_u H = L_u + g_u' mu + h_u' nu + f_u' p_next.
inline Vector hamiltonian_grad_u(const ProblemSpec& spec, const Vector& x, const Vector& u,
                                 const Vector& mu, const Vector& nu, const Vector& p_next) {
  Vector out = spec.L_u(x, u) + spec.f_u(x, u).transpose() * p_next;
  if (spec.ni() > 0) out.noalias() += spec.g_u(u).transpose() * mu;
  if (spec.ne() > 0) out.noalias() += spec.h_u(u).transpose() * nu;
  return out;
}

namespace detail {

inline Vector stage_hamiltonian_grad(const ProblemSpec& spec, int k, const DecisionVector& z,
                                     const TrajectoryPair& traj) {
  return hamiltonian_grad_u(spec, traj.states[k], z.u(k), z.mu(k), z.nu(k),
                            traj.costates[k]);
}

inline void fill_constraint_rows(const ProblemSpec& spec, int k, const DecisionVector& z,
                                 NcpFunction ncp, Vector& out) {
  const Vector u = z.u(k);
  if (spec.ni() > 0) out.segment(spec.m(), spec.ni()) = psi(-spec.g(u), z.mu(k), ncp);
  if (spec.ne() > 0) out.segment(spec.m() + spec.ni(), spec.ne()) = spec.h(u);
}

}  // namespace detail

/// [u - prox(u - gamma J); psi(-g(u), mu); h(u)] for stage k (zero-based).
inline Vector stage_residual(const ProblemSpec& spec, int k, const DecisionVector& z,
                             const TrajectoryPair& traj, double gamma,
                             NcpFunction ncp = NcpFunction::FischerBurmeister) {
  if (k < 0 || k >= spec.horizon()) throw DimensionError("stage index out of range");
  Vector out(spec.dims().stage_size());
  const Vector u = z.u(k);
  const Vector J = detail::stage_hamiltonian_grad(spec, k, z, traj);
  out.head(spec.m()) = u - prox_eval(spec.regularizer(), u - gamma * J, gamma);
  detail::fill_constraint_rows(spec, k, z, ncp, out);
  return out;
}

/// [w tanh(u / eps) + J; psi(-g(u), mu); h(u)] for stage k (zero-based).
inline Vector smoothed_stage_residual(const ProblemSpec& spec, int k, const DecisionVector& z,
                                      const TrajectoryPair& traj, double epsilon,
                                      NcpFunction ncp = NcpFunction::FischerBurmeister) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon", "smoothing parameter must be positive");
  if (k < 0 || k >= spec.horizon()) throw DimensionError("stage index out of range");
  const double w = detail::smoothing_weight(spec.regularizer());
  Vector out(spec.dims().stage_size());
  const Vector u = z.u(k);
  out.head(spec.m()) = w * (u / epsilon).array().tanh().matrix() +
                       detail::stage_hamiltonian_grad(spec, k, z, traj);
  detail::fill_constraint_rows(spec, k, z, ncp, out);
  return out;
}

/// F(z, x1) for the given residual model, stage-blocked.
inline Vector residual(const ProblemSpec& spec, const ResidualModel& model,
                       const DecisionVector& z, const Vector& x1) {
  const TrajectoryPair traj = trajectory(spec, x1, z);
  const int s = spec.dims().stage_size();
  Vector out(spec.dims().decision_size());
  for (int k = 0; k < spec.horizon(); ++k) {
    out.segment(k * s, s) =
        model.kind == ResidualKind::Proximal
            ? stage_residual(spec, k, z, traj, model.gamma, model.ncp)
            : smoothed_stage_residual(spec, k, z, traj, model.epsilon, model.ncp);
  }
  return out;
}

/// The proximal residual c^{1:T}(z, x1).
inline Vector residual(const ProblemSpec& spec, const DecisionVector& z, const Vector& x1,
                       double gamma) {
  return residual(spec, ResidualModel::proximal(gamma), z, x1);
}

/// The smoothed comparison residual.
inline Vector smoothed_residual(const ProblemSpec& spec, const DecisionVector& z,
                                const Vector& x1, double epsilon) {
  return residual(spec, ResidualModel::smoothed(epsilon), z, x1);
}

struct LicqReport {
  bool satisfied = true;
  std::vector<int> active;  // zero-based indices into g
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Rank test of [d g_active / du; d h / du]. Diagnostic only.
inline LicqReport licq_check(const ProblemSpec& spec, const Vector& u, double tol = 1e-8) {
  detail::expect_size("u", u.size(), spec.m());
  LicqReport report;
  const Vector gv = spec.g(u);
  for (int i = 0; i < spec.ni(); ++i) {
    if (std::abs(gv[i]) <= tol) report.active.push_back(i);
  }
  const int rows = static_cast<int>(report.active.size()) + spec.ne();
  if (rows == 0) return report;
  if (rows > spec.m()) {
    report.satisfied = false;
    return report;
  }
  Matrix jac(rows, spec.m());
  const Matrix gu = spec.g_u(u);
  for (std::size_t r = 0; r < report.active.size(); ++r) {
    jac.row(static_cast<Eigen::Index>(r)) = gu.row(report.active[r]);
  }
  if (spec.ne() > 0) jac.bottomRows(spec.ne()) = spec.h_u(u);
  const Eigen::JacobiSVD<Matrix> svd(jac);
  const auto& sv = svd.singularValues();
  report.sigma_max = sv.maxCoeff();
  report.sigma_min = sv.minCoeff();
  report.satisfied = report.sigma_min > tol * (1.0 + report.sigma_max);
  return report;
}

}  // namespace nsmpc

#endif  // NSMPC_KKT_RESIDUAL_HPP
