#ifndef NSMPC_PROBLEM_HPP
#define NSMPC_PROBLEM_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nsmpc/errors.hpp"
#include "nsmpc/prox.hpp"

namespace nsmpc {

struct ProblemDims {
  int n = 1;   // state
  int m = 1;   // input
  int ni = 0;  // inequality constraints g(u) <= 0
  int ne = 0;  // equality constraints h(u) = 0
  int horizon = 1;

  int stage_size() const noexcept { return m + ni + ne; }
  int decision_size() const noexcept { return horizon * stage_size(); }
};

/// Second derivatives of H(x, u, mu, nu, p) = L + mu'g + nu'h + p'f.
struct HamiltonianHessians {
  Matrix xx;  // n x n
  Matrix ux;  // m x n
  Matrix uu;  // m x m
};

/// Callbacks describing the optimal control problem
///
///   min  phi(x^{T+1}) + sum_k L(x^k, u^k) + r(u^k)
///   s.t. x^{k+1} = f(x^k, u^k),  g(u^k) <= 0,  h(u^k) = 0.
///
/// First derivatives are mandatory. The Hessian callbacks are optional; when
/// absent they are approximated by central differences of the gradients.
/// All callbacks must be pure and reentrant.
struct ProblemCallbacks {
  std::function<Vector(const Vector& x, const Vector& u)> dynamics;
  std::function<Matrix(const Vector& x, const Vector& u)> dynamics_dx;
  std::function<Matrix(const Vector& x, const Vector& u)> dynamics_du;

  std::function<double(const Vector& x, const Vector& u)> stage_cost;
  std::function<Vector(const Vector& x, const Vector& u)> stage_cost_dx;
  std::function<Vector(const Vector& x, const Vector& u)> stage_cost_du;

  std::function<double(const Vector& x)> terminal_cost;
  std::function<Vector(const Vector& x)> terminal_cost_grad;

  std::function<Vector(const Vector& u)> inequality;
  std::function<Matrix(const Vector& u)> inequality_du;
  std::function<Vector(const Vector& u)> equality;
  std::function<Matrix(const Vector& u)> equality_du;

  std::function<HamiltonianHessians(const Vector& x, const Vector& u, const Vector& mu,
                                    const Vector& nu, const Vector& p)>
      hamiltonian_hessians;
  std::function<Matrix(const Vector& x)> terminal_cost_hessian;
};

/// The optimal control problem. Dimensions of every callback are probed at
/// the origin on construction.
class ProblemSpec {
 public:
  ProblemSpec(ProblemDims dims, ProblemCallbacks callbacks, Regularizer reg)
      : dims_(dims), cb_(std::move(callbacks)), reg_(std::move(reg)) {
    validate();
  }

  const ProblemDims& dims() const noexcept { return dims_; }
  int n() const noexcept { return dims_.n; }
  int m() const noexcept { return dims_.m; }
  int ni() const noexcept { return dims_.ni; }
  int ne() const noexcept { return dims_.ne; }
  int horizon() const noexcept { return dims_.horizon; }
  const Regularizer& regularizer() const noexcept { return reg_; }
  const ProblemCallbacks& callbacks() const noexcept { return cb_; }

  /// Same problem with a different horizon.
  ProblemSpec with_horizon(int horizon) const {
    ProblemDims d = dims_;
    d.horizon = horizon;
    return ProblemSpec(d, cb_, reg_);
  }

  /// Same problem with a different regularizer.
  ProblemSpec with_regularizer(Regularizer reg) const {
    return ProblemSpec(dims_, cb_, std::move(reg));
  }

  Vector f(const Vector& x, const Vector& u) const { return cb_.dynamics(x, u); }
  Matrix f_x(const Vector& x, const Vector& u) const { return cb_.dynamics_dx(x, u); }
  Matrix f_u(const Vector& x, const Vector& u) const { return cb_.dynamics_du(x, u); }
  double stage_cost(const Vector& x, const Vector& u) const { return cb_.stage_cost(x, u); }
  Vector L_x(const Vector& x, const Vector& u) const { return cb_.stage_cost_dx(x, u); }
  Vector L_u(const Vector& x, const Vector& u) const { return cb_.stage_cost_du(x, u); }
  double terminal_cost(const Vector& x) const { return cb_.terminal_cost(x); }
  Vector terminal_grad(const Vector& x) const { return cb_.terminal_cost_grad(x); }

  Vector g(const Vector& u) const {
    return dims_.ni == 0 ? Vector(0) : cb_.inequality(u);
  }
  Matrix g_u(const Vector& u) const {
    return dims_.ni == 0 ? Matrix(0, dims_.m) : cb_.inequality_du(u);
  }
  Vector h(const Vector& u) const { return dims_.ne == 0 ? Vector(0) : cb_.equality(u); }
  Matrix h_u(const Vector& u) const {
    return dims_.ne == 0 ? Matrix(0, dims_.m) : cb_.equality_du(u);
  }

  /// Gradient of H in x: L_x + f_x' p.
  Vector hamiltonian_grad_x(const Vector& x, const Vector& u, const Vector& p) const {
    return L_x(x, u) + f_x(x, u).transpose() * p;
  }

  HamiltonianHessians hamiltonian_hessians(const Vector& x, const Vector& u,
                                           const Vector& mu, const Vector& nu,
                                           const Vector& p) const;

  Matrix terminal_hessian(const Vector& x) const;

 private:
  void validate() const;

  ProblemDims dims_;
  ProblemCallbacks cb_;
  Regularizer reg_;
};

namespace detail {

inline void expect_size(const std::string& what, Eigen::Index got, Eigen::Index want) {
  if (got != want) {
    throw DimensionError(what + " has size " + std::to_string(got) + ", expected " +
                         std::to_string(want));
  }
}

inline void expect_shape(const std::string& what, const Matrix& mat, Eigen::Index rows,
                         Eigen::Index cols) {
  if (mat.rows() != rows || mat.cols() != cols) {
    throw DimensionError(what + " has shape " + std::to_string(mat.rows()) + "x" +
                         std::to_string(mat.cols()) + ", expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

// Relative central-difference step.
inline double central_step(double v) { return 1e-5 * (1.0 + std::abs(v)); }

}  // namespace detail

inline void ProblemSpec::validate() const {
  const auto& d = dims_;
  if (d.n < 1 || d.m < 1 || d.horizon < 1 || d.ni < 0 || d.ne < 0) {
    throw DimensionError("problem dimensions require n, m, T >= 1 and n_i, n_e >= 0");
  }
  auto require = [](bool present, const char* name) {
    if (!present) throw ConfigError(name, "callback is required");
  };
  require(bool(cb_.dynamics), "dynamics");
  require(bool(cb_.dynamics_dx), "dynamics_dx");
  require(bool(cb_.dynamics_du), "dynamics_du");
  require(bool(cb_.stage_cost), "stage_cost");
  require(bool(cb_.stage_cost_dx), "stage_cost_dx");
  require(bool(cb_.stage_cost_du), "stage_cost_du");
  require(bool(cb_.terminal_cost), "terminal_cost");
  require(bool(cb_.terminal_cost_grad), "terminal_cost_grad");
  if (d.ni > 0) {
    require(bool(cb_.inequality), "inequality");
    require(bool(cb_.inequality_du), "inequality_du");
  }
  if (d.ne > 0) {
    require(bool(cb_.equality), "equality");
    require(bool(cb_.equality_du), "equality_du");
  }

  const Vector x = Vector::Zero(d.n);
  const Vector u = Vector::Zero(d.m);
  detail::expect_size("dynamics(0, 0)", f(x, u).size(), d.n);
  detail::expect_shape("dynamics_dx(0, 0)", f_x(x, u), d.n, d.n);
  detail::expect_shape("dynamics_du(0, 0)", f_u(x, u), d.n, d.m);
  detail::expect_size("stage_cost_dx(0, 0)", L_x(x, u).size(), d.n);
  detail::expect_size("stage_cost_du(0, 0)", L_u(x, u).size(), d.m);
  detail::expect_size("terminal_cost_grad(0)", terminal_grad(x).size(), d.n);
  detail::expect_size("inequality(0)", g(u).size(), d.ni);
  detail::expect_shape("inequality_du(0)", g_u(u), d.ni, d.m);
  detail::expect_size("equality(0)", h(u).size(), d.ne);
  detail::expect_shape("equality_du(0)", h_u(u), d.ne, d.m);
  if (cb_.hamiltonian_hessians) {
    const auto hs = cb_.hamiltonian_hessians(x, u, Vector::Zero(d.ni), Vector::Zero(d.ne),
                                             Vector::Zero(d.n));
    detail::expect_shape("hamiltonian_hessians.xx", hs.xx, d.n, d.n);
    detail::expect_shape("hamiltonian_hessians.ux", hs.ux, d.m, d.n);
    detail::expect_shape("hamiltonian_hessians.uu", hs.uu, d.m, d.m);
  }
  if (cb_.terminal_cost_hessian) {
    detail::expect_shape("terminal_cost_hessian(0)", cb_.terminal_cost_hessian(x), d.n, d.n);
  }
}

inline HamiltonianHessians ProblemSpec::hamiltonian_hessians(const Vector& x,
                                                             const Vector& u,
                                                             const Vector& mu,
                                                             const Vector& nu,
                                                             const Vector& p) const {
  if (cb_.hamiltonian_hessians) return cb_.hamiltonian_hessians(x, u, mu, nu, p);

  // Central differences of the analytic gradients.
  auto grad_x = [&](const Vector& xx, const Vector& uu) {
    return hamiltonian_grad_x(xx, uu, p);
  };
  auto grad_u = [&](const Vector& xx, const Vector& uu) {
    Vector gu = L_u(xx, uu) + f_u(xx, uu).transpose() * p;
    if (dims_.ni > 0) gu += g_u(uu).transpose() * mu;
    if (dims_.ne > 0) gu += h_u(uu).transpose() * nu;
    return gu;
  };
  HamiltonianHessians out{Matrix(dims_.n, dims_.n), Matrix(dims_.m, dims_.n),
                          Matrix(dims_.m, dims_.m)};
  for (int j = 0; j < dims_.n; ++j) {
    const double step = detail::central_step(x[j]);
    Vector xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    out.xx.col(j) = (grad_x(xp, u) - grad_x(xm, u)) / (2.0 * step);
    out.ux.col(j) = (grad_u(xp, u) - grad_u(xm, u)) / (2.0 * step);
  }
  for (int j = 0; j < dims_.m; ++j) {
    const double step = detail::central_step(u[j]);
    Vector up = u, um = u;
    up[j] += step;
    um[j] -= step;
    out.uu.col(j) = (grad_u(x, up) - grad_u(x, um)) / (2.0 * step);
  }
  return out;
}

inline Matrix ProblemSpec::terminal_hessian(const Vector& x) const {
  if (cb_.terminal_cost_hessian) return cb_.terminal_cost_hessian(x);
  Matrix out(dims_.n, dims_.n);
  for (int j = 0; j < dims_.n; ++j) {
    const double step = detail::central_step(x[j]);
    Vector xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    out.col(j) = (terminal_grad(xp) - terminal_grad(xm)) / (2.0 * step);
  }
  return out;
}

/// z = [u^1; mu^1; nu^1; ...; u^T; mu^T; nu^T], stage-blocked.
/// Stage indices are zero-based: k = 0 .. T-1.
class DecisionVector {
 public:
  explicit DecisionVector(const ProblemDims& dims)
      : dims_(dims), values_(Vector::Zero(dims.decision_size())) {}

  DecisionVector(const ProblemDims& dims, Vector values)
      : dims_(dims), values_(std::move(values)) {
    detail::expect_size("decision vector", values_.size(), dims_.decision_size());
  }

  const ProblemDims& dims() const noexcept { return dims_; }
  Eigen::Index size() const noexcept { return values_.size(); }
  const Vector& values() const noexcept { return values_; }
  Vector& values() noexcept { return values_; }

  auto u(int k) { return values_.segment(offset(k), dims_.m); }
  auto u(int k) const { return values_.segment(offset(k), dims_.m); }
  auto mu(int k) { return values_.segment(offset(k) + dims_.m, dims_.ni); }
  auto mu(int k) const { return values_.segment(offset(k) + dims_.m, dims_.ni); }
  auto nu(int k) { return values_.segment(offset(k) + dims_.m + dims_.ni, dims_.ne); }
  auto nu(int k) const { return values_.segment(offset(k) + dims_.m + dims_.ni, dims_.ne); }

  /// Flat index of the first entry of stage k.
  Eigen::Index offset(int k) const {
    if (k < 0 || k >= dims_.horizon) {
      throw DimensionError("stage index " + std::to_string(k) + " out of range");
    }
    return static_cast<Eigen::Index>(k) * dims_.stage_size();
  }

  /// Inputs regrouped as [u^1; ...; u^T].
  Vector inputs() const {
    Vector out(static_cast<Eigen::Index>(dims_.horizon) * dims_.m);
    for (int k = 0; k < dims_.horizon; ++k) out.segment(k * dims_.m, dims_.m) = u(k);
    return out;
  }

 private:
  ProblemDims dims_;
  Vector values_;
};

/// States x^1..x^{T+1} (T+1 entries) and costates p^2..p^{T+1} (T entries).
/// costates[k] is the costate that follows stage k, i.e. the p^{k+1} that
/// enters stage k's Hamiltonian.
struct TrajectoryPair {
  std::vector<Vector> states;
  std::vector<Vector> costates;
};

}  // namespace nsmpc

#endif  // NSMPC_PROBLEM_HPP
