#ifndef NSMPC_BENCH_EXAMPLE_PLANT_HPP
#define NSMPC_BENCH_EXAMPLE_PLANT_HPP

#include <cmath>

#include <Eigen/Dense>

#include "nsmpc/problem.hpp"
#include "nsmpc/prox.hpp"

namespace nsmpc::bench {

// Five-state nonlinear plant driven through the two velocity-like states,
// Euler-discretized:  x+ = x + dt * ftilde(x) + dt * B u.

inline Vector plant_drift(const Vector& x) {
  Vector f(5);
  f << x[2],
      x[3],
      -0.1 * x[0] - 0.1 * std::cosh(0.1 * x[1]) * x[2],
      -0.2 * x[1] - 0.2 * std::cosh(0.1 * x[0]) * x[3] + 0.1 * x[3],
      -0.3 * x[4] + std::tanh(x[2]) + std::tanh(x[3]);
  return f;
}

inline Matrix plant_drift_jacobian(const Vector& x) {
  Matrix J = Matrix::Zero(5, 5);
  J(0, 2) = 1.0;
  J(1, 3) = 1.0;
  J(2, 0) = -0.1;
  J(2, 1) = -0.01 * std::sinh(0.1 * x[1]) * x[2];
  J(2, 2) = -0.1 * std::cosh(0.1 * x[1]);
  J(3, 0) = -0.02 * std::sinh(0.1 * x[0]) * x[3];
  J(3, 1) = -0.2;
  J(3, 3) = -0.2 * std::cosh(0.1 * x[0]) + 0.1;
  const double c3 = std::cosh(x[2]), c4 = std::cosh(x[3]);
  J(4, 2) = 1.0 / (c3 * c3);
  J(4, 3) = 1.0 / (c4 * c4);
  J(4, 4) = -0.3;
  return J;
}

/// sum_j p_j * Hessian(ftilde_j)(x).
inline Matrix plant_drift_weighted_hessian(const Vector& x, const Vector& p) {
  Matrix H = Matrix::Zero(5, 5);
  // ftilde_3
  H(1, 1) += p[2] * (-0.001 * std::cosh(0.1 * x[1]) * x[2]);
  H(1, 2) += p[2] * (-0.01 * std::sinh(0.1 * x[1]));
  H(2, 1) += p[2] * (-0.01 * std::sinh(0.1 * x[1]));
  // ftilde_4
  H(0, 0) += p[3] * (-0.002 * std::cosh(0.1 * x[0]) * x[3]);
  H(0, 3) += p[3] * (-0.02 * std::sinh(0.1 * x[0]));
  H(3, 0) += p[3] * (-0.02 * std::sinh(0.1 * x[0]));
  // ftilde_5
  const double c3 = std::cosh(x[2]), c4 = std::cosh(x[3]);
  H(2, 2) += p[4] * (-2.0 * std::tanh(x[2]) / (c3 * c3));
  H(3, 3) += p[4] * (-2.0 * std::tanh(x[3]) / (c4 * c4));
  return H;
}

inline Matrix plant_input_matrix() {
  Matrix B = Matrix::Zero(5, 2);
  B(2, 0) = 1.0;
  B(3, 1) = 1.0;
  return B;
}

struct ExamplePlantParams {
  double dt = 0.05;
  int horizon = 60;
  double weight = 4.0;  // r(u) = weight * ||u||_1
  double input_bound = 1.0;
};

/// The sparse-control benchmark: L = 0.5 x'x + u'u, terminal 0.1 x'x,
/// box bounds |u_i| <= 1 as g(u) = [u - 1; -u - 1], no equalities.
inline ProblemSpec example_plant(const ExamplePlantParams& params = {}) {
  const double dt = params.dt;
  const double bound = params.input_bound;
  const Matrix B = plant_input_matrix();

  ProblemCallbacks cb;
  cb.dynamics = [dt, B](const Vector& x, const Vector& u) -> Vector {
    return x + dt * plant_drift(x) + dt * B * u;
  };
  cb.dynamics_dx = [dt](const Vector& x, const Vector&) -> Matrix {
    return Matrix::Identity(5, 5) + dt * plant_drift_jacobian(x);
  };
  cb.dynamics_du = [dt, B](const Vector&, const Vector&) -> Matrix { return dt * B; };
  cb.stage_cost = [](const Vector& x, const Vector& u) {
    return 0.5 * x.squaredNorm() + u.squaredNorm();
  };
  cb.stage_cost_dx = [](const Vector& x, const Vector&) -> Vector { return x; };
  cb.stage_cost_du = [](const Vector&, const Vector& u) -> Vector { return 2.0 * u; };
  cb.terminal_cost = [](const Vector& x) { return 0.1 * x.squaredNorm(); };
  cb.terminal_cost_grad = [](const Vector& x) -> Vector { return 0.2 * x; };
  cb.terminal_cost_hessian = [](const Vector&) -> Matrix {
    return 0.2 * Matrix::Identity(5, 5);
  };
  cb.inequality = [bound](const Vector& u) -> Vector {
    Vector g(4);
    g << u[0] - bound, u[1] - bound, -u[0] - bound, -u[1] - bound;
    return g;
  };
  cb.inequality_du = [](const Vector&) -> Matrix {
    Matrix G(4, 2);
    G << 1, 0, 0, 1, -1, 0, 0, -1;
    return G;
  };
  cb.hamiltonian_hessians = [dt](const Vector& x, const Vector&, const Vector&, const Vector&,
                                 const Vector& p) {
    HamiltonianHessians h;
    h.xx = Matrix::Identity(5, 5) + dt * plant_drift_weighted_hessian(x, p);
    h.ux = Matrix::Zero(2, 5);
    h.uu = 2.0 * Matrix::Identity(2, 2);
    return h;
  };

  ProblemDims dims;
  dims.n = 5;
  dims.m = 2;
  dims.ni = 4;
  dims.ne = 0;
  dims.horizon = params.horizon;
  return ProblemSpec(dims, std::move(cb), Regularizer::l1(params.weight));
}

/// Initial state used by the benchmark.
inline Vector example_initial_state() {
  Vector x(5);
  x << 6.0, -8.0, 3.0, -2.0, 5.0;
  return x;
}

}  // namespace nsmpc::bench

#endif  // NSMPC_BENCH_EXAMPLE_PLANT_HPP
