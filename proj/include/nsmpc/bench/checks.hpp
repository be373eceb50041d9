#ifndef NSMPC_BENCH_CHECKS_HPP
#define NSMPC_BENCH_CHECKS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nsmpc/bench/example_plant.hpp"
#include "nsmpc/bench/experiment.hpp"
#include "nsmpc/complementarity.hpp"
#include "nsmpc/continuation.hpp"
#include "nsmpc/jacobian.hpp"
#include "nsmpc/kkt_residual.hpp"
#include "nsmpc/linsolve.hpp"
#include "nsmpc/prox.hpp"
#include "nsmpc/testing/oracles.hpp"

namespace nsmpc::bench {

struct CheckResult {
  std::string id;
  std::string title;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string format(const char* fmt, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, a);
  return buf;
}

inline std::string format_time(const std::optional<double>& t) {
  return t ? format("%.2f s", *t) : std::string("never");
}

// Bounds regularizer |x_i| <= 1 as a custom prox (projection), with the
// normal cone as subdifferential.
inline Regularizer box_indicator() {
  CustomRegularizer c;
  c.prox = [](const Vector& v, double) -> Vector { return v.cwiseMax(-1.0).cwiseMin(1.0); };
  c.contains_subgradient = [](const Vector& x, const Vector& g) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (std::abs(x[i]) > 1.0 + 1e-12) return false;
      if (x[i] >= 1.0 - 1e-12) {
        if (g[i] < -1e-10) return false;
      } else if (x[i] <= -1.0 + 1e-12) {
        if (g[i] > 1e-10) return false;
      } else if (std::abs(g[i]) > 1e-10) {
        return false;
      }
    }
    return true;
  };
  c.prox_derivative = [](const Vector& v, double) -> Vector {
    return (v.array().abs() < 1.0).cast<double>().matrix();
  };
  return Regularizer(std::move(c));
}

}  // namespace detail

/// Forward and reverse prox/subgradient equivalence on random samples.
inline CheckResult check_prox_equivalence(int samples = 1000, double tol = 1e-10,
                                          unsigned long seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> gamma_dist(0.05, 2.0);
  std::uniform_int_distribution<int> dim_dist(1, 6);
  std::bernoulli_distribution zero_entry(0.3);
  const std::vector<Regularizer> regs = {Regularizer::l1(4.0), Regularizer::l1(0.3),
                                         Regularizer::zero(), detail::box_indicator()};
  int failures = 0;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Regularizer& reg = regs[static_cast<std::size_t>(s) % regs.size()];
    const int dim = dim_dist(rng);
    const double gamma = gamma_dist(rng);

    // Forward: g in subdifferential at x  =>  prox(x + gamma g) == x.
    Vector x(dim), g(dim);
    for (int i = 0; i < dim; ++i) {
      x[i] = zero_entry(rng) ? 0.0 : 5.0 * unit(rng);
      if (const auto* l1 = reg.as_l1()) {
        g[i] = x[i] != 0.0 ? std::copysign(l1->weight(), x[i]) : l1->weight() * unit(rng);
      } else if (reg.is_zero()) {
        g[i] = 0.0;
      } else {
        x[i] = std::clamp(x[i], -1.0, 1.0);
        if (zero_entry(rng)) x[i] = unit(rng) > 0 ? 1.0 : -1.0;
        g[i] = x[i] == 1.0 ? std::abs(unit(rng)) * 3.0
               : x[i] == -1.0 ? -std::abs(unit(rng)) * 3.0
                              : 0.0;
      }
    }
    if (!subgradient_contains(reg, x, g, tol)) ++failures;
    const double fwd = (prox_eval(reg, x + gamma * g, gamma) - x).cwiseAbs().maxCoeff();
    worst = std::max(worst, fwd);
    if (!(fwd <= tol)) ++failures;

    // Reverse: x = prox(v)  =>  (v - x) / gamma in subdifferential at x.
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = 8.0 * unit(rng);
    const Vector px = prox_eval(reg, v, gamma);
    if (!subgradient_contains(reg, px, (v - px) / gamma, tol)) ++failures;
  }
  return {"A5", "prox/subgradient equivalence", failures == 0,
          std::to_string(2 * samples) + " checks, " + std::to_string(failures) +
              " failures, max forward error " + detail::format("%.3g", worst)};
}

/// Fischer-Burmeister characterization on a 41x41 grid over [-2, 2]^2.
inline CheckResult check_fb_characterization() {
  int failures = 0;
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= 40; ++j) {
      const double a = (i - 20) / 10.0;
      const double b = (j - 20) / 10.0;
      const bool complementary = a >= 0.0 && b >= 0.0 && a * b == 0.0;
      const double phi = std::abs(ncp_eval(a, b));
      if (complementary ? !(phi <= 1e-12) : !(phi > 0.0)) ++failures;
    }
  }
  return {"A6", "Fischer-Burmeister characterization", failures == 0,
          "1681 grid points, " + std::to_string(failures) + " failures"};
}

/// Residual root vs dense KKT on random LTI-LQ problems; Jacobian constancy.
inline CheckResult check_lq_oracle(int instances = 20, unsigned long seed = 11) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ndist(1, 3), mdist(1, 2), tdist(1, 5);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst_root = 0.0, worst_const = 0.0;
  for (int s = 0; s < instances; ++s) {
    const auto lq = testing::random_lti_lq(rng, ndist(rng), mdist(rng), tdist(rng));
    const ProblemSpec spec = testing::make_spec(lq);
    const ResidualModel model = ResidualModel::proximal(0.5);
    DecisionVector z(spec.dims());
    LinearSolverConfig solver;
    newton_refine(spec, z, lq.x1, model, solver, {1, 1.0, 0.0});
    const Vector oracle = testing::dense_kkt_inputs(lq);
    worst_root = std::max(worst_root, (z.inputs() - oracle).cwiseAbs().maxCoeff() /
                                          (1.0 + oracle.cwiseAbs().maxCoeff()));

    DecisionVector za(spec.dims()), zb(spec.dims());
    for (Eigen::Index i = 0; i < za.size(); ++i) {
      za.values()[i] = nd(rng);
      zb.values()[i] = nd(rng);
    }
    const Matrix Ja = jacobian_z(spec, za, lq.x1, 0.5);
    const Matrix Jb = jacobian_z(spec, zb, lq.x1, 0.5);
    worst_const = std::max(worst_const, (Ja - Jb).cwiseAbs().maxCoeff());
  }
  const bool ok = worst_root <= 1e-8 && worst_const <= 1e-10;
  return {"A7", "LTI-LQ root vs dense KKT", ok,
          "max root error " + detail::format("%.3g", worst_root) +
              ", max Jacobian variation " + detail::format("%.3g", worst_const)};
}

/// Analytic vs forward-difference Jacobians of the benchmark residual at
/// random points away from kinks and active constraints.
inline CheckResult check_jacobians(int points = 20, unsigned long seed = 5) {
  const ProblemSpec spec = example_plant();
  const ResidualModel model = ResidualModel::proximal(0.5);
  const double threshold = 0.5 * 4.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.1, 1.0);
  double worst = 0.0;
  int accepted = 0, attempts = 0;
  while (accepted < points && attempts < 100 * points) {
    ++attempts;
    DecisionVector z(spec.dims());
    Vector x1 = example_initial_state();
    for (int i = 0; i < 5; ++i) x1[i] += 2.0 * unit(rng);
    for (int k = 0; k < spec.horizon(); ++k) {
      for (int i = 0; i < 2; ++i) z.u(k)[i] = 0.9 * unit(rng);
      for (int i = 0; i < 4; ++i) z.mu(k)[i] = pos(rng);
    }
    const TrajectoryPair traj = trajectory(spec, x1, z);
    bool smooth = true;
    for (int k = 0; k < spec.horizon() && smooth; ++k) {
      const Vector u = z.u(k);
      const Vector J = hamiltonian_grad_u(spec, traj.states[k], u, z.mu(k), z.nu(k),
                                          traj.costates[k]);
      const Vector arg = u - model.gamma * J;
      smooth = (arg.cwiseAbs().array() - threshold).abs().minCoeff() >= 0.05 &&
               spec.g(u).cwiseAbs().minCoeff() >= 0.05;
    }
    if (!smooth) continue;
    ++accepted;
    const auto analytic = residual_jacobians(spec, model, z, x1, JacobianMode::Analytic);
    const auto fd = residual_jacobians(spec, model, z, x1, JacobianMode::FiniteDifference, 1e-7);
    worst = std::max(worst, testing::max_relative_entry_error(analytic.dz, fd.dz));
    worst = std::max(worst, testing::max_relative_entry_error(analytic.dx1, fd.dx1));
  }
  const bool ok = accepted == points && worst < 1e-4;
  return {"A8", "analytic vs finite-difference Jacobians", ok,
          std::to_string(accepted) + " points, max relative entry error " +
              detail::format("%.3g", worst)};
}

/// Newton initialization from z = 0 at the benchmark initial state.
inline CheckResult check_initialization() {
  const ProblemSpec spec = example_plant();
  DecisionVector z(spec.dims());
  LinearSolverConfig solver;
  const NewtonReport r = newton_refine(spec, z, example_initial_state(),
                                       ResidualModel::proximal(0.5), solver, {100, 1.0, 1e-6});
  return {"A4", "Newton initialization from zero", r.converged && r.residual_inf <= 1e-6,
          std::to_string(r.iterations) + " iterations, residual " +
              detail::format("%.3g", r.residual_inf)};
}

/// Closed-loop benchmark criteria (sparsity switching, regulation, residual
/// ratio, LU/GMRES agreement, feasibility and determinism).
struct BenchmarkChecks {
  std::vector<CheckResult> results;
};

inline BenchmarkChecks check_benchmark(const ExperimentConfig& base = {}) {
  BenchmarkChecks out;
  ExperimentConfig proposed = base;
  proposed.method = Method::Proposed;
  proposed.solver.method = LinearSolverMethod::DenseLU;
  proposed.record_wall_time = false;

  // LU vs GMRES on every continuation system.
  LinearSolverConfig gmres_cfg;
  gmres_cfg.method = LinearSolverMethod::Gmres;
  gmres_cfg.gmres_restart = 30;
  gmres_cfg.gmres_tol = 1e-12;
  gmres_cfg.gmres_max_iter = 2000;
  double worst_solver = 0.0;
  int systems = 0, gmres_failures = 0;
  auto observer = [&](LinearSystemKind kind, const Matrix& A, const Vector& b, const Vector& x) {
    if (kind != LinearSystemKind::Continuation) return;
    ++systems;
    const auto g = gmres_solve([&](const Vector& v) -> Vector { return A * v; }, b, gmres_cfg);
    if (!g.report.converged) ++gmres_failures;
    const double scale = std::max(x.norm(), b.norm() > 0 ? 1e-300 : 1.0);
    worst_solver = std::max(worst_solver, (g.x - x).norm() / scale);
  };

  const ExperimentResult run = run_experiment(proposed, observer);
  if (run.exit_code == kInitFailure) {
    for (const char* id : {"A1", "A2", "A3", "A9", "A10"}) {
      out.results.push_back({id, "benchmark run", false, "initialization failed: " + run.message});
    }
    return out;
  }

  const auto t1 = switch_off_time(run.trace, 0);
  const auto t2 = switch_off_time(run.trace, 1);
  const bool a1 = t1 && *t1 >= 3.5 && *t1 <= 5.5 && t2 && *t2 >= 2.0 && *t2 <= 4.0;
  out.results.push_back({"A1", "sparsity switching times", a1,
                         "u1 off from " + detail::format_time(t1) + " (want 3.5-5.5), u2 off from " +
                             detail::format_time(t2) + " (want 2.0-4.0)"});

  const double xf = run.final_state.cwiseAbs().maxCoeff();
  out.results.push_back({"A2", "regulation at t = 20", xf < 0.5,
                         "||x(20)||_inf = " + detail::format("%.4f", xf) + " (want < 0.5)"});

  ExperimentConfig conventional = proposed;
  conventional.method = Method::Conventional;
  const ExperimentResult conv = run_experiment(conventional);
  std::vector<double> ratios;
  for (std::size_t s = 0; s < std::min(run.trace.records.size(), conv.trace.records.size()); ++s) {
    const double t = run.trace.records[s].time;
    if (t >= 10.0 - 1e-9 && t <= 20.0 + 1e-9) {
      ratios.push_back(run.trace.records[s].residual_l1 / conv.trace.records[s].residual_l1);
    }
  }
  const double med = median(ratios);
  out.results.push_back({"A3", "residual ratio vs smoothed method",
                         conv.exit_code != kInitFailure && !ratios.empty() && med <= 0.1,
                         "median ratio over t in [10, 20] = " + detail::format("%.3g", med) +
                             " (want <= 0.1)"});

  out.results.push_back({"A9", "LU vs GMRES continuation solves",
                         systems > 0 && gmres_failures == 0 && worst_solver <= 1e-6,
                         std::to_string(systems) + " systems, max relative difference " +
                             detail::format("%.3g", worst_solver)});

  double max_input = 0.0;
  for (const auto& r : run.trace.records) max_input = std::max(max_input, r.input.cwiseAbs().maxCoeff());
  const ExperimentResult again = run_experiment(proposed);
  const bool identical = trace_csv(run.trace) == trace_csv(again.trace);
  out.results.push_back({"A10", "input bounds and determinism",
                         max_input <= 1.0 + 1e-3 && identical,
                         "max |u| = " + detail::format("%.6f", max_input) +
                             (identical ? ", repeated run byte-identical"
                                        : ", repeated run differs")});
  return out;
}

/// Every acceptance criterion, in order A1..A10.
inline std::vector<CheckResult> run_all_checks() {
  std::vector<CheckResult> all = check_benchmark().results;
  all.push_back(check_initialization());
  all.push_back(check_prox_equivalence());
  all.push_back(check_fb_characterization());
  all.push_back(check_lq_oracle());
  all.push_back(check_jacobians());
  auto order = [](const CheckResult& r) { return std::stoi(r.id.substr(1)); };
  std::stable_sort(all.begin(), all.end(),
                   [&](const CheckResult& a, const CheckResult& b) { return order(a) < order(b); });
  return all;
}

inline std::string format_check(const CheckResult& r) {
  return std::string(r.passed ? "PASS " : "FAIL ") + r.id + " " + r.title + ": " + r.detail;
}

}  // namespace nsmpc::bench

#endif  // NSMPC_BENCH_CHECKS_HPP
