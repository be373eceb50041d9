#ifndef NSMPC_BENCH_EXPERIMENT_HPP
#define NSMPC_BENCH_EXPERIMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nsmpc/bench/example_plant.hpp"
#include "nsmpc/continuation.hpp"
#include "nsmpc/errors.hpp"

namespace nsmpc::bench {

enum class Method { Proposed, Conventional };

inline const char* to_string(Method m) {
  return m == Method::Proposed ? "proposed" : "conventional";
}

inline Method parse_method(const std::string& s) {
  if (s == "proposed") return Method::Proposed;
  if (s == "conventional") return Method::Conventional;
  throw ConfigError("method", "expected 'proposed' or 'conventional', got '" + s + "'");
}

/// Benchmark configuration. Defaults are the published benchmark constants.
struct ExperimentConfig {
  Method method = Method::Proposed;
  double dt = 0.05;
  int horizon = 60;
  int sim_steps = 400;
  Vector x_init = example_initial_state();
  double weight = 4.0;
  double gamma = 0.5;
  double zeta_c = 0.4;
  int newton_steps = 1;
  double newton_step_size = 0.8;
  double epsilon = 1e-2;
  double init_tol = 1e-8;
  int init_max_iter = 100;
  LinearSolverConfig solver;
  unsigned long seed = 0;  // reserved; the benchmark is deterministic
  bool record_wall_time = false;
  std::string out_dir = "out";

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt", "must be positive");
    if (horizon < 1) throw ConfigError("horizon", "must be at least 1");
    if (sim_steps < 1) throw ConfigError("sim_steps", "must be at least 1");
    if (x_init.size() != 5) throw ConfigError("x_init", "must have 5 entries");
    if (!x_init.allFinite()) throw ConfigError("x_init", "must be finite");
    if (!(weight > 0.0)) throw ConfigError("weight", "must be positive");
    if (method == Method::Conventional && !(epsilon > 0.0)) {
      throw ConfigError("epsilon", "must be positive for the conventional method");
    }
    continuation().validate();
  }

  ContinuationConfig continuation() const {
    ContinuationConfig c;
    c.zeta_c = zeta_c;
    c.gamma = gamma;
    c.residual = method == Method::Proposed ? ResidualKind::Proximal : ResidualKind::Smoothed;
    c.epsilon = epsilon;
    c.newton_steps = newton_steps;
    c.newton_step_size = newton_step_size;
    c.init_tol = init_tol;
    c.init_max_iter = init_max_iter;
    c.solver = solver;
    return c;
  }

  ExamplePlantParams plant() const {
    ExamplePlantParams p;
    p.dt = dt;
    p.horizon = horizon;
    p.weight = weight;
    return p;
  }
};

namespace detail {

inline std::string solver_method_name(LinearSolverMethod m) {
  return m == LinearSolverMethod::DenseLU ? "dense_lu" : "gmres";
}

inline std::string jacobian_mode_name(JacobianMode m) {
  return m == JacobianMode::Analytic ? "analytic" : "finite_difference";
}

template <typename T>
T read_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + key, "has the wrong type");
  }
}

}  // namespace detail

/// Applies the keys present in `j` on top of `cfg`. Unknown keys are errors.
inline void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  using detail::read_field;
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "method") {
      cfg.method = parse_method(read_field<std::string>(j, key, ""));
    } else if (key == "dt") {
      cfg.dt = read_field<double>(j, key, "");
    } else if (key == "horizon") {
      cfg.horizon = read_field<int>(j, key, "");
    } else if (key == "sim_steps") {
      cfg.sim_steps = read_field<int>(j, key, "");
    } else if (key == "x_init") {
      const auto xs = read_field<std::vector<double>>(j, key, "");
      cfg.x_init = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    } else if (key == "weight") {
      cfg.weight = read_field<double>(j, key, "");
    } else if (key == "gamma") {
      cfg.gamma = read_field<double>(j, key, "");
    } else if (key == "zeta_c") {
      cfg.zeta_c = read_field<double>(j, key, "");
    } else if (key == "newton_steps") {
      cfg.newton_steps = read_field<int>(j, key, "");
    } else if (key == "newton_step_size") {
      cfg.newton_step_size = read_field<double>(j, key, "");
    } else if (key == "epsilon") {
      cfg.epsilon = read_field<double>(j, key, "");
    } else if (key == "init_tol") {
      cfg.init_tol = read_field<double>(j, key, "");
    } else if (key == "init_max_iter") {
      cfg.init_max_iter = read_field<int>(j, key, "");
    } else if (key == "seed") {
      cfg.seed = read_field<unsigned long>(j, key, "");
    } else if (key == "record_wall_time") {
      cfg.record_wall_time = read_field<bool>(j, key, "");
    } else if (key == "out_dir") {
      cfg.out_dir = read_field<std::string>(j, key, "");
    } else if (key == "solver") {
      if (!value.is_object()) throw ConfigError("solver", "must be an object");
      for (const auto& [skey, sval] : value.items()) {
        (void)sval;
        if (skey == "method") {
          const auto s = read_field<std::string>(value, skey, "solver.");
          if (s == "dense_lu") {
            cfg.solver.method = LinearSolverMethod::DenseLU;
          } else if (s == "gmres") {
            cfg.solver.method = LinearSolverMethod::Gmres;
          } else {
            throw ConfigError("solver.method", "expected 'dense_lu' or 'gmres'");
          }
        } else if (skey == "jacobian") {
          const auto s = read_field<std::string>(value, skey, "solver.");
          if (s == "analytic") {
            cfg.solver.jacobian = JacobianMode::Analytic;
          } else if (s == "finite_difference") {
            cfg.solver.jacobian = JacobianMode::FiniteDifference;
          } else {
            throw ConfigError("solver.jacobian", "expected 'analytic' or 'finite_difference'");
          }
        } else if (skey == "gmres_restart") {
          cfg.solver.gmres_restart = read_field<int>(value, skey, "solver.");
        } else if (skey == "gmres_tol") {
          cfg.solver.gmres_tol = read_field<double>(value, skey, "solver.");
        } else if (skey == "gmres_max_iter") {
          cfg.solver.gmres_max_iter = read_field<int>(value, skey, "solver.");
        } else if (skey == "fd_step") {
          cfg.solver.fd_step = read_field<double>(value, skey, "solver.");
        } else if (skey == "damping") {
          cfg.solver.damping = read_field<double>(value, skey, "solver.");
        } else {
          throw ConfigError("solver." + skey, "unknown key");
        }
      }
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["method"] = to_string(cfg.method);
  j["dt"] = cfg.dt;
  j["horizon"] = cfg.horizon;
  j["sim_steps"] = cfg.sim_steps;
  j["x_init"] = std::vector<double>(cfg.x_init.data(), cfg.x_init.data() + cfg.x_init.size());
  j["weight"] = cfg.weight;
  j["gamma"] = cfg.gamma;
  j["zeta_c"] = cfg.zeta_c;
  j["newton_steps"] = cfg.newton_steps;
  j["newton_step_size"] = cfg.newton_step_size;
  j["epsilon"] = cfg.epsilon;
  j["init_tol"] = cfg.init_tol;
  j["init_max_iter"] = cfg.init_max_iter;
  j["seed"] = cfg.seed;
  j["record_wall_time"] = cfg.record_wall_time;
  j["out_dir"] = cfg.out_dir;
  j["solver"] = {{"method", detail::solver_method_name(cfg.solver.method)},
                 {"jacobian", detail::jacobian_mode_name(cfg.solver.jacobian)},
                 {"gmres_restart", cfg.solver.gmres_restart},
                 {"gmres_tol", cfg.solver.gmres_tol},
                 {"gmres_max_iter", cfg.solver.gmres_max_iter},
                 {"fd_step", cfg.solver.fd_step},
                 {"damping", cfg.solver.damping}};
  return j;
}

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 1,
  kInitFailure = 2,
  kSolverFailure = 3,
  kCheckFailure = 4,  // `check` found a failing criterion
};

struct ExperimentResult {
  SimTrace trace;
  Vector final_state;  // plant state after the last step
  double init_residual = 0.0;
  int exit_code = kSuccess;
  std::string message;
};

/// Newton initialization used by the benchmark. The smoothed system is
/// warm-started from the proximal root: its tanh terms saturate away from the
/// origin and full Newton steps from z = 0 stall.
inline ContinuationState initialize_experiment(const ProblemSpec& spec,
                                               const ExperimentConfig& cfg) {
  const ContinuationConfig cc = cfg.continuation();
  if (cfg.method == Method::Proposed) return initialize(spec, cfg.x_init, cc);
  ContinuationConfig warm = cc;
  warm.residual = ResidualKind::Proximal;
  DecisionVector z0(spec.dims());
  try {
    z0 = initialize(spec, cfg.x_init, warm).z;
  } catch (const ConvergenceError&) {
    z0 = DecisionVector(spec.dims());
  }
  return initialize(spec, cfg.x_init, std::move(z0), cc);
}

/// Initializes and runs the closed loop. Never throws for solver trouble:
/// failures are reflected in exit_code.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const LinearSystemObserver& observer = {}) {
  cfg.validate();
  ExperimentResult result;
  const ProblemSpec spec = example_plant(cfg.plant());
  ContinuationState state{DecisionVector(spec.dims()), cfg.x_init};
  try {
    state = initialize_experiment(spec, cfg);
  } catch (const ConvergenceError& e) {
    result.exit_code = kInitFailure;
    result.init_residual = e.best_residual();
    result.message = e.what();
    return result;
  }
  result.init_residual = state.last_residual_norm;
  result.trace = closed_loop(spec, state, cfg.x_init, cfg.sim_steps, cfg.dt,
                             cfg.continuation(), {}, observer);
  const auto& last = result.trace.records.back();
  result.final_state = spec.f(last.state, last.input);
  if (!cfg.record_wall_time) {
    for (auto& r : result.trace.records) r.wall_seconds = 0.0;
  }
  if (const auto failures = result.trace.failures(); failures > 0) {
    result.exit_code = kSolverFailure;
    result.message = std::to_string(failures) + " step(s) failed; first: ";
    for (const auto& r : result.trace.records) {
      if (!r.ok) {
        result.message += r.error;
        break;
      }
    }
  }
  return result;
}

namespace detail {
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

/// step,t,x1..xn,u1..um,residual_inf,residual_l1,solver_iters,wall_us
inline std::string trace_csv(const SimTrace& trace) {
  std::string out = "step,t";
  const Eigen::Index n = trace.records.empty() ? 5 : trace.records.front().state.size();
  const Eigen::Index m = trace.records.empty() ? 2 : trace.records.front().input.size();
  for (Eigen::Index i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
  for (Eigen::Index i = 1; i <= m; ++i) out += ",u" + std::to_string(i);
  out += ",residual_inf,residual_l1,solver_iters,wall_us\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.step) + "," + detail::fmt17(r.time);
    for (Eigen::Index i = 0; i < r.state.size(); ++i) out += "," + detail::fmt17(r.state[i]);
    for (Eigen::Index i = 0; i < r.input.size(); ++i) out += "," + detail::fmt17(r.input[i]);
    out += "," + detail::fmt17(r.residual_inf) + "," + detail::fmt17(r.residual_l1) + "," +
           std::to_string(r.solver_iterations) + "," +
           std::to_string(std::llround(r.wall_seconds * 1e6)) + "\n";
  }
  return out;
}

/// Earliest sample time after which |u_i| <= threshold for every remaining
/// step; nullopt if the last sample is still on.
inline std::optional<double> switch_off_time(const SimTrace& trace, int input,
                                             double threshold = 1e-3) {
  std::optional<double> t_off;
  for (auto it = trace.records.rbegin(); it != trace.records.rend(); ++it) {
    if (std::abs(it->input[input]) > threshold) break;
    t_off = it->time;
  }
  return t_off;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

struct ComparisonReport {
  ExperimentResult proposed;
  ExperimentResult conventional;
  std::vector<double> ratio;  // proposed l1 / conventional l1, per step
  double median_final_half_ratio = 0.0;
};

inline void require_comparable(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto same = [](bool eq, const char* field) {
    if (!eq) throw ConfigError(field, "must match between the compared experiments");
  };
  same(a.dt == b.dt, "dt");
  same(a.horizon == b.horizon, "horizon");
  same(a.sim_steps == b.sim_steps, "sim_steps");
  same(a.x_init == b.x_init, "x_init");
  same(a.weight == b.weight, "weight");
}

/// Runs both experiments and forms the per-step residual ratio.
inline ComparisonReport compare_methods(const ExperimentConfig& first,
                                        const ExperimentConfig& second) {
  require_comparable(first, second);
  ComparisonReport report;
  report.proposed = run_experiment(first);
  report.conventional = run_experiment(second);
  const auto& a = report.proposed.trace.records;
  const auto& b = report.conventional.trace.records;
  const std::size_t steps = std::min(a.size(), b.size());
  std::vector<double> tail;
  for (std::size_t s = 0; s < steps; ++s) {
    const double r = a[s].residual_l1 / b[s].residual_l1;
    report.ratio.push_back(r);
    if (2 * s >= steps) tail.push_back(r);
  }
  report.median_final_half_ratio = median(tail);
  return report;
}

/// step,t,res_proposed_l1,res_conventional_l1,ratio
inline std::string comparison_csv(const ComparisonReport& report) {
  std::string out = "step,t,res_proposed_l1,res_conventional_l1,ratio\n";
  const auto& a = report.proposed.trace.records;
  const auto& b = report.conventional.trace.records;
  for (std::size_t s = 0; s < report.ratio.size(); ++s) {
    out += std::to_string(a[s].step) + "," + detail::fmt17(a[s].time) + "," +
           detail::fmt17(a[s].residual_l1) + "," + detail::fmt17(b[s].residual_l1) + "," +
           detail::fmt17(report.ratio[s]) + "\n";
  }
  return out;
}

}  // namespace nsmpc::bench

#endif  // NSMPC_BENCH_EXPERIMENT_HPP
