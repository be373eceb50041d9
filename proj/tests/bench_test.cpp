#include "nsmpc/bench/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "nsmpc/bench/example_plant.hpp"
#include "nsmpc/testing/oracles.hpp"

namespace nsmpc::bench {
namespace {

namespace fs = std::filesystem;

ExperimentConfig short_config(Method method = Method::Proposed) {
  ExperimentConfig cfg;
  cfg.method = method;
  cfg.horizon = 20;
  cfg.sim_steps = 60;
  return cfg;
}

TEST(ExamplePlant, DriftVanishesAtOrigin) {
  EXPECT_EQ(plant_drift(Vector::Zero(5)), Vector::Zero(5));
}

TEST(ExamplePlant, InequalityValues) {
  const ProblemSpec spec = example_plant();
  Vector want(4);
  want << 0.0, -2.0, -2.0, 0.0;
  EXPECT_EQ(spec.g(Eigen::Vector2d(1.0, -1.0)), want);
  EXPECT_EQ(spec.g(Eigen::Vector2d(0.0, 0.0)), Vector::Constant(4, -1.0));
}

TEST(ExamplePlant, CallbacksMatchFiniteDifferences) {
  const ProblemSpec spec = example_plant();
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    Vector x(5), u(2), p(5);
    for (int i = 0; i < 5; ++i) x[i] = 8.0 * unit(rng), p[i] = 5.0 * unit(rng);
    for (int i = 0; i < 2; ++i) u[i] = 1.5 * unit(rng);

    const Matrix fx = testing::central_jacobian([&](const Vector& v) { return spec.f(v, u); }, x);
    const Matrix fu = testing::central_jacobian([&](const Vector& v) { return spec.f(x, v); }, u);
    EXPECT_LT(testing::max_relative_entry_error(fx, spec.f_x(x, u)), 1e-6);
    EXPECT_LT(testing::max_relative_entry_error(fu, spec.f_u(x, u)), 1e-8);

    const Vector lx = testing::central_gradient(
        [&](const Vector& v) { return spec.stage_cost(v, u); }, x);
    const Vector lu = testing::central_gradient(
        [&](const Vector& v) { return spec.stage_cost(x, v); }, u);
    EXPECT_LT(testing::max_relative_entry_error(lx, spec.L_x(x, u)), 1e-7);
    EXPECT_LT(testing::max_relative_entry_error(lu, spec.L_u(x, u)), 1e-7);

    const Vector phix =
        testing::central_gradient([&](const Vector& v) { return spec.terminal_cost(v); }, x);
    EXPECT_LT(testing::max_relative_entry_error(phix, spec.terminal_grad(x)), 1e-7);

    // Hessian of p'f with respect to x against differences of f_x' p.
    const Matrix hxx = testing::central_jacobian(
        [&](const Vector& v) -> Vector { return spec.hamiltonian_grad_x(v, u, p); }, x);
    const HamiltonianHessians h = spec.hamiltonian_hessians(x, u, Vector::Zero(4), Vector(0), p);
    EXPECT_LT(testing::max_relative_entry_error(hxx, h.xx), 1e-5);
  }
}

TEST(Config, DefaultsRoundTrip) {
  const ExperimentConfig cfg;
  const ExperimentConfig back = parse_config(to_json(cfg).dump());
  EXPECT_EQ(to_json(back), to_json(cfg));
  EXPECT_NO_THROW(back.validate());
}

TEST(Config, ShippedBenchmarkFileMatchesDefaults) {
  const ExperimentConfig cfg = load_config(std::string(NSMPC_CONFIG_DIR) + "/benchmark.json");
  EXPECT_EQ(to_json(cfg), to_json(ExperimentConfig{}));
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_THROW(parse_config(R"({"horizn": 10})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"solver": {"restart": 10}})"), ConfigError);
}

TEST(Config, WrongTypesAreRejected) {
  try {
    parse_config(R"({"horizon": "long"})");
    FAIL() << "expected config error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "horizon");
  }
  EXPECT_THROW(parse_config(R"({"solver": 3})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"method": "fancy"})"), ConfigError);
  EXPECT_THROW(parse_config("not json"), ConfigError);
}

TEST(Config, ValidationRejectsBadValues) {
  EXPECT_THROW(parse_config(R"({"sim_steps": 0})").validate(), ConfigError);
  EXPECT_THROW(parse_config(R"({"weight": -1.0})").validate(), ConfigError);
  EXPECT_THROW(parse_config(R"({"x_init": [1, 2]})").validate(), ConfigError);
  EXPECT_THROW(parse_config(R"({"method": "conventional", "epsilon": 0})").validate(),
               ConfigError);
}

TEST(TraceCsv, HeaderAndSeventeenDigits) {
  ExperimentConfig cfg = short_config();
  cfg.sim_steps = 3;
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.exit_code, kSuccess);
  std::istringstream in(trace_csv(r.trace));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,t,x1,x2,x3,x4,x5,u1,u2,residual_inf,residual_l1,solver_iters,wall_us");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("0,0,6,-8,3,-2,5,", 0), 0u) << line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("1,0.050000000000000003,", 0), 0u) << line;
  EXPECT_EQ(detail::fmt17(0.1), "0.10000000000000001");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 1);
}

TEST(TraceCsv, ReproducibleAcrossRuns) {
  const ExperimentConfig cfg = short_config();
  EXPECT_EQ(trace_csv(run_experiment(cfg).trace), trace_csv(run_experiment(cfg).trace));
}

TEST(Experiment, InputsRespectBounds) {
  for (Method m : {Method::Proposed, Method::Conventional}) {
    const ExperimentResult r = run_experiment(short_config(m));
    ASSERT_EQ(r.exit_code, kSuccess) << r.message;
    for (const auto& rec : r.trace.records) {
      EXPECT_LE(rec.input.cwiseAbs().maxCoeff(), 1.0 + 1e-6);
    }
  }
}

TEST(Experiment, ConventionalNeverSwitchesOffEarly) {
  ExperimentConfig cfg;
  cfg.method = Method::Conventional;
  cfg.sim_steps = 200;
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.exit_code, kSuccess) << r.message;
  for (const auto& rec : r.trace.records) {
    EXPECT_GT(rec.input.cwiseAbs().minCoeff(), 1e-6) << "t = " << rec.time;
  }
}

struct LateInputs {
  double peak = 0.0;
  double mean = 0.0;
};

LateInputs conventional_late_inputs(double eps) {
  ExperimentConfig cfg;
  cfg.method = Method::Conventional;
  cfg.epsilon = eps;
  const ExperimentResult r = run_experiment(cfg);
  EXPECT_EQ(r.exit_code, kSuccess) << r.message;
  LateInputs out;
  int count = 0;
  for (const auto& rec : r.trace.records) {
    if (rec.time < 10.0) continue;
    out.peak = std::max(out.peak, rec.input.cwiseAbs().maxCoeff());
    out.mean += rec.input.cwiseAbs().mean();
    ++count;
  }
  out.mean /= count;
  return out;
}

class Smoothing : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    coarse_ = conventional_late_inputs(1e-1);
    fine_ = conventional_late_inputs(1e-2);
  }
  static LateInputs coarse_, fine_;
};

LateInputs Smoothing::coarse_, Smoothing::fine_;

TEST_F(Smoothing, SmallerEpsilonGivesSmallerLatePeak) {
  EXPECT_LT(fine_.peak, coarse_.peak);
}

TEST_F(Smoothing, SmallerEpsilonGivesSmallerLateMean) {
  EXPECT_LT(fine_.mean, coarse_.mean);
}

TEST(Experiment, InitializationFailureIsReported) {
  ExperimentConfig cfg = short_config();
  cfg.init_max_iter = 1;
  const ExperimentResult r = run_experiment(cfg);
  EXPECT_EQ(r.exit_code, kInitFailure);
  EXPECT_TRUE(r.trace.records.empty());
  EXPECT_GT(r.init_residual, cfg.init_tol);
}

TEST(SwitchOffTime, EarliestPermanentOff) {
  SimTrace trace;
  const double inputs[] = {1.0, 0.0, 0.5, 1e-4, 0.0};
  for (int s = 0; s < 5; ++s) {
    SimRecord r;
    r.time = 0.1 * s;
    r.input = Vector::Constant(1, inputs[s]);
    trace.records.push_back(r);
  }
  ASSERT_TRUE(switch_off_time(trace, 0).has_value());
  EXPECT_DOUBLE_EQ(*switch_off_time(trace, 0), 0.30000000000000004);
  trace.records.back().input[0] = 2.0;
  EXPECT_FALSE(switch_off_time(trace, 0).has_value());
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(Compare, SameMethodGivesUnitRatio) {
  const ComparisonReport r = compare_methods(short_config(), short_config());
  for (double ratio : r.ratio) EXPECT_EQ(ratio, 1.0);
  EXPECT_EQ(r.median_final_half_ratio, 1.0);
  EXPECT_EQ(comparison_csv(r).substr(0, 48), "step,t,res_proposed_l1,res_conventional_l1,ratio");
}

TEST(Compare, RequiresMatchingPlants) {
  ExperimentConfig other = short_config();
  other.horizon = 21;
  EXPECT_THROW(compare_methods(short_config(), other), ConfigError);
}

// Command-line front end.

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NSMPC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nsmpc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_config(const std::string& text) {
    const fs::path p = dir_ / "config.json";
    std::ofstream(p) << text;
    return p.string();
  }

  fs::path dir_;
};

TEST_F(CliTest, RunWritesTrace) {
  const std::string cfg = write_config(R"({"horizon": 10, "sim_steps": 5})");
  EXPECT_EQ(run_cli("run --config " + cfg + " --out " + (dir_ / "out").string()), 0);
  std::ifstream in(dir_ / "out" / "trace.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.substr(0, 7), "step,t,");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 5);
}

TEST_F(CliTest, CompareWritesThreeFiles) {
  const std::string cfg = write_config(R"({"horizon": 10, "sim_steps": 5})");
  EXPECT_EQ(run_cli("compare --config " + cfg + " --out " + dir_.string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "trace_proposed.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "trace_conventional.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "comparison.csv"));
}

TEST_F(CliTest, ConfigErrorsExitWithOne) {
  EXPECT_EQ(run_cli("run --config " + write_config(R"({"bogus": 1})")), 1);
  EXPECT_EQ(run_cli("run --config " + (dir_ / "missing.json").string()), 1);
  EXPECT_EQ(run_cli("run --config " + write_config("{}") + " --method fancy"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
}

TEST_F(CliTest, InitializationFailureExitsWithTwo) {
  const std::string cfg = write_config(R"({"horizon": 20, "sim_steps": 5, "init_max_iter": 1})");
  EXPECT_EQ(run_cli("run --config " + cfg + " --out " + dir_.string()), 2);
}

TEST_F(CliTest, SolverFailureExitsWithThree) {
  // A loose init_tol accepts z = 0; GMRES capped at one iteration then cannot
  // solve the continuation systems.
  const std::string cfg = write_config(
      R"({"horizon": 20, "sim_steps": 5, "init_tol": 1000.0,
          "solver": {"method": "gmres", "gmres_restart": 1, "gmres_max_iter": 1}})");
  EXPECT_EQ(run_cli("run --config " + cfg + " --out " + dir_.string()), 3);
}

}  // namespace
}  // namespace nsmpc::bench
