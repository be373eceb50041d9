// Command-line front end for the sparse-control benchmark.
//
//   nsmpc run --config <path> [--method proposed|conventional] [--out <dir>]
//   nsmpc compare --config <path> --out <dir>
//   nsmpc check

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nsmpc/bench/checks.hpp"
#include "nsmpc/bench/experiment.hpp"

namespace fs = std::filesystem;
using namespace nsmpc;
using namespace nsmpc::bench;

namespace {

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out", "cannot write '" + path.string() + "'");
  out << contents;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("out", "cannot create '" + dir + "': " + ec.message());
  return p;
}

void print_summary(const ExperimentConfig& cfg, const ExperimentResult& r) {
  std::printf("method: %s\n", to_string(cfg.method));
  std::printf("initial residual (inf): %.3e\n", r.init_residual);
  if (r.trace.records.empty()) return;
  std::printf("steps: %zu, failed steps: %zu\n", r.trace.records.size(), r.trace.failures());
  std::printf("final state |x|_inf: %.6f\n", r.final_state.cwiseAbs().maxCoeff());
  std::printf("input off threshold: |u_i| <= 1e-3\n");
  for (int i = 0; i < static_cast<int>(r.trace.records.front().input.size()); ++i) {
    const auto t = switch_off_time(r.trace, i);
    if (t) {
      std::printf("u%d off from t = %.2f s\n", i + 1, *t);
    } else {
      std::printf("u%d still on at the end of the run\n", i + 1);
    }
  }
  std::printf("final residual (l1): %.3e\n", r.trace.records.back().residual_l1);
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& method,
            const std::optional<std::string>& out) {
  ExperimentConfig cfg = load_config(config_path);
  if (method) cfg.method = parse_method(*method);
  if (out) cfg.out_dir = *out;
  cfg.validate();
  const fs::path dir = prepare_dir(cfg.out_dir);

  const ExperimentResult r = run_experiment(cfg);
  if (r.exit_code == kInitFailure) {
    std::cerr << "initialization failed: " << r.message << "\n";
    return kInitFailure;
  }
  write_file(dir / "trace.csv", trace_csv(r.trace));
  print_summary(cfg, r);
  if (r.exit_code != kSuccess) std::cerr << r.message << "\n";
  return r.exit_code;
}

int cmd_compare(const std::string& config_path, const std::string& out) {
  ExperimentConfig proposed = load_config(config_path);
  proposed.out_dir = out;
  proposed.method = Method::Proposed;
  ExperimentConfig conventional = proposed;
  conventional.method = Method::Conventional;
  proposed.validate();
  conventional.validate();
  const fs::path dir = prepare_dir(out);

  const ComparisonReport report = compare_methods(proposed, conventional);
  for (const auto* r : {&report.proposed, &report.conventional}) {
    if (r->exit_code == kInitFailure) {
      std::cerr << "initialization failed: " << r->message << "\n";
      return kInitFailure;
    }
  }
  write_file(dir / "trace_proposed.csv", trace_csv(report.proposed.trace));
  write_file(dir / "trace_conventional.csv", trace_csv(report.conventional.trace));
  write_file(dir / "comparison.csv", comparison_csv(report));
  print_summary(proposed, report.proposed);
  print_summary(conventional, report.conventional);
  std::printf("median residual ratio (proposed / conventional) over final half: %.3e\n",
              report.median_final_half_ratio);
  if (report.proposed.exit_code != kSuccess) return report.proposed.exit_code;
  return report.conventional.exit_code;
}

int cmd_check() {
  bool all = true;
  for (const auto& r : run_all_checks()) {
    std::cout << format_check(r) << std::endl;
    all = all && r.passed;
  }
  return all ? kSuccess : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuation-based nonsmooth MPC benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> method, out;
  auto* run = app.add_subcommand("run", "run one closed-loop experiment");
  run->add_option("--config", config_path, "experiment configuration (JSON)")->required();
  run->add_option("--method", method, "proposed | conventional");
  run->add_option("--out", out, "output directory");

  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "run both methods and compare residuals");
  compare->add_option("--config", config_path, "experiment configuration (JSON)")->required();
  compare->add_option("--out", compare_out, "output directory")->required();

  app.add_subcommand("check", "run the acceptance and property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    if (app.got_subcommand("run")) return cmd_run(config_path, method, out);
    if (app.got_subcommand("compare")) return cmd_compare(config_path, compare_out);
    return cmd_check();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolverFailure;
  }
}
