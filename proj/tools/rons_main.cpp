// Command-line front end: `run` executes experiment configuration files and
// writes CSV time series plus a JSON run summary; `verify` executes the
// self-check suites and prints a pass/fail table. Failures emit one
// machine-readable JSON line; configuration problems exit with 2, runtime
// failures with 1.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rons/config.hpp"
#include "rons/experiments.hpp"
#include "rons/report.hpp"
#include "rons/verify.hpp"

namespace {

std::mutex print_mutex;

void print_json_line(const nlohmann::ordered_json& j) {
  std::lock_guard<std::mutex> lock(print_mutex);
  std::printf("%s\n", j.dump().c_str());
  std::fflush(stdout);
}

void print_error(const std::string& config_path, const std::string& kind,
                 const std::string& message) {
  nlohmann::ordered_json j;
  if (!config_path.empty()) j["config"] = config_path;
  j["status"] = "error";
  j["kind"] = kind;
  j["error"] = message;
  print_json_line(j);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
}

/// Run one configuration file and write `<stem>_errors.csv` and
/// `<stem>_summary.json` into the output directory.
int run_one(const std::string& path, const std::vector<std::string>& overrides,
            const std::string& seed_override, const std::string& out_dir) {
  rons::RunManifest manifest;
  manifest.started_at = rons::iso8601_utc_now();

  rons::RunConfig config;
  try {
    config = rons::parse_config_file(path);
    for (const std::string& assignment : overrides) rons::apply_override(config, assignment);
    if (!seed_override.empty()) rons::apply_override(config, "seed=" + seed_override);
    config.experiment.validate();
  } catch (const std::exception& e) {
    print_error(path, "validation", e.what());
    return 2;
  }
  manifest.config = config;

  try {
    std::filesystem::create_directories(out_dir);
    const std::string stem = std::filesystem::path(path).stem().string();
    const std::string csv_path =
        (std::filesystem::path(out_dir) / (stem + "_errors.csv")).string();
    const std::string json_path =
        (std::filesystem::path(out_dir) / (stem + "_summary.json")).string();
    manifest.outputs = {csv_path, json_path};

    std::string csv;
    std::string summary;
    double wall_seconds = 0.0;
    if (config.task == rons::RunTask::frobenius_study) {
      const rons::FrobeniusMcStudy study = rons::frobenius_mc_study(config.experiment);
      manifest.build_id = study.build_id;
      manifest.finished_at = rons::iso8601_utc_now();
      csv = rons::frobenius_study_csv(study);
      summary = rons::summary_json(study, manifest);
      wall_seconds = study.wall_seconds;
    } else {
      const rons::ErrorReport report =
          config.experiment.problem == rons::Problem::fokker_planck
              ? rons::run_fokker_planck(config.experiment)
              : rons::run_kuramoto_sivashinsky(config.experiment);
      manifest.build_id = report.build_id;
      manifest.finished_at = rons::iso8601_utc_now();
      csv = rons::error_report_csv(report);
      summary = rons::summary_json(report, manifest);
      wall_seconds = report.wall_seconds;
    }
    write_file(csv_path, csv);
    write_file(json_path, summary);

    nlohmann::ordered_json status;
    status["config"] = path;
    status["status"] = "ok";
    status["wall_seconds"] = wall_seconds;
    status["outputs"] = manifest.outputs;
    print_json_line(status);
    return 0;
  } catch (const std::invalid_argument& e) {
    print_error(path, "validation", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(path, "runtime", e.what());
    return 1;
  }
}

int run_command(const std::vector<std::string>& paths, const std::vector<std::string>& overrides,
                const std::string& seed_override, const std::string& out_dir, int jobs) {
  std::vector<int> codes(paths.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = 0; (i = next.fetch_add(1)) < paths.size();)
      codes[i] = run_one(paths[i], overrides, seed_override, out_dir);
  };
  const int pool_size = std::min<int>(jobs, static_cast<int>(paths.size()));
  if (pool_size <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < pool_size; ++k) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  int exit_code = 0;
  for (int code : codes) {
    if (code == 2) return 2;
    if (code != 0) exit_code = code;
  }
  return exit_code;
}

int verify_command(const std::string& suite) {
  std::vector<rons::VerifyCheck> checks;
  try {
    checks = rons::verify_suite(suite);
  } catch (const std::invalid_argument& e) {
    print_error("", "validation", e.what());
    return 2;
  }
  std::size_t width = 0;
  for (const auto& check : checks) width = std::max(width, check.name.size());
  int failures = 0;
  for (const auto& check : checks) {
    failures += check.passed ? 0 : 1;
    std::printf("%-*s  %s  %s\n", static_cast<int>(width), check.name.c_str(),
                check.passed ? "PASS" : "FAIL", check.detail.c_str());
  }
  std::printf("%zu/%zu checks passed\n", checks.size() - failures, checks.size());
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order nonlinear solution benchmarks"};
  app.require_subcommand(1);

  std::vector<std::string> config_paths;
  std::vector<std::string> overrides;
  std::string seed_override;
  std::string out_flag;
  int jobs = 1;

  CLI::App* run = app.add_subcommand("run", "Run experiment configuration files");
  run->add_option("configs", config_paths, "TOML configuration files")->required();
  run->add_option("--set", overrides, "Override a config key (dotted path), e.g. alpha=1e-3");
  run->add_option("--seed", seed_override, "Override the random seed");
  run->add_option("--out", out_flag,
                  "Output directory (default: $RONS_OUT_DIR or the working directory)");
  run->add_option("--jobs", jobs, "Run independent configs in parallel")
      ->check(CLI::PositiveNumber);

  std::string suite;
  CLI::App* verify = app.add_subcommand("verify", "Run a self-check suite");
  verify->add_option("suite", suite, "kernels, theorems, integrators, or all")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("", "cli", e.what());
    return 2;
  }

  if (run->parsed()) {
    std::string out_dir = out_flag;
    if (out_dir.empty()) {
      const char* env = std::getenv("RONS_OUT_DIR");
      out_dir = (env != nullptr && *env != '\0') ? env : ".";
    }
    return run_command(config_paths, overrides, seed_override, out_dir, jobs);
  }
  return verify_command(suite);
}
