#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cli/config.hpp"
#include "cli/experiments.hpp"
#include "kno/version.hpp"

namespace {

// Exit codes: 0 success, 1 configuration or usage error, 2 an experiment ran
// but violated one of its invariants (or aborted mid-run).
constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;

void print_issues(const kno::cli::ValidationResult& result, std::ostream& out) {
  for (const std::string& warning : result.warnings) {
    out << "warning: " << warning << "\n";
  }
  for (const std::string& error : result.errors) {
    out << "error: " << error << "\n";
  }
}

int run_command(const std::string& config_path,
                const kno::cli::ConfigOverrides& overrides) {
  kno::cli::ValidationResult result;
  const nlohmann::json doc = kno::cli::load_config_file(config_path, result);
  kno::cli::ResolvedConfig config;
  if (result.ok()) {
    config = kno::cli::resolve_config(doc, overrides, result);
  }
  print_issues(result, std::cerr);
  if (!result.ok()) return kExitConfigError;

  try {
    const kno::cli::RunOutcome outcome = kno::cli::run_experiment(config);
    std::cout << outcome.status << " " << outcome.manifest_path << "\n";
    if (outcome.exit_code != 0) {
      std::cerr << "error: run finished with status \"" << outcome.status
                << "\"; see " << outcome.manifest_path << "\n";
    }
    return outcome.exit_code;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitConfigError;  // could not even start (e.g. output dir)
  }
}

int validate_command(const std::string& config_path) {
  kno::cli::ValidationResult result;
  const nlohmann::json doc = kno::cli::load_config_file(config_path, result);
  if (result.ok()) {
    kno::cli::resolve_config(doc, kno::cli::ConfigOverrides{}, result);
  }
  if (result.ok()) {
    std::cout << "ok\n";
    for (const std::string& warning : result.warnings) {
      std::cout << "warning: " << warning << "\n";
    }
    return kExitOk;
  }
  print_issues(result, std::cerr);
  return kExitConfigError;
}

int list_command() {
  for (const kno::cli::ExperimentSpec& spec : kno::cli::experiment_registry()) {
    std::cout << spec.name << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kicked nonlinear oscillator: simulations and observables"};
  app.set_version_flag("--version", kno::kVersion);
  app.require_subcommand(1);

  std::string run_config;
  std::string output_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("--config", run_config, "JSON experiment config")
      ->required();
  CLI::Option* dir_option =
      run->add_option("--output-dir", output_dir,
                      "directory for CSVs and manifest.json (default: from "
                      "the config, falling back to the working directory)");
  CLI::Option* seed_option =
      run->add_option("--seed", seed, "override the config seed");
  CLI::Option* threads_option = run->add_option(
      "--threads", threads, "worker threads; 0 = hardware concurrency");

  std::string validate_config;
  CLI::App* validate =
      app.add_subcommand("validate", "check a config without running it");
  validate->add_option("--config", validate_config, "JSON experiment config")
      ->required();

  CLI::App* list = app.add_subcommand("list", "print the experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (list->parsed()) return list_command();
  if (validate->parsed()) return validate_command(validate_config);
  if (run->parsed()) {
    kno::cli::ConfigOverrides overrides;
    if (dir_option->count() > 0) overrides.output_dir = &output_dir;
    if (seed_option->count() > 0) overrides.seed = &seed;
    if (threads_option->count() > 0) overrides.threads = &threads;
    return run_command(run_config, overrides);
  }
  return kExitConfigError;
}
