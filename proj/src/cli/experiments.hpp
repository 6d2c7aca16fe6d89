#pragma once

#include <string>
#include <vector>

#include "cli/config.hpp"
#include "json.hpp"

namespace kno::cli {

// Collects everything a run produces: CSV files on disk, the list of their
// names, and the manifest's invariant section. An experiment reports every
// internal consistency check here — the section is never empty.
class RunContext {
 public:
  RunContext(const ResolvedConfig& config, std::string dir);

  const ResolvedConfig& config() const { return config_; }

  // Writes <output_dir>/<name> and records it in the manifest.
  void emit_csv(const std::string& name, const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows);

  void invariant(const std::string& name, bool pass, const std::string& detail);

  const std::vector<std::string>& outputs() const { return outputs_; }
  const nlohmann::json& invariants() const { return invariants_; }
  bool all_pass() const { return all_pass_; }

 private:
  ResolvedConfig config_;
  std::string dir_;
  std::vector<std::string> outputs_;
  nlohmann::json invariants_ = nlohmann::json::array();
  bool all_pass_ = true;
};

using ExperimentRunner = void (*)(RunContext&);
using ExtraValidator = void (*)(const ResolvedConfig&,
                                std::vector<std::string>& errors,
                                std::vector<std::string>& warnings);

struct ExperimentSpec {
  std::string name;
  std::string summary;
  std::vector<ParamSpec> params;
  ExtraValidator extra_validate = nullptr;
  ExperimentRunner run = nullptr;
};

// All registered experiments, fixed order (listing and docs follow it).
const std::vector<ExperimentSpec>& experiment_registry();

// Registry entry by name; nullptr when unknown.
const ExperimentSpec* find_experiment(const std::string& name);

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 2 invariant violation or runtime failure
  std::string status;
  std::string manifest_path;
  nlohmann::json manifest;
};

// Executes the resolved config: creates the output directory, runs the
// experiment, and writes manifest.json recording the full config echo,
// artifact version, seed, wall time, outputs, and per-invariant pass/fail.
// A thrown exception mid-run is caught, flagged in the manifest next to
// whatever partial outputs exist, and mapped to exit code 2.
RunOutcome run_experiment(const ResolvedConfig& config);

}  // namespace kno::cli
