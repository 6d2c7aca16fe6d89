#include "cli/experiments.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "doctest.h"
#include "json.hpp"
#include "kno/version.hpp"

using kno::cli::ConfigOverrides;
using kno::cli::CsvTable;
using kno::cli::ResolvedConfig;
using kno::cli::RunOutcome;
using kno::cli::ValidationResult;

namespace {

nlohmann::json base_doc(const std::string& experiment) {
  return nlohmann::json{{"experiment", experiment},
                        {"seed", 42},
                        {"parameters", nlohmann::json::object()}};
}

ResolvedConfig resolve(const nlohmann::json& doc, ValidationResult& result) {
  return kno::cli::resolve_config(doc, ConfigOverrides{}, result);
}

bool mentions(const std::vector<std::string>& messages,
              const std::string& needle) {
  for (const std::string& m : messages) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::filesystem::path fresh_dir(const std::string& leaf) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("kno_cli_test_" + leaf);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in),
          std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("registry lists the ten experiments in fixed order") {
  const auto& registry = kno::cli::experiment_registry();
  const std::vector<std::string> expected = {
      "fig1_well",       "fig2_harmonics",      "fig3_m2_growth",
      "fig4_distributions", "fig5_entropies",   "fig6_weakloc",
      "classical_diffusion", "reversal",        "echo_regimes",
      "transport_sweep"};
  REQUIRE(registry.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(registry[i].name == expected[i]);
    CHECK_FALSE(registry[i].summary.empty());
    CHECK_FALSE(registry[i].params.empty());
    CHECK(registry[i].run != nullptr);
    CHECK(kno::cli::find_experiment(expected[i]) == &registry[i]);
  }
  CHECK(kno::cli::find_experiment("no_such_thing") == nullptr);
}

TEST_CASE("every experiment's defaults resolve without errors") {
  for (const auto& spec : kno::cli::experiment_registry()) {
    ValidationResult result;
    const nlohmann::json doc{{"experiment", spec.name}};
    const ResolvedConfig config = resolve(doc, result);
    INFO(spec.name);
    CHECK(result.ok());
    CHECK(result.warnings.empty());
    CHECK(config.experiment == spec.name);
    for (const auto& param : spec.params) {
      // Every declared parameter must be reachable through an accessor.
      if (param.kind == kno::cli::ParamKind::number) {
        CHECK(config.number(param.name) == param.number_default);
      } else if (param.kind == kno::cli::ParamKind::number_list) {
        CHECK_FALSE(config.list(param.name).empty());
      }
    }
  }
}

TEST_CASE("validation rejects malformed configs with precise messages") {
  ValidationResult result;

  SUBCASE("unknown experiment lists the valid names") {
    resolve(base_doc("fig7_imaginary"), result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "unknown experiment"));
    CHECK(mentions(result.errors, "fig1_well"));
    CHECK(mentions(result.errors, "transport_sweep"));
  }
  SUBCASE("negative noise width") {
    nlohmann::json doc = base_doc("fig2_harmonics");
    doc["parameters"]["sigma"] = -1.0;
    resolve(doc, result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "\"sigma\" must be non-negative"));
  }
  SUBCASE("unknown parameter key") {
    nlohmann::json doc = base_doc("fig1_well");
    doc["parameters"]["nn"] = 3;
    resolve(doc, result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "unknown key \"nn\""));
  }
  SUBCASE("unknown top-level key") {
    nlohmann::json doc = base_doc("fig1_well");
    doc["see"] = 1;
    resolve(doc, result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "unknown top-level key \"see\""));
  }
  SUBCASE("negative seed") {
    nlohmann::json doc = base_doc("fig1_well");
    doc["seed"] = -3;
    resolve(doc, result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "seed must be a non-negative integer"));
  }
  SUBCASE("non-integer level") {
    nlohmann::json doc = base_doc("fig1_well");
    doc["parameters"]["n"] = 2.5;
    resolve(doc, result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "\"n\" must be an integer"));
  }
  SUBCASE("range violation names the range") {
    nlohmann::json doc = base_doc("fig4_distributions");
    doc["parameters"]["n_max"] = 4;
    resolve(doc, result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "out of range"));
  }
  SUBCASE("malformed list entry") {
    nlohmann::json doc = base_doc("fig4_distributions");
    doc["parameters"]["sigmas"] = "0.1,,0.2";
    resolve(doc, result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "not a number"));
  }
  SUBCASE("aliasing guard on harmonic bins") {
    nlohmann::json doc = base_doc("fig2_harmonics");
    doc["parameters"]["m_max"] = 64;
    doc["parameters"]["n_theta_bins"] = 128;
    resolve(doc, result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "n_theta_bins"));
  }
  SUBCASE("fit window ordering") {
    nlohmann::json doc = base_doc("classical_diffusion");
    doc["parameters"]["fit_t_min"] = 30;
    doc["parameters"]["fit_t_max"] = 20;
    resolve(doc, result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "fit_t_min"));
  }
  SUBCASE("mixing window wider than the level index") {
    nlohmann::json doc = base_doc("fig1_well");
    doc["parameters"]["n"] = 2;
    doc["parameters"]["dn"] = 5;
    resolve(doc, result);
    REQUIRE_FALSE(result.ok());
    CHECK(mentions(result.errors, "dn"));
  }
}

TEST_CASE("validation emits warnings without blocking") {
  ValidationResult result;

  SUBCASE("non-power-of-two basis") {
    nlohmann::json doc = base_doc("fig4_distributions");
    doc["parameters"]["n_max"] = 1000;
    resolve(doc, result);
    CHECK(result.ok());
    CHECK(mentions(result.warnings, "power of two is recommended"));
  }
  SUBCASE("basis too thin for the requested spread") {
    nlohmann::json doc = base_doc("fig5_entropies");
    doc["parameters"]["t_max"] = 200;
    resolve(doc, result);
    CHECK(result.ok());
    CHECK(mentions(result.warnings, "n_max below the estimated requirement"));
  }
}

TEST_CASE("command-line overrides replace the config fields") {
  nlohmann::json doc = base_doc("fig1_well");
  doc["output_dir"] = "from_config";
  const std::uint64_t seed = 99;
  const std::string dir = "from_flag";
  const int threads = 3;
  ConfigOverrides overrides;
  overrides.seed = &seed;
  overrides.output_dir = &dir;
  overrides.threads = &threads;
  ValidationResult result;
  const ResolvedConfig config =
      kno::cli::resolve_config(doc, overrides, result);
  REQUIRE(result.ok());
  CHECK(config.seed == 99);
  CHECK(config.output_dir == "from_flag");
  CHECK(config.threads == 3);
  CHECK(config.effective_threads() == 3);
}

TEST_CASE("number lists parse strictly") {
  std::vector<double> values;
  std::string error;
  CHECK(kno::cli::parse_number_list("1,2.5, -3e-2", values, error));
  REQUIRE(values.size() == 3);
  CHECK(values[2] == -3e-2);
  CHECK_FALSE(kno::cli::parse_number_list("", values, error));
  CHECK_FALSE(kno::cli::parse_number_list("1,two", values, error));
  CHECK_FALSE(kno::cli::parse_number_list("1,,2", values, error));
}

TEST_CASE("CSV files rehydrate to identical doubles") {
  const auto dir = fresh_dir("csv");
  const std::string path = (dir / "cells.csv").string();
  const std::vector<std::vector<double>> rows = {
      {1.0 / 3.0, -0.0, 6.02214076e23},
      {1e-308, 3.141592653589793, -2.2250738585072014e-305},
      {0.1 + 0.2, 1234567890123456.0, 5e-324}};
  kno::cli::write_csv(path, {"a [1]", "b [1]", "c [1]"}, rows);
  const CsvTable table = kno::cli::read_csv(path);
  REQUIRE(table.header.size() == 3);
  REQUIRE(table.rows.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      CHECK(table.rows[i][j] == rows[i][j]);
    }
  }
  // Decimal separator is '.' regardless of locale conventions.
  const std::string bytes = file_bytes(path);
  CHECK(bytes.find(',') != std::string::npos);
  CHECK(bytes.find("0.333333") != std::string::npos);
}

TEST_CASE("a run produces CSVs, a manifest, and non-empty invariants") {
  const auto dir = fresh_dir("fig1");
  nlohmann::json doc = base_doc("fig1_well");
  doc["output_dir"] = dir.string();
  ValidationResult result;
  const ResolvedConfig config = resolve(doc, result);
  REQUIRE(result.ok());

  const RunOutcome outcome = kno::cli::run_experiment(config);
  CHECK(outcome.exit_code == 0);
  CHECK(outcome.status == "ok");

  const nlohmann::json& manifest = outcome.manifest;
  CHECK(manifest["artifact_version"] == kno::kVersion);
  CHECK(manifest["library_version"] == kno::kVersion);
  CHECK(manifest["experiment"] == "fig1_well");
  CHECK(manifest["seed"] == 42);
  CHECK(manifest["wall_time_seconds"].get<double>() >= 0.0);
  CHECK(manifest["config"]["parameters"].contains("n"));
  REQUIRE(manifest["invariants"].is_array());
  REQUIRE_FALSE(manifest["invariants"].empty());
  for (const auto& inv : manifest["invariants"]) {
    CHECK(inv["pass"].get<bool>());
    CHECK_FALSE(inv["name"].get<std::string>().empty());
  }

  // Every emitted CSV must exist and parse with its own reader.
  REQUIRE_FALSE(manifest["outputs"].empty());
  for (const auto& name : manifest["outputs"]) {
    const auto path = dir / name.get<std::string>();
    REQUIRE(std::filesystem::exists(path));
    const CsvTable table = kno::cli::read_csv(path.string());
    CHECK(table.header.size() >= 2);
    CHECK_FALSE(table.rows.empty());
  }

  // The manifest on disk matches the returned document.
  const nlohmann::json reread =
      nlohmann::json::parse(file_bytes(outcome.manifest_path));
  CHECK(reread == manifest);
}

TEST_CASE("identical config and seed reproduce output bytes exactly") {
  nlohmann::json doc = base_doc("fig2_harmonics");
  doc["parameters"]["n_points"] = 20000;
  doc["parameters"]["sigma"] = 0.2;
  doc["parameters"]["times"] = "0,2,4";

  std::vector<std::string> bytes;
  for (const std::string leaf : {"det_a", "det_b"}) {
    const auto dir = fresh_dir(leaf);
    doc["output_dir"] = dir.string();
    ValidationResult result;
    const ResolvedConfig config = resolve(doc, result);
    REQUIRE(result.ok());
    const RunOutcome outcome = kno::cli::run_experiment(config);
    REQUIRE(outcome.exit_code == 0);
    std::string all;
    for (const auto& name : outcome.manifest["outputs"]) {
      all += file_bytes(dir / name.get<std::string>());
    }
    bytes.push_back(all);
  }
  CHECK(bytes[0] == bytes[1]);

  // A different seed must change at least one byte of the noisy run.
  const auto dir = fresh_dir("det_c");
  doc["output_dir"] = dir.string();
  doc["seed"] = 43;
  ValidationResult result;
  const ResolvedConfig config = resolve(doc, result);
  REQUIRE(result.ok());
  const RunOutcome outcome = kno::cli::run_experiment(config);
  REQUIRE(outcome.exit_code == 0);
  std::string all;
  for (const auto& name : outcome.manifest["outputs"]) {
    all += file_bytes(dir / name.get<std::string>());
  }
  CHECK(all != bytes[0]);
}

TEST_CASE("thread count never changes the numbers") {
  nlohmann::json doc = base_doc("classical_diffusion");
  doc["parameters"]["n_points"] = 30000;
  doc["parameters"]["t_max"] = 12;
  doc["parameters"]["fit_t_min"] = 2;
  doc["parameters"]["fit_t_max"] = 12;

  std::vector<std::string> bytes;
  int leaf = 0;
  for (int threads : {1, 5}) {
    const auto dir = fresh_dir("thr_" + std::to_string(leaf++));
    doc["output_dir"] = dir.string();
    doc["threads"] = threads;
    ValidationResult result;
    const ResolvedConfig config = resolve(doc, result);
    REQUIRE(result.ok());
    const RunOutcome outcome = kno::cli::run_experiment(config);
    REQUIRE(outcome.exit_code == 0);
    bytes.push_back(file_bytes(dir / "mean_action.csv"));
  }
  CHECK(bytes[0] == bytes[1]);
}

TEST_CASE("a violated invariant flags the run and exits nonzero") {
  // Coarse level spacing: the closed-form averages are only reached to
  // O(d), so this configuration honestly misses the 0.5% reconciliation.
  const auto dir = fresh_dir("violation");
  nlohmann::json doc = base_doc("transport_sweep");
  doc["output_dir"] = dir.string();
  doc["parameters"]["d"] = 0.2;
  doc["parameters"]["e_points"] = 11;
  doc["parameters"]["quad_points"] = 20000;
  doc["parameters"]["kappa_points"] = 2;
  ValidationResult result;
  const ResolvedConfig config = resolve(doc, result);
  REQUIRE(result.ok());
  CHECK(mentions(result.warnings, "averaging invariants may fail"));

  const RunOutcome outcome = kno::cli::run_experiment(config);
  CHECK(outcome.exit_code == 2);
  CHECK(outcome.status == "invariant_violation");
  bool saw_failure = false;
  for (const auto& inv : outcome.manifest["invariants"]) {
    if (!inv["pass"].get<bool>()) saw_failure = true;
  }
  CHECK(saw_failure);
  // Partial outputs are still on disk for inspection.
  CHECK(std::filesystem::exists(dir / "fine_vs_averaged.csv"));
}

TEST_CASE("a mid-run failure is caught and flagged as partial") {
  // delta far above what a 16-level basis can renormalize: the initial
  // state constructor throws, and the manifest must say so.
  const auto dir = fresh_dir("partial");
  nlohmann::json doc = base_doc("fig4_distributions");
  doc["output_dir"] = dir.string();
  doc["parameters"]["delta"] = 100.0;
  doc["parameters"]["n_max"] = 16;
  doc["parameters"]["t"] = 1;
  ValidationResult result;
  const ResolvedConfig config = resolve(doc, result);
  REQUIRE(result.ok());

  const RunOutcome outcome = kno::cli::run_experiment(config);
  CHECK(outcome.exit_code == 2);
  CHECK(outcome.status == "runtime_error");
  CHECK(outcome.manifest["partial"] == true);
  CHECK_FALSE(outcome.manifest["error"].get<std::string>().empty());
  CHECK(std::filesystem::exists(dir / "manifest.json"));
}

TEST_SUITE_END();
