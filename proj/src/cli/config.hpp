#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace kno::cli {

// One declared parameter of an experiment. Every parameter has a default,
// so a config may omit any of them; unknown names are rejected instead of
// ignored. number_list values are comma-separated in the config and are
// resolved into a vector of doubles.
enum class ParamKind { number, number_list, text };

struct ParamSpec {
  std::string name;
  std::string doc;
  ParamKind kind = ParamKind::number;
  double number_default = 0.0;
  std::string text_default;  // also the default for number_list
  double min = -1e308;
  double max = 1e308;
  bool integer = false;
  bool pow2_recommended = false;
};

// A config with every field and parameter resolved (defaults filled in).
// threads = 0 means "use the hardware concurrency".
struct ResolvedConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  int threads = 0;
  std::map<std::string, double> numbers;
  std::map<std::string, std::vector<double>> lists;
  std::map<std::string, std::string> texts;

  double number(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
  const std::vector<double>& list(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  int effective_threads() const;
};

struct ValidationResult {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

// Parses the JSON document at path. I/O or syntax problems land in
// result.errors; the returned document is null on failure.
nlohmann::json load_config_file(const std::string& path,
                                ValidationResult& result);

// Command-line overrides applied on top of the document before resolution.
struct ConfigOverrides {
  const std::uint64_t* seed = nullptr;
  const std::string* output_dir = nullptr;
  const int* threads = nullptr;
};

// Schema and range checks against the experiment registry; never executes
// an experiment. Errors and warnings accumulate into the result, and the
// resolved config (valid only when result.ok()) is returned.
ResolvedConfig resolve_config(const nlohmann::json& doc,
                              const ConfigOverrides& overrides,
                              ValidationResult& result);

// Resolved config echoed as JSON, suitable for the run manifest.
nlohmann::json config_echo(const ResolvedConfig& config);

// Writes rows as CSV with '.' decimal separator and 17 significant digits,
// so re-running a config reproduces files byte for byte. Every column name
// carries its unit in brackets. Throws std::runtime_error on I/O failure.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Reads back a file written by write_csv. Throws std::runtime_error on I/O
// failure or a malformed numeric cell.
CsvTable read_csv(const std::string& path);

// Comma-separated numbers -> values. Used for number_list resolution; an
// empty or malformed list reports through `error`.
bool parse_number_list(const std::string& text, std::vector<double>& values,
                       std::string& error);

}  // namespace kno::cli
