#include "cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cli/experiments.hpp"

namespace kno::cli {

namespace {

std::string join_names(const std::vector<ExperimentSpec>& specs) {
  std::string out;
  for (const ExperimentSpec& spec : specs) {
    if (!out.empty()) out += ", ";
    out += spec.name;
  }
  return out;
}

bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

// One value formatted for CSV: shortest-faithful is not required, 17
// significant digits are, so the files rehydrate to identical doubles.
std::string format_cell(double value) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace

double ResolvedConfig::number(const std::string& name) const {
  const auto it = numbers.find(name);
  if (it == numbers.end()) {
    throw std::logic_error("unresolved numeric parameter: " + name);
  }
  return it->second;
}

std::int64_t ResolvedConfig::integer(const std::string& name) const {
  return static_cast<std::int64_t>(std::llround(number(name)));
}

const std::vector<double>& ResolvedConfig::list(const std::string& name) const {
  const auto it = lists.find(name);
  if (it == lists.end()) {
    throw std::logic_error("unresolved list parameter: " + name);
  }
  return it->second;
}

const std::string& ResolvedConfig::text(const std::string& name) const {
  const auto it = texts.find(name);
  if (it == texts.end()) {
    throw std::logic_error("unresolved text parameter: " + name);
  }
  return it->second;
}

int ResolvedConfig::effective_threads() const {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

nlohmann::json load_config_file(const std::string& path,
                                ValidationResult& result) {
  std::ifstream in(path);
  if (!in) {
    result.errors.push_back("cannot open config file: " + path);
    return nullptr;
  }
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    result.errors.push_back("config file is not valid JSON: " + path);
    return nullptr;
  }
  return doc;
}

bool parse_number_list(const std::string& text, std::vector<double>& values,
                       std::string& error) {
  values.clear();
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const char* begin = item.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    while (end != nullptr && *end == ' ') ++end;
    if (end == begin || end == nullptr || *end != '\0') {
      error = "not a number: \"" + item + "\"";
      return false;
    }
    values.push_back(value);
  }
  if (values.empty()) {
    error = "empty list";
    return false;
  }
  return true;
}

namespace {

void resolve_parameter(const ParamSpec& spec, const nlohmann::json* supplied,
                       ResolvedConfig& config, ValidationResult& result) {
  switch (spec.kind) {
    case ParamKind::number: {
      double value = spec.number_default;
      if (supplied != nullptr) {
        if (!supplied->is_number()) {
          result.errors.push_back("parameter \"" + spec.name +
                                  "\" must be a number");
          return;
        }
        value = supplied->get<double>();
      }
      if (spec.integer && value != std::floor(value)) {
        result.errors.push_back("parameter \"" + spec.name +
                                "\" must be an integer");
        return;
      }
      if (value < spec.min || value > spec.max) {
        if (spec.min == 0.0 && value < 0.0) {
          result.errors.push_back("parameter \"" + spec.name +
                                  "\" must be non-negative");
        } else {
          result.errors.push_back(
              "parameter \"" + spec.name + "\" out of range [" +
              format_cell(spec.min) + ", " + format_cell(spec.max) + "]");
        }
        return;
      }
      if (spec.pow2_recommended &&
          !is_power_of_two(static_cast<std::int64_t>(value))) {
        result.warnings.push_back("parameter \"" + spec.name +
                                  "\": a power of two is recommended");
      }
      config.numbers[spec.name] = value;
      return;
    }
    case ParamKind::number_list: {
      std::string text = spec.text_default;
      if (supplied != nullptr) {
        if (!supplied->is_string()) {
          result.errors.push_back("parameter \"" + spec.name +
                                  "\" must be a comma-separated string");
          return;
        }
        text = supplied->get<std::string>();
      }
      std::vector<double> values;
      std::string error;
      if (!parse_number_list(text, values, error)) {
        result.errors.push_back("parameter \"" + spec.name + "\": " + error);
        return;
      }
      for (double v : values) {
        if (v < spec.min || v > spec.max) {
          if (spec.min == 0.0 && v < 0.0) {
            result.errors.push_back("parameter \"" + spec.name +
                                    "\" must be non-negative");
          } else {
            result.errors.push_back(
                "parameter \"" + spec.name + "\": entry " + format_cell(v) +
                " out of range [" + format_cell(spec.min) + ", " +
                format_cell(spec.max) + "]");
          }
          return;
        }
      }
      config.texts[spec.name] = text;
      config.lists[spec.name] = std::move(values);
      return;
    }
    case ParamKind::text: {
      std::string text = spec.text_default;
      if (supplied != nullptr) {
        if (!supplied->is_string()) {
          result.errors.push_back("parameter \"" + spec.name +
                                  "\" must be a string");
          return;
        }
        text = supplied->get<std::string>();
      }
      config.texts[spec.name] = std::move(text);
      return;
    }
  }
}

}  // namespace

ResolvedConfig resolve_config(const nlohmann::json& doc,
                              const ConfigOverrides& overrides,
                              ValidationResult& result) {
  ResolvedConfig config;
  if (!doc.is_object()) {
    result.errors.push_back("config must be a JSON object");
    return config;
  }
  for (const auto& [key, value] : doc.items()) {
    if (key != "experiment" && key != "seed" && key != "output_dir" &&
        key != "threads" && key != "parameters") {
      result.errors.push_back("unknown top-level key \"" + key + "\"");
    }
  }

  if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
    result.errors.push_back("config requires an \"experiment\" name");
    return config;
  }
  config.experiment = doc["experiment"].get<std::string>();
  const ExperimentSpec* spec = find_experiment(config.experiment);
  if (spec == nullptr) {
    result.errors.push_back("unknown experiment \"" + config.experiment +
                            "\" (valid: " + join_names(experiment_registry()) +
                            ")");
    return config;
  }

  if (doc.contains("seed")) {
    const nlohmann::json& seed = doc["seed"];
    if (!seed.is_number_integer() || seed.get<std::int64_t>() < 0) {
      result.errors.push_back("seed must be a non-negative integer");
    } else {
      config.seed = seed.get<std::uint64_t>();
    }
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) {
      result.errors.push_back("output_dir must be a string");
    } else {
      config.output_dir = doc["output_dir"].get<std::string>();
    }
  }
  if (doc.contains("threads")) {
    const nlohmann::json& threads = doc["threads"];
    if (!threads.is_number_integer() || threads.get<std::int64_t>() < 0) {
      result.errors.push_back("threads must be a non-negative integer");
    } else {
      config.threads = threads.get<int>();
    }
  }

  if (overrides.seed != nullptr) config.seed = *overrides.seed;
  if (overrides.output_dir != nullptr) config.output_dir = *overrides.output_dir;
  if (overrides.threads != nullptr) config.threads = *overrides.threads;

  const nlohmann::json empty = nlohmann::json::object();
  const nlohmann::json& parameters =
      doc.contains("parameters") ? doc["parameters"] : empty;
  if (!parameters.is_object()) {
    result.errors.push_back("parameters must be a JSON object");
    return config;
  }
  for (const auto& [key, value] : parameters.items()) {
    bool known = false;
    for (const ParamSpec& p : spec->params) known = known || p.name == key;
    if (!known) {
      result.errors.push_back("unknown key \"" + key + "\" in parameters for " +
                              spec->name);
    }
  }
  for (const ParamSpec& p : spec->params) {
    const nlohmann::json* supplied =
        parameters.contains(p.name) ? &parameters[p.name] : nullptr;
    resolve_parameter(p, supplied, config, result);
  }

  if (result.ok() && spec->extra_validate != nullptr) {
    spec->extra_validate(config, result.errors, result.warnings);
  }
  return config;
}

nlohmann::json config_echo(const ResolvedConfig& config) {
  nlohmann::json parameters = nlohmann::json::object();
  for (const auto& [name, value] : config.numbers) parameters[name] = value;
  for (const auto& [name, value] : config.texts) parameters[name] = value;
  return nlohmann::json{{"experiment", config.experiment},
                        {"seed", config.seed},
                        {"output_dir", config.output_dir},
                        {"threads", config.threads},
                        {"parameters", parameters}};
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i == 0 ? "" : ",") << header[i];
  }
  out << "\n";
  for (const std::vector<double>& row : rows) {
    if (row.size() != header.size()) {
      throw std::logic_error("CSV row width differs from header: " + path);
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i == 0 ? "" : ",") << format_cell(row[i]);
    }
    out << "\n";
  }
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty CSV: " + path);
  }
  std::stringstream head(line);
  std::string cell;
  while (std::getline(head, cell, ',')) table.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row_stream(line);
    std::vector<double> row;
    while (std::getline(row_stream, cell, ',')) {
      const char* begin = cell.c_str();
      char* end = nullptr;
      const double value = std::strtod(begin, &end);
      if (end == begin || *end != '\0') {
        throw std::runtime_error("malformed CSV cell \"" + cell +
                                 "\" in " + path);
      }
      row.push_back(value);
    }
    if (row.size() != table.header.size()) {
      throw std::runtime_error("CSV row width differs from header: " + path);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace kno::cli
