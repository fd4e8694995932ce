#pragma once

#include "meanforce/bath_model.hpp"
#include "meanforce/errors.hpp"
#include "meanforce/langevin.hpp"
#include "meanforce/quadrature.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace meanforce::cli {

/// Malformed config text. Line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& message, int line, int column);
    const char* kind() const noexcept override { return "ParseError"; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Well-formed config with an unknown, missing or invalid key. `key` is the dotted path.
class SemanticError : public Error {
public:
    SemanticError(const std::string& key, const std::string& message);
    const char* kind() const noexcept override { return "SemanticError"; }
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

enum class Task { validate, thermo_sweep, correlators, oracle_compare, langevin };
enum class OutputFormat { csv, json, both };

std::string to_string(Task task);
std::string to_string(OutputFormat format);

struct OracleSettings {
    int n_modes = 4000;
    /// 0 selects 60 times the model's largest frequency.
    double omega_max = 0.0;

    bool operator==(const OracleSettings&) const = default;
};

struct CorrelatorSettings {
    std::vector<double> taus{0.0};

    bool operator==(const CorrelatorSettings&) const = default;
};

struct RunConfig {
    Task task = Task::validate;
    ModelSpec model;
    std::vector<double> temperatures;
    QuadratureSpec quadrature;
    OracleSettings oracle;
    SimConfig simulation;
    CorrelatorSettings correlators;
    std::string output_path = "meanforce-out";
    OutputFormat format = OutputFormat::both;

    bool operator==(const RunConfig& other) const;
};

/// Parses YAML config text (JSON is accepted as well). Every map is checked against its
/// fixed key set, so a misspelled key is an error rather than a silent default.
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::filesystem::path& path);

/// Config echo in a form parse_config accepts and maps back to an equal RunConfig.
/// Rotations are written as explicit matrices and temperature ranges as lists.
nlohmann::json to_json(const RunConfig& config);

} // namespace meanforce::cli
