#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "carnot/algebra.hpp"
#include "carnot/field.hpp"
#include "carnot/heat.hpp"
#include "carnot/report.hpp"

namespace carnot {

/// One requested check. `args` holds the resolved arguments for its kind,
/// with every default filled in.
struct CheckSpec {
    std::string kind;
    std::string name;
    nlohmann::json args = nlohmann::json::object();
    std::optional<Verdict> expect;
    /// "expect": "any": the verdict is recorded but never fails the run.
    bool observe = false;
    /// Partial override of the run's heat parameters.
    nlohmann::json heat = nlohmann::json::object();
    /// Algebra override (builtin name, file path or inline object).
    nlohmann::json algebra;

    nlohmann::json to_json() const;
};

struct ExperimentConfig {
    std::string name = "experiment";
    nlohmann::json algebra = "heisenberg(1)";
    HeatParams heat;
    Thresholds thresholds;
    bool exploratory = false;
    std::map<std::string, std::string> fields;
    FieldParameters params;
    std::string manifest_path;
    std::string csv_dir;
    std::vector<CheckSpec> checks;

    /// Parses and fully validates: unknown keys, types, parameter ranges,
    /// field expressions. Throws StructuralError or ParameterError.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
    nlohmann::json to_json() const;
    /// FNV-1a of the resolved configuration, hex.
    std::string hash() const;
};

/// Kinds accepted in "checks".
std::vector<std::string> check_kinds();

struct CheckOutcome {
    std::size_t index = 0;
    std::string kind;
    std::string name;
    std::optional<CheckReport> report;
    std::optional<Verdict> expect;
    bool observe = false;
    /// Error class ("structural", "parameter", "domain") and message when the
    /// check could not be evaluated.
    std::string error_kind;
    std::string error;
    double seconds = 0.0;

    bool passed() const;
    nlohmann::json to_json() const;
};

struct RunManifest {
    nlohmann::json config;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version;
    std::vector<CheckOutcome> outcomes;
    double total_seconds = 0.0;

    /// 0 all pass, 1 any violated, 2 any inconclusive, 3 structural error;
    /// the highest-precedence code wins in the order 3, 1, 2.
    int exit_code() const;
    /// Everything except wall-clock timings; bit-reproducible.
    nlohmann::json to_json() const;
    nlohmann::json timings_json() const;
};

/// Runs the checks in declaration order. Module errors are captured per check.
/// Writes the manifest (and timings next to it) and sweep CSVs when the config
/// names output paths.
RunManifest run(const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Shipped configuration as JSON text.
std::string_view preset_text(std::string_view name);
ExperimentConfig preset(std::string_view name);

/// Library name or prefix expression.
ScalarField resolve_field(const std::string& spec, const StratifiedAlgebra& algebra,
                          const FieldParameters& params = {});

}  // namespace carnot
