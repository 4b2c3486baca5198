#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anisoheat/levy_kernel.hpp"
#include "anisoheat/parametrix.hpp"

namespace anisoheat {

struct AtomConfig {
    Vec direction;
    double weight = 0.0;
};

struct ModulationConfig {
    std::string family = "constant";  // constant | cosine | bump
    double amplitude = 0.0;
    Vec wave_vector;
    double sigma = 1.0;
    std::vector<DirectionFactor> factors;
    std::optional<double> m0;
};

struct ProblemConfig {
    std::size_t dimension = 1;
    double alpha = 1.0;
    double gamma = 1.0;
    double m0 = 1.0;
    /// Hölder order used for θ; defaults to the family's own order.
    std::optional<double> eta;
    std::vector<AtomConfig> atoms;
    ModulationConfig modulation;
};

struct GridConfig {
    double half_width = 40.0;
    std::size_t points = 256;
};

struct TimeConfig {
    double horizon = 1.0;
    std::size_t intervals = 64;
    double grading = 2.0;
    /// Times pinned to mesh nodes; omitted means the check times up to the horizon.
    std::vector<double> anchors;
};

struct ValidationConfig {
    std::vector<std::string> checks;
    std::map<std::string, double> tolerances;
    /// Target/source probe points; empty means every grid point.
    std::vector<Vec> probes;
    /// Bound fits use mesh nodes with t at or above this.
    double fit_min_time = 0.1;
    /// Width σ of the initial-condition bump exp(−|x|²/σ²).
    double bump_width = 1.0;
};

struct OutputConfig {
    std::string directory = "anisoheat_out";
    std::vector<std::string> formats = {"csv", "json"};
};

struct ExperimentConfig {
    std::string name = "experiment";
    ProblemConfig problem;
    GridConfig grid;
    TimeConfig time;
    SeriesControls series;
    ValidationConfig validation;
    OutputConfig output;

    JumpKernel kernel() const;
    SpatialGrid spatial_grid() const;
    TimeMesh time_mesh() const;
    /// series.theta, or ½·min(η, α, α+γ−d) with the configured η.
    double theta() const;
    double tolerance(const std::string& name) const;
    bool check_enabled(const std::string& name) const;
};

/// Every check name understood by the runner, in report order.
const std::vector<std::string>& known_checks();
/// Default tolerances by name.
const std::map<std::string, double>& default_tolerances();

/// Unknown keys, wrong types and violated module preconditions throw
/// ConfigInvalid naming the offending field path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical form with every default filled in.
nlohmann::json to_json(const ExperimentConfig& config);

/// SHA-256 of the canonical numerical content (the output section is left out).
std::string config_hash(const ExperimentConfig& config);

}  // namespace anisoheat
