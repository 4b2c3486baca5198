#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "anisoheat/config.hpp"
#include "anisoheat/errors.hpp"
#include "anisoheat/validation.hpp"

namespace anisoheat {

enum class ExportMode { All, Kernels, Report };

ExportMode parse_export_mode(const std::string& s);

struct RunOptions {
    /// nullopt disables the kernel cache.
    std::optional<std::filesystem::path> cache_dir;
    ExportMode export_mode = ExportMode::All;
    /// Accepted for interface stability; runs are single-threaded.
    std::size_t threads = 1;
    /// Overrides config.output.directory when set.
    std::optional<std::filesystem::path> output_dir;
    bool write_files = true;
};

struct StageTimes {
    double frozen = 0.0;
    double series = 0.0;
    double volterra = 0.0;
    double checks = 0.0;
    double total = 0.0;
};

struct RunResult {
    std::string config_hash;
    ValidationReport report;
    StageTimes times;
    std::size_t cache_hits = 0;
    std::size_t cache_misses = 0;
    std::vector<std::filesystem::path> files;
    int exit_code = 0;
};

/// Exit status: 0 pass, 1 failed check, 2 config error, 3 numerical error,
/// 4 cache or I/O error.
int exit_code_for(ErrorCode code) noexcept;

/// Builds the engine, runs the series and the Volterra march, evaluates the
/// enabled checks and writes the requested artifacts plus manifest.json.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Flat index of the grid point nearest to x.
std::size_t nearest_index(const SpatialGrid& grid, std::span<const double> x);

}  // namespace anisoheat
