#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "anisoheat/grid.hpp"
#include "anisoheat/parametrix.hpp"
#include "anisoheat/validation.hpp"

namespace anisoheat {

/// One CSV row: time, source point, target point, value.
struct KernelSample {
    double t = 0.0;
    Vec x;
    Vec y;
    double value = 0.0;
};

/// Header `t,x[,x2],y[,y2],value`, 17 significant digits, rows ordered by
/// node, then slice, then grid point. Throws InvalidArgument for an empty
/// field and IoFailure when the file cannot be written.
void write_kernel_csv(const std::filesystem::path& path, const SpaceTimeKernel& k, const SpatialGrid& grid,
                      const std::vector<std::size_t>& nodes);

/// A frozen kernel x ↦ p^y_t(x − y) centered at base point `y`.
void write_frozen_csv(const std::filesystem::path& path, double t, const std::vector<double>& centered,
                      const SpatialGrid& grid, std::size_t y);

std::vector<KernelSample> read_kernel_csv(const std::filesystem::path& path);

/// Non-finite numbers are written as the strings "nan", "inf" and "-inf" so
/// that re-reading restores every value exactly.
nlohmann::json number_to_json(double v);
double number_from_json(const nlohmann::json& j);

struct ReportDocument {
    std::string status;  // PASS or FAIL
    std::string config_hash;
    ValidationReport report;
};

nlohmann::json to_json(const ReportDocument& doc);
ReportDocument report_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace anisoheat
