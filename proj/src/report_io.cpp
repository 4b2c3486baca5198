#include "anisoheat/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "anisoheat/errors.hpp"

namespace anisoheat {

using nlohmann::json;

namespace {

void put(std::string& line, double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    line.append(buf, r.ptr);
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    return out;
}

std::string header(std::size_t d) {
    return d == 1 ? "t,x,y,value\n" : "t,x,x2,y,y2,value\n";
}

void row(std::string& line, double t, const Vec& x, const Vec& y, double v) {
    line.clear();
    put(line, t);
    for (double c : x) {
        line.push_back(',');
        put(line, c);
    }
    for (double c : y) {
        line.push_back(',');
        put(line, c);
    }
    line.push_back(',');
    put(line, v);
    line.push_back('\n');
}

}  // namespace

void write_kernel_csv(const std::filesystem::path& path, const SpaceTimeKernel& k, const SpatialGrid& grid,
                      const std::vector<std::size_t>& nodes) {
    if (k.values.empty() || k.slices.empty() || nodes.empty()) {
        throw Error(ErrorCode::InvalidArgument, "refusing to export an empty field");
    }
    auto out = open_out(path);
    out << header(grid.dimension());
    std::string line;
    for (std::size_t n : nodes) {
        for (std::size_t s = 0; s < k.slices.size(); ++s) {
            const auto v = k.slice(n, s);
            const Vec fixed = grid.point(k.slices[s]);
            for (std::size_t j = 0; j < k.points; ++j) {
                const Vec free = grid.point(j);
                if (k.axis == SliceAxis::Target) {
                    row(line, k.times[n], free, fixed, v[j]);
                } else {
                    row(line, k.times[n], fixed, free, v[j]);
                }
                out << line;
            }
        }
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void write_frozen_csv(const std::filesystem::path& path, double t, const std::vector<double>& centered,
                      const SpatialGrid& grid, std::size_t y) {
    if (centered.empty()) throw Error(ErrorCode::InvalidArgument, "refusing to export an empty field");
    if (centered.size() != grid.size()) throw Error(ErrorCode::InvalidArgument, "kernel does not match the grid");
    auto out = open_out(path);
    out << header(grid.dimension());
    const Vec base = grid.point(y);
    std::string line;
    for (std::size_t x = 0; x < grid.size(); ++x) {
        row(line, t, grid.point(x), base, centered[grid.difference_index(x, y)]);
        out << line;
    }
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::vector<KernelSample> read_kernel_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    std::size_t d = 0;
    if (line == "t,x,y,value") {
        d = 1;
    } else if (line == "t,x,x2,y,y2,value") {
        d = 2;
    } else {
        throw Error(ErrorCode::IoFailure, path.string() + ": unexpected header");
    }
    std::vector<KernelSample> rows;
    std::vector<double> f;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        f.clear();
        const char* p = line.data();
        const char* end = p + line.size();
        while (p <= end) {
            double v = 0.0;
            const auto r = std::from_chars(p, end, v);
            if (r.ec != std::errc()) throw Error(ErrorCode::IoFailure, path.string() + ": bad number in " + line);
            f.push_back(v);
            p = r.ptr + 1;
        }
        if (f.size() != 2 * d + 2) throw Error(ErrorCode::IoFailure, path.string() + ": wrong column count");
        KernelSample s;
        s.t = f[0];
        s.x.assign(f.begin() + 1, f.begin() + 1 + static_cast<std::ptrdiff_t>(d));
        s.y.assign(f.begin() + 1 + static_cast<std::ptrdiff_t>(d), f.begin() + 1 + 2 * static_cast<std::ptrdiff_t>(d));
        s.value = f.back();
        rows.push_back(std::move(s));
    }
    return rows;
}

json number_to_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double number_from_json(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw Error(ErrorCode::IoFailure, "expected a number, got " + j.dump());
}

json to_json(const ReportDocument& doc) {
    json checks = json::array();
    for (const auto& c : doc.report.checks) {
        checks.push_back({{"name", c.name},
                          {"value", number_to_json(c.value)},
                          {"tolerance", number_to_json(c.tolerance)},
                          {"relation", c.relation},
                          {"pass", c.pass},
                          {"detail", c.detail}});
    }
    json constants = json::object();
    for (const auto& [k, v] : doc.report.constants) constants[k] = number_to_json(v);
    json tolerances = json::object();
    for (const auto& [k, v] : doc.report.tolerances) tolerances[k] = number_to_json(v);
    return {{"status", doc.status},         {"config_hash", doc.config_hash},
            {"failures", doc.report.failures()}, {"checks", checks},
            {"constants", constants},       {"tolerances", tolerances},
            {"metadata", doc.report.metadata}};
}

ReportDocument report_from_json(const json& j) {
    try {
        ReportDocument doc;
        doc.status = j.at("status").get<std::string>();
        doc.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& c : j.at("checks")) {
            CheckResult r;
            r.name = c.at("name").get<std::string>();
            r.value = number_from_json(c.at("value"));
            r.tolerance = number_from_json(c.at("tolerance"));
            r.relation = c.at("relation").get<std::string>();
            r.pass = c.at("pass").get<bool>();
            r.detail = c.at("detail").get<std::string>();
            doc.report.checks.push_back(std::move(r));
        }
        for (const auto& [k, v] : j.at("constants").items()) doc.report.constants[k] = number_from_json(v);
        for (const auto& [k, v] : j.at("tolerances").items()) doc.report.tolerances[k] = number_from_json(v);
        doc.report.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
        return doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoFailure, std::string("malformed report: ") + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::IoFailure, path.string() + ": " + e.what());
    }
}

}  // namespace anisoheat
