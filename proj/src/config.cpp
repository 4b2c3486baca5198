#include "anisoheat/config.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <fstream>
#include <set>

#include "anisoheat/digest.hpp"
#include "anisoheat/errors.hpp"

namespace anisoheat {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& msg) {
    throw Error(ErrorCode::ConfigInvalid, path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Object accessor that remembers its path and rejects unknown keys up front.
class Section {
public:
    Section(const json& j, std::string path, std::initializer_list<const char*> keys) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) invalid(path_.empty() ? "<root>" : path_, "expected an object");
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, v] : j_.items()) {
            if (!allowed.count(k)) invalid(join(path_, k), "unknown key");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const json& raw(const char* key) const { return j_.at(key); }
    std::string path(const char* key) const { return join(path_, key); }

    double number(const char* key, std::optional<double> fallback = std::nullopt) const {
        if (!has(key)) {
            if (!fallback) invalid(path(key), "missing");
            return *fallback;
        }
        const auto& v = j_.at(key);
        if (!v.is_number()) invalid(path(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) invalid(path(key), "must be finite");
        return d;
    }

    std::size_t count(const char* key, std::optional<std::size_t> fallback = std::nullopt) const {
        if (!has(key)) {
            if (!fallback) invalid(path(key), "missing");
            return *fallback;
        }
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            invalid(path(key), "expected a non-negative integer");
        return v.get<std::size_t>();
    }

    std::string text(const char* key, std::optional<std::string> fallback = std::nullopt) const {
        if (!has(key)) {
            if (!fallback) invalid(path(key), "missing");
            return *fallback;
        }
        const auto& v = j_.at(key);
        if (!v.is_string()) invalid(path(key), "expected a string");
        return v.get<std::string>();
    }

    const json& array(const char* key) const {
        const auto& v = j_.at(key);
        if (!v.is_array()) invalid(path(key), "expected an array");
        return v;
    }

private:
    const json& j_;
    std::string path_;
};

Vec vector_at(const json& v, const std::string& path) {
    if (!v.is_array()) invalid(path, "expected an array of numbers");
    Vec out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) invalid(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::vector<DirectionFactor> factors_at(const json& v, const std::string& path) {
    if (!v.is_array()) invalid(path, "expected an array");
    std::vector<DirectionFactor> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        const Section s(v[i], p, {"direction", "value"});
        out.push_back({vector_at(s.raw("direction"), s.path("direction")), s.number("value")});
    }
    return out;
}

template <class F>
auto recheck(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigInvalid) throw;
        invalid(path, e.what());
    }
}

json factors_json(const std::vector<DirectionFactor>& factors) {
    json a = json::array();
    for (const auto& f : factors) a.push_back({{"direction", f.direction}, {"value", f.value}});
    return a;
}

}  // namespace

const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> names = {
        "degeneration", "mass", "chapman_kolmogorov", "pde_residual",   "cross_method", "series_decay",
        "initial_condition", "nonnegativity", "subconvolution", "bounds",
    };
    return names;
}

const std::map<std::string, double>& default_tolerances() {
    static const std::map<std::string, double> t = {
        {"degeneration", 1e-6},     {"mass", 1e-3},          {"chapman_kolmogorov", 1e-3},
        {"pde_residual", 1e-2},     {"cross_method", 1e-3},  {"cross_method_ratio", 1.5},
        {"series_decay", 3.0},      {"initial_condition", 5e-3}, {"nonnegativity", 1e-6},
        {"subconvolution_spread", 10.0},
    };
    return t;
}

JumpKernel ExperimentConfig::kernel() const {
    std::vector<SphericalAtom> atoms;
    for (const auto& a : problem.atoms) atoms.push_back({a.direction, a.weight});
    const auto& m = problem.modulation;
    Modulation mod = Modulation::constant();
    if (m.family == "cosine") {
        mod = Modulation::cosine(m.amplitude, m.wave_vector, m.factors);
    } else if (m.family == "bump") {
        mod = Modulation::bump(m.amplitude, m.sigma, m.factors);
    }
    if (m.m0) mod = mod.with_m0(*m.m0);
    return JumpKernel(SpectralMeasure(problem.dimension, std::move(atoms)),
                      {problem.dimension, problem.alpha, problem.gamma, problem.m0}, std::move(mod));
}

SpatialGrid ExperimentConfig::spatial_grid() const { return SpatialGrid(problem.dimension, grid.half_width, grid.points); }

TimeMesh ExperimentConfig::time_mesh() const { return TimeMesh(time.horizon, time.intervals, time.grading, time.anchors); }

double ExperimentConfig::theta() const {
    if (series.theta > 0.0) return series.theta;
    const auto k = kernel();
    const double eta = problem.eta.value_or(k.modulation().eta());
    return 0.5 * std::min({eta, problem.alpha, problem.alpha + problem.gamma - static_cast<double>(problem.dimension)});
}

double ExperimentConfig::tolerance(const std::string& name) const {
    const auto it = validation.tolerances.find(name);
    if (it == validation.tolerances.end()) throw Error(ErrorCode::InvalidArgument, "no tolerance named " + name);
    return it->second;
}

bool ExperimentConfig::check_enabled(const std::string& name) const {
    return std::find(validation.checks.begin(), validation.checks.end(), name) != validation.checks.end();
}

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig c;
    const Section root(doc, "", {"name", "problem", "grid", "time", "series", "validation", "output"});
    c.name = root.text("name", c.name);

    if (!root.has("problem")) invalid("problem", "missing");
    const Section p(root.raw("problem"), "problem", {"dimension", "alpha", "gamma", "m0", "eta", "atoms", "modulation"});
    c.problem.dimension = p.count("dimension");
    c.problem.alpha = p.number("alpha");
    c.problem.gamma = p.number("gamma", c.problem.gamma);
    c.problem.m0 = p.number("m0", c.problem.m0);
    if (p.has("eta")) c.problem.eta = p.number("eta");
    if (!p.has("atoms")) invalid(p.path("atoms"), "missing");
    const auto& atoms = p.array("atoms");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const std::string path = p.path("atoms") + "[" + std::to_string(i) + "]";
        const Section a(atoms[i], path, {"direction", "weight"});
        if (!a.has("direction")) invalid(a.path("direction"), "missing");
        c.problem.atoms.push_back({vector_at(a.raw("direction"), a.path("direction")), a.number("weight")});
    }
    if (p.has("modulation")) {
        const Section m(p.raw("modulation"), p.path("modulation"),
                        {"family", "amplitude", "wave_vector", "sigma", "factors", "m0"});
        auto& mc = c.problem.modulation;
        mc.family = m.text("family");
        if (mc.family != "constant" && mc.family != "cosine" && mc.family != "bump") {
            invalid(m.path("family"), "expected constant, cosine or bump");
        }
        mc.amplitude = m.number("amplitude", 0.0);
        if (m.has("wave_vector")) mc.wave_vector = vector_at(m.raw("wave_vector"), m.path("wave_vector"));
        mc.sigma = m.number("sigma", mc.sigma);
        if (m.has("factors")) mc.factors = factors_at(m.raw("factors"), m.path("factors"));
        if (m.has("m0")) mc.m0 = m.number("m0");
        if (mc.family == "cosine" && mc.wave_vector.size() != c.problem.dimension) {
            invalid(m.path("wave_vector"), "needs one entry per dimension");
        }
    }

    if (root.has("grid")) {
        const Section g(root.raw("grid"), "grid", {"half_width", "points"});
        c.grid.half_width = g.number("half_width", c.grid.half_width);
        c.grid.points = g.count("points", c.grid.points);
    }
    if (root.has("time")) {
        const Section t(root.raw("time"), "time", {"horizon", "intervals", "grading", "anchors"});
        c.time.horizon = t.number("horizon", c.time.horizon);
        c.time.intervals = t.count("intervals", c.time.intervals);
        c.time.grading = t.number("grading", c.time.grading);
        if (t.has("anchors")) c.time.anchors = vector_at(t.raw("anchors"), t.path("anchors"));
    }
    if (!root.has("time") || !root.raw("time").contains("anchors")) {
        for (double a : {0.05, 0.1, 0.2, 0.25, 0.5, 1.0}) {
            if (a <= c.time.horizon) c.time.anchors.push_back(a);
        }
    }
    if (root.has("series")) {
        const Section s(root.raw("series"), "series", {"theta", "max_terms", "tail_tolerance", "quadrature_tolerance"});
        c.series.theta = s.number("theta", 0.0);
        c.series.max_terms = static_cast<int>(s.count("max_terms", 40));
        c.series.tail_tolerance = s.number("tail_tolerance", c.series.tail_tolerance);
        c.series.quadrature_tolerance = s.number("quadrature_tolerance", c.series.quadrature_tolerance);
        if (!(c.series.tail_tolerance > 0.0)) invalid(s.path("tail_tolerance"), "must be positive");
        if (!(c.series.quadrature_tolerance > 0.0)) invalid(s.path("quadrature_tolerance"), "must be positive");
    }

    c.validation.checks = known_checks();
    c.validation.tolerances = default_tolerances();
    if (root.has("validation")) {
        const Section v(root.raw("validation"), "validation", {"checks", "tolerances", "probes", "fit_min_time", "bump_width"});
        if (v.has("checks")) {
            c.validation.checks.clear();
            const auto& a = v.array("checks");
            for (std::size_t i = 0; i < a.size(); ++i) {
                const std::string path = v.path("checks") + "[" + std::to_string(i) + "]";
                if (!a[i].is_string()) invalid(path, "expected a string");
                const auto name = a[i].get<std::string>();
                const auto& known = known_checks();
                if (std::find(known.begin(), known.end(), name) == known.end()) invalid(path, "unknown check " + name);
                c.validation.checks.push_back(name);
            }
        }
        if (v.has("tolerances")) {
            const auto& t = v.raw("tolerances");
            if (!t.is_object()) invalid(v.path("tolerances"), "expected an object");
            for (const auto& [k, val] : t.items()) {
                const std::string path = v.path("tolerances") + "." + k;
                if (!c.validation.tolerances.count(k)) invalid(path, "unknown key");
                if (!val.is_number() || !(val.get<double>() > 0.0)) invalid(path, "expected a positive number");
                c.validation.tolerances[k] = val.get<double>();
            }
        }
        if (v.has("probes")) {
            const auto& a = v.array("probes");
            for (std::size_t i = 0; i < a.size(); ++i) {
                const std::string path = v.path("probes") + "[" + std::to_string(i) + "]";
                auto pt = vector_at(a[i], path);
                if (pt.size() != c.problem.dimension) invalid(path, "needs one coordinate per dimension");
                c.validation.probes.push_back(std::move(pt));
            }
        }
        c.validation.fit_min_time = v.number("fit_min_time", c.validation.fit_min_time);
        c.validation.bump_width = v.number("bump_width", c.validation.bump_width);
        if (!(c.validation.bump_width > 0.0)) invalid(v.path("bump_width"), "must be positive");
        if (!(c.validation.fit_min_time > 0.0)) invalid(v.path("fit_min_time"), "must be positive");
    }
    if (root.has("output")) {
        const Section o(root.raw("output"), "output", {"directory", "formats"});
        c.output.directory = o.text("directory", c.output.directory);
        if (o.has("formats")) {
            c.output.formats.clear();
            const auto& a = o.array("formats");
            for (std::size_t i = 0; i < a.size(); ++i) {
                const std::string path = o.path("formats") + "[" + std::to_string(i) + "]";
                if (!a[i].is_string() || (a[i] != "csv" && a[i] != "json")) invalid(path, "expected \"csv\" or \"json\"");
                c.output.formats.push_back(a[i].get<std::string>());
            }
        }
    }

    // module preconditions, reported against the section that set them
    const auto kernel = recheck("problem", [&] { return c.kernel(); });
    if (c.problem.eta && !(*c.problem.eta > 0.0 && *c.problem.eta <= kernel.modulation().eta())) {
        invalid("problem.eta", "must lie in (0, " + std::to_string(kernel.modulation().eta()) + "]");
    }
    const auto grid = recheck("grid", [&] { return c.spatial_grid(); });
    recheck("time", [&] { return c.time_mesh(); });
    recheck("series.theta", [&] {
        validate_theta(kernel, c.theta());
        return 0;
    });
    if (c.series.max_terms < 1) invalid("series.max_terms", "must be positive");
    for (std::size_t i = 0; i < c.validation.probes.size(); ++i) {
        for (double x : c.validation.probes[i]) {
            if (std::abs(x) >= grid.half_width()) {
                invalid("validation.probes[" + std::to_string(i) + "]", "outside the grid");
            }
        }
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, path.string() + ": cannot open");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
    json atoms = json::array();
    for (const auto& a : c.problem.atoms) atoms.push_back({{"direction", a.direction}, {"weight", a.weight}});
    const auto& m = c.problem.modulation;
    json mod = {{"family", m.family}, {"amplitude", m.amplitude}, {"wave_vector", m.wave_vector},
                {"sigma", m.sigma},   {"factors", factors_json(m.factors)}};
    if (m.m0) mod["m0"] = *m.m0;
    json problem = {{"dimension", c.problem.dimension}, {"alpha", c.problem.alpha}, {"gamma", c.problem.gamma},
                    {"m0", c.problem.m0}, {"atoms", atoms}, {"modulation", mod}};
    if (c.problem.eta) problem["eta"] = *c.problem.eta;
    json probes = json::array();
    for (const auto& p : c.validation.probes) probes.push_back(p);
    return {
        {"name", c.name},
        {"problem", problem},
        {"grid", {{"half_width", c.grid.half_width}, {"points", c.grid.points}}},
        {"time",
         {{"horizon", c.time.horizon}, {"intervals", c.time.intervals}, {"grading", c.time.grading},
          {"anchors", c.time.anchors}}},
        {"series",
         {{"theta", c.series.theta}, {"max_terms", c.series.max_terms}, {"tail_tolerance", c.series.tail_tolerance},
          {"quadrature_tolerance", c.series.quadrature_tolerance}}},
        {"validation",
         {{"checks", c.validation.checks}, {"tolerances", c.validation.tolerances}, {"probes", probes},
          {"fit_min_time", c.validation.fit_min_time}, {"bump_width", c.validation.bump_width}}},
        {"output", {{"directory", c.output.directory}, {"formats", c.output.formats}}},
    };
}

std::string config_hash(const ExperimentConfig& config) {
    auto j = to_json(config);
    j.erase("output");
    j.erase("name");
    return sha256_hex(j.dump());
}

}  // namespace anisoheat
