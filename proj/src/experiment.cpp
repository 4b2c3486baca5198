#include "anisoheat/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "anisoheat/comparison_kernel.hpp"
#include "anisoheat/digest.hpp"
#include "anisoheat/frozen_kernel.hpp"
#include "anisoheat/kernel_cache.hpp"
#include "anisoheat/report_io.hpp"

namespace anisoheat {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string at(const std::string& name, double t) { return name + "@" + fmt(t); }

double sup_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Frozen kernels for the stored slices at every node, from the cache when
// possible and from the frozen symbol otherwise. Matches evaluate_frozen().values.
class FrozenTable {
public:
    FrozenTable(const SymbolEvaluator& symbol, const SpatialGrid& grid, const TimeMesh& mesh,
                std::vector<std::size_t> slices)
        : symbol_(symbol), grid_(grid), mesh_(mesh), fft_(grid), slices_(std::move(slices)) {}

    void fill(const KernelCache* cache, const std::string& hash) {
        table_.assign(mesh_.nodes().size(), {});
        std::vector<std::size_t> missing;
        for (std::size_t n = 0; n < table_.size(); ++n) {
            auto e = cache ? cache->load(n) : std::nullopt;
            if (!e) {
                missing.push_back(n);
                continue;
            }
            const bool same = e->points == grid_.size() && e->slices.size() == slices_.size() &&
                              std::equal(slices_.begin(), slices_.end(), e->slices.begin()) && e->time == mesh_[n];
            if (!same) throw Error(ErrorCode::CacheCorrupt, cache->entry_path(n).string() + ": layout mismatch");
            table_[n] = std::move(e->values);
        }
        if (missing.empty()) return;
        for (std::size_t n : missing) table_[n].resize(slices_.size() * grid_.size());
        // one symbol evaluation per base point serves every node
        for (std::size_t k = 0; k < slices_.size(); ++k) {
            const auto q = symbol_on_grid(symbol_, grid_.point(slices_[k]), grid_);
            for (std::size_t n : missing) {
                const auto v = invert(q, mesh_[n]);
                std::copy(v.begin(), v.end(), table_[n].begin() + static_cast<std::ptrdiff_t>(k * grid_.size()));
            }
        }
        if (!cache) return;
        for (std::size_t n : missing) {
            KernelCacheEntry e;
            e.config_hash = hash;
            e.node = n;
            e.time = mesh_[n];
            e.slices.assign(slices_.begin(), slices_.end());
            e.points = grid_.size();
            e.values = table_[n];
            cache->store(e);
        }
    }

    std::vector<double> get(std::size_t node, std::size_t y) const {
        const auto it = std::find(slices_.begin(), slices_.end(), y);
        if (it == slices_.end() || table_.at(node).empty()) return compute(node, y);
        const auto k = static_cast<std::size_t>(it - slices_.begin());
        const auto first = table_[node].begin() + static_cast<std::ptrdiff_t>(k * grid_.size());
        return {first, first + static_cast<std::ptrdiff_t>(grid_.size())};
    }

private:
    std::vector<double> compute(std::size_t n, std::size_t y) const {
        return invert(symbol_on_grid(symbol_, grid_.point(y), grid_), mesh_[n]);
    }

    // Inverse transform of e^{−tq}; the t = 0 node is the grid delta.
    std::vector<double> invert(const std::vector<double>& q, double t) const {
        if (t == 0.0) {
            std::vector<double> delta(grid_.size(), 0.0);
            delta[grid_.origin_index()] = 1.0 / grid_.cell_volume();
            return delta;
        }
        std::vector<Complex> spec(q.size());
        for (std::size_t k = 0; k < q.size(); ++k) spec[k] = std::exp(-t * q[k]);
        return fft_.inverse(std::move(spec));
    }

    const SymbolEvaluator& symbol_;
    const SpatialGrid& grid_;
    const TimeMesh& mesh_;
    Fft fft_;
    std::vector<std::size_t> slices_;
    std::vector<std::vector<double>> table_;
};

std::optional<std::size_t> node_at(const TimeMesh& mesh, double t) {
    if (!mesh.contains(t)) return std::nullopt;
    return mesh.index_of(t);
}

// Sample pairs (x₁, x₂) around the origin at a few separations.
std::vector<std::pair<std::size_t, std::size_t>> holder_pairs(const SpatialGrid& grid) {
    const std::size_t n = grid.points();
    const std::size_t o = grid.origin_index();
    const std::size_t step = grid.dimension() == 1 ? 1 : n;  // along the first axis
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t sep : {std::size_t{1}, std::size_t{4}, n / 16, n / 4}) {
        if (sep == 0 || o + sep * step >= grid.size()) continue;
        pairs.emplace_back(o, o + sep * step);
        if (o >= sep * step) pairs.emplace_back(o - sep * step, o);
    }
    return pairs;
}

}  // namespace

ExportMode parse_export_mode(const std::string& s) {
    if (s == "all") return ExportMode::All;
    if (s == "kernels") return ExportMode::Kernels;
    if (s == "report") return ExportMode::Report;
    throw Error(ErrorCode::ConfigInvalid, "--export: expected all, kernels or report");
}

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ConfigInvalid:
            return 2;
        case ErrorCode::CacheCorrupt:
        case ErrorCode::IoFailure:
            return 4;
        default:
            return 3;
    }
}

std::size_t nearest_index(const SpatialGrid& grid, std::span<const double> x) {
    const auto n = static_cast<long>(grid.points());
    std::size_t flat = 0;
    for (double c : x) {
        long i = std::lround((c + grid.half_width()) / grid.spacing());
        i = ((i % n) + n) % n;
        flat = flat * grid.points() + static_cast<std::size_t>(i);
    }
    return flat;
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
    const auto start = Clock::now();
    RunResult res;
    res.config_hash = config_hash(cfg);
    auto& report = res.report;

    const JumpKernel kernel = cfg.kernel();
    const SymbolEvaluator symbol(kernel);
    const SpatialGrid grid = cfg.spatial_grid();
    const TimeMesh mesh = cfg.time_mesh();
    SeriesControls controls = cfg.series;
    controls.theta = cfg.theta();
    ParametrixEngine engine(symbol, grid, mesh, controls);

    const std::size_t d = grid.dimension();
    const double alpha = kernel.alpha();
    const double gamma = kernel.params().gamma;
    const double theta = engine.theta();
    const double T = mesh.horizon();
    const auto g = ComparisonKernel::g(d, alpha, alpha + gamma);
    const bool constant = kernel.modulation().family() == ModulationFamily::Constant;

    std::vector<std::size_t> slices;
    for (const auto& p : cfg.validation.probes) {
        const std::size_t i = nearest_index(grid, p);
        if (std::find(slices.begin(), slices.end(), i) == slices.end()) slices.push_back(i);
    }
    if (slices.empty()) slices = engine.all_points();
    const bool full = slices.size() == grid.size();

    // frozen kernels
    auto t0 = Clock::now();
    std::optional<KernelCache> cache;
    if (opt.cache_dir) cache.emplace(*opt.cache_dir, res.config_hash);
    FrozenTable frozen(symbol, grid, mesh, slices);
    frozen.fill(cache ? &*cache : nullptr, res.config_hash);
    engine.set_frozen_provider([&frozen](std::size_t n, std::size_t y) { return frozen.get(n, y); });
    res.times.frozen = seconds_since(t0);
    if (cache) {
        res.cache_hits = cache->hits();
        res.cache_misses = cache->misses();
    }

    t0 = Clock::now();
    const auto calibration = engine.calibrate(slices);
    const auto series = engine.assemble(slices, calibration);
    res.times.series = seconds_since(t0);

    t0 = Clock::now();
    const auto volterra = engine.duhamel(slices);
    res.times.volterra = seconds_since(t0);

    t0 = Clock::now();
    const std::size_t last = mesh.intervals();
    std::vector<std::size_t> anchor_nodes;
    for (double a : cfg.time.anchors) anchor_nodes.push_back(mesh.index_of(a));
    if (std::find(anchor_nodes.begin(), anchor_nodes.end(), last) == anchor_nodes.end()) anchor_nodes.push_back(last);
    std::sort(anchor_nodes.begin(), anchor_nodes.end());
    std::vector<std::size_t> fit_nodes;
    for (std::size_t n = 1; n <= last; ++n) {
        if (mesh[n] >= cfg.validation.fit_min_time) fit_nodes.push_back(n);
    }
    std::vector<std::size_t> fit_anchors;
    for (std::size_t n : anchor_nodes) {
        if (mesh[n] >= cfg.validation.fit_min_time) fit_anchors.push_back(n);
    }

    report.constants["series_terms"] = series.terms;
    report.constants["series_tail_bound"] = series.tail_bound;
    report.constants["theta"] = theta;

    if (cfg.check_enabled("degeneration") && constant) {
        const auto p0 = engine.zero_order(slices);
        const auto phi = engine.phi(slices);
        double phi_sup = 0.0;
        double p0_sup = 0.0;
        double diff = 0.0;
        for (std::size_t n = 1; n <= last; ++n) {
            phi_sup = std::max(phi_sup, phi.sup(n));
            p0_sup = std::max(p0_sup, p0.sup(n));
            for (std::size_t s = 0; s < slices.size(); ++s) {
                const auto a = series.p.slice(n, s);
                const auto b = p0.slice(n, s);
                for (std::size_t j = 0; j < a.size(); ++j) diff = std::max(diff, std::abs(a[j] - b[j]));
            }
        }
        const double tol = cfg.tolerance("degeneration");
        report.add("degeneration.phi", phi_sup / p0_sup, "<=", tol, "max |Phi| / sup p0");
        report.add("degeneration.p_minus_p0", diff / p0_sup, "<=", tol, "sup |p - p0| / sup p0");
    }

    if (cfg.check_enabled("mass")) {
        const double tol = cfg.tolerance("mass");
        for (double t : {0.5, 1.0}) {
            const auto n = node_at(mesh, t);
            if (!n) continue;
            if (full) report.add(at("mass.series", t), mass_defect(series.p, grid, *n), "<=", tol);
            report.add(at("mass.volterra", t), mass_defect(volterra, grid, *n), "<=", tol);
        }
    }

    if (cfg.check_enabled("chapman_kolmogorov") && full) {
        const auto half = node_at(mesh, 0.5);
        const auto one = node_at(mesh, 1.0);
        if (half && one) {
            report.add("chapman_kolmogorov@0.5+0.5", chapman_kolmogorov_defect(series.p, grid, *half, *half, *one), "<=",
                       cfg.tolerance("chapman_kolmogorov"), "sup residual / sup p_1");
        }
    }

    if (cfg.check_enabled("pde_residual")) {
        double worst = 0.0;
        std::size_t used = 0;
        for (std::size_t n = 1; n < last; ++n) {
            if (mesh[n] < 0.25 || mesh[n] > 1.0) continue;
            worst = std::max(worst, pde_residual_ratio(series.p, engine.generator(), g, n));
            ++used;
        }
        if (used > 0) {
            report.add("pde_residual", worst, "<=", cfg.tolerance("pde_residual"),
                       "max |(d_t - L)p| / (G/t) over " + std::to_string(used) + " interior nodes in [0.25, 1]");
        }
    }

    if (cfg.check_enabled("cross_method")) {
        double gap = 0.0;
        for (std::size_t n : anchor_nodes) gap = std::max(gap, cross_method_gap(series.p, volterra, n));
        report.add("cross_method.gap", gap, "<=", cfg.tolerance("cross_method"), "max over anchor times");
        if (!constant && mesh.intervals() % 2 == 0) {
            const ParametrixEngine coarse(symbol, grid, mesh.coarsened(), controls);
            const auto cs = coarse.assemble(slices, coarse.calibrate(slices));
            const auto cv = coarse.duhamel(slices);
            const double coarse_gap = cross_method_gap(cs.p, cv, coarse.mesh().intervals());
            const double fine_gap = cross_method_gap(series.p, volterra, last);
            report.constants["cross_method.gap_coarse"] = coarse_gap;
            report.constants["cross_method.gap_fine"] = fine_gap;
            report.add("cross_method.halving_ratio", coarse_gap / fine_gap, ">=", cfg.tolerance("cross_method_ratio"),
                       "gap at T on M/2 over gap on M");
        }
    }

    if (cfg.check_enabled("series_decay") && !calibration.ratios.empty()) {
        report.constants["C1"] = calibration.c1;
        report.constants["C2"] = calibration.c2;
        for (std::size_t k = 0; k < calibration.ratios.size(); ++k) {
            report.constants["series_ratio." + std::to_string(k + 1)] = calibration.ratios[k];
            report.constants["series_ratio_model." + std::to_string(k + 1)] = calibration.predicted_ratios[k];
        }
        report.add("series_decay.spread", calibration.ratio_spread, "<=", cfg.tolerance("series_decay"),
                   "two-sided factor between measured and model term ratios");
    }

    if (cfg.check_enabled("initial_condition")) {
        std::vector<double> f(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const Vec x = grid.point(j);
            double r2 = 0.0;
            for (double c : x) r2 += c * c;
            f[j] = std::exp(-r2 / (cfg.validation.bump_width * cfg.validation.bump_width));
        }
        const SpaceTimeKernel& p = full ? series.p : volterra;
        std::vector<double> errs;
        for (double t : {0.2, 0.1, 0.05}) {
            const auto n = node_at(mesh, t);
            if (!n) continue;
            errs.push_back(initial_condition_error(p, grid, f, *n));
            report.constants[at("initial_condition", t)] = errs.back();
        }
        if (errs.size() == 3) {
            report.add("initial_condition.monotone", std::max(errs[1] / errs[0], errs[2] / errs[1]), "<=", 1.0,
                       "largest ratio of consecutive errors at t = 0.2, 0.1, 0.05");
            report.add("initial_condition@0.05", errs[2] / sup_abs(f), "<=", cfg.tolerance("initial_condition"),
                       "sup error / sup f, bump width " + fmt(cfg.validation.bump_width));
        }
    }

    if (cfg.check_enabled("nonnegativity")) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t n : fit_nodes) {
            worst = std::min({worst, minimum_value(series.p, n) / series.p.sup(n), minimum_value(volterra, n) / volterra.sup(n)});
        }
        if (!fit_nodes.empty()) {
            report.add("nonnegativity", -worst, "<=", cfg.tolerance("nonnegativity"),
                       "-min p / sup p for t >= " + fmt(cfg.validation.fit_min_time));
        }
    }

    if (cfg.check_enabled("subconvolution")) {
        const double s_list[] = {0.25 * T, 0.5 * T, 0.75 * T};
        const double beta = alpha + gamma;
        if (beta > static_cast<double>(d) && beta < static_cast<double>(d) + 2.0) {
            const auto r = subconvolution_check(g, T, s_list, grid);
            report.constants["C_G"] = r.constant;
            report.add("subconvolution.G.nonfinite", static_cast<double>(r.nonfinite), "<=", 0.0);
            report.add("subconvolution.G.spread", r.constant / r.min_ratio, "<=", cfg.tolerance("subconvolution_spread"),
                       "max ratio / min ratio");
        }
        const auto h = ComparisonKernel::h(d, alpha, gamma, theta);
        const auto r = subconvolution_check(h, T, s_list, grid);
        report.constants["C_H"] = r.constant;
        report.add("subconvolution.H.nonfinite", static_cast<double>(r.nonfinite), "<=", 0.0);
        report.add("subconvolution.H.constant", r.constant, "finite", 0.0);
    }

    if (cfg.check_enabled("bounds") && !fit_nodes.empty()) {
        const auto rates = default_rate_grid();
        const auto up = upper_bound_fit(series.p, grid, g, fit_nodes, rates);
        report.constants["C_upper"] = up.constant;
        report.constants["c_upper"] = up.rate;
        report.add("bounds.upper", up.constant, "finite", 0.0, "|d_t^k p| <= C t^-k e^{ct} G, k = 0, 1");

        const auto pairs = holder_pairs(grid);
        const auto hold = holder_in_x_check(series.p, grid, g, pairs, fit_nodes, theta, up.rate);
        report.constants["C_holder_x"] = hold.constant;
        report.add("bounds.holder_x", hold.constant, "finite", 0.0);

        const double eta = cfg.problem.eta.value_or(kernel.modulation().eta());
        const auto phi = engine.phi(slices);
        const auto phi_fit = ratio_fit(phi, fit_nodes, [&](double t, std::size_t x, std::size_t y) {
            const double r = grid_distance(grid, x, y);
            return std::min(1.0, std::pow(r, eta)) * g(t, r) / t;
        });
        report.constants["C_Phi"] = phi_fit.constant;
        report.add("bounds.phi", phi_fit.constant, "finite", 0.0);

        auto psi_fit = ratio_fit(series.psi, fit_nodes, [&](double t, std::size_t x, std::size_t y) {
            return std::pow(t, -1.0 + theta / alpha) * ComparisonKernel::h(d, alpha, gamma, theta)(t, grid_distance(grid, x, y));
        });
        choose_rate(psi_fit, rates);
        report.constants["C_Psi"] = psi_fit.constant;
        report.constants["c_Psi"] = psi_fit.rate;
        report.add("bounds.psi", psi_fit.constant, "finite", 0.0);

        const auto& b = engine.generator().modulation_profile();
        const std::size_t lo = static_cast<std::size_t>(std::min_element(b.begin(), b.end()) - b.begin());
        const std::size_t hi = static_cast<std::size_t>(std::max_element(b.begin(), b.end()) - b.begin());
        const std::vector<Vec> zs = {grid.point(grid.origin_index()), grid.point(lo), grid.point(hi)};
        std::vector<double> fit_times;
        for (std::size_t n : fit_anchors) fit_times.push_back(mesh[n]);
        const double fb = frozen_bound_fit(symbol, grid, zs, fit_times);
        report.constants["C_frozen"] = fb;
        report.add("bounds.frozen", fb, "finite", 0.0);
        const std::vector<std::pair<Vec, Vec>> base_pairs = {{zs[0], zs[1]}, {zs[1], zs[2]}, {zs[0], zs[2]}};
        const double fh = frozen_base_holder_fit(symbol, grid, base_pairs, fit_times, theta);
        report.constants["C_frozen_base_holder"] = fh;
        report.add("bounds.frozen_base_holder", fh, "finite", 0.0);

        std::vector<std::size_t> ys = {slices.front(), slices[slices.size() / 2], slices.back()};
        const double ca = generator_estimate_fit(engine, alpha + gamma, ys, fit_anchors);
        report.constants["c_A"] = ca;
        report.add("bounds.generator", ca, "finite", 0.0);
        const auto canc = cancellation_fit(engine, fit_anchors);
        report.constants["C_cancellation"] = canc.constant;
        report.add("bounds.cancellation", canc.constant, "finite", 0.0);
    }
    res.times.checks = seconds_since(t0);

    // metadata and the tolerances that shaped the numbers
    auto& meta = report.metadata;
    meta["name"] = cfg.name;
    meta["config_hash"] = res.config_hash;
    meta["dimension"] = std::to_string(d);
    meta["grid"] = "R=" + fmt(grid.half_width()) + " N=" + std::to_string(grid.points()) + " h=" + fmt(grid.spacing());
    meta["mesh"] = "T=" + fmt(T) + " M=" + std::to_string(mesh.intervals()) + " rho=" + fmt(cfg.time.grading);
    meta["slices"] = full ? "all" : std::to_string(slices.size()) + " probes";
    meta["interpolation_nodes"] = std::to_string(engine.interpolation_nodes());
    meta["fit_range"] = "fitted constants are certified for t in [" + fmt(cfg.validation.fit_min_time) + ", " + fmt(T) +
                        "] only";
    meta["threads"] = "1";
    meta["frozen_source"] = res.cache_hits > 0 ? "cache" : "computed";
    report.tolerances = cfg.validation.tolerances;
    report.tolerances["series.tail_tolerance"] = controls.tail_tolerance;
    report.tolerances["series.quadrature_tolerance"] = controls.quadrature_tolerance;
    report.tolerances["engine.interpolation_tolerance"] = EngineOptions{}.interpolation_tolerance;
    report.tolerances["fit.majorant_floor"] = 1e-12;
    report.tolerances["fit.min_time"] = cfg.validation.fit_min_time;
    report.tolerances["fit.rate_max"] = default_rate_grid().back();

    res.exit_code = report.passed() ? 0 : 1;

    if (opt.write_files) {
        const auto out = opt.output_dir.value_or(std::filesystem::path(cfg.output.directory));
        const bool csv = std::find(cfg.output.formats.begin(), cfg.output.formats.end(), "csv") != cfg.output.formats.end();
        const bool js = std::find(cfg.output.formats.begin(), cfg.output.formats.end(), "json") != cfg.output.formats.end();
        if (csv && opt.export_mode != ExportMode::Report) {
            for (std::size_t n : anchor_nodes) {
                const std::string t = fmt(mesh[n]);
                const std::vector<std::size_t> one = {n};
                res.files.push_back(out / "kernels" / ("p_series_t" + t + ".csv"));
                write_kernel_csv(res.files.back(), series.p, grid, one);
                res.files.push_back(out / "kernels" / ("p_volterra_t" + t + ".csv"));
                write_kernel_csv(res.files.back(), volterra, grid, one);
                res.files.push_back(out / "kernels" / ("frozen_t" + t + ".csv"));
                write_frozen_csv(res.files.back(), mesh[n], engine.frozen(n, slices.front()), grid, slices.front());
            }
        }
        if (js && opt.export_mode != ExportMode::Kernels) {
            ReportDocument doc{res.exit_code == 0 ? "PASS" : "FAIL", res.config_hash, report};
            res.files.push_back(out / "report.json");
            write_json(res.files.back(), to_json(doc));
        }
        res.times.total = seconds_since(start);
        json files = json::array();
        for (const auto& f : res.files) {
            files.push_back({{"path", std::filesystem::relative(f, out).generic_string()},
                             {"sha256", sha256_file(f)},
                             {"bytes", std::filesystem::file_size(f)}});
        }
        json manifest = {
            {"config_hash", res.config_hash},
            {"config", to_json(cfg)},
            {"status", res.exit_code == 0 ? "PASS" : "FAIL"},
            {"exit_code", res.exit_code},
            {"files", files},
            {"timings_seconds",
             {{"frozen", res.times.frozen},
              {"series", res.times.series},
              {"volterra", res.times.volterra},
              {"checks", res.times.checks},
              {"total", res.times.total}}},
            {"cache",
             {{"enabled", cache.has_value()},
              {"directory", cache ? cache->directory().string() : ""},
              {"hits", res.cache_hits},
              {"misses", res.cache_misses}}},
            {"threads_requested", opt.threads},
            {"threads_used", 1},
        };
        write_json(out / "manifest.json", manifest);
    } else {
        res.times.total = seconds_since(start);
    }
    return res;
}

}  // namespace anisoheat
