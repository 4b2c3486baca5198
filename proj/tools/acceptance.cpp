// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anisoheat/experiment.hpp"
#include "anisoheat/frozen_kernel.hpp"

using namespace anisoheat;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

const CheckResult* find(const ValidationReport& r, const std::string& name) {
    for (const auto& c : r.checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

// Every named check present and passing; detail lists the values.
Outcome checks(const ValidationReport& r, const std::vector<std::string>& names) {
    Outcome o{true, {}};
    for (const auto& n : names) {
        const auto* c = find(r, n);
        if (!c) {
            o.pass = false;
            o.detail += n + "=missing ";
            continue;
        }
        o.pass = o.pass && c->pass;
        o.detail += n + "=" + fmt(c->value) + " ";
    }
    return o;
}

// Constants finite and within rel of the refined run.
Outcome stable(const ValidationReport& coarse, const ValidationReport& fine, const std::vector<std::string>& names,
               double rel) {
    Outcome o{true, {}};
    for (const auto& n : names) {
        const double a = coarse.constants.count(n) ? coarse.constants.at(n) : NAN;
        const double b = fine.constants.count(n) ? fine.constants.at(n) : NAN;
        const double change = std::abs(b / a - 1.0);
        const bool ok = std::isfinite(a) && std::isfinite(b) && a > 0.0 && change <= rel;
        o.pass = o.pass && ok;
        o.detail += n + " " + fmt(a) + "->" + fmt(b) + (ok ? " " : "(!) ");
    }
    return o;
}

json atoms_1d() {
    return {{{"direction", {1.0}}, {"weight", 1.0 / kPi}}, {{"direction", {-1.0}}, {"weight", 1.0 / kPi}}};
}

json cosine03(std::size_t points) {
    return {{"name", "cosine03"},
            {"problem",
             {{"dimension", 1},
              {"alpha", 1.0},
              {"atoms", atoms_1d()},
              {"modulation", {{"family", "cosine"}, {"amplitude", 0.3}, {"wave_vector", {2.0 * kPi / 10.0}}}}}},
            {"grid", {{"half_width", 40.0}, {"points", points}}},
            {"time", {{"horizon", 1.0}, {"intervals", 64}, {"grading", 2.0}}},
            {"series", {{"theta", 0.5}}}};
}

json constant_1d() {
    auto doc = cosine03(256);
    doc["name"] = "constant";
    doc["problem"]["modulation"] = {{"family", "constant"}};
    doc["time"]["intervals"] = 32;
    doc["validation"] = {{"checks", {"degeneration"}}};
    return doc;
}

json smoke_2d(const std::string& family) {
    json atoms = json::array();
    for (const auto& d : {json{1.0, 0.0}, json{-1.0, 0.0}, json{0.0, 1.0}, json{0.0, -1.0}}) {
        atoms.push_back({{"direction", d}, {"weight", 0.5}});
    }
    json mod = {{"family", family}};
    if (family == "cosine") {
        mod["amplitude"] = 0.3;
        mod["wave_vector"] = {2.0 * kPi / 10.0, 2.0 * kPi / 10.0};
    }
    json tol;
    for (const auto& [k, v] : default_tolerances()) tol[k] = v * 5.0;
    return {{"name", "smoke2d"},
            {"problem", {{"dimension", 2}, {"alpha", 1.5}, {"atoms", atoms}, {"modulation", mod}}},
            {"grid", {{"half_width", 20.0}, {"points", 128}}},
            {"time", {{"horizon", 1.0}, {"intervals", 32}, {"grading", 2.0}}},
            {"validation",
             {{"checks", family == "constant" ? json{"degeneration"} : json{"mass", "pde_residual"}},
              {"tolerances", tol},
              {"probes", {{0.0, 0.0}, {1.25, 0.0}, {0.0, -2.5}, {3.75, 3.75}, {-5.0, 2.5}}}}}};
}

ValidationReport run(const json& doc) {
    RunOptions opt;
    opt.write_files = false;
    return run_experiment(parse_config(doc), opt).report;
}

Outcome cauchy_oracle() {
    const JumpKernel cauchy(SpectralMeasure(1, {{{1.0}, 1.0 / kPi}, {{-1.0}, 1.0 / kPi}}), {1, 1.0, 1.0, 2.0},
                            Modulation::constant());
    const SymbolEvaluator s(cauchy);
    const SpatialGrid grid(1, 40.0, 2048);
    FrozenOptions o;
    o.free_space = true;
    const double origin[] = {0.0};
    double worst = 0.0;
    for (double t : {0.5, 1.0, 2.0}) {
        const auto k = evaluate_frozen(s, origin, t, grid, o);
        const auto free = k.free_space_values();
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double x = grid.coordinate(j);
            if (std::abs(x) > 20.0) continue;
            const double exact = t / (kPi * (t * t + x * x));
            worst = std::max(worst, std::abs(free[grid.difference_index(j, grid.origin_index())] / exact - 1.0));
        }
    }
    return {worst <= 1e-4, "max rel err " + fmt(worst) + " (tol 1e-4)"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria 1-11"};
    bool strict = false;
    app.add_flag("--strict", strict, "Exit 1 when any criterion fails");
    CLI11_PARSE(app, argc, argv);

    int failed = 0;
    const auto line = [&](int id, const std::string& name, const std::function<Outcome()>& body) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::printf("%s %2d %-22s %s[%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    };

    ValidationReport base;
    ValidationReport fine;

    line(1, "cauchy-oracle", cauchy_oracle);
    line(2, "degeneration", [] { return checks(run(constant_1d()), {"degeneration.phi", "degeneration.p_minus_p0"}); });
    line(3, "mass", [&] {
        base = run(cosine03(256));
        return checks(base, {"mass.series@0.5", "mass.volterra@0.5", "mass.series@1", "mass.volterra@1"});
    });
    line(4, "chapman-kolmogorov", [&] { return checks(base, {"chapman_kolmogorov@0.5+0.5"}); });
    line(5, "pde-residual", [&] { return checks(base, {"pde_residual"}); });
    line(6, "cross-method", [&] { return checks(base, {"cross_method.gap", "cross_method.halving_ratio"}); });
    line(7, "series-decay", [&] { return checks(base, {"series_decay.spread"}); });
    line(8, "subconvolution", [&] {
        auto doc = cosine03(512);
        doc["validation"] = {{"checks", {"subconvolution", "bounds"}}};
        fine = run(doc);
        auto o = checks(base, {"subconvolution.G.nonfinite", "subconvolution.H.nonfinite", "subconvolution.G.spread"});
        const auto s = stable(base, fine, {"C_G", "C_H"}, 0.10);
        return Outcome{o.pass && s.pass, o.detail + s.detail};
    });
    line(9, "bound-fits", [&] {
        return stable(base, fine,
                      {"C_upper", "C_holder_x", "C_Phi", "C_Psi", "C_frozen", "C_frozen_base_holder", "c_A",
                       "C_cancellation"},
                      0.20);
    });
    line(10, "initial-condition", [&] { return checks(base, {"initial_condition.monotone", "initial_condition@0.05"}); });
    line(11, "d2-smoke", [] {
        const auto start = std::chrono::steady_clock::now();
        auto a = checks(run(smoke_2d("constant")), {"degeneration.phi", "degeneration.p_minus_p0"});
        auto b = checks(run(smoke_2d("cosine")), {"mass.volterra@0.5", "mass.volterra@1", "pde_residual"});
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return Outcome{a.pass && b.pass && secs <= 600.0, a.detail + b.detail};
    });

    std::printf("%d of 11 criteria failed\n", failed);
    return strict && failed > 0 ? 1 : 0;
}
