#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "anisoheat/errors.hpp"
#include "anisoheat/validation.hpp"

using namespace anisoheat;

namespace {

constexpr double kPi = std::numbers::pi;

JumpKernel cauchy(Modulation m = Modulation::constant()) {
    return JumpKernel(SpectralMeasure(1, {{{1.0}, 1.0 / kPi}, {{-1.0}, 1.0 / kPi}}), {1, 1.0, 1.0, 2.0}, std::move(m));
}

const double kAnchors[] = {0.25, 0.5, 1.0};

}  // namespace

TEST_CASE("comparison kernel values") {
    const auto g = ComparisonKernel::g(1, 1.0, 2.5);
    const double origin[] = {0.0};
    const double two[] = {2.0};
    CHECK(comparison_kernel_eval(g, 1.0, origin) == 1.0);
    CHECK(comparison_kernel_eval(g, 1.0, two) == doctest::Approx(std::pow(2.0, -2.5)).epsilon(1e-15));
    CHECK(comparison_kernel_eval(g, 1.0, two) == doctest::Approx(0.176777).epsilon(1e-6));
    CHECK_THROWS_AS(comparison_kernel_eval(g, 0.0, two), Error);

    // inside the core H = (t^{−ζ/α} ∧ 1) G^{(κ+α−ζ)}
    const auto h = ComparisonKernel::h(1, 1.2, 1.0, 0.5);
    const auto gs = ComparisonKernel::g(1, 1.2, 1.0 + 1.2 - 0.5);
    for (double t : {0.3, 1.0, 2.5}) {
        for (double r : {0.0, 0.3 * std::pow(t, 1.0 / 1.2), std::pow(t, 1.0 / 1.2)}) {
            CHECK(h(t, r) == doctest::Approx(std::min(std::pow(t, -0.5 / 1.2), 1.0) * gs(t, r)).epsilon(1e-14));
        }
    }

    // G_t(x) = t^{−d/α} G_1(t^{−1/α} x)
    const auto g2 = ComparisonKernel::g(2, 1.5, 3.0);
    for (double t : {0.1, 0.7, 3.0}) {
        for (double r : {0.0, 0.2, 1.0, 9.0}) {
            const double x[] = {r * 0.6, r * 0.8};
            const double xs[] = {x[0] * std::pow(t, -1.0 / 1.5), x[1] * std::pow(t, -1.0 / 1.5)};
            CHECK(comparison_kernel_eval(g2, t, x) ==
                  doctest::Approx(std::pow(t, -2.0 / 1.5) * comparison_kernel_eval(g2, 1.0, xs)).epsilon(1e-13));
        }
    }
    CHECK_THROWS_AS(ComparisonKernel::h(1, 1.0, 1.0, 1.0), Error);
}

TEST_CASE("comparison kernel integrals") {
    // ∫G = ω_d (1/d + 1/(β − d)), independent of t
    for (std::size_t d : {1u, 2u}) {
        const double beta = static_cast<double>(d) + 0.7;
        const auto g = ComparisonKernel::g(d, 1.3, beta);
        const double omega = d == 1 ? 2.0 : 2.0 * kPi;
        const double exact = omega * (1.0 / static_cast<double>(d) + 1.0 / 0.7);
        for (double t : {0.5, 1.0, 2.0}) CHECK(std::abs(comparison_integral(g, t) / exact - 1.0) < 1e-4);
    }
    const auto h = ComparisonKernel::h(1, 1.0, 1.0, 0.5);
    double top = 0.0;
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
        const double v = comparison_integral(h, t);
        CHECK(std::isfinite(v));
        top = std::max(top, v);
    }
    CHECK(top < 20.0);
    CHECK_THROWS_AS(comparison_integral(ComparisonKernel::g(1, 1.0, 1.0), 1.0), Error);
}

TEST_CASE("sub-convolution of G") {
    const auto g = ComparisonKernel::g(1, 1.0, 2.0);
    const double s_list[] = {0.25, 0.5, 0.75};
    const auto coarse = subconvolution_check(g, 1.0, s_list, SpatialGrid(1, 40.0, 2048));
    const auto fine = subconvolution_check(g, 1.0, s_list, SpatialGrid(1, 40.0, 4096));
    CHECK(coarse.nonfinite == 0);
    CHECK(coarse.samples > 0);
    CHECK(coarse.constant / coarse.min_ratio <= 10.0);
    CHECK(coarse.min_ratio > 0.0);
    for (std::size_t i = 0; i < coarse.origin_ratios.size(); ++i) {
        CHECK(std::abs(fine.origin_ratios[i] / coarse.origin_ratios[i] - 1.0) < 0.1);
    }
    CHECK(std::abs(fine.constant / coarse.constant - 1.0) < 0.1);

    const auto h = ComparisonKernel::h(1, 1.0, 1.0, 0.5);
    const auto hr = subconvolution_check(h, 1.0, s_list, SpatialGrid(1, 40.0, 2048));
    CHECK(hr.nonfinite == 0);
    CHECK(std::isfinite(hr.constant));

    auto bad = h;
    bad.zeta = 1.0;
    CHECK_THROWS_AS(subconvolution_check(bad, 1.0, s_list, SpatialGrid(1, 40.0, 256)), Error);
    const auto wide = ComparisonKernel::g(1, 1.0, 3.5);
    CHECK_THROWS_AS(subconvolution_check(wide, 1.0, s_list, SpatialGrid(1, 40.0, 256)), Error);
}

TEST_CASE("rate selection") {
    ScannedFit f;
    f.times = {0.5, 1.0};
    f.per_time = {1.0, std::exp(0.5)};
    choose_rate(f, default_rate_grid());
    // every c in [0, 1] gives the majorant e^{0.5} at t = 1; larger c give more
    CHECK(f.constant * std::exp(f.rate) == doctest::Approx(std::exp(0.5)).epsilon(1e-12));
    CHECK(default_rate_grid().size() == 21);
    CHECK(default_rate_grid().back() == doctest::Approx(2.0));
}

TEST_CASE("bound fits for a constant kernel") {
    const SymbolEvaluator s(cauchy());
    const SpatialGrid grid(1, 20.0, 256);
    const TimeMesh mesh(1.0, 16, 2.0, kAnchors);
    const ParametrixEngine e(s, grid, mesh);
    const auto p0 = e.zero_order(e.all_points());
    const auto g = ComparisonKernel::g(1, 1.0, 2.0);
    const std::size_t nodes[] = {mesh.index_of(0.25), mesh.index_of(0.5), mesh.index_of(1.0)};
    const auto fit = upper_bound_fit(p0, grid, g, nodes, default_rate_grid());
    CHECK(fit.value.nonfinite == 0);
    CHECK(fit.derivative.times.size() == 2);  // last node has no centered stencil

    std::vector<double> times;
    for (std::size_t n : nodes) times.push_back(mesh[n]);
    const double frozen = frozen_bound_fit(s, grid, {Vec{0.0}}, times);
    // the frozen fit also covers ∂_x; the k = 0 part must agree exactly
    CHECK(fit.value.per_time.back() <= frozen * (1.0 + 1e-12));
    CHECK(fit.value.per_time.back() > 0.3 * frozen);
    CHECK(fit.constant <= 1.1 * frozen);

    const std::pair<std::size_t, std::size_t> same[] = {{10, 10}};
    CHECK(holder_in_x_check(p0, grid, g, same, nodes, 0.5, 0.0).constant == 0.0);
    const std::pair<std::size_t, std::size_t> pairs[] = {{120, 121}, {128, 136}, {100, 140}};
    const auto hf = holder_in_x_check(p0, grid, g, pairs, nodes, 0.5, fit.rate);
    CHECK(std::isfinite(hf.constant));
    CHECK(hf.constant > 0.0);

    CHECK(mass_defect(p0, grid, mesh.index_of(1.0)) < 1e-10);
    CHECK(minimum_value(p0, mesh.index_of(1.0)) > -1e-12);
    CHECK(grid_distance(grid, 0, grid.size() - 1) == doctest::Approx(grid.spacing()));
}

TEST_CASE("kernel property checks") {
    const SymbolEvaluator s(cauchy(Modulation::cosine(0.3, {2.0 * kPi / 10.0})));
    const SpatialGrid grid(1, 10.0, 64);
    const double anchors[] = {0.25, 0.5, 1.0};
    const TimeMesh mesh(1.0, 32, 2.0, anchors);
    const ParametrixEngine e(s, grid, mesh);
    const auto series = e.assemble(e.all_points(), e.calibrate(e.all_points()));
    const auto volterra = e.duhamel(e.all_points());
    const std::size_t half = mesh.index_of(0.5);
    const std::size_t one = mesh.index_of(1.0);

    CHECK(mass_defect(series.p, grid, one) < 1e-3);
    CHECK(mass_defect(volterra, grid, one) < 1e-3);
    CHECK(chapman_kolmogorov_defect(series.p, grid, half, half, one) < 1e-3);
    CHECK(cross_method_gap(series.p, volterra, one) < 1e-3);
    CHECK_THROWS_AS(cross_method_gap(volterra, series.p, one), Error);

    const auto g = ComparisonKernel::g(1, 1.0, 2.0);
    CHECK(pde_residual_ratio(series.p, e.generator(), g, half) < 1e-2);

    std::vector<double> bump(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) bump[j] = std::exp(-grid.coordinate(j) * grid.coordinate(j));
    const double e1 = initial_condition_error(series.p, grid, bump, mesh.index_of(0.25));
    const double e2 = initial_condition_error(series.p, grid, bump, one);
    CHECK(e1 < e2);
    CHECK(std::abs(initial_condition_error(volterra, grid, bump, one) - e2) < 1e-3);

    const double floor = aliasing_floor(e.generator());
    CHECK(floor > 0.0);
    // q grows like |ξ|^α at the Nyquist frequency, so with α = 1 the floor halves with h
    const ParametrixEngine fine(s, SpatialGrid(1, 10.0, 128), mesh);
    CHECK(aliasing_floor(fine.generator()) == doctest::Approx(0.5 * floor).epsilon(1e-12));

    const std::size_t ys[] = {0, 32};
    const std::size_t nodes[] = {half, one};
    CHECK(std::isfinite(generator_estimate_fit(e, 2.0, ys, nodes)));
    const auto cf = cancellation_fit(e, nodes);
    CHECK(cf.per_time.size() == 2);
    CHECK(std::isfinite(cf.constant));
}

TEST_CASE("report") {
    ValidationReport r;
    CHECK(r.add("mass", 1e-4, "<=", 1e-3).pass);
    CHECK(r.passed());
    CHECK_FALSE(r.add("ck", 2e-3, "<=", 1e-3).pass);
    CHECK(r.add("ratio", 1.6, ">=", 1.5).pass);
    CHECK_FALSE(r.add("constant", std::nan(""), "finite", 0.0).pass);
    CHECK(r.add("note", std::nan(""), "info", 0.0).pass);
    CHECK_FALSE(r.passed());
    CHECK(r.failures() == std::vector<std::string>{"ck", "constant"});
    CHECK_THROWS_AS(r.add("x", 1.0, "<", 2.0), Error);
}
