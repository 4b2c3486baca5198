#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "anisoheat/errors.hpp"
#include "anisoheat/parametrix.hpp"

using namespace anisoheat;

namespace {

constexpr double kPi = std::numbers::pi;

JumpKernel pair_1d(double w, double alpha, Modulation m = Modulation::constant()) {
    return JumpKernel(SpectralMeasure(1, {{{1.0}, w}, {{-1.0}, w}}), {1, alpha, 1.0, 2.0}, std::move(m));
}

JumpKernel axes_2d(double alpha, Modulation m = Modulation::constant()) {
    return JumpKernel(SpectralMeasure(2, {{{1, 0}, 0.25}, {{-1, 0}, 0.25}, {{0, 1}, 0.25}, {{0, -1}, 0.25}}),
                      {2, alpha, 1.0, 2.0}, std::move(m));
}

// cos(k z) with two periods on [−10, 10)
Modulation small_cosine() { return Modulation::cosine(0.3, {2.0 * kPi * 2.0 / 20.0}); }

const double kAnchors[] = {0.25, 0.5, 1.0};

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("time mesh") {
    const TimeMesh plain(1.0, 8, 2.0);
    CHECK(plain.intervals() == 8);
    CHECK(plain[0] == 0.0);
    CHECK(plain[8] == 1.0);
    CHECK(plain[4] == doctest::Approx(0.25).epsilon(1e-15));
    const double anchors[] = {0.1, 0.5};
    const TimeMesh m(1.0, 16, 2.0, anchors);
    CHECK(m.contains(0.1));
    CHECK(m.contains(0.5));
    CHECK(m[m.index_of(0.1)] == 0.1);
    for (std::size_t j = 1; j <= m.intervals(); ++j) CHECK(m.step(j) > 0.0);
    const auto coarse = m.coarsened();
    CHECK(coarse.intervals() == 8);
    CHECK(coarse.contains(0.5));
    CHECK_THROWS_AS(m.index_of(0.3), Error);
    const double clash[] = {0.5, 0.51};
    CHECK_THROWS_AS(TimeMesh(1.0, 4, 1.0, clash), Error);
    CHECK_THROWS_AS(TimeMesh(1.0, 4, 0.5), Error);
    CHECK_THROWS_AS(TimeMesh(1.0, 3, 1.0).coarsened(), Error);
}

TEST_CASE("exponential hat weights") {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    for (double z : {0.0, 1e-9, 1e-3, 0.3, 0.49, 0.51, 2.0, 30.0}) {
        const double p1 = GK::integrate([&](double v) { return std::exp(-z * v); }, 0.0, 1.0, 0, 0.0);
        const double p2 = GK::integrate([&](double v) { return v * std::exp(-z * v); }, 0.0, 1.0, 0, 0.0);
        CHECK(psi1(z) == doctest::Approx(p1).epsilon(1e-13));
        CHECK(psi2(z) == doctest::Approx(p2).epsilon(1e-13));
    }
}

TEST_CASE("singular time integrals") {
    SingularIntegralOptions half;
    half.beta = 0.5;
    for (double t : {0.5, 1.0, 2.0}) {
        const double v = singular_time_integral([](double s, double r) { return 1.0 / std::sqrt(s * r); }, t, half);
        CHECK(std::abs(v - kPi) < 1e-6);
    }
    SingularIntegralOptions o;
    o.beta = 0.3;
    const double t = 1.7;
    const double v = singular_time_integral(
        [](double s, double r) { return std::pow(s, -0.7) * std::pow(r, -0.7) * std::cos(s); }, t, o);
    // cos s = Σ (−1)^k s^{2k}/(2k)! turns each term into a Beta integral
    double ref = 0.0;
    double fact = 1.0;
    for (int k = 0; k < 12; ++k) {
        if (k > 0) fact *= (2.0 * k - 1.0) * (2.0 * k);
        ref += ((k % 2) ? -1.0 : 1.0) / fact * std::pow(t, 2.0 * k - 0.4) * boost::math::beta(2.0 * k + 0.3, 0.3);
    }
    CHECK(v == doctest::Approx(ref).epsilon(1e-10));
    const double beta_fn = std::pow(t, -0.4) * boost::math::beta(0.3, 0.3);
    CHECK(singular_time_integral([](double s, double r) { return std::pow(s, -0.7) * std::pow(r, -0.7); }, t, o) ==
          doctest::Approx(beta_fn).epsilon(1e-10));

    // declared too mild
    SingularIntegralOptions mild;
    mild.beta = 1.0;
    CHECK_THROWS_AS(singular_time_integral([](double s, double) { return 1.0 / std::sqrt(s); }, 1.0, mild), Error);
    try {
        singular_time_integral([](double s, double) { return std::pow(s, -0.8); }, 1.0, half);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularityMisdeclared);
    }
}

TEST_CASE("boxtimes") {
    const SpatialGrid grid(1, 4.0, 32);
    const double x[] = {0.5};
    const double y[] = {-0.25};
    auto bump = [](double c) {
        return [c](double, std::span<const double> a, std::span<const double> b) {
            const double r = a[0] - b[0] - c;
            return std::exp(-r * r);
        };
    };
    const TimeKernel zero = [](double, std::span<const double>, std::span<const double>) { return 0.0; };
    CHECK(boxtimes(bump(0.0), zero, 1.0, x, y, grid) == 0.0);

    const auto f = bump(0.1);
    const auto g = bump(-0.2);
    double conv = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double z[] = {grid.coordinate(j)};
        conv += f(0.0, x, z) * g(0.0, z, y) * grid.spacing();
    }
    for (double t : {0.5, 1.5}) CHECK(boxtimes(f, g, t, x, y, grid) == doctest::Approx(t * conv).epsilon(1e-12));
}

TEST_CASE("engine reproduces the matrix exponential") {
    const SymbolEvaluator s(pair_1d(0.5, 1.0, small_cosine()));
    const SpatialGrid grid(1, 10.0, 64);
    const TimeMesh mesh(1.0, 32, 2.0, kAnchors);
    const ParametrixEngine e(s, grid, mesh);
    CHECK(e.theta() == 0.5);
    CHECK(e.interpolation_nodes() > 1);
    const auto cal = e.calibrate(e.all_points());
    const auto series = e.assemble(e.all_points(), cal);
    const auto volterra = e.duhamel(e.all_points());
    CHECK(series.terms >= 2);
    CHECK(series.tail_bound < 1e-8);

    const Eigen::MatrixXd A = e.generator().matrix();
    for (double t : kAnchors) {
        const std::size_t n = mesh.index_of(t);
        const Eigen::MatrixXd exact = (t * A).exp() / grid.spacing();
        const double sup = exact.cwiseAbs().maxCoeff();
        double es = 0.0;
        double ev = 0.0;
        for (std::size_t x = 0; x < grid.size(); ++x) {
            for (std::size_t y = 0; y < grid.size(); ++y) {
                es = std::max(es, std::abs(series.p.at(n, x, y) - exact(x, y)));
                ev = std::max(ev, std::abs(volterra.at(n, x, y) - exact(x, y)));
            }
        }
        CHECK(es < 2e-4 * sup);
        CHECK(ev < 2e-4 * sup);
    }
}

TEST_CASE("cross-method gap shrinks with the time step") {
    const SymbolEvaluator s(pair_1d(0.5, 1.0, small_cosine()));
    const SpatialGrid grid(1, 10.0, 64);
    auto gap = [&](std::size_t intervals) {
        const ParametrixEngine e(s, grid, TimeMesh(1.0, intervals, 2.0, kAnchors));
        const auto series = e.assemble(e.all_points(), e.calibrate(e.all_points()));
        const auto volterra = e.duhamel(e.all_points());
        const std::size_t n = e.mesh().index_of(1.0);
        double worst = 0.0;
        for (std::size_t i = 0; i < series.p.values.size() / series.p.nodes(); ++i) {
            const std::size_t off = n * grid.size() * grid.size();
            const std::size_t x = i % grid.size();
            const std::size_t y = i / grid.size();
            worst = std::max(worst, std::abs(series.p.values[off + i] - volterra.at(n, x, y)));
        }
        return worst / series.p.sup(n);
    };
    const double coarse = gap(16);
    const double fine = gap(32);
    CHECK(fine < 1e-3);
    CHECK(coarse / fine >= 1.5);
}

TEST_CASE("constant modulation degenerates to the frozen kernel") {
    const SymbolEvaluator s(pair_1d(1.0 / kPi, 1.0));
    const SpatialGrid grid(1, 10.0, 64);
    const TimeMesh mesh(1.0, 16, 2.0, kAnchors);
    const ParametrixEngine e(s, grid, mesh);
    CHECK(e.interpolation_nodes() == 1);
    const auto phi = e.phi(e.all_points());
    CHECK(max_abs(phi.values) == 0.0);
    const auto cal = e.calibrate(e.all_points());
    CHECK(cal.c1 == 0.0);
    const auto series = e.assemble(e.all_points(), cal);
    CHECK(series.terms == 1);
    const auto p0 = e.zero_order(e.all_points());
    CHECK(series.p.values == p0.values);
    const auto volterra = e.duhamel(e.all_points());
    const auto rows = e.zero_order_rows(e.all_points());
    CHECK(volterra.values == rows.values);

    // columns agree with the frozen-kernel module
    FrozenOptions relaxed;
    relaxed.enforce_aliasing_guard = false;
    const std::size_t n = mesh.index_of(0.5);
    const std::size_t y = 40;
    const double yy[] = {grid.coordinate(y)};
    const auto frozen = evaluate_frozen(s, yy, 0.5, grid, relaxed);
    for (std::size_t x = 0; x < grid.size(); ++x) {
        CHECK(p0.at(n, x, y) == doctest::Approx(frozen.values[grid.difference_index(x, y)]).epsilon(1e-12));
    }
}

TEST_CASE("zero-order rows match columns") {
    const SymbolEvaluator s(pair_1d(0.5, 1.3, small_cosine()));
    const SpatialGrid grid(1, 10.0, 64);
    const ParametrixEngine e(s, grid, TimeMesh(1.0, 8, 2.0));
    const auto cols = e.zero_order(e.all_points());
    const auto rows = e.zero_order_rows(e.all_points());
    for (std::size_t n = 1; n < cols.nodes(); ++n) {
        double worst = 0.0;
        for (std::size_t x = 0; x < grid.size(); ++x) {
            for (std::size_t y = 0; y < grid.size(); ++y) worst = std::max(worst, std::abs(cols.at(n, x, y) - rows.at(n, x, y)));
        }
        CHECK(worst < 1e-11 * cols.sup(n));
    }
}

TEST_CASE("series calibration and controls") {
    const auto kernel = pair_1d(0.5, 1.0, small_cosine());
    CHECK(default_theta(kernel) == 0.5);
    CHECK_THROWS_AS(validate_theta(kernel, 1.0), Error);
    CHECK_THROWS_AS(validate_theta(kernel, 0.0), Error);
    const SymbolEvaluator s(kernel);
    const SpatialGrid grid(1, 10.0, 64);
    const TimeMesh mesh(1.0, 16, 2.0, kAnchors);
    const ParametrixEngine e(s, grid, mesh);
    const auto cal = e.calibrate(e.all_points());
    REQUIRE(cal.ratios.size() == 5);
    CHECK(std::isfinite(cal.c1));
    CHECK(cal.c2 > 0.0);
    CHECK(cal.ratio_spread <= 3.0);
    for (std::size_t k = 0; k < cal.ratios.size(); ++k) {
        CHECK(cal.ratios[k] <= 3.0 * cal.predicted_ratios[k]);
        CHECK(cal.ratios[k] >= cal.predicted_ratios[k] / 3.0);
    }
    // the fitted model dominates every computed term
    const double r = cal.theta / 1.0;
    for (std::size_t k = 0; k < cal.term_norms.size(); ++k) {
        for (std::size_t n = 1; n < mesh.nodes().size(); ++n) {
            const double kk = static_cast<double>(k + 1);
            const double model = cal.c1 * std::pow(cal.c2, kk) * std::pow(mesh[n], -1.0 + kk * r) / std::tgamma(kk * r);
            CHECK(cal.term_norms[k][n] <= model * (1.0 + 1e-12));
        }
    }
    CHECK(cal.tail_bound(3, 1.0, 1.0) > cal.tail_bound(6, 1.0, 1.0));

    SeriesControls strict;
    strict.max_terms = 1;
    strict.tail_tolerance = 1e-30;
    const ParametrixEngine capped(s, grid, mesh, strict);
    try {
        capped.assemble(capped.all_points(), capped.calibrate(capped.all_points()));
        FAIL("tail accepted");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::TailNotConverged);
    }
}

TEST_CASE("marching instability is reported") {
    const SymbolEvaluator s(pair_1d(0.5, 1.0, small_cosine()));
    EngineOptions o;
    o.amplification_limit = 1e-3;
    const ParametrixEngine e(s, SpatialGrid(1, 10.0, 32), TimeMesh(1.0, 8, 2.0), {}, o);
    try {
        e.duhamel({3, 7});
        FAIL("no instability reported");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::MarchingInstability);
    }
}

// The spectral Φ lives on the torus, the quadrature in free space; they differ
// by jumps longer than the box, which a heavy tail (small α) makes visible.
TEST_CASE("pointwise Phi by quadrature") {
    const auto kernel = pair_1d(0.5, 1.7, Modulation::cosine(0.3, {2.0 * kPi * 4.0 / 80.0}));
    const SymbolEvaluator s(kernel);
    const SpatialGrid grid(1, 40.0, 1024);
    const double anchors[] = {1.0};
    const ParametrixEngine e(s, grid, TimeMesh(1.0, 4, 1.0, anchors));
    const std::size_t y = grid.origin_index() + 40;
    const auto phi = e.phi({y});
    const std::size_t n = e.mesh().index_of(1.0);
    const double yy[] = {grid.coordinate(y)};
    FrozenOptions relaxed;
    relaxed.enforce_aliasing_guard = false;
    const auto frozen = evaluate_frozen(s, yy, 1.0, grid, relaxed);
    const double scale = phi.sup(n);
    for (std::size_t x : {y - 20, y - 3, y + 1, y + 9, y + 60}) {
        const double xx[] = {grid.coordinate(x)};
        const double q = phi_kernel(kernel, frozen, xx, yy);
        CHECK(std::abs(q - phi.at(n, x, y)) < 2e-3 * scale);
    }
    CHECK(phi_kernel(kernel, frozen, yy, yy) == 0.0);
    const auto flat = pair_1d(0.5, 1.2);
    const double xx[] = {yy[0] + 1.5};
    CHECK(phi_kernel(flat, frozen, xx, yy) == 0.0);
}

TEST_CASE("two-dimensional probes") {
    const SymbolEvaluator s(axes_2d(1.5, Modulation::cosine(0.3, {2.0 * kPi / 8.0, 0.0})));
    const SpatialGrid grid(2, 8.0, 32);
    const double anchors[] = {0.5, 1.0};
    const ParametrixEngine e(s, grid, TimeMesh(1.0, 16, 3.0, anchors));
    const std::vector<std::size_t> probes = {grid.origin_index(), grid.origin_index() + 5, 3 * 32 + 17};
    const auto series = e.assemble(probes, e.calibrate(probes));
    const auto volterra = e.duhamel(probes);
    const std::size_t n = e.mesh().index_of(1.0);
    double gap = 0.0;
    for (std::size_t x : probes) {
        for (std::size_t y : probes) gap = std::max(gap, std::abs(series.p.at(n, x, y) - volterra.at(n, x, y)));
    }
    CHECK(gap < 1e-3 * series.p.sup(n));
    for (std::size_t k = 0; k < probes.size(); ++k) {
        double mass = 0.0;
        for (double v : volterra.slice(n, k)) mass += v * grid.cell_volume();
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
    }
}
