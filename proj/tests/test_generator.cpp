#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "anisoheat/comparison_kernel.hpp"
#include "anisoheat/errors.hpp"
#include "anisoheat/frozen_kernel.hpp"
#include "anisoheat/generator.hpp"

using namespace anisoheat;

namespace {

constexpr double kPi = std::numbers::pi;

JumpKernel pair_1d(double w, double alpha, Modulation m = Modulation::constant()) {
    return JumpKernel(SpectralMeasure(1, {{{1.0}, w}, {{-1.0}, w}}), {1, alpha, 1.0, 2.0}, std::move(m));
}

SpatialFunction gaussian(double center, double width) {
    SpatialFunction f;
    f.value = [=](std::span<const double> x) {
        const double u = (x[0] - center) / width;
        return std::exp(-u * u);
    };
    f.length_scale = width;
    return f;
}

double q0_1d(double w, double alpha, double xi) {
    return 2.0 * w * stable_prefactor(alpha) * std::pow(std::abs(xi), alpha);
}

// Composite Simpson of g over [−X, X] with n (even) panels.
template <class G>
double simpson(G g, double X, int n) {
    const double h = 2.0 * X / n;
    double s = g(-X) + g(X);
    for (int i = 1; i < n; ++i) s += g(-X + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("constants and affine functions are annihilated") {
    const auto k = pair_1d(0.4, 1.3, Modulation::cosine(0.3, {0.7}));
    SpatialFunction c;
    c.value = [](std::span<const double>) { return 2.5; };
    c.far_mean = 2.5;
    SpatialFunction lin;
    lin.value = [](std::span<const double> x) { return 3.0 * x[0] - 1.0; };
    for (double xv : {-2.0, 0.0, 0.9}) {
        const double x[] = {xv};
        // second differences of an affine function vanish, so the far field closes at f(x)
        lin.far_mean = 3.0 * xv - 1.0;
        CHECK(apply_generator(k, c, x, x, 0.0) == 0.0);
        CHECK(std::abs(apply_generator(k, lin, x, x, 0.0)) < 1e-10);
        CHECK(std::abs(apply_generator(k, lin, x, x, 0.25)) < 1e-10);
    }
}

TEST_CASE("eigenfunction identity through the cutoff limit") {
    for (double alpha : {0.7, 1.3, 1.8}) {
        const auto k = pair_1d(0.45, alpha);
        const double xi = 2.0;
        SpatialFunction f;
        f.value = [=](std::span<const double> x) { return std::cos(xi * x[0]); };
        f.length_scale = 1.0 / xi;
        for (double xv : {0.0, 0.3, 1.7}) {
            const double x[] = {xv};
            const double oracle = -q0_1d(0.45, alpha, xi) * std::cos(xi * xv);
            CHECK(apply_generator(k, f, x, x, 0.0) == doctest::Approx(oracle).epsilon(1e-6).scale(1e-8));
        }
    }
}

TEST_CASE("cutoff schedule reports nonconvergence") {
    const auto k = pair_1d(0.45, 1.5);
    SpatialFunction f;
    // |x|^{1.7}: not C² at 0, so L^δ f(0) keeps drifting like δ^{0.2}
    f.value = [](std::span<const double> x) { return std::pow(std::abs(x[0]), 1.7) / (1.0 + x[0] * x[0]); };
    const double x[] = {0.0};
    GeneratorOptions o;
    o.levels = 3;
    o.rel_tol = 1e-12;
    o.abs_tol = 0.0;
    try {
        apply_generator(k, f, x, x, 0.0, o);
        FAIL("drifting limit accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonconvergentLimit);
    }
}

TEST_CASE("grid spline reproduces cubics and continues with the tail envelope") {
    const SpatialGrid grid(1, 8.0, 64);
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::exp(-grid.coordinate(j) * grid.coordinate(j));
    const GridFunction g(grid, v, 2.0);
    for (std::size_t j = 0; j < v.size(); j += 5) {
        const double x[] = {grid.coordinate(j)};
        CHECK(std::abs(g(x) - v[j]) < 1e-15);
    }
    const double mid[] = {0.3 * grid.spacing()};
    CHECK(g(mid) == doctest::Approx(std::exp(-mid[0] * mid[0])).epsilon(1e-3));
    const double edge = grid.coordinate(grid.size() - 1);
    const double far[] = {3.0 * edge};
    const double at_edge[] = {edge};
    CHECK(g(far) == doctest::Approx(g(at_edge) / 9.0).epsilon(1e-12));

    // 2-d tensor spline is exact at nodes
    const SpatialGrid g2(2, 4.0, 16);
    std::vector<double> w(g2.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        const auto p = g2.point(k);
        w[k] = std::sin(p[0]) * std::cos(0.5 * p[1]);
    }
    const GridFunction s2(g2, w, 2.0);
    for (std::size_t k = 0; k < w.size(); k += 13) CHECK(std::abs(s2(g2.point(k)) - w[k]) < 1e-14);
}

TEST_CASE("frozen kernel: quadrature matches the spectral time derivative") {
    const SpatialGrid grid(1, 40.0, 2048);
    const SymbolEvaluator s(pair_1d(1.0 / kPi, 1.0));
    const double z[] = {0.0};
    const auto p = evaluate_frozen(s, z, 1.0, grid).free_space_values();
    FrozenOptions fs;
    fs.free_space = true;
    const auto dt = frozen_time_derivative(s, z, 1.0, grid, fs);
    const GridFunction g(grid, p, 2.0);
    const auto f = g.as_function();
    for (double xv : {0.0, 0.5, 1.5, 4.0}) {
        const std::size_t j = grid.origin_index() + static_cast<std::size_t>(std::lround(xv / grid.spacing()));
        const double x[] = {grid.coordinate(j)};
        CHECK(apply_generator(s.kernel(), f, z, x, 0.0) == doctest::Approx(dt[j]).epsilon(1e-3).scale(1e-4));
    }
}

TEST_CASE("majorant dominates the generator") {
    const auto mod = Modulation::cosine(0.3, {0.628});
    const auto k = pair_1d(0.4, 1.4, mod);
    const auto f = gaussian(0.2, 0.8);
    for (double xv : {-1.0, 0.0, 0.2, 1.3, 3.0}) {
        const double x[] = {xv};
        for (double zv : {0.0, 2.5}) {
            const double z[] = {zv};
            const double lf = apply_generator(k, f, z, x, 0.0);
            for (double t : {0.1, 1.0, 4.0}) CHECK(std::abs(lf) <= mod.m0() * generator_majorant(k, f, x, t) + 1e-10);
        }
    }
}

TEST_CASE("majorant of a linear function is the large-jump part") {
    const double alpha = 1.8;
    const double w = 0.35;
    const auto k = pair_1d(w, alpha);
    SpatialFunction lin;
    lin.value = [](std::span<const double> x) { return 2.0 * x[0] + 1.0; };
    lin.gradient = [](std::span<const double>, std::span<double> g) { g[0] = 2.0; };
    const double x[] = {0.0};
    for (double t : {0.5, 1.0, 2.0}) {
        const double r = std::pow(t, 1.0 / alpha);
        // Σ_± w ∫_r^∞ 2s · s^{−1−α} ds
        const double oracle = 2.0 * w * 2.0 * std::pow(r, 1.0 - alpha) / (alpha - 1.0);
        CHECK(generator_majorant(k, lin, x, t) == doctest::Approx(oracle).epsilon(2e-3));
    }
}

TEST_CASE("majorant of the frozen kernel fits the comparison profile") {
    const SpatialGrid grid(1, 40.0, 2048);
    const SymbolEvaluator s(pair_1d(0.4, 1.4));
    const double z[] = {0.0};
    double lo = 1e300;
    double hi = 0.0;
    for (double t : {0.5, 1.0, 2.0}) {
        const GridFunction g(grid, evaluate_frozen(s, z, t, grid).values, 2.4);
        const auto f = g.as_function();
        for (double xv : {0.0, 1.0, 3.0, 8.0}) {
            const double x[] = {xv};
            const double ratio = generator_majorant(s.kernel(), f, x, t) * t / comparison_g(1, 1.4, 2.4, t, xv);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
    }
    CHECK(lo > 0.0);
    CHECK(hi < 20.0);
}

TEST_CASE("maximum principle probes") {
    const auto cauchy = pair_1d(1.0 / kPi, 1.0);
    const double x0[] = {0.0};
    SpatialFunction gauss;
    gauss.value = [](std::span<const double> x) { return std::exp(-x[0] * x[0]); };
    for (double delta : {0.0, 0.1, 1.0}) CHECK(maximum_principle_probe(cauchy, gauss, x0, x0, delta) <= 1e-8);

    SpatialFunction c;
    c.value = [](std::span<const double>) { return 1.0; };
    c.far_mean = 1.0;
    CHECK(maximum_principle_probe(cauchy, c, x0, x0, 0.0) == 0.0);

    // 1/(1+x²) = π P_1(x) for the Cauchy density P_t, so L f(0) = π ∂_t P_t(0)|_{t=1} = −1.
    SpatialFunction lor;
    lor.value = [](std::span<const double> x) { return 1.0 / (1.0 + x[0] * x[0]); };
    const double v = maximum_principle_probe(cauchy, lor, x0, x0, 0.0);
    CHECK(v < 0.0);
    CHECK(v == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("mass-zero and symmetry on Gaussians") {
    const double alpha = 1.5;
    const double w = 0.5;
    const auto k = pair_1d(w, alpha, Modulation::cosine(0.3, {0.628}));
    const double z[] = {0.7};
    const auto f = gaussian(0.0, 1.0);
    const double X = 40.0;
    double l1 = 0.0;
    const double integral = simpson(
        [&](double xv) {
            const double x[] = {xv};
            const double v = apply_generator(k, f, z, x, 0.0);
            l1 += std::abs(v);
            return v;
        },
        X, 320);
    l1 *= 2.0 * X / 320;
    // Far field L f(x) ≈ (∫f) · h(z,·) w |x|^{−1−α}; the frozen h is 1 + 0.3 cos(0.628·0.7) on both rays.
    const double hz = 1.0 + 0.3 * std::cos(0.628 * 0.7);
    const double tail = 2.0 * std::sqrt(kPi) * hz * w * std::pow(X, -alpha) / alpha;
    CHECK(std::abs(integral + tail) <= 1e-4 * l1);

    const auto phi = gaussian(1.0, 0.7);
    const double lhs = simpson(
        [&](double xv) {
            const double x[] = {xv};
            return phi(x) * apply_generator(k, f, z, x, 0.0);
        },
        12.0, 240);
    const double rhs = simpson(
        [&](double xv) {
            const double x[] = {xv};
            return f(x) * apply_generator(k, phi, z, x, 0.0);
        },
        12.0, 240);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
}

TEST_CASE("discrete generator") {
    const SpatialGrid grid(1, 40.0, 256);
    const auto mod = Modulation::cosine(0.3, {2.0 * kPi * 8.0 / 80.0});
    const SymbolEvaluator s(pair_1d(1.0 / kPi, 1.0, mod));
    const DiscreteGenerator A(s, grid);
    // grid Fourier mode: A cos(ξx) = −q(x, ξ) cos(ξx)
    const double xi = 2.0 * kPi * 5.0 / grid.length();
    std::vector<double> u(grid.size());
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = std::cos(xi * grid.coordinate(j));
    const auto au = A.apply(u);
    for (std::size_t j = 0; j < u.size(); j += 7) {
        const double x[] = {grid.coordinate(j)};
        const double q = s.exponent(x, std::vector<double>{xi});
        CHECK(std::abs(au[j] + q * u[j]) < 1e-12);
    }
    // constants are annihilated (rows sum to zero), frozen part is symmetric
    const auto M = A.matrix();
    for (Eigen::Index i = 0; i < M.rows(); i += 17) CHECK(std::abs(M.row(i).sum()) < 1e-10);
    const double zz[] = {0.0};
    std::vector<double> e(grid.size(), 0.0);
    e[3] = 1.0;
    const auto c3 = A.apply_frozen(e, zz);
    std::fill(e.begin(), e.end(), 0.0);
    e[40] = 1.0;
    const auto c40 = A.apply_frozen(e, zz);
    CHECK(std::abs(c3[40] - c40[3]) < 1e-12);

    CHECK_THROWS_AS(DiscreteGenerator(SymbolEvaluator(pair_1d(
                                          0.5, 1.2,
                                          Modulation::custom([](std::span<const double>,
                                                                std::span<const double>) { return 1.0; },
                                                             1.0, 1.0, true))),
                                      grid),
                    Error);
}
