#include "anisoheat/generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "anisoheat/errors.hpp"
#include "anisoheat/frozen_kernel.hpp"

namespace anisoheat {

namespace {

// Natural cubic B-spline coefficients c_{−1..n} for samples f_0..f_{n−1} with
// stride `stride` in both input and output.
void spline_line(const double* f, std::size_t n, std::size_t in_stride, double* c, std::size_t out_stride) {
    auto C = [&](long j) -> double& { return c[static_cast<std::size_t>(j + 1) * out_stride]; };
    C(0) = f[0];
    C(static_cast<long>(n) - 1) = f[(n - 1) * in_stride];
    if (n > 2) {
        // Thomas algorithm on c_{j−1} + 4 c_j + c_{j+1} = 6 f_j, j = 1..n−2.
        const std::size_t m = n - 2;
        std::vector<double> diag(m, 4.0);
        std::vector<double> rhs(m);
        for (std::size_t k = 0; k < m; ++k) rhs[k] = 6.0 * f[(k + 1) * in_stride];
        rhs[0] -= C(0);
        rhs[m - 1] -= C(static_cast<long>(n) - 1);
        for (std::size_t k = 1; k < m; ++k) {
            const double w = 1.0 / diag[k - 1];
            diag[k] -= w;
            rhs[k] -= w * rhs[k - 1];
        }
        C(static_cast<long>(m)) = rhs[m - 1] / diag[m - 1];
        for (std::size_t k = m - 1; k-- > 0;) C(static_cast<long>(k) + 1) = (rhs[k] - C(static_cast<long>(k) + 2)) / diag[k];
    }
    C(-1) = 2.0 * C(0) - C(1);
    C(static_cast<long>(n)) = 2.0 * C(static_cast<long>(n) - 1) - C(static_cast<long>(n) - 2);
}

std::array<double, 4> bspline_weights(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {(1.0 - t) * (1.0 - t) * (1.0 - t) / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
            (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0};
}

Vec finite_gradient(const SpatialFunction& f, std::span<const double> x) {
    Vec g(x.size());
    if (f.gradient) {
        f.gradient(x, g);
        return g;
    }
    const double step = 1e-4 * f.length_scale;
    Vec p(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        p[i] = x[i] + step;
        const double up = f(p);
        p[i] = x[i] - step;
        const double down = f(p);
        p[i] = x[i];
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

}  // namespace

GridFunction::GridFunction(SpatialGrid grid, std::vector<double> values, double tail_exponent)
    : grid_(std::move(grid)), tail_exponent_(tail_exponent) {
    if (values.size() != grid_.size()) throw Error(ErrorCode::InvalidArgument, "field size does not match the grid");
    const std::size_t n = grid_.points();
    const std::size_t m = n + 2;
    if (grid_.dimension() == 1) {
        coefficients_.resize(m);
        spline_line(values.data(), n, 1, coefficients_.data(), 1);
        return;
    }
    // Rows first (last axis), then columns over the extended row coefficients.
    std::vector<double> rows(n * m);
    for (std::size_t i = 0; i < n; ++i) spline_line(values.data() + i * n, n, 1, rows.data() + i * m, 1);
    coefficients_.resize(m * m);
    for (std::size_t j = 0; j < m; ++j) spline_line(rows.data() + j, n, m, coefficients_.data() + j, m);
}

double GridFunction::inside(std::span<const double> x) const {
    const std::size_t n = grid_.points();
    const std::size_t m = n + 2;
    const double h = grid_.spacing();
    std::array<std::size_t, 2> cell{};
    std::array<std::array<double, 4>, 2> w{};
    for (std::size_t a = 0; a < grid_.dimension(); ++a) {
        const double u = (x[a] - grid_.coordinate(0)) / h;
        const double base = std::clamp(std::floor(u), 0.0, static_cast<double>(n - 2));
        cell[a] = static_cast<std::size_t>(base);
        // Local offset from the knot itself keeps t accurate far from x_0.
        w[a] = bspline_weights((x[a] - grid_.coordinate(cell[a])) / h);
    }
    // Coefficient index of c_{i−1} is i (shifted by one).
    if (grid_.dimension() == 1) {
        double s = 0.0;
        for (std::size_t k = 0; k < 4; ++k) s += w[0][k] * coefficients_[cell[0] + k];
        return s;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        double row = 0.0;
        for (std::size_t l = 0; l < 4; ++l) row += w[1][l] * coefficients_[(cell[0] + k) * m + cell[1] + l];
        s += w[0][k] * row;
    }
    return s;
}

double GridFunction::operator()(std::span<const double> x) const {
    const double lo = grid_.coordinate(0);
    const double hi = grid_.coordinate(grid_.points() - 1);
    // Largest scale s ≤ 1 with s·x inside the sampled box.
    double s = 1.0;
    for (double v : x) {
        if (v > hi) s = std::min(s, hi / v);
        if (v < lo) s = std::min(s, lo / v);
    }
    if (s == 1.0) return inside(x);
    Vec edge(x.begin(), x.end());
    for (double& v : edge) v *= s;
    return inside(edge) * std::pow(s, tail_exponent_);
}

SpatialFunction GridFunction::as_function() const {
    SpatialFunction f;
    f.value = [self = *this](std::span<const double> x) { return self(x); };
    f.length_scale = grid_.spacing();
    f.support_radius = std::numeric_limits<double>::infinity();
    // Knot crossings of x ± sθ; the spline is a polynomial between them.
    f.ray_breakpoints = [grid = grid_](std::span<const double> x, std::span<const double> theta, double outer) {
        std::vector<double> out;
        const double h = grid.spacing();
        const double lo = grid.coordinate(0);
        const double hi = grid.coordinate(grid.points() - 1);
        for (std::size_t a = 0; a < x.size(); ++a) {
            const double t = std::abs(theta[a]);
            if (t < 1e-14) continue;
            const double reach = std::min(outer, (std::max(hi - x[a], x[a] - lo) + h) / t);
            // Crossings at |c_k − x_a|/t for both signs of s.
            for (std::size_t k = 0; k < grid.points(); ++k) {
                const double s = std::abs(grid.coordinate(k) - x[a]) / t;
                if (s > 0.0 && s <= reach) out.push_back(s);
            }
        }
        return out;
    };
    return f;
}

double apply_generator(const JumpKernel& kernel, const SpatialFunction& f, std::span<const double> z,
                       std::span<const double> x, double delta, const GeneratorOptions& options) {
    if (delta < 0.0) throw Error(ErrorCode::InvalidArgument, "cutoff must be nonnegative");
    if (delta > 0.0) return integrate_second_difference(kernel, f, x, z, delta, options.quadrature);
    const double alpha = kernel.alpha();
    const double delta0 = options.delta0 > 0.0 ? options.delta0 : f.length_scale;
    const int levels = std::max(options.levels, 1);
    constexpr int kOrders = 3;
    std::vector<std::vector<double>> table;
    double last_gap = std::numeric_limits<double>::infinity();
    // Tolerance scale: the largest truncated value, so zero crossings of L f do not stall.
    double magnitude = 0.0;
    for (int k = 0; k <= levels; ++k) {
        const double dk = delta0 * std::ldexp(1.0, -k);
        std::vector<double> row{integrate_second_difference(kernel, f, x, z, dk, options.quadrature)};
        magnitude = std::max(magnitude, std::abs(row[0]));
        for (int j = 1; j <= std::min(k, kOrders); ++j) {
            const double r = std::pow(2.0, 2.0 * j - alpha);
            row.push_back((r * row[j - 1] - table[k - 1][j - 1]) / (r - 1.0));
        }
        if (k >= 2) {
            // Compare at the highest order the previous row reached.
            const int j = std::min(k - 1, kOrders);
            last_gap = std::abs(row[j] - table[k - 1][j]);
            if (last_gap <= options.rel_tol * std::max(magnitude, std::abs(row.back())) + options.abs_tol) return row.back();
        }
        table.push_back(std::move(row));
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "cutoff schedule did not settle, last gap %.3e", last_gap);
    throw Error(ErrorCode::NonconvergentLimit, buf);
}

double generator_majorant(const JumpKernel& kernel, const SpatialFunction& f, std::span<const double> x, double t,
                          const SecondDifferenceOptions& options) {
    if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale t must be positive");
    const std::size_t d = kernel.dimension();
    const double alpha = kernel.alpha();
    const double rt = std::pow(t, 1.0 / alpha);
    const double fx = f(x);
    const Vec grad = finite_gradient(f, x);
    RadialOptions base = radial_options_for(f, x, options.oscillatory_extent);
    base.inner_scale = std::min(base.inner_scale, 0.5 * rt);
    // |·| puts kinks at the sign changes, so GK only converges algebraically there.
    base.rel_tol = std::max(options.rel_tol, 1e-7);
    base.abs_tol = options.abs_tol +
                   1e-13 * std::max(1.0, std::abs(fx)) * std::pow(base.inner_scale, -alpha) / alpha;
    if (rt >= base.outer_radius) base.outer_radius = 2.0 * rt;
    base.far_value = std::abs(f.far_mean - fx);
    base.breakpoints.push_back(rt);
    double total = 0.0;
    Vec p(d);
    for (const auto& atom : kernel.spectral().atoms()) {
        const auto& theta = atom.direction;
        const double slope = dot(theta, grad);
        RadialOptions opt = base;
        if (f.ray_breakpoints) {
            const auto extra = f.ray_breakpoints(x, theta, opt.outer_radius);
            opt.breakpoints.insert(opt.breakpoints.end(), extra.begin(), extra.end());
        }
        auto g = [&](double s) {
            for (std::size_t i = 0; i < d; ++i) p[i] = x[i] + s * theta[i];
            const double lin = s <= rt ? s * slope : 0.0;
            return std::abs(f(p) - fx - lin);
        };
        total += atom.weight * radial_integral(g, alpha, 0.0, opt).value;
    }
    return total;
}

double maximum_principle_probe(const JumpKernel& kernel, const SpatialFunction& f, std::span<const double> x0,
                               std::span<const double> z, double delta) {
    return integrate_second_difference(kernel, f, x0, z, delta);
}

DiscreteGenerator::DiscreteGenerator(const SymbolEvaluator& symbol, const SpatialGrid& grid)
    : grid_(grid), fft_(grid), modulation_(symbol.kernel().modulation()) {
    if (!modulation_.separable()) {
        throw Error(ErrorCode::NotClosedForm, "the discrete generator needs a separable modulation");
    }
    q0_.resize(grid_.size());
    qg_.resize(grid_.size());
    profile_.resize(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        const Vec xi = grid_.dual_point(k);
        q0_[k] = symbol.exponent_closed_form(xi);
        qg_[k] = symbol.modulation_part(xi);
        profile_[k] = modulation_.amplitude() * modulation_.kappa(grid_.point(k));
    }
}

std::vector<double> DiscreteGenerator::apply(const std::vector<double>& u) const {
    const auto spec = fft_.transform(u);
    std::vector<Complex> a(spec.size());
    std::vector<Complex> b(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) {
        a[k] = -q0_[k] * spec[k];
        b[k] = -qg_[k] * spec[k];
    }
    auto out = fft_.inverse(std::move(a));
    if (modulation_.amplitude() != 0.0) {
        const auto mod = fft_.inverse(std::move(b));
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += profile_[j] * mod[j];
    }
    return out;
}

std::vector<double> DiscreteGenerator::apply_frozen(const std::vector<double>& u, std::span<const double> z) const {
    const double ak = modulation_.amplitude() * modulation_.kappa(z);
    auto spec = fft_.transform(u);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= -(q0_[k] + ak * qg_[k]);
    return fft_.inverse(std::move(spec));
}

Eigen::MatrixXd DiscreteGenerator::matrix() const {
    if (grid_.dimension() != 1) throw Error(ErrorCode::InvalidArgument, "dense generator matrix is d = 1 only");
    const std::size_t n = grid_.size();
    Eigen::MatrixXd A(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const auto col = apply(e);
        for (std::size_t i = 0; i < n; ++i) A(i, j) = col[i];
        e[j] = 0.0;
    }
    return A;
}

}  // namespace anisoheat
