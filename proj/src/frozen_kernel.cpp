#include "anisoheat/frozen_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "anisoheat/comparison_kernel.hpp"
#include "anisoheat/errors.hpp"

namespace anisoheat {

namespace {

constexpr int kTailTerms = 4;
constexpr int kImageShells = 64;

void check_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorCode::InvalidArgument, "time must be positive");
}

void guard(const SymbolEvaluator& symbol, std::span<const double> z, double t, const SpatialGrid& grid,
           const FrozenOptions& options) {
    check_time(t);
    if (!options.enforce_aliasing_guard) return;
    const double floor = frozen_time_floor(symbol, z, grid, options.aliasing_tolerance);
    if (t < floor) {
        throw Error(ErrorCode::AliasingRisk, "t = " + std::to_string(t) + " is below the grid floor " +
                                                 std::to_string(floor));
    }
}

// Frozen symbol of a one-dimensional radially constant kernel is c|ξ|^α.
bool has_tail_model(const SymbolEvaluator& symbol) {
    return symbol.kernel().dimension() == 1 && symbol.closed_form_available();
}

double tail_constant(const SymbolEvaluator& symbol, std::span<const double> z) {
    const double one[] = {1.0};
    return symbol.exponent_closed_form(z, one);
}

std::vector<double> invert(const SpatialGrid& grid, const std::vector<double>& q, double t,
                           std::span<const int> beta, bool time_derivative) {
    const Fft fft(grid);
    std::vector<Complex> spec(grid.size());
    const std::size_t n = grid.points();
    for (std::size_t k = 0; k < spec.size(); ++k) {
        Complex m = std::exp(-t * q[k]);
        if (time_derivative) m *= -q[k];
        std::size_t rest = k;
        for (std::size_t axis = grid.dimension(); axis-- > 0;) {
            const std::size_t idx = rest % n;
            rest /= n;
            const int order = beta.empty() ? 0 : beta[axis];
            if (order == 0) continue;
            // Odd derivatives of the Nyquist mode have no real representative.
            if (idx == n / 2 && order % 2 == 1) m = 0.0;
            m *= std::pow(Complex(0.0, grid.frequency(idx)), order);
        }
        spec[k] = m;
    }
    return fft.inverse(std::move(spec));
}

}  // namespace

double stable_tail(double x, double t, double c, double alpha, int dt, int dx) {
    const double r = std::abs(x);
    const double sign = x < 0.0 ? -1.0 : 1.0;
    double sum = 0.0;
    for (int n = 1; n <= kTailTerms; ++n) {
        const double coef = (n % 2 ? 1.0 : -1.0) * std::tgamma(n * alpha + 1.0) / std::tgamma(n + 1.0) *
                            std::sin(n * std::numbers::pi * alpha / 2.0);
        const double time = dt == 0 ? std::pow(c * t, n) : n * std::pow(c, n) * std::pow(t, n - 1);
        const double p = n * alpha + 1.0;
        double space = std::pow(r, -p);
        if (dx == 1) space = -p * sign * std::pow(r, -p - 1.0);
        if (dx == 2) space = p * (p + 1.0) * std::pow(r, -p - 2.0);
        sum += coef * time * space;
    }
    return sum / std::numbers::pi;
}

std::vector<double> periodic_images(const SpatialGrid& grid, double t, double c, double alpha, int dt, int dx) {
    if (grid.dimension() != 1) throw Error(ErrorCode::InvalidArgument, "periodic images are implemented for d = 1");
    const double L = grid.length();
    std::vector<double> out(grid.size(), 0.0);
    // Shells beyond kImageShells from the leading term, summed as an integral.
    double far = 0.0;
    if (dx % 2 == 0) {
        const double q = alpha + 1.0 + dx;
        const double lead = std::tgamma(alpha + 1.0) * std::sin(std::numbers::pi * alpha / 2.0) / std::numbers::pi *
                            c * (dt == 0 ? t : 1.0) * (dx == 2 ? (alpha + 1.0) * (alpha + 2.0) : 1.0);
        far = lead * 2.0 * std::pow(L, -q) * std::pow(kImageShells + 0.5, 1.0 - q) / (q - 1.0);
    }
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double x = grid.coordinate(j);
        double s = far;
        for (int k = 1; k <= kImageShells; ++k) {
            s += stable_tail(x + k * L, t, c, alpha, dt, dx) + stable_tail(x - k * L, t, c, alpha, dt, dx);
        }
        out[j] = s;
    }
    return out;
}

std::vector<double> FrozenKernel::free_space_values() const {
    std::vector<double> out = values;
    for (std::size_t j = 0; j < image_correction.size(); ++j) out[j] -= image_correction[j];
    return out;
}

double FrozenKernel::outside_mass() const {
    double s = 0.0;
    for (double v : image_correction) s += v;
    return s * grid.cell_volume();
}

std::vector<double> symbol_on_grid(const SymbolEvaluator& symbol, std::span<const double> z, const SpatialGrid& grid) {
    if (grid.dimension() != symbol.kernel().dimension()) {
        throw Error(ErrorCode::InvalidArgument, "grid dimension differs from the kernel dimension");
    }
    std::vector<double> q(grid.size());
    if (symbol.closed_form_available()) {
        for (std::size_t k = 0; k < q.size(); ++k) q[k] = symbol.exponent_closed_form(z, grid.dual_point(k));
        return q;
    }
    // q is even; fill the mirrored index from the numeric value.
    const std::size_t n = grid.points();
    std::vector<char> done(q.size(), 0);
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (done[k]) continue;
        q[k] = symbol.exponent_numeric(z, grid.dual_point(k));
        std::size_t mirror = 0;
        if (grid.dimension() == 1) {
            mirror = (n - k) % n;
        } else {
            mirror = ((n - k / n) % n) * n + (n - k % n) % n;
        }
        q[mirror] = q[k];
        done[k] = done[mirror] = 1;
    }
    return q;
}

double frozen_time_floor(const SymbolEvaluator& symbol, std::span<const double> z, const SpatialGrid& grid,
                         double tolerance) {
    double c_low = std::numeric_limits<double>::infinity();
    for (const auto& xi : sphere_probes(grid.dimension(), 720)) {
        c_low = std::min(c_low, symbol.exponent(z, xi));
    }
    if (!(c_low > 0.0)) throw Error(ErrorCode::DegenerateKernel, "frozen symbol vanishes in some direction");
    const double kmax = std::numbers::pi / grid.spacing();
    return -std::log(tolerance) / (c_low * std::pow(kmax, symbol.kernel().alpha()));
}

FrozenKernel evaluate_frozen(const SymbolEvaluator& symbol, std::span<const double> z, double t,
                             const SpatialGrid& grid, const FrozenOptions& options) {
    guard(symbol, z, t, grid, options);
    const auto q = symbol_on_grid(symbol, z, grid);
    FrozenKernel out{Vec(z.begin(), z.end()), t, grid, {}, {}, {}};
    out.values = invert(grid, q, t, {}, false);
    out.spectrum.resize(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) out.spectrum[k] = std::exp(-t * q[k]);
    if (has_tail_model(symbol)) {
        out.image_correction = periodic_images(grid, t, tail_constant(symbol, z), symbol.kernel().alpha(), 0, 0);
    }
    return out;
}

std::vector<double> frozen_time_derivative(const SymbolEvaluator& symbol, std::span<const double> z, double t,
                                           const SpatialGrid& grid, const FrozenOptions& options) {
    guard(symbol, z, t, grid, options);
    auto out = invert(grid, symbol_on_grid(symbol, z, grid), t, {}, true);
    if (options.free_space && has_tail_model(symbol)) {
        const auto img = periodic_images(grid, t, tail_constant(symbol, z), symbol.kernel().alpha(), 1, 0);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] -= img[j];
    }
    return out;
}

std::vector<double> frozen_space_derivative(const SymbolEvaluator& symbol, std::span<const double> z, double t,
                                            const SpatialGrid& grid, std::span<const int> beta,
                                            const FrozenOptions& options) {
    if (beta.size() != grid.dimension()) throw Error(ErrorCode::InvalidArgument, "multi-index has wrong length");
    int order = 0;
    for (int b : beta) {
        if (b < 0) throw Error(ErrorCode::InvalidArgument, "multi-index entries must be nonnegative");
        order += b;
    }
    if (order > 2) throw Error(ErrorCode::InvalidArgument, "derivatives above order 2 are not supported");
    guard(symbol, z, t, grid, options);
    auto out = invert(grid, symbol_on_grid(symbol, z, grid), t, beta, false);
    if (options.free_space && has_tail_model(symbol)) {
        const auto img = periodic_images(grid, t, tail_constant(symbol, z), symbol.kernel().alpha(), 0, order);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] -= img[j];
    }
    return out;
}

double frozen_holder_in_base(const SymbolEvaluator& symbol, std::span<const double> w1, std::span<const double> w2,
                             double t, const SpatialGrid& grid, double theta, const FrozenOptions& options) {
    Vec diff(w1.begin(), w1.end());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= w2[i];
    const double dw = norm(diff);
    if (dw == 0.0) return 0.0;
    const auto& kernel = symbol.kernel();
    const double eta = kernel.modulation().eta();
    const double scale = std::min(std::pow(dw, eta), 1.0);
    const auto p1 = evaluate_frozen(symbol, w1, t, grid, options);
    const auto p2 = evaluate_frozen(symbol, w2, t, grid, options);
    const auto a = options.free_space ? p1.free_space_values() : p1.values;
    const auto b = options.free_space ? p2.free_space_values() : p2.values;
    const double beta = kernel.alpha() + kernel.params().gamma - theta;
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double g = comparison_g(grid.dimension(), kernel.alpha(), beta, t, norm(grid.point(j)));
        worst = std::max(worst, std::abs(a[j] - b[j]) / (scale * g));
    }
    return worst;
}

FrozenInvariants check_frozen(const FrozenKernel& kernel) {
    FrozenInvariants inv;
    const auto& grid = kernel.grid;
    double mass = 0.0;
    inv.min_value = std::numeric_limits<double>::infinity();
    for (double v : kernel.values) {
        mass += v;
        inv.min_value = std::min(inv.min_value, v);
    }
    inv.mass_error = std::abs(mass * grid.cell_volume() - 1.0);
    // x ↦ −x maps index j to N − j; index 0 (x = −R) is its own image on the torus.
    const std::size_t n = grid.points();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::size_t mirror = 0;
        if (grid.dimension() == 1) {
            mirror = (n - k) % n;
        } else {
            mirror = ((n - k / n) % n) * n + (n - k % n) % n;
        }
        inv.symmetry_error = std::max(inv.symmetry_error, std::abs(kernel.values[k] - kernel.values[mirror]));
    }
    return inv;
}

}  // namespace anisoheat
