#include "anisoheat/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "anisoheat/errors.hpp"
#include "anisoheat/frozen_kernel.hpp"

namespace anisoheat {

namespace {

double sphere_area(std::size_t d) { return d == 1 ? 2.0 : 2.0 * std::numbers::pi; }

double norm_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Index map from the padded grid (2R, 2N) back to the original grid, or npos
// when the padded point lies outside the original box.
constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

std::size_t unpad(std::size_t j, std::size_t d, std::size_t n) {
    const std::size_t big = 2 * n;
    auto one = [&](std::size_t i) -> std::size_t {
        // padded coordinate −2R + i h = −R + (i − n/2) h
        if (i < n / 2 || i >= n / 2 + n) return npos;
        return i - n / 2;
    };
    if (d == 1) return one(j);
    const std::size_t r = one(j / big);
    const std::size_t c = one(j % big);
    if (r == npos || c == npos) return npos;
    return r * n + c;
}

}  // namespace

double comparison_kernel_eval(const ComparisonKernel& kernel, double t, std::span<const double> x) {
    if (x.size() != kernel.dimension) throw Error(ErrorCode::InvalidArgument, "point has wrong dimension");
    if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "comparison kernels need t > 0");
    return kernel(t, norm_of(x));
}

double comparison_integral(const ComparisonKernel& kernel, double t) {
    using Legendre = boost::math::quadrature::gauss<double, 20>;
    const std::size_t d = kernel.dimension;
    const double knee = std::pow(t, 1.0 / kernel.alpha);
    const double power = kernel.kind == ComparisonKind::G ? kernel.beta : kernel.alpha + kernel.kappa;
    if (!(power > static_cast<double>(d))) {
        throw Error(ErrorCode::InadmissibleExponents, "comparison kernel is not integrable");
    }
    auto radial = [&](double r) { return kernel(t, r) * std::pow(r, static_cast<double>(d) - 1.0); };
    // H changes slope again where (r/knee)^ζ meets t^{−ζ/α}, i.e. at r = 1.
    std::vector<double> breaks = {0.0, knee, 1.0};
    std::sort(breaks.begin(), breaks.end());
    const double far = 100.0 * std::max(knee, 1.0);
    breaks.push_back(far);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double lo = breaks[i];
        const double hi = breaks[i + 1];
        if (hi <= lo) continue;
        // geometric panels keep the power-law stretch accurate
        while (lo < hi) {
            const double top = (lo == 0.0 || 2.0 * lo >= hi) ? hi : 2.0 * lo;
            total += Legendre::integrate(radial, lo, top);
            lo = top;
        }
    }
    // beyond `far` the kernel is c r^{−power}
    total += kernel(t, far) * std::pow(far, static_cast<double>(d)) / (power - static_cast<double>(d));
    return sphere_area(d) * total;
}

SubconvolutionResult subconvolution_check(const ComparisonKernel& kernel, double t, std::span<const double> s_list,
                                          const SpatialGrid& grid) {
    if (kernel.kind == ComparisonKind::G) {
        const double d = static_cast<double>(grid.dimension());
        if (!(kernel.beta > d && kernel.beta < d + 2.0)) {
            throw Error(ErrorCode::InadmissibleExponents, "sub-convolution of G needs beta in (d, d+2)");
        }
    } else if (!(kernel.alpha + kernel.kappa - static_cast<double>(grid.dimension()) > kernel.zeta)) {
        throw Error(ErrorCode::InadmissibleExponents, "H kernel needs alpha + kappa - d > zeta");
    }
    const std::size_t d = grid.dimension();
    const std::size_t n = grid.points();
    const SpatialGrid padded(d, 2.0 * grid.half_width(), 2 * n);
    const Fft fft(padded);
    const double quarter = 0.5 * grid.half_width();

    auto field = [&](double tau) {
        std::vector<double> v(padded.size(), 0.0);
        for (std::size_t j = 0; j < padded.size(); ++j) {
            if (unpad(j, d, n) == npos) continue;
            v[j] = kernel(tau, norm_of(padded.point(j)));
        }
        return v;
    };

    SubconvolutionResult res;
    res.min_ratio = std::numeric_limits<double>::infinity();
    for (double s : s_list) {
        if (!(s > 0.0 && s < t)) throw Error(ErrorCode::InvalidArgument, "need 0 < s < t");
        const auto conv = fft.convolve(field(t - s), field(s));
        double origin = 0.0;
        for (std::size_t j = 0; j < padded.size(); ++j) {
            const Vec x = padded.point(j);
            bool inner = true;
            for (double xi : x) inner = inner && std::abs(xi) <= quarter;
            if (!inner) continue;
            const double ratio = conv[j] / kernel(t, norm_of(x));
            ++res.samples;
            if (!std::isfinite(ratio)) {
                ++res.nonfinite;
                continue;
            }
            res.constant = std::max(res.constant, ratio);
            res.min_ratio = std::min(res.min_ratio, ratio);
            if (j == padded.origin_index()) origin = ratio;
        }
        res.origin_ratios.push_back(origin);
    }
    return res;
}

std::vector<double> default_rate_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 20; ++i) g.push_back(0.1 * i);
    return g;
}

void choose_rate(ScannedFit& fit, std::span<const double> rate_grid) {
    if (fit.times.empty()) return;
    const double tmax = *std::max_element(fit.times.begin(), fit.times.end());
    double best = std::numeric_limits<double>::infinity();
    for (double c : rate_grid) {
        double C = 0.0;
        for (std::size_t i = 0; i < fit.times.size(); ++i) C = std::max(C, fit.per_time[i] * std::exp(-c * fit.times[i]));
        const double score = C * std::exp(c * tmax);
        if (score < best) {
            best = score;
            fit.constant = C;
            fit.rate = c;
        }
    }
}

ScannedFit ratio_fit(const SpaceTimeKernel& k, std::span<const std::size_t> nodes, const Majorant& majorant) {
    ScannedFit fit;
    for (std::size_t n : nodes) {
        const double t = k.times.at(n);
        double worst = 0.0;
        for (std::size_t s = 0; s < k.slices.size(); ++s) {
            const auto v = k.slice(n, s);
            for (std::size_t j = 0; j < k.points; ++j) {
                const std::size_t x = k.axis == SliceAxis::Target ? j : k.slices[s];
                const std::size_t y = k.axis == SliceAxis::Target ? k.slices[s] : j;
                const double m = majorant(t, x, y);
                if (!(m >= 1e-12)) continue;
                const double r = std::abs(v[j]) / m;
                ++fit.samples;
                if (!std::isfinite(r)) {
                    ++fit.nonfinite;
                    continue;
                }
                worst = std::max(worst, r);
            }
        }
        fit.times.push_back(t);
        fit.per_time.push_back(worst);
        fit.constant = std::max(fit.constant, worst);
    }
    return fit;
}

double grid_distance(const SpatialGrid& grid, std::size_t i, std::size_t j) {
    return norm_of(grid.point(grid.difference_index(i, j)));
}

std::vector<double> mesh_time_derivative(const SpaceTimeKernel& k, std::size_t n, std::size_t slice) {
    if (n == 0 || n + 1 >= k.nodes()) throw Error(ErrorCode::InvalidArgument, "time derivative needs an interior node");
    const double hm = k.times[n] - k.times[n - 1];
    const double hp = k.times[n + 1] - k.times[n];
    const double wm = -hp / (hm * (hm + hp));
    const double w0 = (hp - hm) / (hm * hp);
    const double wp = hm / (hp * (hm + hp));
    const auto a = k.slice(n - 1, slice);
    const auto b = k.slice(n, slice);
    const auto c = k.slice(n + 1, slice);
    std::vector<double> out(k.points);
    for (std::size_t j = 0; j < k.points; ++j) out[j] = wm * a[j] + w0 * b[j] + wp * c[j];
    return out;
}

UpperBoundFit upper_bound_fit(const SpaceTimeKernel& p, const SpatialGrid& grid, const ComparisonKernel& g,
                              std::span<const std::size_t> nodes, std::span<const double> rate_grid) {
    UpperBoundFit fit;
    auto majorant = [&](double t, std::size_t x, std::size_t y) { return g(t, grid_distance(grid, x, y)); };
    fit.value = ratio_fit(p, nodes, majorant);
    for (std::size_t n : nodes) {
        if (n == 0 || n + 1 >= p.nodes()) continue;
        const double t = p.times[n];
        double worst = 0.0;
        for (std::size_t s = 0; s < p.slices.size(); ++s) {
            const auto dt = mesh_time_derivative(p, n, s);
            for (std::size_t j = 0; j < p.points; ++j) {
                const std::size_t x = p.axis == SliceAxis::Target ? j : p.slices[s];
                const std::size_t y = p.axis == SliceAxis::Target ? p.slices[s] : j;
                const double m = majorant(t, x, y);
                if (!(m >= 1e-12)) continue;
                const double r = t * std::abs(dt[j]) / m;
                ++fit.derivative.samples;
                if (!std::isfinite(r)) {
                    ++fit.derivative.nonfinite;
                    continue;
                }
                worst = std::max(worst, r);
            }
        }
        fit.derivative.times.push_back(t);
        fit.derivative.per_time.push_back(worst);
    }
    // one rate for both inequalities
    ScannedFit joint;
    joint.times = fit.value.times;
    joint.per_time = fit.value.per_time;
    for (std::size_t i = 0; i < fit.derivative.times.size(); ++i) {
        const auto it = std::find(joint.times.begin(), joint.times.end(), fit.derivative.times[i]);
        const std::size_t k = static_cast<std::size_t>(it - joint.times.begin());
        joint.per_time[k] = std::max(joint.per_time[k], fit.derivative.per_time[i]);
    }
    choose_rate(joint, rate_grid);
    fit.constant = joint.constant;
    fit.rate = joint.rate;
    auto at_rate = [&](ScannedFit& f) {
        f.rate = joint.rate;
        f.constant = 0.0;
        for (std::size_t i = 0; i < f.times.size(); ++i) {
            f.constant = std::max(f.constant, f.per_time[i] * std::exp(-joint.rate * f.times[i]));
        }
    };
    at_rate(fit.value);
    at_rate(fit.derivative);
    return fit;
}

HolderFit holder_in_x_check(const SpaceTimeKernel& p, const SpatialGrid& grid, const ComparisonKernel& g,
                            std::span<const std::pair<std::size_t, std::size_t>> pairs,
                            std::span<const std::size_t> nodes, double theta, double rate) {
    if (p.axis != SliceAxis::Target) throw Error(ErrorCode::InvalidArgument, "Hoelder check needs target slices");
    HolderFit fit;
    for (std::size_t n : nodes) {
        const double t = p.times.at(n);
        const double scale = std::pow(t, 1.0 / g.alpha);
        for (const auto& [x1, x2] : pairs) {
            if (x1 == x2) continue;
            const double dx = grid_distance(grid, x1, x2);
            const double factor = std::pow(dx / scale, theta) * std::exp(rate * t);
            for (std::size_t s = 0; s < p.slices.size(); ++s) {
                const std::size_t y = p.slices[s];
                const auto col = p.slice(n, s);
                const double m = factor * (g(t, grid_distance(grid, y, x1)) + g(t, grid_distance(grid, y, x2)));
                if (!(m >= 1e-12)) continue;
                const double r = std::abs(col[x1] - col[x2]) / m;
                if (r > fit.constant) {
                    fit.constant = r;
                    fit.worst_x1 = x1;
                    fit.worst_x2 = x2;
                    fit.worst_t = t;
                }
            }
        }
    }
    return fit;
}

double frozen_bound_fit(const SymbolEvaluator& symbol, const SpatialGrid& grid, const std::vector<Vec>& z_samples,
                        std::span<const double> times) {
    const auto& kernel = symbol.kernel();
    const double alpha = kernel.alpha();
    const double beta = alpha + kernel.params().gamma;
    const std::size_t d = grid.dimension();
    FrozenOptions relaxed;
    relaxed.enforce_aliasing_guard = false;
    std::vector<int> first(d, 0);
    first[0] = 1;
    double worst = 0.0;
    for (const auto& z : z_samples) {
        for (double t : times) {
            const auto p = evaluate_frozen(symbol, z, t, grid, relaxed).values;
            const auto dt = frozen_time_derivative(symbol, z, t, grid, relaxed);
            const auto dx = frozen_space_derivative(symbol, z, t, grid, first, relaxed);
            const double sx = std::pow(t, 1.0 / alpha);
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const double g = comparison_g(d, alpha, beta, t, norm_of(grid.point(j)));
                worst = std::max({worst, std::abs(p[j]) / g, t * std::abs(dt[j]) / g, sx * std::abs(dx[j]) / g});
            }
        }
    }
    return worst;
}

double frozen_base_holder_fit(const SymbolEvaluator& symbol, const SpatialGrid& grid,
                              const std::vector<std::pair<Vec, Vec>>& pairs, std::span<const double> times,
                              double theta) {
    FrozenOptions relaxed;
    relaxed.enforce_aliasing_guard = false;
    double worst = 0.0;
    for (const auto& [w1, w2] : pairs) {
        for (double t : times) worst = std::max(worst, frozen_holder_in_base(symbol, w1, w2, t, grid, theta, relaxed));
    }
    return worst;
}

double generator_estimate_fit(const ParametrixEngine& engine, double g_exponent,
                              std::span<const std::size_t> y_samples, std::span<const std::size_t> nodes) {
    const auto& grid = engine.grid();
    const auto& gen = engine.generator();
    const auto& b = gen.modulation_profile();
    const std::size_t lo = static_cast<std::size_t>(std::min_element(b.begin(), b.end()) - b.begin());
    const std::size_t hi = static_cast<std::size_t>(std::max_element(b.begin(), b.end()) - b.begin());
    const double alpha = engine.alpha();
    double worst = 0.0;
    for (std::size_t n : nodes) {
        const double t = engine.mesh()[n];
        if (!(t > 0.0)) continue;
        for (std::size_t y : y_samples) {
            const auto k = engine.frozen(n, y);
            for (std::size_t z : {y, lo, hi}) {
                const auto v = gen.apply_frozen(k, grid.point(z));
                for (std::size_t j = 0; j < grid.size(); ++j) {
                    const double g = comparison_g(grid.dimension(), alpha, g_exponent, t, norm_of(grid.point(j)));
                    worst = std::max(worst, t * std::abs(v[j]) / g);
                }
            }
        }
    }
    return worst;
}

ScannedFit cancellation_fit(const ParametrixEngine& engine, std::span<const std::size_t> nodes) {
    ScannedFit fit;
    const double r = engine.theta() / engine.alpha();
    for (std::size_t n : nodes) {
        const double t = engine.mesh()[n];
        if (!(t > 0.0)) continue;
        const auto s = engine.frozen_derivative_mass(n);
        double worst = 0.0;
        for (double v : s) worst = std::max(worst, std::abs(v));
        fit.times.push_back(t);
        fit.per_time.push_back(worst * std::pow(t, 1.0 - r));
        fit.constant = std::max(fit.constant, fit.per_time.back());
        fit.samples += s.size();
    }
    return fit;
}

double mass_defect(const SpaceTimeKernel& p, const SpatialGrid& grid, std::size_t node) {
    const double cell = grid.cell_volume();
    double worst = 0.0;
    if (p.axis == SliceAxis::Source) {
        for (std::size_t s = 0; s < p.slices.size(); ++s) {
            double m = 0.0;
            for (double v : p.slice(node, s)) m += v;
            worst = std::max(worst, std::abs(m * cell - 1.0));
        }
        return worst;
    }
    if (p.slices.size() != grid.size()) throw Error(ErrorCode::InvalidArgument, "mass over y needs every target slice");
    std::vector<double> m(grid.size(), 0.0);
    for (std::size_t s = 0; s < p.slices.size(); ++s) {
        const auto col = p.slice(node, s);
        for (std::size_t x = 0; x < grid.size(); ++x) m[x] += col[x];
    }
    for (double v : m) worst = std::max(worst, std::abs(v * cell - 1.0));
    return worst;
}

namespace {

// Dense matrix P(x, y) from target slices covering the whole grid.
Eigen::MatrixXd dense(const SpaceTimeKernel& p, std::size_t node) {
    const auto n = static_cast<Eigen::Index>(p.points);
    Eigen::MatrixXd m(n, n);
    for (std::size_t s = 0; s < p.slices.size(); ++s) {
        const auto col = p.slice(node, s);
        for (std::size_t x = 0; x < p.points; ++x) m(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(p.slices[s])) = col[x];
    }
    return m;
}

}  // namespace

double chapman_kolmogorov_defect(const SpaceTimeKernel& p, const SpatialGrid& grid, std::size_t s_node,
                                 std::size_t t_node, std::size_t sum_node) {
    if (p.axis != SliceAxis::Target || p.slices.size() != grid.size()) {
        throw Error(ErrorCode::InvalidArgument, "Chapman-Kolmogorov check needs every target slice");
    }
    const Eigen::MatrixXd composed = dense(p, s_node) * dense(p, t_node) * grid.cell_volume();
    const Eigen::MatrixXd direct = dense(p, sum_node);
    return (composed - direct).cwiseAbs().maxCoeff() / direct.cwiseAbs().maxCoeff();
}

double pde_residual_ratio(const SpaceTimeKernel& p, const DiscreteGenerator& generator, const ComparisonKernel& g,
                          std::size_t node) {
    if (p.axis != SliceAxis::Target) throw Error(ErrorCode::InvalidArgument, "PDE residual needs target slices");
    const auto& grid = generator.grid();
    const double t = p.times.at(node);
    double worst = 0.0;
    for (std::size_t s = 0; s < p.slices.size(); ++s) {
        const auto col = p.slice(node, s);
        const auto dt = mesh_time_derivative(p, node, s);
        const auto ax = generator.apply(std::vector<double>(col.begin(), col.end()));
        for (std::size_t x = 0; x < grid.size(); ++x) {
            const double m = g(t, grid_distance(grid, x, p.slices[s])) / t;
            worst = std::max(worst, std::abs(dt[x] - ax[x]) / m);
        }
    }
    return worst;
}

double initial_condition_error(const SpaceTimeKernel& p, const SpatialGrid& grid, const std::vector<double>& f,
                               std::size_t node) {
    const double cell = grid.cell_volume();
    double worst = 0.0;
    if (p.axis == SliceAxis::Source) {
        for (std::size_t s = 0; s < p.slices.size(); ++s) {
            const auto row = p.slice(node, s);
            double v = 0.0;
            for (std::size_t y = 0; y < grid.size(); ++y) v += row[y] * f[y];
            worst = std::max(worst, std::abs(v * cell - f[p.slices[s]]));
        }
        return worst;
    }
    if (p.slices.size() != grid.size()) throw Error(ErrorCode::InvalidArgument, "integral over y needs every target slice");
    std::vector<double> acc(grid.size(), 0.0);
    for (std::size_t s = 0; s < p.slices.size(); ++s) {
        const auto col = p.slice(node, s);
        const double fy = f[p.slices[s]];
        for (std::size_t x = 0; x < grid.size(); ++x) acc[x] += col[x] * fy;
    }
    for (std::size_t x = 0; x < grid.size(); ++x) worst = std::max(worst, std::abs(acc[x] * cell - f[x]));
    return worst;
}

double minimum_value(const SpaceTimeKernel& p, std::size_t node) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < p.slices.size(); ++s) {
        for (double v : p.slice(node, s)) m = std::min(m, v);
    }
    return m;
}

double cross_method_gap(const SpaceTimeKernel& series, const SpaceTimeKernel& volterra, std::size_t node) {
    if (series.axis != SliceAxis::Target || volterra.axis != SliceAxis::Source) {
        throw Error(ErrorCode::InvalidArgument, "expected target slices from the series and source slices from the march");
    }
    double gap = 0.0;
    for (std::size_t sy = 0; sy < series.slices.size(); ++sy) {
        const std::size_t y = series.slices[sy];
        const auto col = series.slice(node, sy);
        for (std::size_t sx = 0; sx < volterra.slices.size(); ++sx) {
            const std::size_t x = volterra.slices[sx];
            gap = std::max(gap, std::abs(col[x] - volterra.slice(node, sx)[y]));
        }
    }
    return gap / series.sup(node);
}

double aliasing_floor(const DiscreteGenerator& generator, double tolerance) {
    const auto& grid = generator.grid();
    const auto& q0 = generator.base_symbol();
    const auto& qg = generator.modulation_symbol();
    const auto& b = generator.modulation_profile();
    const double bmin = *std::min_element(b.begin(), b.end());
    const double bmax = *std::max_element(b.begin(), b.end());
    const double nyquist = std::numbers::pi / grid.spacing();
    double qmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Vec xi = grid.dual_point(k);
        double m = 0.0;
        for (double v : xi) m = std::max(m, std::abs(v));
        if (m < nyquist * (1.0 - 1e-12)) continue;
        qmin = std::min({qmin, q0[k] + bmin * qg[k], q0[k] + bmax * qg[k]});
    }
    return -std::log(tolerance) / qmin;
}

const CheckResult& ValidationReport::add(std::string name, double value, std::string relation, double tolerance,
                                         std::string detail) {
    CheckResult r;
    r.name = std::move(name);
    r.value = value;
    r.tolerance = tolerance;
    r.relation = std::move(relation);
    r.detail = std::move(detail);
    if (r.relation == "<=") {
        r.pass = std::isfinite(value) && value <= tolerance;
    } else if (r.relation == ">=") {
        r.pass = std::isfinite(value) && value >= tolerance;
    } else if (r.relation == "finite") {
        r.pass = std::isfinite(value);
    } else if (r.relation == "info") {
        r.pass = true;
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown relation " + r.relation);
    }
    checks.push_back(std::move(r));
    return checks.back();
}

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::vector<std::string> ValidationReport::failures() const {
    std::vector<std::string> out;
    for (const auto& c : checks) {
        if (!c.pass) out.push_back(c.name);
    }
    return out;
}

}  // namespace anisoheat
