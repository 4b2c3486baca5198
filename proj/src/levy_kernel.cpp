#include "anisoheat/levy_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "anisoheat/errors.hpp"

namespace anisoheat {

void StableParams::validate() const {
    if (dimension == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
    if (!(alpha > 0.0 && alpha < 2.0)) throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0,2)");
    const double d = static_cast<double>(dimension);
    if (!(gamma >= 1.0 && gamma <= d)) {
        throw Error(ErrorCode::InadmissibleExponents, "gamma must lie in [1, d]");
    }
    if (!(alpha + gamma > d)) throw Error(ErrorCode::InadmissibleExponents, "alpha + gamma must exceed d");
    if (!(m0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "m0 must be positive");
}

const char* to_string(ModulationFamily family) {
    switch (family) {
        case ModulationFamily::Constant: return "constant";
        case ModulationFamily::Cosine: return "cosine";
        case ModulationFamily::Bump: return "bump";
        case ModulationFamily::Custom: return "custom";
    }
    return "unknown";
}

Modulation Modulation::constant() {
    Modulation m;
    m.finish_separable();
    return m;
}

Modulation Modulation::cosine(double amplitude, Vec wave_vector, std::vector<DirectionFactor> factors) {
    if (wave_vector.empty()) throw Error(ErrorCode::InvalidArgument, "cosine modulation needs a wave vector");
    Modulation m;
    m.family_ = ModulationFamily::Cosine;
    m.amplitude_ = amplitude;
    m.wave_vector_ = std::move(wave_vector);
    m.factors_ = std::move(factors);
    m.finish_separable();
    return m;
}

Modulation Modulation::bump(double amplitude, double sigma, std::vector<DirectionFactor> factors) {
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "bump width must be positive");
    Modulation m;
    m.family_ = ModulationFamily::Bump;
    m.amplitude_ = amplitude;
    m.sigma_ = sigma;
    m.factors_ = std::move(factors);
    m.finish_separable();
    return m;
}

Modulation Modulation::custom(Callable h, double m0, double eta, bool radially_constant) {
    if (!h) throw Error(ErrorCode::InvalidArgument, "custom modulation needs a callable");
    if (!(m0 >= 1.0)) throw Error(ErrorCode::InvalidArgument, "M0 must be at least 1");
    if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "eta must lie in (0,1]");
    Modulation m;
    m.family_ = ModulationFamily::Custom;
    m.custom_ = std::move(h);
    m.m0_ = m0;
    m.eta_ = eta;
    m.radially_constant_ = radially_constant;
    m.holder_constant_ = std::numeric_limits<double>::quiet_NaN();
    return m;
}

void Modulation::finish_separable() {
    for (const auto& f : factors_) {
        if (std::abs(norm(f.direction) - 1.0) > SpectralMeasure::kUnitTolerance) {
            throw Error(ErrorCode::NonUnitDirection, "modulation factor direction is not a unit vector");
        }
    }
    const double amax = std::abs(amplitude_) * max_abs_factor();
    if (!(amax < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "|a|·max|g| must be below 1 for a positive modulation");
    }
    m0_ = std::max(1.0 + amax, 1.0 / (1.0 - amax));
    eta_ = 1.0;
    switch (family_) {
        case ModulationFamily::Cosine: holder_constant_ = amax * norm(wave_vector_); break;
        // sup |∇ exp(−r²/σ²)| = √2/σ · e^{−1/2}
        case ModulationFamily::Bump: holder_constant_ = amax * std::sqrt(2.0) / sigma_ * std::exp(-0.5); break;
        default: holder_constant_ = 0.0;
    }
    radially_constant_ = true;
}

Modulation Modulation::with_m0(double m0) const {
    if (!(m0 >= m0_ * (1.0 - 1e-12))) {
        throw Error(ErrorCode::InvalidArgument,
                    "M0 " + std::to_string(m0) + " is below the family bound " + std::to_string(m0_));
    }
    Modulation copy = *this;
    copy.m0_ = m0;
    return copy;
}

double Modulation::kappa(std::span<const double> z) const {
    switch (family_) {
        case ModulationFamily::Cosine: {
            if (z.size() != wave_vector_.size()) {
                throw Error(ErrorCode::InvalidArgument, "state dimension does not match the wave vector");
            }
            return std::cos(dot(wave_vector_, z));
        }
        case ModulationFamily::Bump: return std::exp(-dot(z, z) / (sigma_ * sigma_));
        case ModulationFamily::Constant: return 0.0;
        case ModulationFamily::Custom: break;
    }
    throw Error(ErrorCode::NotClosedForm, "custom modulation has no separable profile");
}

double Modulation::angular_factor(std::span<const double> direction) const {
    for (const auto& f : factors_) {
        double plus = 0.0;
        double minus = 0.0;
        for (std::size_t i = 0; i < direction.size() && i < f.direction.size(); ++i) {
            plus += (f.direction[i] - direction[i]) * (f.direction[i] - direction[i]);
            minus += (f.direction[i] + direction[i]) * (f.direction[i] + direction[i]);
        }
        if (std::sqrt(std::min(plus, minus)) <= SpectralMeasure::kMergeTolerance) return f.value;
    }
    return 1.0;
}

double Modulation::max_abs_factor() const {
    double m = 1.0;
    for (const auto& f : factors_) m = std::max(m, std::abs(f.value));
    return m;
}

double Modulation::operator()(std::span<const double> z, std::span<const double> u) const {
    if (family_ == ModulationFamily::Custom) return custom_(z, u);
    if (family_ == ModulationFamily::Constant) return 1.0;
    const double r = norm(u);
    double g = 1.0;
    if (r > 0.0) {
        Vec dir(u.begin(), u.end());
        for (double& v : dir) v /= r;
        g = angular_factor(dir);
    }
    return 1.0 + amplitude_ * kappa(z) * g;
}

JumpKernel::JumpKernel(SpectralMeasure spectral, StableParams params, Modulation modulation)
    : spectral_(std::move(spectral)), params_(params), modulation_(std::move(modulation)) {
    params_.validate();
    if (spectral_.dimension() != params_.dimension) {
        throw Error(ErrorCode::InvalidArgument, "spectral measure dimension differs from the kernel dimension");
    }
    if (!spectral_.is_symmetric()) {
        throw Error(ErrorCode::InvalidArgument, "spectral measure is not symmetric; call symmetrize first");
    }
    if (nondegeneracy_margin(spectral_, params_.alpha) <= 0.0) {
        throw Error(ErrorCode::DegenerateKernel, "spectral measure is degenerate");
    }
    if (modulation_.family() == ModulationFamily::Cosine &&
        modulation_.wave_vector().size() != params_.dimension) {
        throw Error(ErrorCode::InvalidArgument, "wave vector dimension differs from the kernel dimension");
    }
    for (const auto& f : modulation_.factors()) {
        if (f.direction.size() != params_.dimension || spectral_.find(f.direction) == spectral_.size()) {
            throw Error(ErrorCode::InvalidArgument, "modulation factor direction is not an atom direction");
        }
    }
}

JumpKernel JumpKernel::unmodulated() const { return JumpKernel(spectral_, params_, Modulation::constant()); }

double tail_mass(const JumpKernel& kernel, double r) {
    if (!(r > 0.0)) throw Error(ErrorCode::NonpositiveRadius, "tail radius must be positive");
    if (std::isinf(r)) return 0.0;
    return total_mass(kernel.spectral()) * std::pow(r, -kernel.alpha()) / kernel.alpha();
}

BallMass ball_mass(const JumpKernel& kernel, std::span<const double> center, double radius) {
    if (radius < 0.0) throw Error(ErrorCode::NonpositiveRadius, "ball radius must be nonnegative");
    if (center.size() != kernel.dimension()) throw Error(ErrorCode::InvalidArgument, "center has wrong dimension");
    const double alpha = kernel.alpha();
    const double c2 = dot(center, center);
    BallMass out;
    for (const auto& atom : kernel.spectral().atoms()) {
        // |sθ − c|² = r²  ⇔  s² − 2(θ·c)s + |c|² − r² = 0
        const double b = dot(atom.direction, center);
        const double disc = b * b - c2 + radius * radius;
        if (disc <= 0.0) continue;
        const double root = std::sqrt(disc);
        const double s_hi = b + root;
        if (s_hi <= 0.0) continue;
        const double s_lo = b - root;
        if (s_lo <= 0.0) {
            out.infinite = true;
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }
        out.value += atom.weight * (std::pow(s_lo, -alpha) - std::pow(s_hi, -alpha)) / alpha;
    }
    return out;
}

GammaBoundReport gamma_bound_check(const JumpKernel& kernel, std::size_t sphere_samples,
                                   std::span<const double> radii) {
    auto samples = sphere_probes(kernel.dimension(), sphere_samples);
    for (const auto& atom : kernel.spectral().atoms()) samples.push_back(atom.direction);
    const double gamma = kernel.params().gamma;
    GammaBoundReport report;
    for (const auto& x : samples) {
        for (double r : radii) {
            if (!(r > 0.0 && r < 0.5)) throw Error(ErrorCode::InvalidArgument, "radii must lie in (0, 1/2)");
            const auto mass = ball_mass(kernel, x, r);
            const double ratio = mass.value / std::pow(r, gamma);
            if (ratio > report.worst_ratio) {
                report.worst_ratio = ratio;
                report.worst_point = x;
                report.worst_radius = r;
            }
        }
    }
    report.pass = report.worst_ratio <= kernel.params().m0;
    return report;
}

ModulationReport modulation_bound_check(const JumpKernel& kernel, const std::vector<Vec>& z_samples) {
    const auto& h = kernel.modulation();
    const double m0 = h.m0();
    const double tol = 1e-12;
    ModulationReport report;
    report.min_value = std::numeric_limits<double>::infinity();
    report.max_value = -std::numeric_limits<double>::infinity();
    bool symmetric = true;
    for (const auto& atom : kernel.spectral().atoms()) {
        for (double s : {1.0, 10.0}) {
            Vec u = atom.direction;
            Vec mu = atom.direction;
            for (std::size_t i = 0; i < u.size(); ++i) {
                u[i] *= s;
                mu[i] = -u[i];
            }
            std::vector<double> values;
            values.reserve(z_samples.size());
            for (const auto& z : z_samples) {
                const double v = h(z, u);
                if (std::abs(v - h(z, mu)) > tol) symmetric = false;
                report.min_value = std::min(report.min_value, v);
                report.max_value = std::max(report.max_value, v);
                values.push_back(v);
            }
            for (std::size_t i = 0; i < z_samples.size(); ++i) {
                for (std::size_t j = i + 1; j < z_samples.size(); ++j) {
                    Vec diff = z_samples[i];
                    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] -= z_samples[j][k];
                    const double dz = norm(diff);
                    if (dz == 0.0) continue;
                    const double bound = m0 * std::min(std::pow(dz, h.eta()), 1.0);
                    report.worst_holder_ratio =
                        std::max(report.worst_holder_ratio, std::abs(values[i] - values[j]) / bound);
                }
            }
        }
    }
    report.pass = symmetric && report.min_value >= 1.0 / m0 - tol && report.max_value <= m0 + tol &&
                  report.worst_holder_ratio <= 1.0 + tol;
    return report;
}

RadialOptions radial_options_for(const SpatialFunction& f, std::span<const double> x, double oscillatory_extent) {
    RadialOptions opt;
    opt.inner_scale = 5e-2 * f.length_scale;
    if (std::isfinite(f.support_radius)) {
        opt.outer_radius = norm(x) + f.support_radius + f.length_scale;
    } else {
        opt.outer_radius = oscillatory_extent * f.length_scale;
    }
    return opt;
}

double integrate_second_difference(const JumpKernel& kernel, const SpatialFunction& f,
                                   std::span<const double> x, std::span<const double> z, double delta,
                                   const SecondDifferenceOptions& options) {
    if (z.size() != kernel.dimension()) throw Error(ErrorCode::InvalidArgument, "point has wrong dimension");
    const auto& m = kernel.modulation();
    return integrate_second_difference_weighted(
        kernel, f, x, [&](std::span<const double> u) { return m(z, u); }, delta, options);
}

double integrate_second_difference_weighted(const JumpKernel& kernel, const SpatialFunction& f,
                                            std::span<const double> x, const JumpWeight& h, double delta,
                                            const SecondDifferenceOptions& options) {
    if (delta < 0.0) throw Error(ErrorCode::InvalidArgument, "cutoff must be nonnegative");
    const std::size_t d = kernel.dimension();
    if (x.size() != d) throw Error(ErrorCode::InvalidArgument, "point has wrong dimension");
    const double alpha = kernel.alpha();
    const double fx = f(x);

    RadialOptions base = radial_options_for(f, x, options.oscillatory_extent);
    base.rel_tol = options.rel_tol;
    // Second differences lose ~eps·|f(x)|/s² to cancellation near the inner cut.
    base.abs_tol = options.abs_tol +
                   1e-13 * std::max(1.0, std::abs(fx)) * std::pow(base.inner_scale, -alpha) / alpha;
    if (delta >= base.outer_radius) base.outer_radius = 2.0 * delta;

    double total = 0.0;
    Vec plus(d);
    Vec minus(d);
    Vec u(d);
    for (const auto& atom : kernel.spectral().atoms()) {
        const auto& theta = atom.direction;
        auto g = [&](double s) {
            for (std::size_t i = 0; i < d; ++i) {
                u[i] = s * theta[i];
                plus[i] = x[i] + u[i];
                minus[i] = x[i] - u[i];
            }
            const double second = 0.5 * (f(plus) + f(minus)) - fx;
            return second * h(u);
        };
        RadialOptions opt = base;
        if (std::isfinite(f.support_radius)) {
            const double xt = dot(x, theta);
            for (double bp : {std::abs(f.support_radius - xt), std::abs(f.support_radius + xt)}) {
                if (bp > 0.0) opt.breakpoints.push_back(bp);
            }
        }
        if (f.ray_breakpoints) {
            const auto extra = f.ray_breakpoints(x, theta, opt.outer_radius);
            opt.breakpoints.insert(opt.breakpoints.end(), extra.begin(), extra.end());
        }
        for (std::size_t i = 0; i < d; ++i) u[i] = opt.outer_radius * theta[i];
        // Beyond the outer radius f(x±u) is replaced by its far mean.
        opt.far_value = (f.far_mean - fx) * h(u);
        total += atom.weight * radial_integral(g, alpha, delta, opt).value;
    }
    return total;
}

}  // namespace anisoheat
