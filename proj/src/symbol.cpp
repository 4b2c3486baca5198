#include "anisoheat/symbol.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "anisoheat/errors.hpp"

namespace anisoheat {

namespace {

// Integration limit of the rescaled radial variable r = |ξ·θ| s.
constexpr double kRescaledOuter = 200.0;

// ∫_S^∞ cos(r) r^{−β} dr from the recursion I(β) = i e^{iS} S^{−β} − iβ I(β+1),
// closed with I(β+K) ≈ 0. At S = 200 six steps reach round-off.
double cosine_tail(double S, double beta) {
    constexpr int kSteps = 6;
    const std::complex<double> i(0.0, 1.0);
    const std::complex<double> e = std::exp(i * S);
    std::complex<double> I = 0.0;
    for (int k = kSteps; k >= 0; --k) {
        const double b = beta + k;
        I = i * e * std::pow(S, -b) - i * b * I;
    }
    return I.real();
}

// ∫_0^∞ (1 − cos r) r^{−1−α} dr by quadrature.
double unit_radial_integral(double alpha) {
    RadialOptions opt;
    opt.outer_radius = kRescaledOuter;
    opt.far_value = 1.0;
    opt.rel_tol = 1e-12;
    const double head = radial_integral([](double r) { return 1.0 - std::cos(r); }, alpha, 0.0, opt).value;
    return head - cosine_tail(kRescaledOuter, 1.0 + alpha);
}

double weighted_sum(const SpectralMeasure& measure, double alpha, std::span<const double> xi, auto&& weight) {
    double s = 0.0;
    for (const auto& atom : measure.atoms()) {
        const double proj = std::abs(dot(xi, atom.direction));
        if (proj > 0.0) s += weight(atom) * atom.weight * std::pow(proj, alpha);
    }
    return s;
}

bool is_zero(std::span<const double> xi) {
    for (double v : xi) {
        if (v != 0.0) return false;
    }
    return true;
}

}  // namespace

double stable_prefactor(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0,2)");
    const long double a = alpha;
    const long double pi = std::numbers::pi_v<long double>;
    return static_cast<double>(pi / (2.0L * std::sin(pi * a / 2.0L) * std::tgamma(1.0L + a)));
}

SymbolEvaluator::SymbolEvaluator(JumpKernel kernel) : kernel_(std::move(kernel)) {
    if (kernel_.alpha() > kMaxAlpha) {
        throw Error(ErrorCode::InvalidAlpha, "alpha above the supported cap 1.95");
    }
    prefactor_ = stable_prefactor(kernel_.alpha());
    unit_integral_ = unit_radial_integral(kernel_.alpha());
}

double SymbolEvaluator::exponent_closed_form(std::span<const double> xi) const {
    if (is_zero(xi)) return 0.0;
    return prefactor_ * weighted_sum(kernel_.spectral(), kernel_.alpha(), xi, [](const SphericalAtom&) { return 1.0; });
}

double SymbolEvaluator::exponent_closed_form(std::span<const double> z, std::span<const double> xi) const {
    if (!closed_form_available()) {
        throw Error(ErrorCode::NotClosedForm, "modulation varies along rays");
    }
    if (is_zero(xi)) return 0.0;
    const auto& h = kernel_.modulation();
    return prefactor_ * weighted_sum(kernel_.spectral(), kernel_.alpha(), xi,
                                     [&](const SphericalAtom& atom) { return h(z, atom.direction); });
}

double SymbolEvaluator::modulation_part(std::span<const double> xi) const {
    if (is_zero(xi)) return 0.0;
    const auto& h = kernel_.modulation();
    if (!h.separable()) throw Error(ErrorCode::NotClosedForm, "modulation is not separable");
    return prefactor_ * weighted_sum(kernel_.spectral(), kernel_.alpha(), xi, [&](const SphericalAtom& atom) {
               return h.angular_factor(atom.direction);
           });
}

double SymbolEvaluator::exponent_numeric(std::span<const double> z, std::span<const double> xi) const {
    if (is_zero(xi)) return 0.0;
    const double alpha = kernel_.alpha();
    const auto& h = kernel_.modulation();
    const std::size_t d = kernel_.dimension();
    double total = 0.0;
    if (closed_form_available()) {
        // h(z, sθ) = h(z, θ): rescale each ray by λ = |ξ·θ|.
        const double unit = unit_integral_;
        for (const auto& atom : kernel_.spectral().atoms()) {
            const double lambda = std::abs(dot(xi, atom.direction));
            if (lambda == 0.0) continue;
            total += atom.weight * h(z, atom.direction) * std::pow(lambda, alpha) * unit;
        }
        return total;
    }
    Vec u(d);
    for (const auto& atom : kernel_.spectral().atoms()) {
        const double lambda = std::abs(dot(xi, atom.direction));
        if (lambda == 0.0) continue;
        auto g = [&](double r) {
            const double s = r / lambda;
            for (std::size_t i = 0; i < d; ++i) u[i] = s * atom.direction[i];
            return (1.0 - std::cos(r)) * h(z, u);
        };
        RadialOptions opt;
        opt.outer_radius = 1e4;
        for (std::size_t i = 0; i < d; ++i) u[i] = opt.outer_radius / lambda * atom.direction[i];
        opt.far_value = h(z, u);
        opt.rel_tol = 1e-10;
        total += atom.weight * std::pow(lambda, alpha) * radial_integral(g, alpha, 0.0, opt).value;
    }
    return total;
}

double SymbolEvaluator::exponent(std::span<const double> z, std::span<const double> xi) const {
    return closed_form_available() ? exponent_closed_form(z, xi) : exponent_numeric(z, xi);
}

Comparability SymbolEvaluator::comparability_scan(const std::vector<Vec>& z_samples,
                                                  const std::vector<Vec>& xi_samples) const {
    if (z_samples.empty() || xi_samples.empty()) {
        throw Error(ErrorCode::InvalidArgument, "comparability scan needs samples");
    }
    Comparability out{std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& xi : xi_samples) {
        if (is_zero(xi)) continue;
        const double scale = std::pow(norm(xi), kernel_.alpha());
        for (const auto& z : z_samples) {
            const double r = exponent(z, xi) / scale;
            out.c_low = std::min(out.c_low, r);
            out.c_high = std::max(out.c_high, r);
        }
    }
    if (!(out.c_low >= 1e-12)) throw Error(ErrorCode::DegenerateKernel, "symbol vanishes in some direction");
    return out;
}

Comparability comparability_scan(const SpectralMeasure& measure, double alpha, const std::vector<Vec>& xi_samples) {
    const double c = stable_prefactor(alpha);
    Comparability out{std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& xi : xi_samples) {
        if (is_zero(xi)) continue;
        const double r = c * weighted_sum(measure, alpha, xi, [](const SphericalAtom&) { return 1.0; }) /
                         std::pow(norm(xi), alpha);
        out.c_low = std::min(out.c_low, r);
        out.c_high = std::max(out.c_high, r);
    }
    if (!(out.c_low >= 1e-12)) throw Error(ErrorCode::DegenerateKernel, "symbol vanishes in some direction");
    return out;
}

}  // namespace anisoheat
