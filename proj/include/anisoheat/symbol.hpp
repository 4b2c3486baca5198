#pragma once

#include <span>
#include <vector>

#include "anisoheat/levy_kernel.hpp"

namespace anisoheat {

/// Largest supported stability index. The symbol prefactor grows like 1/(2−α).
inline constexpr double kMaxAlpha = 1.95;

/// π / (2 sin(πα/2) Γ(1+α)), evaluated in extended precision.
double stable_prefactor(double alpha);

struct Comparability {
    double c_low = 0.0;
    double c_high = 0.0;
};

/// Characteristic exponent q(z,ξ) = ∫ (1 − cos ξ·u) ν(z,du).
class SymbolEvaluator {
public:
    explicit SymbolEvaluator(JumpKernel kernel);

    const JumpKernel& kernel() const noexcept { return kernel_; }
    /// True iff h(z,·) is constant along each ray.
    bool closed_form_available() const noexcept { return kernel_.modulation().radially_constant(); }
    double prefactor() const noexcept { return prefactor_; }

    /// q₀(ξ) for h ≡ 1.
    double exponent_closed_form(std::span<const double> xi) const;
    /// q(z,ξ) with the per-ray factor h(z,θ) absorbed into the weights.
    /// Throws NotClosedForm for radially varying modulations.
    double exponent_closed_form(std::span<const double> z, std::span<const double> xi) const;
    /// Radial quadrature of (1 − cos(s ξ·θ)) h(z,sθ) s^{−1−α} per atom.
    double exponent_numeric(std::span<const double> z, std::span<const double> xi) const;
    /// Closed form when available, numeric otherwise.
    double exponent(std::span<const double> z, std::span<const double> xi) const;

    /// Separable pieces: q(z,ξ) = q₀(ξ) + a κ(z) q_g(ξ) with
    /// q_g(ξ) = prefactor · Σ w g(θ) |ξ·θ|^α.
    double modulation_part(std::span<const double> xi) const;

    /// min and max of q(z,ξ)/|ξ|^α over the samples (ξ = 0 is skipped).
    /// Throws DegenerateKernel if the minimum is below 1e−12.
    Comparability comparability_scan(const std::vector<Vec>& z_samples, const std::vector<Vec>& xi_samples) const;

private:
    JumpKernel kernel_;
    double prefactor_;
    double unit_integral_;  // ∫ (1 − cos r) r^{−1−α} dr by quadrature
};

/// comparability_scan for h ≡ 1 directly on a measure, which may be degenerate.
Comparability comparability_scan(const SpectralMeasure& measure, double alpha, const std::vector<Vec>& xi_samples);

}  // namespace anisoheat
