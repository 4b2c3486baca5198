#pragma once

#include <functional>
#include <span>
#include <vector>

#include "anisoheat/radial_quadrature.hpp"
#include "anisoheat/spatial_function.hpp"
#include "anisoheat/spectral_measure.hpp"

namespace anisoheat {

/// Stability index α, regularity order γ and the γ-measure constant m0.
struct StableParams {
    std::size_t dimension = 1;
    double alpha = 1.0;
    double gamma = 1.0;
    double m0 = 1.0;

    /// Throws InvalidAlpha / InadmissibleExponents on violated ranges.
    void validate() const;
};

enum class ModulationFamily { Constant, Cosine, Bump, Custom };

const char* to_string(ModulationFamily family);

/// Per-direction factor g(θ) of a separable modulation. The factor of −θ is
/// always the factor of θ, so only one of the pair needs listing.
struct DirectionFactor {
    Vec direction;
    double value = 1.0;
};

/// State dependence h(z,u) of the jump intensity.
///
/// The shipped families are separable: h(z,u) = 1 + a·κ(z)·g(u/|u|) with κ
/// bounded by 1 and g a symmetric table (default 1). They are radially
/// constant along every ray, so the symbol keeps its closed form with the
/// factor absorbed into the atom weights. The custom family accepts any
/// callable and only supports the numeric paths.
class Modulation {
public:
    using Callable = std::function<double(std::span<const double> z, std::span<const double> u)>;

    static Modulation constant();
    /// κ(z) = cos(k·z).
    static Modulation cosine(double amplitude, Vec wave_vector, std::vector<DirectionFactor> factors = {});
    /// κ(z) = exp(−|z|²/σ²).
    static Modulation bump(double amplitude, double sigma, std::vector<DirectionFactor> factors = {});
    /// `m0` and `eta` are taken on trust; `radially_constant` declares that
    /// h(z, sθ) does not depend on s > 0.
    static Modulation custom(Callable h, double m0, double eta, bool radially_constant);

    ModulationFamily family() const noexcept { return family_; }
    double amplitude() const noexcept { return amplitude_; }
    const Vec& wave_vector() const noexcept { return wave_vector_; }
    double sigma() const noexcept { return sigma_; }
    const std::vector<DirectionFactor>& factors() const noexcept { return factors_; }

    double m0() const noexcept { return m0_; }
    double eta() const noexcept { return eta_; }
    /// Lipschitz constant of z ↦ h(z,u), uniform in u (separable families).
    double holder_constant() const noexcept { return holder_constant_; }
    bool radially_constant() const noexcept { return radially_constant_; }
    bool separable() const noexcept { return family_ != ModulationFamily::Custom; }

    /// Raises the comparability constant. Values below the family default are rejected.
    Modulation with_m0(double m0) const;

    double operator()(std::span<const double> z, std::span<const double> u) const;
    /// Spatial profile κ(z) of a separable family; 0 for CONSTANT.
    double kappa(std::span<const double> z) const;
    /// g(θ) for a unit direction; 1 when θ is not listed.
    double angular_factor(std::span<const double> direction) const;
    double max_abs_factor() const;

private:
    Modulation() = default;
    void finish_separable();

    ModulationFamily family_ = ModulationFamily::Constant;
    double amplitude_ = 0.0;
    Vec wave_vector_;
    double sigma_ = 1.0;
    std::vector<DirectionFactor> factors_;
    Callable custom_;
    double m0_ = 1.0;
    double eta_ = 1.0;
    double holder_constant_ = 0.0;
    bool radially_constant_ = true;
};

/// ν(z,du) = h(z,u) ν₀(du) with ν₀ = ∫ μ₀(dθ) ∫ 1(sθ ∈ du) s^{−1−α} ds.
class JumpKernel {
public:
    /// Validates the parameter ranges, symmetry and non-degeneracy of μ₀, and
    /// that every listed modulation direction is an atom direction.
    JumpKernel(SpectralMeasure spectral, StableParams params, Modulation modulation);

    const SpectralMeasure& spectral() const noexcept { return spectral_; }
    const StableParams& params() const noexcept { return params_; }
    const Modulation& modulation() const noexcept { return modulation_; }
    std::size_t dimension() const noexcept { return params_.dimension; }
    double alpha() const noexcept { return params_.alpha; }

    /// Same measure and parameters with h ≡ 1.
    JumpKernel unmodulated() const;

private:
    SpectralMeasure spectral_;
    StableParams params_;
    Modulation modulation_;
};

/// ν₀(B(0,r)^c) = |μ₀| r^{−α}/α.
double tail_mass(const JumpKernel& kernel, double r);

/// ν₀ of a ball. `infinite` is set when the closed ball contains the origin
/// and some ray enters it; `value` is then +inf.
struct BallMass {
    bool infinite = false;
    double value = 0.0;
};

BallMass ball_mass(const JumpKernel& kernel, std::span<const double> center, double radius);

struct GammaBoundReport {
    double worst_ratio = 0.0;
    Vec worst_point;
    double worst_radius = 0.0;
    bool pass = true;
};

/// max over unit-sphere samples x and radii r of ν₀(B(x,r))/r^γ, compared with m0.
/// The sample set is the sphere lattice plus every atom direction.
GammaBoundReport gamma_bound_check(const JumpKernel& kernel, std::size_t sphere_samples,
                                   std::span<const double> radii);

struct ModulationReport {
    double min_value = 0.0;
    double max_value = 0.0;
    /// max |h(z₁,u)−h(z₂,u)| / (M0 (|z₁−z₂|^η ∧ 1)) over sampled pairs.
    double worst_holder_ratio = 0.0;
    bool pass = true;
};

/// Samples h over z_samples × atom directions (at radii 1 and 10) and checks
/// the comparability and Hölder bounds as well as h(z,u) = h(z,−u).
ModulationReport modulation_bound_check(const JumpKernel& kernel, const std::vector<Vec>& z_samples);

struct SecondDifferenceOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    /// Truncation radius for functions without a finite support radius, in
    /// units of the function's length scale.
    double oscillatory_extent = 1e4;
};

/// ∫_{|u|>δ} ½[f(x+u)+f(x−u)−2f(x)] ν(z,du), one radial quadrature per atom.
/// δ = 0 is the full compensated integral.
double integrate_second_difference(const JumpKernel& kernel, const SpatialFunction& f,
                                   std::span<const double> x, std::span<const double> z,
                                   double delta, const SecondDifferenceOptions& options = {});

/// Jump weight w(u) multiplying ν₀(du); may be signed.
using JumpWeight = std::function<double(std::span<const double> u)>;

/// Same integral against w(u) ν₀(du) instead of ν(z,du).
double integrate_second_difference_weighted(const JumpKernel& kernel, const SpatialFunction& f,
                                            std::span<const double> x, const JumpWeight& weight, double delta,
                                            const SecondDifferenceOptions& options = {});

/// Radial integration settings for a function f seen from x along all rays:
/// inner cut from the length scale and the outer radius from the support.
RadialOptions radial_options_for(const SpatialFunction& f, std::span<const double> x,
                                 double oscillatory_extent);

}  // namespace anisoheat
