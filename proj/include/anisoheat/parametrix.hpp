#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "anisoheat/frozen_kernel.hpp"
#include "anisoheat/generator.hpp"
#include "anisoheat/grid.hpp"
#include "anisoheat/levy_kernel.hpp"
#include "anisoheat/symbol.hpp"
#include "anisoheat/time_mesh.hpp"

namespace anisoheat {

/// Which argument a stored slice holds fixed.
enum class SliceAxis {
    Target,  // slice k is x ↦ K(t, x, y_k)
    Source,  // slice k is y ↦ K(t, x_k, y)
};

/// Kernel values on (time node, slice, grid point).
struct SpaceTimeKernel {
    SliceAxis axis = SliceAxis::Target;
    std::vector<double> times;
    std::vector<std::size_t> slices;
    std::size_t points = 0;
    std::vector<double> values;

    SpaceTimeKernel() = default;
    SpaceTimeKernel(SliceAxis axis, std::vector<double> times, std::vector<std::size_t> slices, std::size_t points);

    std::size_t nodes() const noexcept { return times.size(); }
    std::span<double> slice(std::size_t node, std::size_t k);
    std::span<const double> slice(std::size_t node, std::size_t k) const;
    /// K(t_node, x, y) when the slice through it is stored; throws otherwise.
    double at(std::size_t node, std::size_t x, std::size_t y) const;
    /// Position of grid index i in `slices`, or slices.size().
    std::size_t slice_position(std::size_t i) const noexcept;
    double sup(std::size_t node) const;
};

struct SeriesControls {
    /// 0 selects ½·min(η, α, α+γ−d).
    double theta = 0.0;
    int max_terms = 40;
    double tail_tolerance = 1e-8;
    double quadrature_tolerance = 1e-6;
};

/// ½·min(η, α, α+γ−d) for the kernel's modulation and parameters.
double default_theta(const JumpKernel& kernel);
/// Throws InvalidArgument unless 0 < θ < α∧η∧(α+γ−d).
void validate_theta(const JumpKernel& kernel, double theta);

struct EngineOptions {
    /// Sup-norm growth per Volterra step that counts as unstable.
    double amplification_limit = 10.0;
    /// Absolute error target for interpolating e^{−τ q(b,ξ)} in the modulation value b.
    double interpolation_tolerance = 1e-13;
    std::size_t max_interpolation_nodes = 64;
    /// Terms computed by the calibration pass (ratios k = 1..terms−1).
    int calibration_terms = 6;
    /// Every stride-th slice enters the calibration (0: about 32 slices).
    std::size_t calibration_stride = 0;
    int max_fixed_point_iterations = 200;
};

/// Frozen kernel p^y at mesh node n, centered at the origin; grid index y.
using FrozenProvider = std::function<std::vector<double>(std::size_t node, std::size_t y)>;

struct SeriesCalibration {
    double theta = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    /// term_norms[k−1][n] = sup |Φ^{⊠k}(t_n)| over the calibration slices.
    std::vector<std::vector<double>> term_norms;
    /// ‖Φ^{⊠(k+1)}‖/‖Φ^{⊠k}‖ at the horizon, k = 1..terms−1.
    std::vector<double> ratios;
    /// C₂ t^{θ/α} Γ(kθ/α)/Γ((k+1)θ/α) at the horizon.
    std::vector<double> predicted_ratios;
    /// max over k of the two-sided mismatch between the two.
    double ratio_spread = 0.0;

    /// Σ_{k>K} C₁C₂^k t^{−1+kθ/α}/Γ(kθ/α).
    double tail_bound(int terms, double t, double alpha) const;
};

struct SeriesResult {
    SpaceTimeKernel p;
    SpaceTimeKernel psi;
    int terms = 0;
    /// Largest tail bound over the mesh for the chosen term count.
    double tail_bound = 0.0;
    /// sup |Φ^{⊠k}(t_n)| over the computed slices.
    std::vector<std::vector<double>> term_norms;
};

/// Parametrix construction on a periodic grid for separable modulations.
///
/// Works with the Fourier-multiplier generator A = A₀ + diag(aκ)·A_g, so
/// p⁰_t(x,y) is the inverse transform of e^{−t q(y,ξ)} and
/// Φ_t(x,y) = (b(x) − b(y)) F⁻¹[−q_g e^{−t q(y,·)}](x−y) with b = aκ.
/// Time convolutions interpolate the slow factor linearly between nodes and
/// integrate the exponential exactly. The dependence on b(y) is carried by a
/// Chebyshev interpolant, which turns each convolution into a recursion over
/// the mesh per interpolation node.
class ParametrixEngine {
public:
    ParametrixEngine(const SymbolEvaluator& symbol, SpatialGrid grid, TimeMesh mesh, SeriesControls controls = {},
                     EngineOptions options = {});

    const SpatialGrid& grid() const noexcept { return grid_; }
    const TimeMesh& mesh() const noexcept { return mesh_; }
    const DiscreteGenerator& generator() const noexcept { return generator_; }
    double theta() const noexcept { return theta_; }
    double alpha() const noexcept { return alpha_; }
    std::size_t interpolation_nodes() const noexcept { return nodes_.size(); }
    const SeriesControls& controls() const noexcept { return controls_; }

    /// Replaces the built-in spectral frozen kernels (cache hook).
    void set_frozen_provider(FrozenProvider provider) { provider_ = std::move(provider); }
    std::vector<double> frozen(std::size_t node, std::size_t y) const;

    SpaceTimeKernel zero_order(std::vector<std::size_t> targets) const;
    SpaceTimeKernel zero_order_rows(std::vector<std::size_t> sources) const;
    SpaceTimeKernel phi(std::vector<std::size_t> targets) const;

    /// Φ ⊠ F for target slices of F.
    SpaceTimeKernel phi_convolve(const SpaceTimeKernel& f) const;
    /// p⁰ ⊠ F for target slices of F.
    SpaceTimeKernel zero_order_convolve(const SpaceTimeKernel& f) const;

    SeriesCalibration calibrate(std::vector<std::size_t> targets) const;
    /// p = p⁰ + p⁰ ⊠ Ψ with Ψ = Σ_{k≤K} Φ^{⊠k}. Throws TailNotConverged.
    SeriesResult assemble(std::vector<std::size_t> targets, const SeriesCalibration& calibration) const;
    /// p = p⁰ + p ⊠ Φ marched over the mesh for source slices. Throws MarchingInstability.
    SpaceTimeKernel duhamel(std::vector<std::size_t> sources) const;

    /// x ↦ Σ_y h^d ∂_t p^y_t(y − x) at node n.
    std::vector<double> frozen_derivative_mass(std::size_t node) const;

    /// All grid indices.
    std::vector<std::size_t> all_points() const;

private:
    struct StepCoefficients;
    StepCoefficients coefficients(std::size_t n) const;
    SpaceTimeKernel left_convolve(const SpaceTimeKernel& f, bool phi) const;
    std::vector<double> interpolation_weights(double b) const;

    SpatialGrid grid_;
    Fft fft_;
    TimeMesh mesh_;
    DiscreteGenerator generator_;
    SeriesControls controls_;
    EngineOptions options_;
    double alpha_;
    double theta_;
    std::vector<double> profile_;  // b(x_j)
    std::vector<double> nodes_;    // interpolation nodes in b
    std::vector<double> bary_;     // barycentric weights
    std::vector<std::vector<double>> lagrange_;  // ℓ_c(b(x_j))
    FrozenProvider provider_;
};

/// Φ_t(x,y) from the difference form
///   ∫ ½[p(w−u) + p(w+u) − 2p(w)] (h(x,u) − h(y,u)) ν₀(du),  w = y − x,
/// with p the frozen kernel for base y (spline interpolated, tail |·|^{−d−α}).
double phi_kernel(const JumpKernel& kernel, const FrozenKernel& frozen_at_y, std::span<const double> x,
                  std::span<const double> y, const SecondDifferenceOptions& options = {});

/// Space-time kernel as a callable (τ, x, z) ↦ K_τ(x,z).
using TimeKernel = std::function<double(double tau, std::span<const double> x, std::span<const double> z)>;

/// (f ⊠ g)(t,x,y) = ∫₀^t Σ_z h^d f(t−s,x,z) g(s,z,y) ds on the grid, with the
/// endpoint singularity s^{β−1}(t−s)^{β−1} declared through `options.beta`.
double boxtimes(const TimeKernel& f, const TimeKernel& g, double t, std::span<const double> x,
                std::span<const double> y, const SpatialGrid& grid, const SingularIntegralOptions& options = {});

}  // namespace anisoheat
