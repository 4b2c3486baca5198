#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "anisoheat/grid.hpp"
#include "anisoheat/levy_kernel.hpp"
#include "anisoheat/spatial_function.hpp"
#include "anisoheat/symbol.hpp"

namespace anisoheat {

/// C² cubic spline through a grid field (natural end conditions, tensor
/// product in 2-d). Outside the sampled box the field is continued by a power
/// law |x|^{−tail_exponent} matched to the boundary value along the ray.
class GridFunction {
public:
    GridFunction(SpatialGrid grid, std::vector<double> values, double tail_exponent);

    double operator()(std::span<const double> x) const;
    const SpatialGrid& grid() const noexcept { return grid_; }

    /// View for the quadrature routines; length scale is the grid spacing.
    SpatialFunction as_function() const;

private:
    double inside(std::span<const double> x) const;

    SpatialGrid grid_;
    double tail_exponent_;
    std::vector<double> coefficients_;  // (N+2)^d B-spline coefficients
};

struct GeneratorOptions {
    /// Largest cutoff δ₀; 0 selects the function's length scale.
    double delta0 = 0.0;
    /// Halvings of δ₀ (6 reaches δ₀/64).
    int levels = 6;
    double rel_tol = 1e-6;
    double abs_tol = 1e-10;
    SecondDifferenceOptions quadrature;
};

/// L^{z,δ} f(x) for δ > 0. For δ = 0 the limit of L^{z,δ_k} f(x) along
/// δ_k = 2^{−k} δ₀, accelerated by Richardson elimination of the δ^{2−α},
/// δ^{4−α}, δ^{6−α} terms. Throws NonconvergentLimit if the extrapolated values
/// disagree by more than the tolerance at the last level.
double apply_generator(const JumpKernel& kernel, const SpatialFunction& f, std::span<const double> z,
                       std::span<const double> x, double delta, const GeneratorOptions& options = {});

/// ∫ |f(x+u) − f(x) − u·∇f(x) 1{|u| ≤ t^{1/α}}| ν₀(du).
double generator_majorant(const JumpKernel& kernel, const SpatialFunction& f, std::span<const double> x, double t,
                          const SecondDifferenceOptions& options = {});

/// L^{z,δ} f(x0) at a caller-certified global maximizer x0; should be ≤ 0.
double maximum_principle_probe(const JumpKernel& kernel, const SpatialFunction& f, std::span<const double> x0,
                               std::span<const double> z, double delta);

/// Fourier-multiplier form of the generator on a periodic grid, for separable modulations:
///   (A u)(x) = F⁻¹[−q₀ F u](x) + a κ(x) F⁻¹[−q_g F u](x),
/// which is L_x with the state frozen at the evaluation point.
class DiscreteGenerator {
public:
    DiscreteGenerator(const SymbolEvaluator& symbol, const SpatialGrid& grid);

    const SpatialGrid& grid() const noexcept { return grid_; }
    const std::vector<double>& base_symbol() const noexcept { return q0_; }
    const std::vector<double>& modulation_symbol() const noexcept { return qg_; }
    /// a κ(x_j) on the grid.
    const std::vector<double>& modulation_profile() const noexcept { return profile_; }

    std::vector<double> apply(const std::vector<double>& u) const;
    /// Constant-coefficient generator with the state frozen at z.
    std::vector<double> apply_frozen(const std::vector<double>& u, std::span<const double> z) const;
    /// Dense matrix of `apply` (d = 1, test and diagnostic use).
    Eigen::MatrixXd matrix() const;

private:
    SpatialGrid grid_;
    Fft fft_;
    Modulation modulation_;
    std::vector<double> q0_;
    std::vector<double> qg_;
    std::vector<double> profile_;
};

}  // namespace anisoheat
