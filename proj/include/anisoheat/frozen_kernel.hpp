#pragma once

#include <span>
#include <vector>

#include "anisoheat/grid.hpp"
#include "anisoheat/symbol.hpp"

namespace anisoheat {

struct FrozenOptions {
    /// Reject t below the aliasing floor exp(−t c_low (π/h)^α) < tolerance.
    bool enforce_aliasing_guard = true;
    double aliasing_tolerance = 1e-12;
    /// d = 1 only: subtract the periodic images of the stable tail so the
    /// returned field approximates the density on R rather than on the torus.
    bool free_space = false;
};

/// Frozen-coefficient density p_t^z on a periodic grid.
///
/// `values` is the exact inverse DFT of exp(−t q(z,ξ)) on the dual lattice,
/// i.e. the density of the frozen process wrapped onto the torus. Its mass is
/// one to round-off. `free_space_values` removes the wrapped tails (d = 1).
struct FrozenKernel {
    Vec base_point;
    double time = 0.0;
    SpatialGrid grid;
    std::vector<double> values;
    /// exp(−t q(z,ξ_k)) in FFT order.
    std::vector<double> spectrum;
    /// Σ_{k≠0} p(x + kL) from the tail expansion; empty when unavailable.
    std::vector<double> image_correction;

    std::vector<double> free_space_values() const;
    /// Free-space mass outside the box, h Σ image_correction.
    double outside_mass() const;
};

struct FrozenInvariants {
    double mass_error = 0.0;
    double min_value = 0.0;
    double symmetry_error = 0.0;
};

/// q(z,ξ_k) on the dual lattice of `grid`, FFT order.
std::vector<double> symbol_on_grid(const SymbolEvaluator& symbol, std::span<const double> z, const SpatialGrid& grid);

/// Smallest t accepted by the aliasing guard.
double frozen_time_floor(const SymbolEvaluator& symbol, std::span<const double> z, const SpatialGrid& grid,
                         double tolerance = 1e-12);

FrozenKernel evaluate_frozen(const SymbolEvaluator& symbol, std::span<const double> z, double t,
                             const SpatialGrid& grid, const FrozenOptions& options = {});

/// ∂_t p_t^z: inverse transform of −q e^{−tq}.
std::vector<double> frozen_time_derivative(const SymbolEvaluator& symbol, std::span<const double> z, double t,
                                           const SpatialGrid& grid, const FrozenOptions& options = {});

/// ∂_x^β p_t^z for |β| ≤ 2; `beta` has one entry per dimension.
std::vector<double> frozen_space_derivative(const SymbolEvaluator& symbol, std::span<const double> z, double t,
                                            const SpatialGrid& grid, std::span<const int> beta,
                                            const FrozenOptions& options = {});

/// max_x |p_t^{w1}(x) − p_t^{w2}(x)| / [(|w1−w2|^η ∧ 1) G_t^{(α+γ−θ)}(x)]; 0 when w1 = w2.
double frozen_holder_in_base(const SymbolEvaluator& symbol, std::span<const double> w1, std::span<const double> w2,
                             double t, const SpatialGrid& grid, double theta, const FrozenOptions& options = {});

FrozenInvariants check_frozen(const FrozenKernel& kernel);

/// Tail expansion of a one-dimensional symmetric stable density with symbol c|ξ|^α,
/// differentiated `dt` times in t and `dx` times in x (dt ≤ 1, dx ≤ 2). Valid for |x| ≫ (ct)^{1/α}.
double stable_tail(double x, double t, double c, double alpha, int dt, int dx);

/// Σ_{k≠0} stable_tail(x_j + kL) for every grid point.
std::vector<double> periodic_images(const SpatialGrid& grid, double t, double c, double alpha, int dt, int dx);

}  // namespace anisoheat
