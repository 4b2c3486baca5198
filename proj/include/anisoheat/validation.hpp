#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anisoheat/comparison_kernel.hpp"
#include "anisoheat/generator.hpp"
#include "anisoheat/grid.hpp"
#include "anisoheat/parametrix.hpp"
#include "anisoheat/symbol.hpp"

namespace anisoheat {

/// K(t, x) at a point.
double comparison_kernel_eval(const ComparisonKernel& kernel, double t, std::span<const double> x);

/// ∫ K_t(x) dx by radial quadrature (knee at t^{1/α}) plus the power-law tail.
double comparison_integral(const ComparisonKernel& kernel, double t);

struct SubconvolutionResult {
    /// max over s and x of (K_{t−s} * K_s)(x) / K_t(x)
    double constant = 0.0;
    double min_ratio = 0.0;
    /// ratio at x = 0 for each s
    std::vector<double> origin_ratios;
    std::size_t nonfinite = 0;
    std::size_t samples = 0;
};

/// Convolutions on a zero-padded copy of the grid (free-space convolution of
/// the kernels restricted to the box); ratios are taken on the inner half box.
SubconvolutionResult subconvolution_check(const ComparisonKernel& kernel, double t, std::span<const double> s_list,
                                          const SpatialGrid& grid);

/// Per-time maxima of |value|/majorant and the scanned exponential rate.
struct ScannedFit {
    double constant = 0.0;
    double rate = 0.0;
    std::vector<double> times;
    std::vector<double> per_time;
    std::size_t samples = 0;
    std::size_t nonfinite = 0;
};

/// Default scan grid {0, 0.1, ..., 2} for the rate c.
std::vector<double> default_rate_grid();

/// For each c: C(c) = max_t per_time(t) e^{−ct}; keeps the c minimizing
/// C(c) e^{c·max t}, i.e. the smallest majorant at the largest sampled time.
void choose_rate(ScannedFit& fit, std::span<const double> rate_grid);

/// Majorant m(t, x, y); entries with m below 1e−12 are skipped.
using Majorant = std::function<double(double t, std::size_t x, std::size_t y)>;

/// max over stored (x,y) at the given nodes of |K(t,x,y)|/m(t,x,y), per node.
ScannedFit ratio_fit(const SpaceTimeKernel& k, std::span<const std::size_t> nodes, const Majorant& majorant);

struct UpperBoundFit {
    double constant = 0.0;  // max of the k = 0 and k = 1 constants at the chosen rate
    double rate = 0.0;
    ScannedFit value;       // |p| / G
    ScannedFit derivative;  // t |∂_t p| / G, interior nodes only
};

/// |∂_t^k p_t(x,y)| ≤ C t^{−k} e^{ct} G_t^{(α+γ)}(y−x), k = 0, 1. ∂_t is the
/// three-point difference on the (non-uniform) mesh, so the first and last
/// nodes are left out of the k = 1 fit.
UpperBoundFit upper_bound_fit(const SpaceTimeKernel& p, const SpatialGrid& grid, const ComparisonKernel& g,
                              std::span<const std::size_t> nodes, std::span<const double> rate_grid);

struct HolderFit {
    double constant = 0.0;
    std::size_t worst_x1 = 0;
    std::size_t worst_x2 = 0;
    double worst_t = 0.0;
};

/// |p(x₁,y) − p(x₂,y)| ≤ C (|x₁−x₂|/t^{1/α})^θ e^{ct}(G(y−x₁) + G(y−x₂)) over
/// stored target slices y.
HolderFit holder_in_x_check(const SpaceTimeKernel& p, const SpatialGrid& grid, const ComparisonKernel& g,
                            std::span<const std::pair<std::size_t, std::size_t>> pairs,
                            std::span<const std::size_t> nodes, double theta, double rate);

/// Torus distance |x_i − x_j| (minimum image).
double grid_distance(const SpatialGrid& grid, std::size_t i, std::size_t j);

/// 3-point derivative at interior node n of a mesh.
std::vector<double> mesh_time_derivative(const SpaceTimeKernel& k, std::size_t node, std::size_t slice);

// ---------------------------------------------------------------------------
// frozen-kernel fits

/// max over z samples, t and k, j ∈ {0, 1} of t^{k + j/α}|∂_t^k ∂_{x₁}^j p^z_t(x)| / G_t^{(α+γ)}(x).
double frozen_bound_fit(const SymbolEvaluator& symbol, const SpatialGrid& grid, const std::vector<Vec>& z_samples,
                        std::span<const double> times);

/// max of frozen_holder_in_base over sample pairs and times.
double frozen_base_holder_fit(const SymbolEvaluator& symbol, const SpatialGrid& grid,
                              const std::vector<std::pair<Vec, Vec>>& pairs, std::span<const double> times,
                              double theta);

/// max over nodes, y samples and states z ∈ {y, argmin b, argmax b} of
/// t |A^z p^y_t(x)| / G_t^{(β)}(x): frozen generators applied to frozen kernels.
double generator_estimate_fit(const ParametrixEngine& engine, double g_exponent,
                              std::span<const std::size_t> y_samples, std::span<const std::size_t> nodes);

/// max over x of |Σ_y h^d ∂_t p^y_t(y − x)| t^{1−θ/α}, per node.
ScannedFit cancellation_fit(const ParametrixEngine& engine, std::span<const std::size_t> nodes);

// ---------------------------------------------------------------------------
// kernel properties

/// max over stored x of |Σ_y p_t(x,y) h^d − 1| (source slices or full target set).
double mass_defect(const SpaceTimeKernel& p, const SpatialGrid& grid, std::size_t node);

/// sup |∫ p_s(x,z) p_t(z,y) dz − p_{s+t}(x,y)| / sup p_{s+t}; needs every target slice.
double chapman_kolmogorov_defect(const SpaceTimeKernel& p, const SpatialGrid& grid, std::size_t s_node,
                                 std::size_t t_node, std::size_t sum_node);

/// max over x and stored y of |(∂_t − A_x) p_t(x,y)| / (t^{−1} G_t(y−x)) at node n.
double pde_residual_ratio(const SpaceTimeKernel& p, const DiscreteGenerator& generator, const ComparisonKernel& g,
                          std::size_t node);

/// sup_x |Σ_y p_t(x,y) f(y) h^d − f(x)| over stored x (source slices or full target set).
double initial_condition_error(const SpaceTimeKernel& p, const SpatialGrid& grid, const std::vector<double>& f,
                               std::size_t node);

/// Smallest value at the node.
double minimum_value(const SpaceTimeKernel& p, std::size_t node);

/// max over (x,y) stored in both of |a − b| / sup|a| at the node.
double cross_method_gap(const SpaceTimeKernel& series, const SpaceTimeKernel& volterra, std::size_t node);

/// t below which e^{−t q_min(ξ_max)} > tolerance, i.e. the highest grid frequency
/// still carries weight and band-limited kernels oscillate.
double aliasing_floor(const DiscreteGenerator& generator, double tolerance = 1e-6);

// ---------------------------------------------------------------------------
// report

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    /// "<=", ">=", "finite" or "info"
    std::string relation = "<=";
    bool pass = true;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    std::map<std::string, double> constants;
    std::map<std::string, std::string> metadata;
    /// Tolerances that shaped the numbers, by name.
    std::map<std::string, double> tolerances;

    /// Appends and returns the result; `pass` is derived from the relation.
    const CheckResult& add(std::string name, double value, std::string relation, double tolerance,
                           std::string detail = {});
    bool passed() const;
    std::vector<std::string> failures() const;
};

}  // namespace anisoheat
