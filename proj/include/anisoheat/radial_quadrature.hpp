#pragma once

#include <functional>
#include <vector>

namespace anisoheat {

/// Controls for one-dimensional integrals of the form ∫_lower^∞ g(s) s^{-1-α} ds
/// along a ray of the Lévy measure.
struct RadialOptions {
    /// Below this radius g is replaced by the even model A s² + B s⁴ fitted at
    /// inner_scale and inner_scale/2. Requires g(s) = O(s²) at the origin.
    double inner_scale = 5e-2;
    /// Numerical integration stops here; beyond it g is taken equal to `far_value`.
    double outer_radius = 1e3;
    double far_value = 0.0;
    /// Points where g is not smooth (e.g. an indicator cut at t^{1/α}).
    std::vector<double> breakpoints;
    double rel_tol = 1e-11;
    double abs_tol = 1e-15;
    unsigned max_depth = 18;
};

struct RadialResult {
    double value = 0.0;
    double error = 0.0;
};

/// Integrates g(s) s^{-1-α} over (lower, ∞) with geometric panels and adaptive
/// Gauss-Kronrod rules. Throws QuadratureNonconvergence when the accumulated
/// error estimate exceeds the requested tolerance by more than 100x.
RadialResult radial_integral(const std::function<double(double)>& g, double alpha, double lower,
                             const RadialOptions& options = {});

}  // namespace anisoheat
