#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace anisoheat {

/// A real function on R^d that the quadrature routines can evaluate anywhere.
///
/// `length_scale` is the smallest feature size (it sets the inner Taylor cut
/// and the default cutoff schedule). `support_radius` bounds the region where
/// f is non-negligible; infinity means f is only known to be bounded.
struct SpatialFunction {
    std::function<double(std::span<const double>)> value;
    /// Optional; finite differences are used when empty.
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    double length_scale = 1.0;
    double support_radius = std::numeric_limits<double>::infinity();
    /// Mean of f far from the origin, used to close the far field of jump
    /// integrals (0 for decaying or zero-mean oscillating functions).
    double far_mean = 0.0;
    /// Optional radii s > 0 where x ± sθ crosses a kink of f (spline knots).
    std::function<std::vector<double>(std::span<const double> x, std::span<const double> theta, double outer)>
        ray_breakpoints;

    double operator()(std::span<const double> x) const { return value(x); }
};

}  // namespace anisoheat
