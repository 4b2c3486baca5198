#pragma once

#include <cstddef>

namespace anisoheat {

enum class ComparisonKind { G, H };

/// G^{(β)} or H^{(κ,ζ)} for fixed d and α.
///
///   G^{(β)}_t(x)   = t^{−d/α} ((|x|/t^{1/α}) ∨ 1)^{−β}
///   H^{(κ,ζ)}_t(x) = (t^{−ζ/α} ∧ ((|x|/t^{1/α}) ∨ 1)^ζ) · G^{(α+κ)}_t(x)
struct ComparisonKernel {
    ComparisonKind kind = ComparisonKind::G;
    std::size_t dimension = 1;
    double alpha = 1.0;
    double beta = 2.0;   // G only
    double kappa = 1.0;  // H only
    double zeta = 0.0;   // H only

    static ComparisonKernel g(std::size_t d, double alpha, double beta);
    /// Throws InadmissibleExponents unless α + κ − d > ζ.
    static ComparisonKernel h(std::size_t d, double alpha, double kappa, double zeta);

    /// `r` is |x|.
    double operator()(double t, double r) const;
};

/// Shorthand for G^{(β)}_t at distance r.
double comparison_g(std::size_t d, double alpha, double beta, double t, double r);

}  // namespace anisoheat
