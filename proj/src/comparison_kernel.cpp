#include "anisoheat/comparison_kernel.hpp"

#include <algorithm>
#include <cmath>

#include "anisoheat/errors.hpp"

namespace anisoheat {

ComparisonKernel ComparisonKernel::g(std::size_t d, double alpha, double beta) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0,2)");
    ComparisonKernel k;
    k.kind = ComparisonKind::G;
    k.dimension = d;
    k.alpha = alpha;
    k.beta = beta;
    return k;
}

ComparisonKernel ComparisonKernel::h(std::size_t d, double alpha, double kappa, double zeta) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0,2)");
    if (!(alpha + kappa - static_cast<double>(d) > zeta)) {
        throw Error(ErrorCode::InadmissibleExponents, "H kernel needs alpha + kappa - d > zeta");
    }
    ComparisonKernel k;
    k.kind = ComparisonKind::H;
    k.dimension = d;
    k.alpha = alpha;
    k.kappa = kappa;
    k.zeta = zeta;
    return k;
}

double comparison_g(std::size_t d, double alpha, double beta, double t, double r) {
    const double scale = std::pow(t, 1.0 / alpha);
    const double u = std::max(r / scale, 1.0);
    return std::pow(t, -static_cast<double>(d) / alpha) * std::pow(u, -beta);
}

double ComparisonKernel::operator()(double t, double r) const {
    if (kind == ComparisonKind::G) return comparison_g(dimension, alpha, beta, t, r);
    const double u = std::max(r / std::pow(t, 1.0 / alpha), 1.0);
    const double cap = std::min(std::pow(t, -zeta / alpha), std::pow(u, zeta));
    return cap * comparison_g(dimension, alpha, alpha + kappa, t, r);
}

}  // namespace anisoheat
