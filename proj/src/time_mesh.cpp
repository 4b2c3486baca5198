#include "anisoheat/time_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "anisoheat/errors.hpp"

namespace anisoheat {

TimeMesh::TimeMesh(double horizon, std::size_t intervals, double grading, std::span<const double> anchors)
    : horizon_(horizon), grading_(grading), anchors_(anchors.begin(), anchors.end()) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
    if (intervals < 1) throw Error(ErrorCode::InvalidArgument, "time mesh needs at least one interval");
    if (!(grading >= 1.0)) throw Error(ErrorCode::InvalidArgument, "grading exponent must be >= 1");
    nodes_.resize(intervals + 1);
    for (std::size_t j = 0; j <= intervals; ++j) {
        nodes_[j] = horizon * std::pow(static_cast<double>(j) / static_cast<double>(intervals), grading);
    }
    nodes_.back() = horizon;
    std::vector<bool> taken(nodes_.size(), false);
    taken[0] = true;
    for (double a : anchors_) {
        if (!(a > 0.0) || a > horizon * (1.0 + 1e-12)) continue;
        std::size_t best = 1;
        for (std::size_t j = 1; j < nodes_.size(); ++j) {
            if (std::abs(nodes_[j] - a) < std::abs(nodes_[best] - a)) best = j;
        }
        if (taken[best] && nodes_[best] != a) {
            throw Error(ErrorCode::InvalidArgument, "anchors " + std::to_string(a) + " collide on the time mesh");
        }
        taken[best] = true;
        nodes_[best] = a;
    }
    for (std::size_t j = 1; j < nodes_.size(); ++j) {
        if (!(nodes_[j] > nodes_[j - 1])) throw Error(ErrorCode::InvalidArgument, "time mesh is not increasing");
    }
}

std::size_t TimeMesh::index_of(double t) const {
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
        if (std::abs(nodes_[j] - t) <= 1e-12 * std::max(1.0, t)) return j;
    }
    throw Error(ErrorCode::InvalidArgument, "time " + std::to_string(t) + " is not a mesh node");
}

bool TimeMesh::contains(double t) const noexcept {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [&](double s) { return std::abs(s - t) <= 1e-12 * std::max(1.0, t); });
}

TimeMesh TimeMesh::coarsened() const {
    if (intervals() % 2 != 0) throw Error(ErrorCode::InvalidArgument, "odd interval count cannot be halved");
    return TimeMesh(horizon_, intervals() / 2, grading_, anchors_);
}

double psi1(double z) {
    if (z < 1e-8) return 1.0 - 0.5 * z;
    return -std::expm1(-z) / z;
}

double psi2(double z) {
    if (z < 0.5) {
        // Σ (−z)^k / (k! (k+2))
        double term = 1.0;
        double sum = 0.5;
        for (int k = 1; k < 20; ++k) {
            term *= -z / k;
            sum += term / (k + 2);
        }
        return sum;
    }
    return (1.0 - std::exp(-z) * (1.0 + z)) / (z * z);
}

JacobiRule gauss_jacobi_rule(std::size_t n, double beta, double length) {
    if (n == 0 || !(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "Gauss-Jacobi needs n >= 1 and beta > 0");
    // Golub–Welsch for (1−x)^a (1+x)^b on [−1, 1], a = 0, b = β − 1.
    const double a = 0.0;
    const double b = beta - 1.0;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double k = static_cast<double>(i);
        const double s = 2.0 * k + a + b;
        J(i, i) = (i == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
        if (i + 1 < n) {
            const double m = k + 1.0;
            const double sm = 2.0 * m + a + b;
            const double off = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (sm * sm * (sm + 1.0) * (sm - 1.0));
            J(i, i + 1) = J(i + 1, i) = std::sqrt(off);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    const double mu0 = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                std::lgamma(a + b + 2.0));
    JacobiRule rule;
    const double scale = std::pow(0.5 * length, beta);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = eig.eigenvalues()(static_cast<Eigen::Index>(i));
        const double v = eig.eigenvectors()(0, static_cast<Eigen::Index>(i));
        rule.nodes.push_back(0.5 * length * (1.0 + x));
        rule.weights.push_back(mu0 * v * v * scale);
    }
    return rule;
}

namespace {

// ∫₀^L G(s) ds with G ~ s^{β−1} at 0, via panels [L 2^{−k−1}, L 2^{−k}].
double endpoint_half(const std::function<double(double)>& G, double length, const SingularIntegralOptions& o) {
    using Legendre = boost::math::quadrature::gauss<double, 15>;
    double total = 0.0;
    double hi = length;
    for (std::size_t k = 0; k < o.panels; ++k) {
        const double lo = 0.5 * hi;
        total += Legendre::integrate(G, lo, hi);
        hi = lo;
    }
    const auto rule = gauss_jacobi_rule(15, o.beta, hi);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double s = rule.nodes[i];
        total += rule.weights[i] * G(s) * std::pow(s, 1.0 - o.beta);
    }

    // Declared profile check: |G| s^{1−β} should level off toward 0.
    const double s_far = length * std::ldexp(1.0, -static_cast<int>(o.panels / 2));
    const double s_near = length * std::ldexp(1.0, -static_cast<int>(o.panels));
    const double far = std::abs(G(s_far)) * std::pow(s_far, 1.0 - o.beta);
    const double near = std::abs(G(s_near)) * std::pow(s_near, 1.0 - o.beta);
    if (std::isfinite(far) && (!std::isfinite(near) || near > o.growth_limit * std::max(far, 1e-300))) {
        throw Error(ErrorCode::SingularityMisdeclared,
                    "integrand grows faster than s^(beta-1) with beta = " + std::to_string(o.beta));
    }
    return total;
}

}  // namespace

double singular_time_integral(const std::function<double(double, double)>& F, double t,
                              const SingularIntegralOptions& o) {
    if (!(t > 0.0)) return 0.0;
    if (!(o.beta > 0.0) || o.beta > 1.0) throw Error(ErrorCode::InvalidArgument, "beta must lie in (0, 1]");
    if (o.panels < 2) throw Error(ErrorCode::InvalidArgument, "need at least two panels per half");
    const double half = 0.5 * t;
    const double left = endpoint_half([&](double s) { return F(s, t - s); }, half, o);
    const double right = endpoint_half([&](double u) { return F(t - u, u); }, half, o);
    return left + right;
}

}  // namespace anisoheat
