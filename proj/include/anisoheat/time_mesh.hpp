#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace anisoheat {

/// Graded nodes t_j = T (j/M)^ρ, j = 0..M, with optional anchor times.
class TimeMesh {
public:
    /// Each anchor in (0, T] replaces the graded node nearest to it. Throws
    /// InvalidArgument if two anchors claim the same node or the result is
    /// not strictly increasing.
    TimeMesh(double horizon, std::size_t intervals, double grading, std::span<const double> anchors = {});

    double horizon() const noexcept { return horizon_; }
    std::size_t intervals() const noexcept { return nodes_.size() - 1; }
    double grading() const noexcept { return grading_; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    double operator[](std::size_t j) const { return nodes_[j]; }
    double step(std::size_t j) const { return nodes_[j] - nodes_[j - 1]; }

    /// Index of the node equal to t (relative tolerance 1e−12); throws
    /// InvalidArgument when t is not a node.
    std::size_t index_of(double t) const;
    bool contains(double t) const noexcept;

    /// Same grading and anchors with half the intervals.
    TimeMesh coarsened() const;

private:
    double horizon_;
    double grading_;
    std::vector<double> anchors_;
    std::vector<double> nodes_;
};

/// (1 − e^{−z})/z and (1 − e^{−z}(1+z))/z², z ≥ 0, without cancellation.
/// ∫₀^Δ e^{−q(Δ−s)} ds = Δ ψ₁(qΔ) and ∫₀^Δ e^{−q(Δ−s)} s/Δ ds = Δ(ψ₁ − ψ₂)(qΔ).
double psi1(double z);
double psi2(double z);

/// Gauss–Jacobi rule for ∫₀^L s^{β−1} F(s) ds with n nodes (β > 0).
struct JacobiRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
JacobiRule gauss_jacobi_rule(std::size_t n, double beta, double length);

/// ∫₀^t F(s, t−s) ds for F ≈ c s^{β−1}(t−s)^{β−1} × (smooth); F receives both
/// distances to the endpoints so neither loses precision. The halves are
/// covered by geometric panels toward each endpoint, the innermost panel with a
/// Gauss–Jacobi rule for the declared power, the rest with Gauss–Legendre.
/// Throws SingularityMisdeclared when |F| s^{1−β} still grows at the endpoint.
struct SingularIntegralOptions {
    double beta = 1.0;
    std::size_t panels = 48;
    /// Growth of |F| s^{1−β} over the innermost panels that counts as misdeclared.
    double growth_limit = 8.0;
};
double singular_time_integral(const std::function<double(double s, double rest)>& F, double t,
                              const SingularIntegralOptions& options = {});

}  // namespace anisoheat
