#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace anisoheat {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Point mass of the spherical measure: a unit direction and its weight.
struct SphericalAtom {
    Vec direction;
    double weight = 0.0;
};

/// Finite atomic measure on the unit sphere of R^d.
///
/// Construction validates unit directions and positive weights. Symmetry and
/// non-degeneracy are properties checked by `is_symmetric` and
/// `nondegeneracy_margin`; use `symmetrize` to enforce the former.
class SpectralMeasure {
public:
    static constexpr double kUnitTolerance = 1e-12;
    static constexpr double kMergeTolerance = 1e-10;

    SpectralMeasure(std::size_t dimension, std::vector<SphericalAtom> atoms);

    std::size_t dimension() const noexcept { return dimension_; }
    const std::vector<SphericalAtom>& atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }

    bool is_symmetric(double tolerance = 1e-12) const;

    /// Index of the atom whose direction is within kMergeTolerance of `direction`.
    /// Returns size() if none matches.
    std::size_t find(std::span<const double> direction) const;

private:
    std::size_t dimension_;
    std::vector<SphericalAtom> atoms_;
};

/// Splits every atom (θ, w) into (θ, w/2) and (−θ, w/2) and merges coincident
/// directions. Idempotent on symmetric input; preserves total mass.
SpectralMeasure symmetrize(const SpectralMeasure& measure);

/// Total mass |μ₀| = Σ w_i.
double total_mass(const SpectralMeasure& measure);

/// Deterministic probe directions on the unit sphere: {±1} for d = 1 and a
/// uniform angular lattice of `probe_count` points for d = 2.
std::vector<Vec> sphere_probes(std::size_t dimension, std::size_t probe_count);

/// min over probe ξ of Σ_i w_i |ξ·θ_i|^α. Zero flags a degenerate measure.
double nondegeneracy_margin(const SpectralMeasure& measure, double alpha,
                            std::size_t probe_count = 720);

}  // namespace anisoheat
