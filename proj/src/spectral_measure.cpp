#include "anisoheat/spectral_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "anisoheat/errors.hpp"

namespace anisoheat {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

double distance(std::span<const double> a, std::span<const double> b, double sign) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - sign * b[i];
        s += diff * diff;
    }
    return std::sqrt(s);
}

}  // namespace

SpectralMeasure::SpectralMeasure(std::size_t dimension, std::vector<SphericalAtom> atoms)
    : dimension_(dimension), atoms_(std::move(atoms)) {
    if (dimension_ == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
    if (atoms_.empty()) throw Error(ErrorCode::EmptyMeasure, "spectral measure has no atoms");
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const auto& atom = atoms_[i];
        if (atom.direction.size() != dimension_) {
            throw Error(ErrorCode::InvalidArgument,
                        "atom " + std::to_string(i) + " has wrong dimension");
        }
        if (std::abs(norm(atom.direction) - 1.0) > kUnitTolerance) {
            throw Error(ErrorCode::NonUnitDirection,
                        "atom " + std::to_string(i) + " direction is not a unit vector");
        }
        if (!(atom.weight > 0.0) || !std::isfinite(atom.weight)) {
            throw Error(ErrorCode::InvalidArgument,
                        "atom " + std::to_string(i) + " weight must be positive and finite");
        }
    }
}

std::size_t SpectralMeasure::find(std::span<const double> direction) const {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (distance(atoms_[i].direction, direction, 1.0) <= kMergeTolerance) return i;
    }
    return atoms_.size();
}

bool SpectralMeasure::is_symmetric(double tolerance) const {
    for (const auto& atom : atoms_) {
        Vec mirrored(atom.direction.size());
        std::transform(atom.direction.begin(), atom.direction.end(), mirrored.begin(),
                       [](double v) { return -v; });
        const auto j = find(mirrored);
        if (j == atoms_.size()) return false;
        if (std::abs(atoms_[j].weight - atom.weight) > tolerance) return false;
    }
    return true;
}

SpectralMeasure symmetrize(const SpectralMeasure& measure) {
    std::vector<SphericalAtom> merged;
    auto add = [&merged](const Vec& direction, double weight) {
        for (auto& existing : merged) {
            if (distance(existing.direction, direction, 1.0) <= SpectralMeasure::kMergeTolerance) {
                existing.weight += weight;
                return;
            }
        }
        merged.push_back({direction, weight});
    };
    for (const auto& atom : measure.atoms()) {
        Vec mirrored(atom.direction.size());
        std::transform(atom.direction.begin(), atom.direction.end(), mirrored.begin(),
                       [](double v) { return -v; });
        add(atom.direction, 0.5 * atom.weight);
        add(mirrored, 0.5 * atom.weight);
    }
    return SpectralMeasure(measure.dimension(), std::move(merged));
}

double total_mass(const SpectralMeasure& measure) {
    double mass = 0.0;
    for (const auto& atom : measure.atoms()) mass += atom.weight;
    return mass;
}

std::vector<Vec> sphere_probes(std::size_t dimension, std::size_t probe_count) {
    if (dimension == 1) return {Vec{1.0}, Vec{-1.0}};
    if (dimension == 2) {
        if (probe_count == 0) throw Error(ErrorCode::InvalidArgument, "probe_count must be positive");
        std::vector<Vec> probes;
        probes.reserve(probe_count);
        for (std::size_t k = 0; k < probe_count; ++k) {
            const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) /
                               static_cast<double>(probe_count);
            probes.push_back({std::cos(phi), std::sin(phi)});
        }
        return probes;
    }
    throw Error(ErrorCode::InvalidArgument, "sphere probes are implemented for d = 1, 2 only");
}

double nondegeneracy_margin(const SpectralMeasure& measure, double alpha, std::size_t probe_count) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw Error(ErrorCode::InvalidAlpha, "alpha must lie in (0,2)");
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& xi : sphere_probes(measure.dimension(), probe_count)) {
        double s = 0.0;
        for (const auto& atom : measure.atoms()) {
            s += atom.weight * std::pow(std::abs(dot(xi, atom.direction)), alpha);
        }
        margin = std::min(margin, s);
    }
    // cos/sin rounding on the lattice leaves ~1e-17 where the exact value is 0.
    return margin < 1e-14 ? 0.0 : margin;
}

}  // namespace anisoheat
