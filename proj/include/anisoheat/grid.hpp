#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "anisoheat/spectral_measure.hpp"

namespace anisoheat {

using Complex = std::complex<double>;

/// Uniform periodic grid on [−R, R)^d with N points per dimension.
///
/// Point j sits at x_j = −R + j·h, h = 2R/N, so index N/2 is the origin.
/// Flat indices are row-major, the last coordinate fastest.
class SpatialGrid {
public:
    SpatialGrid(std::size_t dimension, double half_width, std::size_t points_per_dim);

    std::size_t dimension() const noexcept { return dimension_; }
    double half_width() const noexcept { return half_width_; }
    std::size_t points() const noexcept { return points_; }
    std::size_t size() const noexcept { return size_; }
    double spacing() const noexcept { return 2.0 * half_width_ / static_cast<double>(points_); }
    double length() const noexcept { return 2.0 * half_width_; }
    double cell_volume() const noexcept;
    std::size_t origin_index() const noexcept;

    double coordinate(std::size_t j) const noexcept { return -half_width_ + static_cast<double>(j) * spacing(); }
    /// Angular frequency of FFT index k: 2π k'/(2R) with k' ∈ (−N/2, N/2].
    double frequency(std::size_t k) const noexcept;
    Vec point(std::size_t flat) const;
    Vec dual_point(std::size_t flat) const;
    /// Flat index of the point x_i − x_j + origin, wrapped periodically.
    std::size_t difference_index(std::size_t i, std::size_t j) const noexcept;

    bool operator==(const SpatialGrid& other) const noexcept;

private:
    std::size_t dimension_;
    double half_width_;
    std::size_t points_;
    std::size_t size_;
};

/// Complex FFTW plans for one grid shape. Copies share the plans.
class Fft {
public:
    explicit Fft(const SpatialGrid& grid);

    const SpatialGrid& grid() const noexcept { return grid_; }

    /// Unnormalized in-place transforms.
    void forward(std::vector<Complex>& data) const;
    void backward(std::vector<Complex>& data) const;

    /// Continuous transform approximation F f(ξ_k) = h^d Σ_j f(x_j) e^{−iξ_k·x_j}.
    std::vector<Complex> transform(const std::vector<double>& field) const;
    /// Inverse of `transform`: f(x_j) = L^{−d} Σ_k m(ξ_k) e^{iξ_k·x_j}, real part.
    std::vector<double> inverse(std::vector<Complex> spectrum) const;
    /// Periodic convolution ∫ f(x−y) g(y) dy on the torus.
    std::vector<double> convolve(const std::vector<double>& f, const std::vector<double>& g) const;

private:
    struct Plans;
    SpatialGrid grid_;
    std::shared_ptr<Plans> plans_;
};

}  // namespace anisoheat
