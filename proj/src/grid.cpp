#include "anisoheat/grid.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "anisoheat/errors.hpp"

namespace anisoheat {

namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

// FFTW planning is not thread safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// e^{iξ_k x_j} with x_j = −R + jh carries the factor e^{−iξ_k R} = (−1)^k per axis.
double checkerboard(const SpatialGrid& grid, std::size_t flat) {
    const std::size_t n = grid.points();
    std::size_t parity = 0;
    for (std::size_t axis = 0; axis < grid.dimension(); ++axis) {
        parity += flat % n;
        flat /= n;
    }
    return parity % 2 ? -1.0 : 1.0;
}

}  // namespace

SpatialGrid::SpatialGrid(std::size_t dimension, double half_width, std::size_t points_per_dim)
    : dimension_(dimension), half_width_(half_width), points_(points_per_dim) {
    if (dimension_ != 1 && dimension_ != 2) throw Error(ErrorCode::InvalidArgument, "grids support d = 1, 2");
    if (!(half_width_ > 0.0)) throw Error(ErrorCode::NonpositiveRadius, "grid half width must be positive");
    if (!is_power_of_two(points_)) throw Error(ErrorCode::InvalidArgument, "points per dimension must be a power of two");
    size_ = dimension_ == 1 ? points_ : points_ * points_;
}

double SpatialGrid::cell_volume() const noexcept { return std::pow(spacing(), static_cast<double>(dimension_)); }

std::size_t SpatialGrid::origin_index() const noexcept {
    const std::size_t c = points_ / 2;
    return dimension_ == 1 ? c : c * points_ + c;
}

double SpatialGrid::frequency(std::size_t k) const noexcept {
    const auto n = static_cast<long>(points_);
    long signed_k = static_cast<long>(k);
    if (signed_k > n / 2) signed_k -= n;
    return 2.0 * std::numbers::pi * static_cast<double>(signed_k) / length();
}

Vec SpatialGrid::point(std::size_t flat) const {
    if (dimension_ == 1) return {coordinate(flat)};
    return {coordinate(flat / points_), coordinate(flat % points_)};
}

Vec SpatialGrid::dual_point(std::size_t flat) const {
    if (dimension_ == 1) return {frequency(flat)};
    return {frequency(flat / points_), frequency(flat % points_)};
}

std::size_t SpatialGrid::difference_index(std::size_t i, std::size_t j) const noexcept {
    const std::size_t n = points_;
    const std::size_t c = n / 2;
    if (dimension_ == 1) return (i + n + c - j) % n;
    const std::size_t r = (i / n + n + c - j / n) % n;
    const std::size_t s = (i % n + n + c - j % n) % n;
    return r * n + s;
}

bool SpatialGrid::operator==(const SpatialGrid& other) const noexcept {
    return dimension_ == other.dimension_ && half_width_ == other.half_width_ && points_ == other.points_;
}

struct Fft::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

Fft::Fft(const SpatialGrid& grid) : grid_(grid), plans_(std::make_shared<Plans>()) {
    std::vector<Complex> scratch(grid_.size());
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const int n = static_cast<int>(grid_.points());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(planner_mutex());
    if (grid_.dimension() == 1) {
        plans_->forward = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags);
        plans_->backward = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags);
    } else {
        plans_->forward = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, flags);
        plans_->backward = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, flags);
    }
    if (!plans_->forward || !plans_->backward) throw Error(ErrorCode::InvalidArgument, "FFTW planning failed");
}

void Fft::forward(std::vector<Complex>& data) const {
    if (data.size() != grid_.size()) throw Error(ErrorCode::InvalidArgument, "FFT buffer has wrong size");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plans_->forward, buf, buf);
}

void Fft::backward(std::vector<Complex>& data) const {
    if (data.size() != grid_.size()) throw Error(ErrorCode::InvalidArgument, "FFT buffer has wrong size");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plans_->backward, buf, buf);
}

std::vector<Complex> Fft::transform(const std::vector<double>& field) const {
    if (field.size() != grid_.size()) throw Error(ErrorCode::InvalidArgument, "field has wrong size");
    std::vector<Complex> data(field.begin(), field.end());
    forward(data);
    const double v = grid_.cell_volume();
    for (std::size_t k = 0; k < data.size(); ++k) data[k] *= v * checkerboard(grid_, k);
    return data;
}

std::vector<double> Fft::inverse(std::vector<Complex> spectrum) const {
    backward(spectrum);
    const double scale = 1.0 / std::pow(grid_.length(), static_cast<double>(grid_.dimension()));
    std::vector<double> out(spectrum.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = scale * spectrum[j].real();
    // Raw index 0 is x = 0; rotate so that index N/2 is the origin.
    std::vector<double> shifted(out.size());
    const std::size_t n = grid_.points();
    const std::size_t c = n / 2;
    if (grid_.dimension() == 1) {
        for (std::size_t j = 0; j < n; ++j) shifted[(j + c) % n] = out[j];
    } else {
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t s = 0; s < n; ++s) shifted[((r + c) % n) * n + (s + c) % n] = out[r * n + s];
        }
    }
    return shifted;
}

std::vector<double> Fft::convolve(const std::vector<double>& f, const std::vector<double>& g) const {
    auto a = transform(f);
    const auto b = transform(g);
    for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k];
    return inverse(std::move(a));
}

}  // namespace anisoheat
