#include "anisoheat/parametrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "anisoheat/errors.hpp"

namespace anisoheat {

// ---------------------------------------------------------------------------
// SpaceTimeKernel

SpaceTimeKernel::SpaceTimeKernel(SliceAxis axis_, std::vector<double> times_, std::vector<std::size_t> slices_,
                                 std::size_t points_)
    : axis(axis_), times(std::move(times_)), slices(std::move(slices_)), points(points_),
      values(times.size() * slices.size() * points, 0.0) {}

std::span<double> SpaceTimeKernel::slice(std::size_t node, std::size_t k) {
    return {values.data() + (node * slices.size() + k) * points, points};
}

std::span<const double> SpaceTimeKernel::slice(std::size_t node, std::size_t k) const {
    return {values.data() + (node * slices.size() + k) * points, points};
}

std::size_t SpaceTimeKernel::slice_position(std::size_t i) const noexcept {
    return static_cast<std::size_t>(std::find(slices.begin(), slices.end(), i) - slices.begin());
}

double SpaceTimeKernel::at(std::size_t node, std::size_t x, std::size_t y) const {
    const std::size_t fixed = axis == SliceAxis::Target ? y : x;
    const std::size_t free = axis == SliceAxis::Target ? x : y;
    const std::size_t k = slice_position(fixed);
    if (k == slices.size() || node >= times.size() || free >= points) {
        throw Error(ErrorCode::InvalidArgument, "kernel value not stored");
    }
    return values[(node * slices.size() + k) * points + free];
}

double SpaceTimeKernel::sup(std::size_t node) const {
    double m = 0.0;
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(node * slices.size() * points);
    std::for_each(first, first + static_cast<std::ptrdiff_t>(slices.size() * points),
                  [&](double v) { m = std::max(m, std::abs(v)); });
    return m;
}

// ---------------------------------------------------------------------------
// controls

double default_theta(const JumpKernel& kernel) {
    const auto& p = kernel.params();
    const double bound = std::min({kernel.modulation().eta(), p.alpha, p.alpha + p.gamma - static_cast<double>(p.dimension)});
    return 0.5 * bound;
}

void validate_theta(const JumpKernel& kernel, double theta) {
    const double bound = 2.0 * default_theta(kernel);
    if (!(theta > 0.0 && theta < bound)) {
        throw Error(ErrorCode::InvalidArgument,
                    "theta must lie in (0, " + std::to_string(bound) + "), got " + std::to_string(theta));
    }
}

double SeriesCalibration::tail_bound(int terms, double t, double alpha) const {
    if (c1 == 0.0 || c2 == 0.0) return 0.0;
    const double r = theta / alpha;
    double sum = 0.0;
    for (int k = terms + 1; k < terms + 2000; ++k) {
        const double log_term = std::log(c1) + k * std::log(c2) + (-1.0 + k * r) * std::log(t) - std::lgamma(k * r);
        const double term = std::exp(log_term);
        sum += term;
        if (k > terms + 10 && term < 1e-18 * sum) break;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// engine

struct ParametrixEngine::StepCoefficients {
    // per interpolation node c, per frequency: λ_n, E_{n+1}, E_{n+1}λ_n + ρ_{n+1}
    std::vector<std::vector<double>> current;
    std::vector<std::vector<double>> decay;
    std::vector<std::vector<double>> carry;
};

namespace {

double chebyshev_node(std::size_t c, std::size_t count, double lo, double hi) {
    const double x = std::cos((2.0 * static_cast<double>(c) + 1.0) * std::numbers::pi / (2.0 * static_cast<double>(count)));
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
}

// Barycentric Lagrange basis at b for the given nodes and weights.
std::vector<double> barycentric(double b, const std::vector<double>& nodes, const std::vector<double>& bary) {
    std::vector<double> l(nodes.size(), 0.0);
    for (std::size_t c = 0; c < nodes.size(); ++c) {
        if (b == nodes[c]) {
            l[c] = 1.0;
            return l;
        }
    }
    double den = 0.0;
    for (std::size_t c = 0; c < nodes.size(); ++c) {
        l[c] = bary[c] / (b - nodes[c]);
        den += l[c];
    }
    for (double& v : l) v /= den;
    return l;
}

}  // namespace

ParametrixEngine::ParametrixEngine(const SymbolEvaluator& symbol, SpatialGrid grid, TimeMesh mesh,
                                   SeriesControls controls, EngineOptions options)
    : grid_(std::move(grid)), fft_(grid_), mesh_(std::move(mesh)), generator_(symbol, grid_),
      controls_(controls), options_(options), alpha_(symbol.kernel().alpha()) {
    theta_ = controls_.theta > 0.0 ? controls_.theta : default_theta(symbol.kernel());
    validate_theta(symbol.kernel(), theta_);
    controls_.theta = theta_;
    if (controls_.max_terms < 1) throw Error(ErrorCode::InvalidArgument, "max_terms must be positive");
    profile_ = generator_.modulation_profile();

    const auto [lo_it, hi_it] = std::minmax_element(profile_.begin(), profile_.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const auto& q0 = generator_.base_symbol();
    const auto& qg = generator_.modulation_symbol();
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(hi))) {
        nodes_ = {lo};
        bary_ = {1.0};
    } else {
        // Smallest Chebyshev count that reproduces e^{−T q(b,ξ)} between nodes.
        const double T = mesh_.horizon();
        bool ok = false;
        for (std::size_t count = 4; count <= options_.max_interpolation_nodes; count += 4) {
            nodes_.resize(count);
            bary_.resize(count);
            for (std::size_t c = 0; c < count; ++c) {
                nodes_[c] = chebyshev_node(c, count, lo, hi);
                bary_[c] = ((c % 2) ? -1.0 : 1.0) *
                           std::sin((2.0 * static_cast<double>(c) + 1.0) * std::numbers::pi / (2.0 * static_cast<double>(count)));
            }
            double worst = 0.0;
            for (std::size_t s = 0; s <= 2 * count; ++s) {
                const double b = lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(2 * count);
                const auto l = barycentric(b, nodes_, bary_);
                for (std::size_t k = 0; k < q0.size(); ++k) {
                    for (double tau : {0.25 * T, T}) {
                        double interp = 0.0;
                        for (std::size_t c = 0; c < count; ++c) interp += l[c] * std::exp(-tau * (q0[k] + nodes_[c] * qg[k]));
                        const double exact = std::exp(-tau * (q0[k] + b * qg[k]));
                        worst = std::max(worst, std::abs(interp - exact) * std::max(1.0, qg[k]));
                    }
                }
            }
            if (worst <= options_.interpolation_tolerance) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw Error(ErrorCode::InvalidArgument, "modulation range needs more than " +
                                                        std::to_string(options_.max_interpolation_nodes) +
                                                        " interpolation nodes; shorten the horizon");
        }
    }
    lagrange_.assign(nodes_.size(), std::vector<double>(grid_.size()));
    for (std::size_t j = 0; j < grid_.size(); ++j) {
        const auto l = interpolation_weights(profile_[j]);
        for (std::size_t c = 0; c < nodes_.size(); ++c) lagrange_[c][j] = l[c];
    }
}

std::vector<double> ParametrixEngine::interpolation_weights(double b) const {
    if (nodes_.size() == 1) return {1.0};
    return barycentric(b, nodes_, bary_);
}

std::vector<std::size_t> ParametrixEngine::all_points() const {
    std::vector<std::size_t> v(grid_.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = j;
    return v;
}

std::vector<double> ParametrixEngine::frozen(std::size_t node, std::size_t y) const {
    if (provider_) return provider_(node, y);
    const double t = mesh_[node];
    const auto& q0 = generator_.base_symbol();
    const auto& qg = generator_.modulation_symbol();
    std::vector<Complex> spec(grid_.size());
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = std::exp(-t * (q0[k] + profile_[y] * qg[k]));
    return fft_.inverse(std::move(spec));
}

std::vector<double> ParametrixEngine::frozen_derivative_mass(std::size_t node) const {
    const double t = mesh_[node];
    const auto& q0 = generator_.base_symbol();
    const auto& qg = generator_.modulation_symbol();
    // Σ_y ℓ_c(b(y)) k_c(y − x) is a convolution of the even kernel k_c with ℓ_c ∘ b.
    std::vector<Complex> total(grid_.size(), Complex(0.0));
    for (std::size_t c = 0; c < nodes_.size(); ++c) {
        const auto weights = fft_.transform(lagrange_[c]);
        for (std::size_t k = 0; k < total.size(); ++k) {
            const double q = q0[k] + nodes_[c] * qg[k];
            total[k] += -q * std::exp(-t * q) * weights[k];
        }
    }
    return fft_.inverse(std::move(total));
}

SpaceTimeKernel ParametrixEngine::zero_order(std::vector<std::size_t> targets) const {
    SpaceTimeKernel out(SliceAxis::Target, mesh_.nodes(), std::move(targets), grid_.size());
    for (std::size_t n = 0; n < out.nodes(); ++n) {
        for (std::size_t k = 0; k < out.slices.size(); ++k) {
            const std::size_t y = out.slices[k];
            const auto kern = frozen(n, y);
            auto col = out.slice(n, k);
            for (std::size_t x = 0; x < grid_.size(); ++x) col[x] = kern[grid_.difference_index(x, y)];
        }
    }
    return out;
}

SpaceTimeKernel ParametrixEngine::zero_order_rows(std::vector<std::size_t> sources) const {
    SpaceTimeKernel out(SliceAxis::Source, mesh_.nodes(), std::move(sources), grid_.size());
    const auto& q0 = generator_.base_symbol();
    const auto& qg = generator_.modulation_symbol();
    for (std::size_t n = 0; n < out.nodes(); ++n) {
        const double t = mesh_[n];
        std::vector<std::vector<double>> kernels;
        for (double b : nodes_) {
            std::vector<Complex> spec(grid_.size());
            for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = std::exp(-t * (q0[k] + b * qg[k]));
            kernels.push_back(fft_.inverse(std::move(spec)));
        }
        for (std::size_t s = 0; s < out.slices.size(); ++s) {
            const std::size_t x = out.slices[s];
            auto row = out.slice(n, s);
            for (std::size_t y = 0; y < grid_.size(); ++y) {
                const std::size_t d = grid_.difference_index(y, x);
                double v = 0.0;
                for (std::size_t c = 0; c < nodes_.size(); ++c) v += lagrange_[c][y] * kernels[c][d];
                row[y] = v;
            }
        }
    }
    return out;
}

SpaceTimeKernel ParametrixEngine::phi(std::vector<std::size_t> targets) const {
    SpaceTimeKernel out(SliceAxis::Target, mesh_.nodes(), std::move(targets), grid_.size());
    const auto& q0 = generator_.base_symbol();
    const auto& qg = generator_.modulation_symbol();
    for (std::size_t n = 0; n < out.nodes(); ++n) {
        const double t = mesh_[n];
        for (std::size_t k = 0; k < out.slices.size(); ++k) {
            const std::size_t y = out.slices[k];
            std::vector<Complex> spec(grid_.size());
            for (std::size_t f = 0; f < spec.size(); ++f) spec[f] = -qg[f] * std::exp(-t * (q0[f] + profile_[y] * qg[f]));
            const auto kern = fft_.inverse(std::move(spec));
            auto col = out.slice(n, k);
            for (std::size_t x = 0; x < grid_.size(); ++x) {
                col[x] = (profile_[x] - profile_[y]) * kern[grid_.difference_index(x, y)];
            }
        }
    }
    return out;
}

ParametrixEngine::StepCoefficients ParametrixEngine::coefficients(std::size_t n) const {
    const auto& q0 = generator_.base_symbol();
    const auto& qg = generator_.modulation_symbol();
    const std::size_t size = grid_.size();
    const std::size_t last = mesh_.intervals();
    StepCoefficients s;
    s.current.assign(nodes_.size(), std::vector<double>(size, 0.0));
    s.decay.assign(nodes_.size(), std::vector<double>(size, 0.0));
    s.carry.assign(nodes_.size(), std::vector<double>(size, 0.0));
    const double back = n > 0 ? mesh_.step(n) : 0.0;
    const double ahead = n < last ? mesh_.step(n + 1) : 0.0;
    for (std::size_t c = 0; c < nodes_.size(); ++c) {
        for (std::size_t k = 0; k < size; ++k) {
            const double q = q0[k] + nodes_[c] * qg[k];
            const double lambda = n > 0 ? back * (psi1(q * back) - psi2(q * back)) : 0.0;
            s.current[c][k] = lambda;
            if (n < last) {
                const double e = std::exp(-q * ahead);
                s.decay[c][k] = e;
                s.carry[c][k] = e * lambda + ahead * psi2(q * ahead);
            }
        }
    }
    return s;
}

// Output at node n is ∫₀^{t_n} Σ_z K_{t_n−s}(x,z) F_s(z) ds with F linear between
// nodes. Per interpolation node c the spectral state A^c holds the part of the
// integral over [0, t_{n−1}] plus the right half of the last hat; it advances by
// A ← E A + (Eλ + ρ) U.
SpaceTimeKernel ParametrixEngine::left_convolve(const SpaceTimeKernel& f, bool phi) const {
    if (f.axis != SliceAxis::Target || f.points != grid_.size() || f.nodes() != mesh_.nodes().size()) {
        throw Error(ErrorCode::InvalidArgument, "left convolution needs target slices on the engine mesh");
    }
    const std::size_t size = grid_.size();
    const std::size_t count = nodes_.size();
    const std::size_t parts = phi ? 2 : 1;
    const auto& qg = generator_.modulation_symbol();
    SpaceTimeKernel out(SliceAxis::Target, f.times, f.slices, size);
    // state[(slice·count + c)·parts + part]
    std::vector<std::vector<Complex>> state(f.slices.size() * count * parts, std::vector<Complex>(size, Complex(0.0)));
    std::vector<double> weighted(size);
    std::vector<std::vector<Complex>> sums(parts, std::vector<Complex>(size));

    for (std::size_t n = 0; n < f.nodes(); ++n) {
        const auto co = coefficients(n);
        for (std::size_t k = 0; k < f.slices.size(); ++k) {
            const auto v = f.slice(n, k);
            for (auto& s : sums) std::fill(s.begin(), s.end(), Complex(0.0));
            for (std::size_t c = 0; c < count; ++c) {
                for (std::size_t part = 0; part < parts; ++part) {
                    for (std::size_t j = 0; j < size; ++j) {
                        weighted[j] = lagrange_[c][j] * v[j] * (part == 1 ? profile_[j] : 1.0);
                    }
                    const auto u = fft_.transform(weighted);
                    auto& a = state[(k * count + c) * parts + part];
                    auto& sum = sums[part];
                    const auto& lam = co.current[c];
                    const auto& dec = co.decay[c];
                    const auto& car = co.carry[c];
                    for (std::size_t i = 0; i < size; ++i) {
                        sum[i] += a[i] + lam[i] * u[i];
                        a[i] = dec[i] * a[i] + car[i] * u[i];
                    }
                }
            }
            auto col = out.slice(n, k);
            if (phi) {
                for (std::size_t i = 0; i < size; ++i) {
                    sums[0][i] *= -qg[i];
                    sums[1][i] *= -qg[i];
                }
                const auto first = fft_.inverse(std::move(sums[0]));
                const auto second = fft_.inverse(std::move(sums[1]));
                for (std::size_t x = 0; x < size; ++x) col[x] = profile_[x] * first[x] - second[x];
                sums.assign(parts, std::vector<Complex>(size));
            } else {
                const auto first = fft_.inverse(std::move(sums[0]));
                std::copy(first.begin(), first.end(), col.begin());
                sums.assign(parts, std::vector<Complex>(size));
            }
        }
    }
    return out;
}

SpaceTimeKernel ParametrixEngine::phi_convolve(const SpaceTimeKernel& f) const { return left_convolve(f, true); }

SpaceTimeKernel ParametrixEngine::zero_order_convolve(const SpaceTimeKernel& f) const {
    return left_convolve(f, false);
}

namespace {

std::vector<double> norms_by_node(const SpaceTimeKernel& k) {
    std::vector<double> v(k.nodes());
    for (std::size_t n = 0; n < k.nodes(); ++n) v[n] = k.sup(n);
    return v;
}

}  // namespace

SeriesCalibration ParametrixEngine::calibrate(std::vector<std::size_t> targets) const {
    if (targets.empty()) throw Error(ErrorCode::InvalidArgument, "calibration needs target slices");
    std::size_t stride = options_.calibration_stride;
    if (stride == 0) stride = std::max<std::size_t>(1, targets.size() / 32);
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < targets.size(); i += stride) chosen.push_back(targets[i]);

    SeriesCalibration cal;
    cal.theta = theta_;
    SpaceTimeKernel term = phi(chosen);
    cal.term_norms.push_back(norms_by_node(term));
    for (int k = 2; k <= options_.calibration_terms; ++k) {
        term = phi_convolve(term);
        cal.term_norms.push_back(norms_by_node(term));
    }
    const double r = theta_ / alpha_;
    const double T = mesh_.horizon();
    const std::size_t last = mesh_.intervals();
    if (cal.term_norms[0][last] == 0.0 && *std::max_element(cal.term_norms[0].begin(), cal.term_norms[0].end()) == 0.0) {
        return cal;  // Φ ≡ 0
    }
    std::vector<double> mismatch;
    for (std::size_t k = 1; k < cal.term_norms.size(); ++k) {
        const double kk = static_cast<double>(k);
        const double shape = std::pow(T, r) * std::exp(std::lgamma(kk * r) - std::lgamma((kk + 1.0) * r));
        const double ratio = cal.term_norms[k][last] / cal.term_norms[k - 1][last];
        cal.ratios.push_back(ratio);
        mismatch.push_back(std::log(ratio / shape));
    }
    const auto [lo, hi] = std::minmax_element(mismatch.begin(), mismatch.end());
    cal.c2 = std::exp(0.5 * (*lo + *hi));
    cal.ratio_spread = std::exp(0.5 * (*hi - *lo));
    for (std::size_t k = 1; k < cal.term_norms.size(); ++k) {
        const double kk = static_cast<double>(k);
        cal.predicted_ratios.push_back(cal.c2 * std::pow(T, r) *
                                       std::exp(std::lgamma(kk * r) - std::lgamma((kk + 1.0) * r)));
    }
    for (std::size_t k = 0; k < cal.term_norms.size(); ++k) {
        const double kk = static_cast<double>(k + 1);
        for (std::size_t n = 1; n <= last; ++n) {
            const double t = mesh_[n];
            const double model = std::exp(kk * std::log(cal.c2) + (-1.0 + kk * r) * std::log(t) - std::lgamma(kk * r));
            cal.c1 = std::max(cal.c1, cal.term_norms[k][n] / model);
        }
    }
    return cal;
}

SeriesResult ParametrixEngine::assemble(std::vector<std::size_t> targets, const SeriesCalibration& calibration) const {
    SeriesResult res;
    int terms = 1;
    auto worst_tail = [&](int K) {
        double worst = 0.0;
        for (std::size_t n = 1; n < mesh_.nodes().size(); ++n) {
            worst = std::max(worst, calibration.tail_bound(K, mesh_[n], alpha_));
        }
        return worst;
    };
    while (worst_tail(terms) >= controls_.tail_tolerance) {
        if (terms >= controls_.max_terms) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "tail bound %.3e after %d terms exceeds %.3e", worst_tail(terms), terms,
                          controls_.tail_tolerance);
            throw Error(ErrorCode::TailNotConverged, buf);
        }
        ++terms;
    }
    res.terms = terms;
    res.tail_bound = worst_tail(terms);

    SpaceTimeKernel term = phi(targets);
    res.psi = term;
    res.term_norms.push_back(norms_by_node(term));
    for (int k = 2; k <= terms; ++k) {
        term = phi_convolve(term);
        res.term_norms.push_back(norms_by_node(term));
        for (std::size_t i = 0; i < term.values.size(); ++i) res.psi.values[i] += term.values[i];
    }
    res.p = zero_order(std::move(targets));
    const auto correction = zero_order_convolve(res.psi);
    for (std::size_t i = 0; i < res.p.values.size(); ++i) res.p.values[i] += correction.values[i];
    return res;
}

SpaceTimeKernel ParametrixEngine::duhamel(std::vector<std::size_t> sources) const {
    const std::size_t size = grid_.size();
    const std::size_t count = nodes_.size();
    const auto& qg = generator_.modulation_symbol();
    SpaceTimeKernel p0 = zero_order_rows(sources);
    SpaceTimeKernel out(SliceAxis::Source, mesh_.nodes(), std::move(sources), size);
    if (count == 1 && std::all_of(profile_.begin(), profile_.end(), [&](double b) { return b == profile_[0]; })) {
        out.values = p0.values;  // Φ ≡ 0
        return out;
    }

    // state[(slice·count + c)·2 + part], part 0 carries b·P, part 1 carries P
    std::vector<std::vector<Complex>> state(out.slices.size() * count * 2, std::vector<Complex>(size, Complex(0.0)));
    std::vector<double> bv(size);

    // y ↦ Σ_c ℓ_c(b(y)) [K^c ∗ (b v) − b(y) K^c ∗ v] for per-c spectra
    auto evaluate = [&](const std::vector<std::vector<Complex>>& spec_b, const std::vector<std::vector<Complex>>& spec_1) {
        std::vector<double> field(size, 0.0);
        for (std::size_t c = 0; c < count; ++c) {
            std::vector<Complex> sb(size);
            std::vector<Complex> s1(size);
            for (std::size_t i = 0; i < size; ++i) {
                sb[i] = -qg[i] * spec_b[c][i];
                s1[i] = -qg[i] * spec_1[c][i];
            }
            const auto fb = fft_.inverse(std::move(sb));
            const auto f1 = fft_.inverse(std::move(s1));
            for (std::size_t y = 0; y < size; ++y) field[y] += lagrange_[c][y] * (fb[y] - profile_[y] * f1[y]);
        }
        return field;
    };

    for (std::size_t n = 0; n < out.nodes(); ++n) {
        const auto co = coefficients(n);
        for (std::size_t s = 0; s < out.slices.size(); ++s) {
            const auto base = p0.slice(n, s);
            std::vector<double> v(base.begin(), base.end());
            std::vector<Complex> ub;
            std::vector<Complex> u1;
            auto transforms = [&](const std::vector<double>& w) {
                for (std::size_t j = 0; j < size; ++j) bv[j] = profile_[j] * w[j];
                ub = fft_.transform(bv);
                u1 = fft_.transform(w);
            };
            if (n > 0) {
                std::vector<std::vector<Complex>> sb(count, std::vector<Complex>(size));
                std::vector<std::vector<Complex>> s1(count, std::vector<Complex>(size));
                // known history
                for (std::size_t c = 0; c < count; ++c) {
                    sb[c] = state[(s * count + c) * 2];
                    s1[c] = state[(s * count + c) * 2 + 1];
                }
                const auto history = evaluate(sb, s1);
                const double scale = std::max(*std::max_element(base.begin(), base.end()), 1e-300);
                double previous_change = 0.0;
                bool converged = false;
                for (std::size_t j = 0; j < size; ++j) v[j] = base[j] + history[j];
                for (int it = 0; it < options_.max_fixed_point_iterations; ++it) {
                    transforms(v);
                    for (std::size_t c = 0; c < count; ++c) {
                        const auto& lam = co.current[c];
                        for (std::size_t i = 0; i < size; ++i) {
                            sb[c][i] = lam[i] * ub[i];
                            s1[c][i] = lam[i] * u1[i];
                        }
                    }
                    const auto implicit = evaluate(sb, s1);
                    double change = 0.0;
                    double mag = 0.0;
                    for (std::size_t j = 0; j < size; ++j) {
                        const double next = base[j] + history[j] + implicit[j];
                        change = std::max(change, std::abs(next - v[j]));
                        mag = std::max(mag, std::abs(next));
                        v[j] = next;
                    }
                    if (change <= 1e-14 * std::max(mag, scale)) {
                        converged = true;
                        break;
                    }
                    if (it > 2 && change > previous_change) break;
                    previous_change = change;
                }
                if (!converged) {
                    throw Error(ErrorCode::MarchingInstability,
                                "implicit step at t = " + std::to_string(mesh_[n]) + " does not contract");
                }
                double vmax = 0.0;
                for (double x : v) vmax = std::max(vmax, std::abs(x));
                const auto prev = out.slice(n - 1, s);
                double pmax = 0.0;
                for (double x : prev) pmax = std::max(pmax, std::abs(x));
                if (vmax > options_.amplification_limit * std::max(pmax, scale)) {
                    throw Error(ErrorCode::MarchingInstability,
                                "sup norm grew by " + std::to_string(vmax / std::max(pmax, scale)) + " at t = " +
                                    std::to_string(mesh_[n]));
                }
            }
            std::copy(v.begin(), v.end(), out.slice(n, s).begin());
            transforms(v);
            for (std::size_t c = 0; c < count; ++c) {
                auto& ab = state[(s * count + c) * 2];
                auto& a1 = state[(s * count + c) * 2 + 1];
                const auto& dec = co.decay[c];
                const auto& car = co.carry[c];
                for (std::size_t i = 0; i < size; ++i) {
                    ab[i] = dec[i] * ab[i] + car[i] * ub[i];
                    a1[i] = dec[i] * a1[i] + car[i] * u1[i];
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// pointwise forms

double phi_kernel(const JumpKernel& kernel, const FrozenKernel& frozen_at_y, std::span<const double> x,
                  std::span<const double> y, const SecondDifferenceOptions& options) {
    const std::size_t d = kernel.dimension();
    if (x.size() != d || y.size() != d) throw Error(ErrorCode::InvalidArgument, "point has wrong dimension");
    const auto& h = kernel.modulation();
    bool same = true;
    for (std::size_t i = 0; i < d; ++i) same = same && x[i] == y[i];
    if (same) return 0.0;
    const GridFunction p(frozen_at_y.grid, frozen_at_y.values, static_cast<double>(d) + kernel.alpha());
    const auto f = p.as_function();
    Vec w(d);
    for (std::size_t i = 0; i < d; ++i) w[i] = y[i] - x[i];
    const JumpWeight weight = [&](std::span<const double> u) { return h(x, u) - h(y, u); };
    return integrate_second_difference_weighted(kernel, f, w, weight, 0.0, options);
}

double boxtimes(const TimeKernel& f, const TimeKernel& g, double t, std::span<const double> x,
                std::span<const double> y, const SpatialGrid& grid, const SingularIntegralOptions& options) {
    const double cell = grid.cell_volume();
    std::vector<Vec> points(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) points[j] = grid.point(j);
    auto integrand = [&](double s, double rest) {
        double sum = 0.0;
        for (const auto& z : points) {
            const double gv = g(s, z, y);
            if (gv != 0.0) sum += f(rest, x, z) * gv;
        }
        return sum * cell;
    };
    return singular_time_integral(integrand, t, options);
}

}  // namespace anisoheat
