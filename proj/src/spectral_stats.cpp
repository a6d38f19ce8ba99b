#include "toeplab/spectral_stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace toeplab {

namespace {

/// Fixed uniform-bin counter; densities are formed once all counts are in, so
/// merges are exact and order-free.
struct BinCounter {
    double lo = 0.0;
    double width = 0.0;
    std::vector<std::uint64_t> counts;
    std::uint64_t outside = 0;  // beyond the last edge (or below the first)

    BinCounter(double lo_, double width_, std::size_t bins) : lo(lo_), width(width_) {
        counts.assign(bins, 0);
    }

    void add(double v) {
        const double offset = (v - lo) / width;
        if (offset < 0.0) {
            ++outside;
            return;
        }
        const auto idx = static_cast<std::size_t>(offset);
        if (idx >= counts.size()) {
            ++outside;
        } else {
            ++counts[idx];
        }
    }

    HistogramEstimate finalize() const {
        HistogramEstimate h;
        const std::size_t bins = counts.size();
        h.bin_edges.resize(bins + 1);
        for (std::size_t i = 0; i <= bins; ++i) {
            h.bin_edges[i] = lo + width * static_cast<double>(i);
        }
        std::uint64_t total = outside;
        for (const auto c : counts) total += c;
        h.sample_count = total;
        h.density.resize(bins);
        h.std_error.resize(bins);
        const double norm = static_cast<double>(total) * width;
        for (std::size_t i = 0; i < bins; ++i) {
            h.density[i] = static_cast<double>(counts[i]) / norm;
            h.std_error[i] = std::sqrt(static_cast<double>(counts[i])) / norm;
        }
        h.overflow_mass = static_cast<double>(outside) / static_cast<double>(total);
        return h;
    }
};

std::size_t bin_count(double width, double max) {
    if (!(width > 0.0) || !(max > width)) {
        throw std::invalid_argument("histogram: need 0 < bin_width < max");
    }
    return static_cast<std::size_t>(std::llround(max / width));
}

/// Least-squares polynomial fit of y against x; abscissa is affinely mapped
/// to [-1, 1] before building the Vandermonde system, for conditioning.
struct PolyFit {
    double mid = 0.0;
    double half = 1.0;
    Eigen::VectorXd coeffs;

    double operator()(double x) const {
        const double z = (x - mid) / half;
        double acc = 0.0;
        for (Eigen::Index k = coeffs.size() - 1; k >= 0; --k) {
            acc = acc * z + coeffs[k];
        }
        return acc;
    }
};

PolyFit fit_polynomial(std::span<const double> x, std::span<const double> y, int degree) {
    const auto n = static_cast<Eigen::Index>(x.size());
    PolyFit fit;
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    fit.mid = 0.5 * (*lo_it + *hi_it);
    fit.half = std::max(0.5 * (*hi_it - *lo_it), 1e-300);
    Eigen::MatrixXd vand(n, degree + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double z = (x[static_cast<std::size_t>(i)] - fit.mid) / fit.half;
        double pw = 1.0;
        for (int k = 0; k <= degree; ++k) {
            vand(i, k) = pw;
            pw *= z;
        }
    }
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs[i] = y[static_cast<std::size_t>(i)];
    fit.coeffs = vand.colPivHouseholderQr().solve(rhs);
    return fit;
}

}  // namespace

std::pair<std::size_t, std::size_t> central_window(std::size_t n, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw std::invalid_argument("central_window: fraction must be in (0, 1]");
    }
    auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    count = std::clamp<std::size_t>(count, 1, n);
    return {(n - count) / 2, count};
}

UnfoldedSpectrum unfold(const SpectrumRecord& spectrum, double retained_fraction,
                        int poly_degree) {
    const auto n = static_cast<std::size_t>(spectrum.eigenvalues.size());
    if (n < 20) {
        throw std::invalid_argument("unfold: spectrum needs at least 20 eigenvalues");
    }
    if (poly_degree < 1) {
        throw std::invalid_argument("unfold: polynomial degree must be >= 1");
    }
    const auto [begin, count] = central_window(n, retained_fraction);
    if (count < static_cast<std::size_t>(poly_degree) + 2) {
        throw std::invalid_argument("unfold: fewer retained points than poly_degree + 2");
    }

    std::vector<double> energies(count);
    std::vector<double> staircase(count);
    for (std::size_t j = 0; j < count; ++j) {
        energies[j] = spectrum.eigenvalues[static_cast<Eigen::Index>(begin + j)];
        staircase[j] = static_cast<double>(j);
    }
    const PolyFit fit = fit_polynomial(energies, staircase, poly_degree);

    UnfoldedSpectrum out;
    out.retained_fraction = retained_fraction;
    out.poly_degree = poly_degree;
    out.source_meta = spectrum.ensemble_meta;
    out.values.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
        out.values[j] = fit(energies[j]);
    }
    for (std::size_t j = 1; j < count; ++j) {
        if (!(out.values[j] > out.values[j - 1])) {
            throw UnfoldingError("unfold: fitted staircase polynomial is not monotone");
        }
    }
    // Affine rescale: mean spacing exactly 1 over the retained window.
    const double span = out.values[count - 1] - out.values[0];
    const double scale = static_cast<double>(count - 1) / span;
    const double base = out.values[0];
    for (auto& v : out.values) {
        v = (v - base) * scale;
    }
    return out;
}

HistogramEstimate nn_spacing_distribution(std::span<const UnfoldedSpectrum> pool, int n,
                                          double bin_width, double s_max) {
    if (pool.empty()) {
        throw std::invalid_argument("nn_spacing_distribution: empty pool");
    }
    if (n < 0) {
        throw std::invalid_argument("nn_spacing_distribution: n must be >= 0");
    }
    BinCounter acc(0.0, bin_width, bin_count(bin_width, s_max));
    const auto skip = static_cast<std::size_t>(n);
    for (const auto& spectrum : pool) {
        const auto m = spectrum.values.size();
        if (m < skip + 2) {
            throw std::invalid_argument(
                "nn_spacing_distribution: spectrum shorter than n + 2 levels");
        }
        for (std::size_t j = 0; j + skip + 1 < m; ++j) {
            acc.add(spectrum.values[j + skip + 1] - spectrum.values[j]);
        }
    }
    return acc.finalize();
}

RatioDistribution ratio_distribution(std::span<const SpectrumRecord> pool, double bin_width,
                                     double r_max, double retained_fraction) {
    if (pool.empty()) {
        throw std::invalid_argument("ratio_distribution: empty pool");
    }
    RatioDistribution out;
    BinCounter acc(0.0, bin_width, bin_count(bin_width, r_max));
    for (const auto& record : pool) {
        const auto n = static_cast<std::size_t>(record.eigenvalues.size());
        if (n < 3) {
            throw std::invalid_argument("ratio_distribution: spectrum needs >= 3 eigenvalues");
        }
        const auto [begin, count] = central_window(n, retained_fraction);
        if (count < 3) continue;
        const double radius =
            std::max(std::abs(record.eigenvalues[0]),
                     std::abs(record.eigenvalues[static_cast<Eigen::Index>(n - 1)]));
        const double tol = 1e-12 * radius;
        for (std::size_t j = begin; j + 2 < begin + count; ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            const double lower = record.eigenvalues[i + 1] - record.eigenvalues[i];
            const double upper = record.eigenvalues[i + 2] - record.eigenvalues[i + 1];
            if (lower <= tol) {
                ++out.degenerate_count;
                acc.outside += 1;  // degenerate denominators count into overflow
                continue;
            }
            acc.add(upper / lower);
        }
    }
    out.histogram = acc.finalize();
    return out;
}

FormFactorEstimate form_factor(std::span<const UnfoldedSpectrum> pool,
                               std::span<const double> tau_grid) {
    if (pool.empty()) {
        throw std::invalid_argument("form_factor: empty pool");
    }
    if (tau_grid.empty() || tau_grid.front() <= 0.0 ||
        !std::is_sorted(tau_grid.begin(), tau_grid.end())) {
        throw std::invalid_argument("form_factor: tau grid must be ascending and positive");
    }
    const std::size_t levels = pool.front().values.size();
    for (const auto& spectrum : pool) {
        if (spectrum.values.size() != levels) {
            throw std::invalid_argument("form_factor: pool has mixed retained counts");
        }
    }
    FormFactorEstimate ff;
    ff.tau_grid.assign(tau_grid.begin(), tau_grid.end());
    ff.k_values.assign(tau_grid.size(), 0.0);
    ff.realization_count = pool.size();
    ff.levels_per_realization = levels;
    for (const auto& spectrum : pool) {
        for (std::size_t ti = 0; ti < ff.tau_grid.size(); ++ti) {
            const double omega = 2.0 * std::numbers::pi * ff.tau_grid[ti];
            std::complex<double> phase_sum{0.0, 0.0};
            for (const double x : spectrum.values) {
                phase_sum += std::polar(1.0, omega * x);
            }
            ff.k_values[ti] += std::norm(phase_sum) / static_cast<double>(levels);
        }
    }
    for (auto& k : ff.k_values) {
        k /= static_cast<double>(ff.realization_count);
    }
    return ff;
}

Compressibility compressibility(const FormFactorEstimate& ff) {
    constexpr double kLo = 0.05;
    constexpr double kHi = 0.25;
    constexpr double kEps = 1e-9;
    if (ff.tau_grid.empty() || ff.tau_grid.front() > kLo + kEps ||
        ff.tau_grid.back() < kHi - kEps) {
        throw std::invalid_argument("compressibility: tau grid does not cover [0.05, 0.25]");
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < ff.tau_grid.size(); ++i) {
        if (ff.tau_grid[i] < kLo - kEps || ff.tau_grid[i] > kHi + kEps) continue;
        sum += ff.k_values[i];
        sum_sq += ff.k_values[i] * ff.k_values[i];
        ++count;
    }
    if (count < 3) {
        throw std::invalid_argument("compressibility: fewer than 3 grid points in the window");
    }
    Compressibility chi;
    chi.value = sum / static_cast<double>(count);
    const double var = std::max(0.0, sum_sq / static_cast<double>(count) - chi.value * chi.value);
    chi.std_error = std::sqrt(var / static_cast<double>(count));
    return chi;
}

HistogramEstimate density_estimate(std::span<const SpectrumRecord> pool, double bin_width) {
    if (pool.empty()) {
        throw std::invalid_argument("density_estimate: empty pool");
    }
    if (!(bin_width > 0.0)) {
        throw std::invalid_argument("density_estimate: bin_width must be positive");
    }
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& record : pool) {
        const double scale = std::sqrt(static_cast<double>(record.eigenvalues.size()));
        lo = std::min(lo, record.eigenvalues[0] / scale);
        hi = std::max(hi, record.eigenvalues[record.eigenvalues.size() - 1] / scale);
    }
    const auto k_lo = static_cast<long long>(std::floor(lo / bin_width));
    const auto k_hi = static_cast<long long>(std::ceil(hi / bin_width)) + 1;
    BinCounter acc(static_cast<double>(k_lo) * bin_width, bin_width,
                   static_cast<std::size_t>(k_hi - k_lo));
    for (const auto& record : pool) {
        const double scale = std::sqrt(static_cast<double>(record.eigenvalues.size()));
        for (Eigen::Index i = 0; i < record.eigenvalues.size(); ++i) {
            acc.add(record.eigenvalues[i] / scale);
        }
    }
    return acc.finalize();
}

std::vector<double> default_tau_grid(double step, double tau_max) {
    if (!(step > 0.0) || !(tau_max >= step)) {
        throw std::invalid_argument("default_tau_grid: need 0 < step <= tau_max");
    }
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::llround(tau_max / step));
    grid.reserve(count);
    for (std::size_t i = 1; i <= count; ++i) {
        grid.push_back(step * static_cast<double>(i));
    }
    return grid;
}

}  // namespace toeplab
