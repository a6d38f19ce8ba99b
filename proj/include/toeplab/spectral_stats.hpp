#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "toeplab/eigensolver.hpp"

namespace toeplab {

/// Central eigenvalues mapped to unit mean spacing by polynomial unfolding.
struct UnfoldedSpectrum {
    std::vector<double> values;  // ascending, mean spacing exactly 1
    double retained_fraction = 1.0;
    int poly_degree = 3;
    EnsembleSpec source_meta;
};

/// Raised when the fitted staircase polynomial is not monotone over the
/// retained window; such realizations are flagged and excluded upstream.
class UnfoldingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binned density estimate. density[i] = count_i / (sample_count * width_i),
/// std_error[i] = sqrt(count_i) / (sample_count * width_i); mass outside the
/// binned range accumulates in overflow_mass, so the total integrates to 1.
struct HistogramEstimate {
    std::vector<double> bin_edges;  // ascending, size = bins + 1
    std::vector<double> density;
    std::vector<double> std_error;
    std::size_t sample_count = 0;
    double overflow_mass = 0.0;

    std::size_t bins() const { return density.size(); }
    double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
    double width(std::size_t i) const { return bin_edges[i + 1] - bin_edges[i]; }
};

/// Two-point form factor K(tau) = <|sum_j exp(2 pi i x_j tau)|^2> / M averaged
/// over realizations of M unfolded levels.
struct FormFactorEstimate {
    std::vector<double> tau_grid;  // ascending, positive
    std::vector<double> k_values;
    std::size_t realization_count = 0;
    std::size_t levels_per_realization = 0;
};

struct Compressibility {
    double value = 0.0;
    double std_error = 0.0;
};

struct RatioDistribution {
    HistogramEstimate histogram;
    std::size_t degenerate_count = 0;  // triples dropped for a near-zero denominator
};

/// Index window retaining the central ceil(fraction * n) entries: returns
/// (begin, count).
std::pair<std::size_t, std::size_t> central_window(std::size_t n, double fraction);

/// Polynomial unfolding: least-squares fit of degree poly_degree to the
/// retained staircase (e_j, j), evaluated at each retained eigenvalue and
/// rescaled so the mean spacing is exactly 1.
UnfoldedSpectrum unfold(const SpectrumRecord& spectrum, double retained_fraction,
                        int poly_degree);

/// Histogram of s = x_{j+1+n} - x_j over all realizations, bins of bin_width
/// on [0, s_max]; spacings beyond s_max land in overflow_mass.
HistogramEstimate nn_spacing_distribution(std::span<const UnfoldedSpectrum> pool, int n,
                                          double bin_width, double s_max);

/// Histogram of r = (e_{j+2} - e_{j+1}) / (e_{j+1} - e_j) over raw eigenvalues
/// in the same central retained window used for unfolding. Denominators below
/// 1e-12 * spectral radius count into overflow and are reported separately.
RatioDistribution ratio_distribution(std::span<const SpectrumRecord> pool, double bin_width,
                                     double r_max, double retained_fraction = 0.6);

/// K(tau) on the given grid; requires an equal retained count across the pool.
FormFactorEstimate form_factor(std::span<const UnfoldedSpectrum> pool,
                               std::span<const double> tau_grid);

/// Average of K(tau) over tau in [0.05, 0.25] with the standard error of that
/// mean. For the exact semi-Poisson form this window averages to ~0.53 rather
/// than the tau->0 limit 0.5; the bias is accepted and documented.
Compressibility compressibility(const FormFactorEstimate& ff);

/// Histogram of e_j / sqrt(N) over all realizations, unit mass.
HistogramEstimate density_estimate(std::span<const SpectrumRecord> pool, double bin_width);

/// Default tau grid: 0.02 steps on (0, 3].
std::vector<double> default_tau_grid(double step = 0.02, double tau_max = 3.0);

}  // namespace toeplab
