#include "toeplab/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "toeplab/rng.hpp"

namespace toeplab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Unit roots w[k] = e^{2 pi i k / N}, so e^{2 pi i t p / N} = w[(t*p) mod N].
std::vector<std::complex<double>> unit_roots(int n) {
    std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        w[static_cast<std::size_t>(k)] = std::polar(1.0, kTwoPi * k / n);
    }
    return w;
}

void mirror_lower(Eigen::MatrixXcd& m) {
    const Eigen::Index n = m.rows();
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = c + 1; r < n; ++r) {
            m(c, r) = std::conj(m(r, c));
        }
    }
}

}  // namespace

CoefficientVector::CoefficientVector(int n_dim, Symmetry symmetry)
    : n_dim_(n_dim), symmetry_(symmetry) {
    if (n_dim < 1) {
        throw std::invalid_argument("CoefficientVector: dimension must be positive");
    }
    lags_.assign(static_cast<std::size_t>(n_dim), {0.0, 0.0});
}

std::complex<double> CoefficientVector::at(int t) const {
    const int a = std::abs(t);
    if (a >= n_dim_) {
        throw std::out_of_range("CoefficientVector: lag outside [-(N-1), N-1]");
    }
    const std::complex<double> v = lags_[static_cast<std::size_t>(a)];
    if (t >= 0 || symmetry_ == Symmetry::RealSymmetric) {
        return v;
    }
    return std::conj(v);
}

void CoefficientVector::set(int t, std::complex<double> value) {
    if (t < 0 || t >= n_dim_) {
        throw std::out_of_range("CoefficientVector: assignable lags are 0..N-1");
    }
    if (symmetry_ == Symmetry::RealSymmetric && value.imag() != 0.0) {
        throw std::invalid_argument("CoefficientVector: real-symmetric symbols must be real");
    }
    if (symmetry_ == Symmetry::HermitianComplex && t == 0 && value.imag() != 0.0) {
        throw std::invalid_argument("CoefficientVector: hermiticity forces a real a_0");
    }
    lags_[static_cast<std::size_t>(t)] = value;
}

bool DenseHermitianMatrix::is_real() const {
    for (Eigen::Index c = 0; c < entries.cols(); ++c) {
        for (Eigen::Index r = 0; r < entries.rows(); ++r) {
            if (entries(r, c).imag() != 0.0) return false;
        }
    }
    return true;
}

CoefficientVector sample_coefficients(const EnsembleSpec& spec) {
    if (spec.n_dim < 2) {
        throw std::invalid_argument("sample_coefficients: n_dim must be >= 2");
    }
    SubstreamRng rng(spec.master_seed, spec.realization_index);
    const bool complex_kind = spec.kind == EnsembleKind::ComplexHermitian;
    CoefficientVector coeffs(spec.n_dim, complex_kind ? Symmetry::HermitianComplex
                                                      : Symmetry::RealSymmetric);
    coeffs.set(0, rng.gaussian());
    for (int t = 1; t < spec.n_dim; ++t) {
        const double re = rng.gaussian();
        coeffs.set(t, complex_kind ? std::complex<double>(re, rng.gaussian())
                                   : std::complex<double>(re, 0.0));
    }
    return coeffs;
}

DenseHermitianMatrix build_toeplitz(const CoefficientVector& coeffs) {
    const int n = coeffs.dim();
    Eigen::MatrixXcd m(n, n);
    for (int c = 0; c < n; ++c) {
        for (int r = c; r < n; ++r) {
            m(r, c) = coeffs.at(r - c);  // lower triangle: lag m-n >= 0
        }
    }
    mirror_lower(m);
    return DenseHermitianMatrix{std::move(m)};
}

std::pair<DenseHermitianMatrix, DenseHermitianMatrix>
build_subspectrum_matrices(const CoefficientVector& coeffs) {
    if (coeffs.symmetry() != Symmetry::RealSymmetric) {
        throw std::invalid_argument(
            "build_subspectrum_matrices: reduction requires real symmetric coefficients");
    }
    const int n = coeffs.dim();
    if (n < 2) {
        throw std::invalid_argument("build_subspectrum_matrices: N must be >= 2");
    }
    const int half = n / 2;
    if (n % 2 == 0) {
        Eigen::MatrixXcd plus(half, half);
        Eigen::MatrixXcd minus(half, half);
        for (int c = 0; c < half; ++c) {
            for (int r = 0; r < half; ++r) {
                // one-based indices m = r+1, n = c+1
                const double diff = coeffs.real_at(r - c);
                const double sum = coeffs.real_at(r + c + 1);
                plus(r, c) = diff + sum;
                minus(r, c) = diff - sum;
            }
        }
        return {DenseHermitianMatrix{std::move(plus)}, DenseHermitianMatrix{std::move(minus)}};
    }
    // Odd N: T^- is half x half with a_{m-n} - a_{m+n}; T^+ gains a bordering
    // row/column carrying sqrt(2) a_m.
    Eigen::MatrixXcd minus(half, half);
    for (int c = 0; c < half; ++c) {
        for (int r = 0; r < half; ++r) {
            minus(r, c) = coeffs.real_at(r - c) - coeffs.real_at(r + c + 2);
        }
    }
    const double root2 = std::numbers::sqrt2;
    Eigen::MatrixXcd plus(half + 1, half + 1);
    plus(0, 0) = coeffs.real_at(0);
    for (int k = 1; k <= half; ++k) {
        const double border = root2 * coeffs.real_at(k);
        plus(0, k) = border;
        plus(k, 0) = border;
    }
    for (int c = 1; c <= half; ++c) {
        for (int r = 1; r <= half; ++r) {
            plus(r, c) = coeffs.real_at(r - c) + coeffs.real_at(r + c);
        }
    }
    return {DenseHermitianMatrix{std::move(plus)}, DenseHermitianMatrix{std::move(minus)}};
}

std::pair<std::vector<double>, std::vector<double>> xi_eta(const CoefficientVector& coeffs) {
    const int n = coeffs.dim();
    const auto w = unit_roots(n);
    std::vector<double> xi(static_cast<std::size_t>(n));
    std::vector<double> eta(static_cast<std::size_t>(n));
    const double a0 = coeffs.at(0).real();
    for (int p = 0; p < n; ++p) {
        double x = a0;
        double e = 0.0;
        for (int t = 1; t < n; ++t) {
            const std::complex<double> term =
                coeffs.at(t) * w[static_cast<std::size_t>((static_cast<long long>(t) * p) % n)];
            x += 2.0 * (1.0 - static_cast<double>(t) / n) * term.real();
            e += term.imag();
        }
        xi[static_cast<std::size_t>(p)] = x;
        eta[static_cast<std::size_t>(p)] = e;
    }
    return {std::move(xi), std::move(eta)};
}

DenseHermitianMatrix build_fourier_matrix(const CoefficientVector& coeffs) {
    const int n = coeffs.dim();
    const auto [xi, eta] = xi_eta(coeffs);
    const auto w = unit_roots(n);
    Eigen::MatrixXcd m(n, n);
    for (int p = 0; p < n; ++p) {
        m(p, p) = xi[static_cast<std::size_t>(p)];
    }
    // Off-diagonal 2i(eta_p - eta_r) / [N (e^{-2 pi i (p-r)/N} - 1)]; |p-r| >= 1
    // keeps the denominator away from zero, so no small-angle handling is needed.
    for (int r = 0; r < n; ++r) {
        for (int p = r + 1; p < n; ++p) {
            const std::complex<double> denom =
                static_cast<double>(n) *
                (w[static_cast<std::size_t>((n - (p - r) % n) % n)] - 1.0);
            const std::complex<double> num(0.0, 2.0 * (eta[static_cast<std::size_t>(p)] -
                                                       eta[static_cast<std::size_t>(r)]));
            m(p, r) = num / denom;
        }
    }
    mirror_lower(m);
    return DenseHermitianMatrix{std::move(m)};
}

double predicted_moment(MomentClass cls, int p, int r, int n_dim) {
    const double n = static_cast<double>(n_dim);
    const bool diag = p == r;
    switch (cls) {
        case MomentClass::EtaEta:
            return (diag ? n : 0.0) - 1.0;
        case MomentClass::XiEta:
            return diag ? 0.0 : 1.0 / std::tan(std::numbers::pi * (r - p) / n);
        case MomentClass::XiXi: {
            if (diag) return -1.0 + (4.0 * n * n + 2.0) / (3.0 * n);
            const double s = std::sin(std::numbers::pi * (p - r) / n);
            return -1.0 + 2.0 / (n * s * s);
        }
    }
    throw std::logic_error("predicted_moment: unknown class");
}

std::vector<MomentCheck> validate_fourier_variances(int n_dim, std::size_t sample_count,
                                                    std::uint64_t seed, int workers) {
    if (n_dim < 2) {
        throw std::invalid_argument("validate_fourier_variances: n_dim must be >= 2");
    }
    if (sample_count == 0) {
        throw std::invalid_argument("validate_fourier_variances: sample_count must be positive");
    }
    if (workers < 1) workers = 1;

    const std::size_t pairs = static_cast<std::size_t>(n_dim) * static_cast<std::size_t>(n_dim);
    // Fixed-size draw blocks keep the accumulation order independent of the
    // worker count: block partials are folded sequentially by block index.
    constexpr std::size_t kBlock = 256;
    const std::size_t block_count = (sample_count + kBlock - 1) / kBlock;

    struct BlockSums {
        std::vector<double> sum;     // 3 * pairs
        std::vector<double> sum_sq;  // 3 * pairs
    };
    std::vector<BlockSums> blocks(block_count);

    std::atomic<std::size_t> next_block{0};
    auto work = [&]() {
        while (true) {
            const std::size_t b = next_block.fetch_add(1);
            if (b >= block_count) break;
            BlockSums acc;
            acc.sum.assign(3 * pairs, 0.0);
            acc.sum_sq.assign(3 * pairs, 0.0);
            const std::size_t begin = b * kBlock;
            const std::size_t end = std::min(begin + kBlock, sample_count);
            for (std::size_t i = begin; i < end; ++i) {
                const EnsembleSpec spec{EnsembleKind::ComplexHermitian, n_dim, seed, i};
                const auto [xi, eta] = xi_eta(sample_coefficients(spec));
                std::size_t k = 0;
                for (int p = 0; p < n_dim; ++p) {
                    for (int r = 0; r < n_dim; ++r, ++k) {
                        const double ee = eta[static_cast<std::size_t>(p)] *
                                          eta[static_cast<std::size_t>(r)];
                        const double xe = xi[static_cast<std::size_t>(p)] *
                                          eta[static_cast<std::size_t>(r)];
                        const double xx = xi[static_cast<std::size_t>(p)] *
                                          xi[static_cast<std::size_t>(r)];
                        acc.sum[k] += ee;
                        acc.sum_sq[k] += ee * ee;
                        acc.sum[pairs + k] += xe;
                        acc.sum_sq[pairs + k] += xe * xe;
                        acc.sum[2 * pairs + k] += xx;
                        acc.sum_sq[2 * pairs + k] += xx * xx;
                    }
                }
            }
            blocks[b] = std::move(acc);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    std::vector<double> sum(3 * pairs, 0.0);
    std::vector<double> sum_sq(3 * pairs, 0.0);
    for (const auto& b : blocks) {
        for (std::size_t k = 0; k < 3 * pairs; ++k) {
            sum[k] += b.sum[k];
            sum_sq[k] += b.sum_sq[k];
        }
    }

    const double count = static_cast<double>(sample_count);
    std::vector<MomentCheck> table;
    table.reserve(3 * pairs);
    const MomentClass classes[3] = {MomentClass::EtaEta, MomentClass::XiEta, MomentClass::XiXi};
    for (int c = 0; c < 3; ++c) {
        std::size_t k = 0;
        for (int p = 0; p < n_dim; ++p) {
            for (int r = 0; r < n_dim; ++r, ++k) {
                const double mean = sum[static_cast<std::size_t>(c) * pairs + k] / count;
                const double mean_sq = sum_sq[static_cast<std::size_t>(c) * pairs + k] / count;
                const double var = std::max(0.0, mean_sq - mean * mean);
                MomentCheck row;
                row.cls = classes[c];
                row.p = p;
                row.r = r;
                row.empirical = mean;
                row.predicted = predicted_moment(classes[c], p, r, n_dim);
                row.std_error = std::sqrt(var / count);
                table.push_back(row);
            }
        }
    }
    return table;
}

}  // namespace toeplab
