#include "toeplab/multifractal.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace toeplab {

namespace {

// FFTW plan creation/destruction is not thread-safe; execution on the planned
// buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

/// Batched c2c transform of the columns, FFTW sign +1 (backward), then scaled
/// by 1/sqrt(N) to make it unitary.
Eigen::MatrixXcd dft_columns(const Eigen::MatrixXcd& in, int fftw_sign) {
    const auto n = static_cast<int>(in.rows());
    const auto howmany = static_cast<int>(in.cols());
    Eigen::MatrixXcd out(n, howmany);
    if (n == 0 || howmany == 0) return out;

    auto* src = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data()));
    auto* dst = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan = nullptr;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_many_dft(1, &n, howmany, src, nullptr, 1, n, dst, nullptr, 1, n,
                                  fftw_sign, FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    if (plan == nullptr) {
        throw std::runtime_error("fourier transform: fftw plan creation failed");
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    out *= 1.0 / std::sqrt(static_cast<double>(n));
    return out;
}

}  // namespace

Eigen::VectorXcd fourier_transform_vector(const Eigen::VectorXcd& v) {
    return dft_columns(v, FFTW_BACKWARD);
}

Eigen::VectorXcd inverse_fourier_transform_vector(const Eigen::VectorXcd& v) {
    return dft_columns(v, FFTW_FORWARD);
}

Eigen::MatrixXcd fourier_transform_columns(const Eigen::MatrixXcd& vectors) {
    return dft_columns(vectors, FFTW_BACKWARD);
}

double momentum_window_halfwidth(EnsembleKind kind, int n_dim) {
    const double root = std::sqrt(static_cast<double>(n_dim));
    return kind == EnsembleKind::ComplexHermitian ? 2.0 * root : root;
}

Eigen::MatrixXcd momentum_window_vectors(const SpectrumRecord& record, EnsembleKind kind) {
    if (!record.eigenvectors.has_value()) {
        throw std::invalid_argument("momentum_window_vectors: record carries no eigenvectors");
    }
    const auto n = record.eigenvalues.size();
    const double halfwidth = momentum_window_halfwidth(kind, static_cast<int>(n));
    std::vector<Eigen::Index> selected;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::abs(record.eigenvalues[k]) <= halfwidth) selected.push_back(k);
    }
    Eigen::MatrixXcd window(n, static_cast<Eigen::Index>(selected.size()));
    for (std::size_t c = 0; c < selected.size(); ++c) {
        window.col(static_cast<Eigen::Index>(c)) = record.eigenvectors->col(selected[c]);
    }
    return fourier_transform_columns(window);
}

double moment_sum(const Eigen::VectorXcd& v, double q) {
    double acc = 0.0;
    if (q == 2.0) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double p = std::norm(v[i]);
            acc += p * p;
        }
    } else if (q == 0.5) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            acc += std::abs(v[i]);
        }
    } else if (q == 1.5) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double p = std::norm(v[i]);
            acc += p * std::sqrt(p);
        }
    } else {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            acc += std::pow(std::norm(v[i]), q);
        }
    }
    return acc;
}

double moments(const Eigen::MatrixXcd& vectors, double q) {
    if (vectors.cols() == 0) {
        throw std::invalid_argument("moments: empty energy window");
    }
    if (!(q > 0.0) || q == 1.0) {
        throw std::invalid_argument("moments: q must be positive and != 1");
    }
    double acc = 0.0;
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        acc += moment_sum(vectors.col(c), q);
    }
    return acc / static_cast<double>(vectors.cols());
}

ScalingSeries fractal_dimension(std::span<const int> sizes, std::span<const double> moment_values,
                                double q) {
    if (sizes.size() < 3) {
        throw std::invalid_argument("fractal_dimension: need at least 3 sizes");
    }
    if (sizes.size() != moment_values.size()) {
        throw std::invalid_argument("fractal_dimension: sizes/moments length mismatch");
    }
    if (q == 1.0) {
        throw std::invalid_argument("fractal_dimension: q = 1 is excluded");
    }
    const auto n = sizes.size();
    std::vector<double> lx(n);
    std::vector<double> ly(n);
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(moment_values[i] > 0.0)) {
            throw std::invalid_argument("fractal_dimension: moments must be positive");
        }
        lx[i] = std::log(static_cast<double>(sizes[i]));
        ly[i] = std::log(moment_values[i]);
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (intercept + slope * lx[i]);
        ssr += r * r;
    }
    const double slope_stderr =
        std::sqrt(ssr / (static_cast<double>(n) - 2.0) / sxx);

    ScalingSeries series;
    series.q = q;
    series.sizes.assign(sizes.begin(), sizes.end());
    series.moments.assign(moment_values.begin(), moment_values.end());
    series.tau_q = -slope;
    series.d_q = series.tau_q / (q - 1.0);
    series.fit_stderr = slope_stderr / std::abs(q - 1.0);
    return series;
}

}  // namespace toeplab
