#pragma once

#include <span>
#include <vector>

#include "toeplab/eigensolver.hpp"

namespace toeplab {

/// Unitary discrete Fourier transform, v_p = N^{-1/2} sum_j e^{+2 pi i p j / N} v_j.
/// Norm-preserving to 1e-12.
Eigen::VectorXcd fourier_transform_vector(const Eigen::VectorXcd& v);

/// Inverse of fourier_transform_vector (sign -).
Eigen::VectorXcd inverse_fourier_transform_vector(const Eigen::VectorXcd& v);

/// Column-wise unitary DFT of a vector bundle.
Eigen::MatrixXcd fourier_transform_columns(const Eigen::MatrixXcd& vectors);

/// Half-width of the eigenvalue window whose eigenfunctions enter the moment
/// average: 2 sqrt(N) for complex-hermitian ensembles, sqrt(N) for real.
double momentum_window_halfwidth(EnsembleKind kind, int n_dim);

/// Momentum-space eigenvectors of the record whose eigenvalues fall inside
/// the ensemble window |e| <= halfwidth. Requires stored eigenvectors.
Eigen::MatrixXcd momentum_window_vectors(const SpectrumRecord& record, EnsembleKind kind);

/// sum_n |v_n|^{2q} for one unit-norm vector.
double moment_sum(const Eigen::VectorXcd& v, double q);

/// Average of sum_n |v_n|^{2q} over the columns. Throws on an empty bundle
/// (empty energy window) or q <= 0, q == 1.
double moments(const Eigen::MatrixXcd& vectors, double q);

/// (N, M_q) series with the fitted exponent tau(q) and fractal dimension
/// D_q = tau(q)/(q-1).
struct ScalingSeries {
    double q = 0.0;
    std::vector<int> sizes;
    std::vector<double> moments;
    double tau_q = 0.0;
    double d_q = 0.0;
    double fit_stderr = 0.0;  // standard error propagated to d_q
};

/// Least-squares slope of log M_q against log N: M_q ~ C N^{-tau(q)}.
/// Requires >= 3 sizes and positive moments.
ScalingSeries fractal_dimension(std::span<const int> sizes, std::span<const double> moment_values,
                                double q);

}  // namespace toeplab
