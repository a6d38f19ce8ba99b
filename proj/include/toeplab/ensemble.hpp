#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace toeplab {

enum class EnsembleKind { ComplexHermitian, RealSymmetric };
enum class Symmetry { HermitianComplex, RealSymmetric };

/// Toeplitz symbol sequence a_t for t = -(N-1)..(N-1). Only lags t >= 0 are
/// stored; negative lags are reconstructed from the declared symmetry, so
/// a_{-t} = conj(a_t) (hermitian) or a_{-t} = a_t (real) holds by construction.
class CoefficientVector {
public:
    CoefficientVector(int n_dim, Symmetry symmetry);

    int dim() const { return n_dim_; }
    Symmetry symmetry() const { return symmetry_; }

    /// Symbol at lag t, t in [-(N-1), N-1].
    std::complex<double> at(int t) const;

    /// Real part of the symbol at lag t (valid for real-symmetric coefficients).
    double real_at(int t) const { return at(t).real(); }

    /// Assign the symbol at lag t >= 0. Rejects values that would break the
    /// symmetry invariant (imaginary a_0, or any imaginary part when real).
    void set(int t, std::complex<double> value);

private:
    int n_dim_;
    Symmetry symmetry_;
    std::vector<std::complex<double>> lags_;  // a_t for t = 0..N-1
};

/// Identifies one realization of an ensemble; (master_seed, realization_index)
/// deterministically fixes the sampled coefficients.
struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::ComplexHermitian;
    int n_dim = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t realization_index = 0;
};

/// Dense hermitian matrix. Builders fill the lower triangle and mirror the
/// conjugate, so entries == entries.adjoint() holds bit-exactly.
struct DenseHermitianMatrix {
    Eigen::MatrixXcd entries;

    int dim() const { return static_cast<int>(entries.rows()); }
    bool is_real() const;
};

/// Draw the symbol sequence for one realization.
/// ComplexHermitian: a_0 and Re/Im of a_t (t >= 1) are i.i.d. standard normals.
/// RealSymmetric: a_t (t >= 0) are i.i.d. standard normals.
CoefficientVector sample_coefficients(const EnsembleSpec& spec);

/// T_{mn} = a_{m-n}.
DenseHermitianMatrix build_toeplitz(const CoefficientVector& coeffs);

/// Half-dimension matrices (T^+, T^-) whose spectra partition the spectrum of
/// the full real symmetric Toeplitz matrix (persymmetry reduction). Throws for
/// complex-hermitian input.
std::pair<DenseHermitianMatrix, DenseHermitianMatrix>
build_subspectrum_matrices(const CoefficientVector& coeffs);

/// Momentum-representation matrix M with diagonal xi_p and off-diagonal
/// 2i(eta_p - eta_r) / [N (e^{-2 pi i (p-r)/N} - 1)]; unitarily equivalent to
/// the Toeplitz matrix itself.
DenseHermitianMatrix build_fourier_matrix(const CoefficientVector& coeffs);

/// The real sequences xi_p, eta_p (p = 0..N-1):
///   xi_p  = a_0 + 2 sum_t (1 - t/N) Re(a_t e^{2 pi i t p / N})
///   eta_p = sum_t Im(a_t e^{2 pi i t p / N})
std::pair<std::vector<double>, std::vector<double>> xi_eta(const CoefficientVector& coeffs);

enum class MomentClass { EtaEta, XiEta, XiXi };

struct MomentCheck {
    MomentClass cls;
    int p = 0;
    int r = 0;
    double empirical = 0.0;
    double predicted = 0.0;
    double std_error = 0.0;
};

/// Closed-form second moments of (xi, eta) for complex-hermitian coefficients:
///   <eta_p eta_r> = N delta_pr - 1
///   <xi_p eta_r>  = (1 - delta_pr) cot(pi (r-p)/N)
///   <xi_p xi_r>   = -1 + delta_pr (4N^2+2)/(3N) + 2(1-delta_pr)/(N sin^2(pi(p-r)/N))
double predicted_moment(MomentClass cls, int p, int r, int n_dim);

/// Monte Carlo check of all pairwise (xi, eta) moments against the closed
/// forms, over fresh complex-hermitian draws. One row per (class, p, r).
std::vector<MomentCheck> validate_fourier_variances(int n_dim, std::size_t sample_count,
                                                    std::uint64_t seed, int workers = 1);

}  // namespace toeplab
