#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "toeplab/ensemble.hpp"

namespace toeplab {

/// Full spectrum of one realization: ascending eigenvalues, optional
/// orthonormal eigenvectors (column k pairs with eigenvalue k), and the
/// ensemble metadata needed to reproduce the matrix.
struct SpectrumRecord {
    Eigen::VectorXd eigenvalues;
    std::optional<Eigen::MatrixXcd> eigenvectors;
    EnsembleSpec ensemble_meta;
};

/// Diagonalization failure; the message carries the ensemble seed so the
/// offending matrix can be reconstructed.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, const EnsembleSpec& meta)
        : std::runtime_error(what), meta_(meta) {}
    const EnsembleSpec& meta() const { return meta_; }

private:
    EnsembleSpec meta_;
};

enum class SolverPath { Auto, Complex, Real };

/// Dense hermitian eigendecomposition (divide-and-conquer). Eigenvalues come
/// back ascending; with want_vectors the residual ||T v - e v|| <= 1e-10 ||T||_F
/// and orthonormality to 1e-10 are contract-tested. Auto takes a real-arithmetic
/// fast path when every entry is real.
SpectrumRecord eigendecompose(const DenseHermitianMatrix& matrix, bool want_vectors,
                              const EnsembleSpec& meta = {}, SolverPath path = SolverPath::Auto);

}  // namespace toeplab
