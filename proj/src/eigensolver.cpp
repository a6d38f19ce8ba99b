#include "toeplab/eigensolver.hpp"

#include <lapacke.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace toeplab {

namespace {

// Threaded BLAS inside a single decomposition would fight the realization
// workers and make reductions depend on the backend's thread count; pin the
// backend to one thread before any BLAS call happens.
const bool kBlasSingleThreaded = [] {
    ::setenv("OPENBLAS_NUM_THREADS", "1", 0);
    ::setenv("OMP_NUM_THREADS", "1", 0);
    return true;
}();

std::string describe_seed(const EnsembleSpec& meta) {
    std::ostringstream os;
    os << "kind=" << (meta.kind == EnsembleKind::ComplexHermitian ? "complex" : "real")
       << " n_dim=" << meta.n_dim << " master_seed=" << meta.master_seed
       << " realization_index=" << meta.realization_index;
    return os.str();
}

void check_hermitian(const Eigen::MatrixXcd& m) {
    const Eigen::Index n = m.rows();
    if (n != m.cols()) {
        throw std::invalid_argument("eigendecompose: matrix must be square");
    }
    double scale = 0.0;
    double max_asym = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = c; r < n; ++r) {
            scale = std::max(scale, std::abs(m(r, c)));
            max_asym = std::max(max_asym, std::abs(m(r, c) - std::conj(m(c, r))));
        }
    }
    if (max_asym > 1e-12 * std::max(scale, 1e-300)) {
        throw std::invalid_argument("eigendecompose: input is not hermitian");
    }
}

}  // namespace

SpectrumRecord eigendecompose(const DenseHermitianMatrix& matrix, bool want_vectors,
                              const EnsembleSpec& meta, SolverPath path) {
    (void)kBlasSingleThreaded;
    check_hermitian(matrix.entries);
    const int n = matrix.dim();
    SpectrumRecord record;
    record.ensemble_meta = meta;
    record.eigenvalues.resize(n);

    const bool use_real = path == SolverPath::Real ||
                          (path == SolverPath::Auto && matrix.is_real());
    if (use_real) {
        Eigen::MatrixXd work = matrix.entries.real();
        const lapack_int info =
            LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n, work.data(), n,
                           record.eigenvalues.data());
        if (info != 0) {
            throw SolverError("dsyevd failed to converge (info=" + std::to_string(info) +
                                  ") for realization " + describe_seed(meta),
                              meta);
        }
        if (want_vectors) {
            record.eigenvectors = work.cast<std::complex<double>>();
        }
    } else {
        Eigen::MatrixXcd work = matrix.entries;
        const lapack_int info = LAPACKE_zheevd(
            LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n,
            reinterpret_cast<lapack_complex_double*>(work.data()), n, record.eigenvalues.data());
        if (info != 0) {
            throw SolverError("zheevd failed to converge (info=" + std::to_string(info) +
                                  ") for realization " + describe_seed(meta),
                              meta);
        }
        if (want_vectors) {
            record.eigenvectors = std::move(work);
        }
    }
    return record;
}

}  // namespace toeplab
