#include "varcov/linalg.hpp"

#include <cmath>
#include <limits>

#include "varcov/error.hpp"
#include "varcov/kernels.hpp"

namespace varcov {

SymMatrix::SymMatrix(Index dim) {
    if (dim < 1) throw Error(ErrorKind::InvalidInput, "SymMatrix dimension must be >= 1");
    m_ = Matrix::Zero(dim, dim);
}

SymMatrix SymMatrix::from_lower(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        throw Error(ErrorKind::InvalidInput, "SymMatrix requires a non-empty square matrix");
    }
    SymMatrix s;
    s.m_ = m.selfadjointView<Eigen::Lower>();
    return s;
}

SymMatrix SymMatrix::symmetrize(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        throw Error(ErrorKind::InvalidInput, "SymMatrix requires a non-empty square matrix");
    }
    const Matrix half = 0.5 * (m + m.transpose());
    return from_lower(half);
}

SymMatrix SymMatrix::identity(Index dim) {
    SymMatrix s(dim);
    s.m_.diagonal().setOnes();
    return s;
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
    SymMatrix s(d.size());
    s.m_.diagonal() = d;
    return s;
}

EigenSystem eigh(const SymMatrix& m) {
    if (!m.all_finite()) throw Error(ErrorKind::InvalidInput, "eigh: non-finite entries");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.dense(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "eigh: symmetric eigen-iteration did not converge");
    }
    const Index k = m.dim();
    EigenSystem out;
    out.values.resize(k);
    out.vectors.resize(k, k);
    // Eigen returns ascending order; reverse so that values[0] is the largest.
    for (Index i = 0; i < k; ++i) {
        out.values(i) = solver.eigenvalues()(k - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(k - 1 - i);
    }
    for (Index j = 0; j < k; ++j) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < k; ++i) {
            const double a = std::abs(out.vectors(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (out.vectors(arg, j) < 0.0) out.vectors.col(j) *= -1.0;
    }
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index j = 0; j < a.cols(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Index rows, Index cols) {
    if (rows * cols != v.size()) throw Error(ErrorKind::InvalidInput, "unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix chol(const SymMatrix& m) {
    Eigen::LLT<Matrix> llt(m.dense());
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::NotPositiveDefinite, "chol: matrix is not positive definite");
    }
    return llt.matrixL();
}

double condition_number(const SymMatrix& m) {
    const EigenSystem es = eigh(m);
    const double smallest = es.values(es.values.size() - 1);
    if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
    return es.values(0) / smallest;
}

Matrix crossprod(const Matrix& x) {
    Matrix out(x.cols(), x.cols());
    if (x.cols() == 0) return out;
    kernels::gram(x.data(), static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(x.cols()),
                  static_cast<std::size_t>(x.outerStride()), out.data());
    return out;
}

Matrix crossprod(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) throw Error(ErrorKind::InvalidInput, "crossprod: row mismatch");
    Matrix out(x.cols(), y.cols());
    if (out.size() == 0) return out;
    kernels::cross(x.data(), static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(x.outerStride()),
                   y.data(), static_cast<std::size_t>(y.cols()), static_cast<std::size_t>(y.outerStride()),
                   static_cast<std::size_t>(x.rows()), out.data());
    return out;
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) throw Error(ErrorKind::InvalidInput, "spectral_radius: matrix not square");
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver(m, false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericalFailure, "spectral_radius: eigenvalue iteration did not converge");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace varcov
