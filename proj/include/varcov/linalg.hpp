#pragma once

#include <Eigen/Dense>

namespace varcov {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Only the lower triangle of the input is read and
/// mirrored, so entries(i, j) == entries(j, i) holds bit-for-bit.
class SymMatrix {
public:
    SymMatrix() = default;

    /// K x K zero matrix.
    explicit SymMatrix(Index dim);

    /// Builds from the lower triangle of `m`. Throws InvalidInput if m is not square or empty.
    static SymMatrix from_lower(const Matrix& m);

    /// Builds from (m + m^T)/2, for results that are symmetric only up to rounding.
    static SymMatrix symmetrize(const Matrix& m);

    static SymMatrix identity(Index dim);
    static SymMatrix diagonal(const Vector& d);

    Index dim() const noexcept { return m_.rows(); }
    double operator()(Index i, Index j) const { return m_(i, j); }
    const Matrix& dense() const noexcept { return m_; }

    bool all_finite() const { return m_.allFinite(); }

private:
    Matrix m_;
};

/// Eigen-decomposition with values sorted descending and columns of
/// `vectors` paired with `values`. In each column the entry of largest
/// magnitude is non-negative (first such index on ties).
struct EigenSystem {
    Vector values;
    Matrix vectors;
};

EigenSystem eigh(const SymMatrix& m);

Matrix kron(const Matrix& a, const Matrix& b);

/// Column-stacking vec operator and its inverse.
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Index rows, Index cols);

/// Lower Cholesky factor L with L L^T = m. Throws NotPositiveDefinite.
Matrix chol(const SymMatrix& m);

/// Largest over smallest eigenvalue; +infinity when the smallest is <= 0.
double condition_number(const SymMatrix& m);

/// X^T X through the dispatched SIMD kernels.
Matrix crossprod(const Matrix& x);

/// X^T Y through the dispatched SIMD kernels.
Matrix crossprod(const Matrix& x, const Matrix& y);

/// Maximum modulus among the eigenvalues of a square (general) matrix.
double spectral_radius(const Matrix& m);

}  // namespace varcov
