#pragma once

// Shared helpers for the unit tests and the acceptance binary: random
// matrices, random causal VARs, and a dense numerical optimizer used as an
// independent oracle for the closed-form reduced-rank fit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "varcov/forecast.hpp"
#include "varcov/linalg.hpp"
#include "varcov/rrcov.hpp"
#include "varcov/var.hpp"

namespace testsupport {

using varcov::Index;
using varcov::Matrix;
using varcov::SymMatrix;
using varcov::Vector;

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
    return m;
}

inline Matrix orthonormal_columns(Index k, Index d, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(k, d, rng));
    return qr.householderQ() * Matrix::Identity(k, d);
}

/// Q diag(e) Q^T with eigenvalues drawn log-uniformly in [lo, hi].
inline SymMatrix random_spd(Index k, std::mt19937_64& rng, double lo = 0.2, double hi = 5.0) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    const Matrix q = orthonormal_columns(k, k, rng);
    Vector e(k);
    for (Index i = 0; i < k; ++i) e(i) = std::exp(u(rng));
    return SymMatrix::symmetrize(q * e.asDiagonal() * q.transpose());
}

/// A rank-d-plus-isotropic covariance estimate with random loadings.
inline varcov::RRCovEstimate random_rr(Index k, int d, std::mt19937_64& rng, double sigma2 = 0.5) {
    std::uniform_real_distribution<double> u(0.5, 3.0);
    Vector lambda(d);
    for (int i = 0; i < d; ++i) lambda(i) = u(rng);
    std::sort(lambda.data(), lambda.data() + d, std::greater<>());
    return varcov::RRCovEstimate(orthonormal_columns(k, d, rng), lambda, sigma2, d, 0);
}

/// Random VAR(p) coefficients rescaled so that the companion spectral radius equals `radius`.
inline std::vector<Matrix> random_causal_coefs(Index k, int p, std::mt19937_64& rng, double radius = 0.8,
                                               double density = 1.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Matrix> a;
    for (int l = 0; l < p; ++l) {
        Matrix m = gaussian_matrix(k, k, rng);
        for (Index j = 0; j < k; ++j)
            for (Index i = 0; i < k; ++i)
                if (u(rng) > density) m(i, j) = 0.0;
        a.push_back(m);
    }
    if (p == 0) return a;
    varcov::VarModel tmp;
    tmp.K = k;
    tmp.p = p;
    tmp.A = a;
    const double rho = varcov::spectral_radius(varcov::companion_matrix(tmp));
    if (rho <= 0.0) return a;
    // Scaling A_l by c^l scales every companion eigenvalue by c.
    const double c = radius / rho;
    double f = 1.0;
    for (auto& m : a) {
        f *= c;
        m *= f;
    }
    return a;
}

inline varcov::VarModel make_model(const std::vector<Matrix>& a, const varcov::RRCovEstimate& noise,
                                   const Vector& mu = {}) {
    varcov::VarModel m;
    m.K = noise.dim();
    m.p = static_cast<int>(a.size());
    m.A = a;
    m.mu = mu.size() ? mu : Vector::Zero(m.K);
    m.noise_cov = noise;
    return m;
}

/// -(2/T) log-likelihood (no constant) of a dense covariance, Cholesky based.
inline double dense_neg2(const Matrix& sigma, const Matrix& s) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Matrix l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    return logdet + llt.solve(s).trace();
}

/// Unconstrained parameterization of the rank-d model: U = qr(B).Q,
/// lambda = exp(a), sigma2 = exp(b).
inline Matrix params_to_sigma(const Vector& x, Index k, int d) {
    const Matrix b = Eigen::Map<const Matrix>(x.data(), k, d);
    Eigen::HouseholderQR<Matrix> qr(b);
    const Matrix u = qr.householderQ() * Matrix::Identity(k, d);
    Vector lambda(d);
    for (int i = 0; i < d; ++i) lambda(i) = std::exp(x(k * d + i));
    const double s2 = std::exp(x(k * d + d));
    return u * lambda.asDiagonal() * u.transpose() + s2 * Matrix::Identity(k, k);
}

/// BFGS with central finite-difference gradients and Armijo backtracking.
template <class F>
double bfgs_minimize(F&& f, Vector x, int max_iter = 400) {
    const Index n = x.size();
    auto grad = [&](const Vector& p) {
        Vector g(n);
        for (Index i = 0; i < n; ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(p(i)));
            Vector a = p, b = p;
            a(i) += h;
            b(i) -= h;
            g(i) = (f(a) - f(b)) / (2.0 * h);
        }
        return g;
    };
    Matrix H = Matrix::Identity(n, n);
    double fx = f(x);
    Vector g = grad(x);
    for (int it = 0; it < max_iter && g.norm() > 1e-9; ++it) {
        Vector dir = -H * g;
        if (dir.dot(g) >= 0.0) {
            H.setIdentity();
            dir = -g;
        }
        double step = 1.0;
        Vector xn;
        double fn = 0.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            xn = x + step * dir;
            fn = f(xn);
            if (std::isfinite(fn) && fn <= fx + 1e-4 * step * g.dot(dir)) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        const Vector gn = grad(xn);
        const Vector s = xn - x;
        const Vector y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-14) {
            const Matrix I = Matrix::Identity(n, n);
            const double r = 1.0 / sy;
            H = (I - r * s * y.transpose()) * H * (I - r * y * s.transpose()) + r * s * s.transpose();
        }
        const double prev = fx;
        x = xn;
        fx = fn;
        g = gn;
        if (std::abs(prev - fx) < 1e-15 * std::max(1.0, std::abs(fx))) break;
    }
    return fx;
}

/// Best -(2/T) logL the numerical optimizer finds over several random starts.
inline double numerical_rr_optimum(const SymMatrix& s, int d, std::mt19937_64& rng, int starts = 4) {
    const Index k = s.dim();
    const Matrix S = s.dense();
    auto f = [&](const Vector& x) { return dense_neg2(params_to_sigma(x, k, d), S); };
    double best = std::numeric_limits<double>::infinity();
    std::normal_distribution<double> n(0.0, 1.0);
    for (int r = 0; r < starts; ++r) {
        Vector x(k * d + d + 1);
        for (Index i = 0; i < x.size(); ++i) x(i) = n(rng);
        x(k * d + d) = std::log(S.trace() / static_cast<double>(k));
        best = std::min(best, bfgs_minimize(f, x));
    }
    return best;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testsupport
