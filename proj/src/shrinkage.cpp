#include "varcov/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <spdlog/spdlog.h>

#include "varcov/error.hpp"

namespace varcov {

namespace {

Matrix observations_for(const SampleCov& s, const Matrix& Z) {
    if (Z.rows() != s.T || Z.cols() != s.dim()) {
        throw Error(ErrorKind::InvalidInput, "shrinkage: observations do not match the sample covariance");
    }
    if (Z.rows() < 2) throw Error(ErrorKind::InsufficientData, "shrinkage needs T >= 2");
    if (!s.centered) return Z;
    return Z.rowwise() - Z.colwise().mean();
}

double clip_unit(double v, bool& clipped) {
    if (v < 0.0 || v > 1.0 || !std::isfinite(v)) {
        clipped = true;
        return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 1.0;
    }
    return v;
}

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ShrinkEstimate fit_lw(const SampleCov& s, const Matrix& Z) {
    const Matrix X = observations_for(s, Z);
    const Matrix& S = s.S.dense();
    const Index k = s.dim();
    const double t = static_cast<double>(X.rows());
    const double mu = S.trace() / static_cast<double>(k);

    Matrix target = Matrix::Zero(k, k);
    target.diagonal().setConstant(mu);
    const double delta2 = (S - target).squaredNorm();

    // sum_t ||z_t z_t^T - S||_F^2 = sum_t ||z_t||^4 - T ||S||_F^2 because S = (1/T) sum_t z_t z_t^T.
    const double fourth = X.rowwise().squaredNorm().array().square().sum();
    const double beta2_bar = std::max(fourth - t * S.squaredNorm(), 0.0) / (t * t);

    ShrinkEstimate out;
    out.target_kind = TargetKind::ScaledIdentity;
    if (delta2 <= 0.0) {
        out.intensity = 1.0;
    } else {
        out.intensity = clip_unit(beta2_bar / delta2, out.clipped);
    }
    if (out.clipped) spdlog::debug("fit_lw: intensity clipped to {}", out.intensity);
    out.matrix = SymMatrix::from_lower((1.0 - out.intensity) * S + out.intensity * target);
    return out;
}

ShrinkEstimate fit_ss(const SampleCov& s, const Matrix& Z, SsVariant variant) {
    const Matrix X = observations_for(s, Z);
    const Matrix& S = s.S.dense();
    const Index k = s.dim();
    const double t = static_cast<double>(X.rows());
    const Vector var = S.diagonal();

    Vector sd(k);
    for (Index i = 0; i < k; ++i) sd(i) = var(i) > 0.0 ? std::sqrt(var(i)) : 0.0;

    // Standardized data; a zero-variance column stays zero and drops out of the sums.
    Matrix xs(X.rows(), k);
    for (Index i = 0; i < k; ++i) {
        if (sd(i) > 0.0) {
            xs.col(i) = X.col(i) / sd(i);
        } else {
            xs.col(i).setZero();
        }
    }
    const Matrix r = crossprod(xs) / t;
    const Matrix xs2 = xs.array().square().matrix();
    const Matrix w2 = crossprod(xs2);

    double num = 0.0;
    double den = 0.0;
    for (Index j = 0; j < k; ++j) {
        for (Index i = 0; i < k; ++i) {
            if (i == j || sd(i) == 0.0 || sd(j) == 0.0) continue;
            num += std::max(w2(i, j) - t * r(i, j) * r(i, j), 0.0) / (t * (t - 1.0));
            den += r(i, j) * r(i, j);
        }
    }

    ShrinkEstimate out;
    out.target_kind = TargetKind::DiagUnequal;
    out.intensity = den > 0.0 ? clip_unit(num / den, out.clipped) : 1.0;

    Vector shrunk_var = var;
    if (variant == SsVariant::ShrinkVariances && k > 1) {
        const Matrix x2 = X.array().square().matrix();
        double vnum = 0.0;
        for (Index i = 0; i < k; ++i) {
            vnum += (x2.col(i).array() - var(i)).square().sum() / (t * (t - 1.0));
        }
        const double med = median(std::vector<double>(var.data(), var.data() + k));
        const double vden = (var.array() - med).square().sum();
        out.variance_intensity = vden > 0.0 ? clip_unit(vnum / vden, out.clipped) : 1.0;
        shrunk_var = (out.variance_intensity * med + (1.0 - out.variance_intensity) * var.array()).matrix();
    }
    if (out.clipped) {
        spdlog::debug("fit_ss: intensity clipped (corr {}, var {})", out.intensity, out.variance_intensity);
    }

    Matrix m(k, k);
    if (variant == SsVariant::DiagTarget) {
        m = (1.0 - out.intensity) * S;
        m.diagonal() = var;
    } else {
        for (Index j = 0; j < k; ++j) {
            for (Index i = 0; i < k; ++i) {
                m(i, j) = i == j ? shrunk_var(i)
                                 : (1.0 - out.intensity) * r(i, j) * std::sqrt(shrunk_var(i) * shrunk_var(j));
            }
        }
    }
    out.matrix = SymMatrix::from_lower(m);
    return out;
}

}  // namespace varcov
