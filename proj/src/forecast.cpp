#include "varcov/forecast.hpp"

#include <cmath>
#include <string>

#include "varcov/error.hpp"

namespace varcov {

namespace {

constexpr double kCausalMargin = 1e-12;

SymMatrix solve_vec(const CompanionForm& cf) {
    const Index n = cf.Psi.rows();
    Matrix system = -kron(cf.Psi, cf.Psi);
    system.diagonal().array() += 1.0;
    const Vector x = system.partialPivLu().solve(vec(cf.SigmaV.dense()));
    if (!x.allFinite()) throw Error(ErrorKind::NumericalFailure, "stationary_cov: vec solve produced non-finite values");
    return SymMatrix::symmetrize(unvec(x, n, n));
}

// Runs Gamma <- Psi Gamma Psi^T + Sigma_V in doubling steps: after step j the
// iterate equals the 2^j-th plain fixed-point iterate started from Sigma_V.
SymMatrix solve_fixed_point(const CompanionForm& cf) {
    Matrix gamma = cf.SigmaV.dense();
    Matrix power = cf.Psi;
    for (int step = 0; step < 128; ++step) {
        const Matrix increment = power * gamma * power.transpose();
        gamma += increment;
        const double scale = gamma.norm();
        if (increment.norm() <= 1e-17 * scale || scale == 0.0) return SymMatrix::symmetrize(gamma);
        power = power * power;
    }
    throw Error(ErrorKind::NumericalFailure, "stationary_cov: fixed-point iteration did not converge");
}

}  // namespace

Matrix companion_matrix(const VarModel& model) {
    if (model.p < 1) throw Error(ErrorKind::InvalidOrder, "companion form needs p >= 1");
    const Index k = model.K;
    const Index n = k * model.p;
    Matrix psi = Matrix::Zero(n, n);
    psi.topRows(k) = model.coef();
    if (model.p > 1) psi.bottomLeftCorner(n - k, n - k).setIdentity();
    return psi;
}

CompanionForm companion(const VarModel& model) {
    if (!model.noise_cov) throw Error(ErrorKind::InvalidInput, "companion: model has no noise covariance");
    CompanionForm cf;
    cf.Psi = companion_matrix(model);
    const Index k = model.K;
    Matrix sv = Matrix::Zero(cf.Psi.rows(), cf.Psi.cols());
    sv.topLeftCorner(k, k) = model.noise_cov->full_matrix().dense();
    cf.SigmaV = SymMatrix::from_lower(sv);
    return cf;
}

bool is_causal(const VarModel& model) {
    if (model.p == 0) return true;
    return spectral_radius(companion_matrix(model)) < 1.0 - kCausalMargin;
}

SymMatrix stationary_cov(const CompanionForm& cf, LyapunovMethod method) {
    if (cf.Psi.rows() != cf.Psi.cols() || cf.Psi.rows() != cf.SigmaV.dim()) {
        throw Error(ErrorKind::InvalidInput, "stationary_cov: inconsistent companion form");
    }
    const double rho = spectral_radius(cf.Psi);
    if (!(rho < 1.0 - kCausalMargin)) {
        throw Error(ErrorKind::NonCausalModel, "stationary_cov: spectral radius " + std::to_string(rho) + " >= 1");
    }
    if (method == LyapunovMethod::Auto) {
        method = cf.Psi.rows() <= kVecSolveMaxDim ? LyapunovMethod::VecSolve : LyapunovMethod::FixedPoint;
    }
    return method == LyapunovMethod::VecSolve ? solve_vec(cf) : solve_fixed_point(cf);
}

double lyapunov_residual(const CompanionForm& cf, const SymMatrix& gamma) {
    const Matrix& g = gamma.dense();
    const Matrix r = g - cf.Psi * g * cf.Psi.transpose() - cf.SigmaV.dense();
    const double denom = g.norm();
    return denom > 0.0 ? r.norm() / denom : r.norm();
}

ForecastMse fmse1(const VarModel& model, const Matrix& Y) {
    if (!model.noise_cov) throw Error(ErrorKind::InvalidInput, "fmse1: model has no noise covariance");
    const Index k = model.K;
    if (Y.cols() != k) throw Error(ErrorKind::InvalidInput, "fmse1: data has the wrong number of series");
    if (Y.rows() <= model.p) throw Error(ErrorKind::InsufficientData, "fmse1: need more rows than the order");

    ForecastMse out;
    const SymMatrix sigma = model.noise_cov->full_matrix();
    if (model.p == 0) {
        out.omega = SymMatrix(k);
        out.gamma_y = sigma;
        out.matrix = sigma;
        return out;
    }

    const CompanionForm cf = companion(model);
    out.gamma_y = stationary_cov(cf);
    Eigen::LLT<Matrix> llt(out.gamma_y.dense());
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "fmse1: Gamma_Y is not invertible");

    const int p = model.p;
    const Matrix dev = Y.rowwise() - model.mu.transpose();
    const Index n = Y.rows() - p;
    Vector lt(k * p);
    double q_sum = 0.0;
    // Predictor stacks (Y_t, ..., Y_{t-p+1}) for every t with a following observation.
    for (Index t = p - 1; t <= Y.rows() - 2; ++t) {
        for (int l = 0; l < p; ++l) lt.segment(static_cast<Index>(l) * k, k) = dev.row(t - l).transpose();
        q_sum += lt.dot(llt.solve(lt));
    }
    out.mean_quadratic_form = q_sum / static_cast<double>(n);
    const double weight = out.mean_quadratic_form / static_cast<double>(n);
    out.omega = SymMatrix::from_lower(weight * sigma.dense());
    out.matrix = SymMatrix::from_lower(sigma.dense() + out.omega.dense());
    return out;
}

SymMatrix omega1(const VarModel& model, const Matrix& Y) { return fmse1(model, Y).omega; }

Vector forecast1(const VarModel& model, const Matrix& recent) {
    const Index k = model.K;
    if (recent.cols() != k) throw Error(ErrorKind::InvalidInput, "forecast1: history has the wrong number of series");
    if (recent.rows() < model.p) {
        throw Error(ErrorKind::InsufficientData, "forecast1: need at least p = " + std::to_string(model.p) + " rows");
    }
    Vector out = model.mu;
    const Index last = recent.rows() - 1;
    for (int l = 1; l <= model.p; ++l) {
        out.noalias() += model.A[static_cast<std::size_t>(l - 1)] * (recent.row(last - (l - 1)).transpose() - model.mu);
    }
    return out;
}

}  // namespace varcov
