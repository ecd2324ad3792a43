#include "varcov/rrcov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "varcov/error.hpp"

namespace varcov {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_same_dim(const RRCovEstimate& est, const SampleCov& s) {
    if (est.dim() != s.dim()) {
        throw Error(ErrorKind::InvalidInput, "estimate dimension " + std::to_string(est.dim()) +
                                                 " does not match sample covariance dimension " +
                                                 std::to_string(s.dim()));
    }
}

}  // namespace

SampleCov sample_cov(const Matrix& Z, bool center) {
    if (Z.rows() < 2) throw Error(ErrorKind::InsufficientData, "sample_cov needs T >= 2 observations");
    if (Z.cols() < 1) throw Error(ErrorKind::InvalidInput, "sample_cov needs K >= 1 series");
    if (!Z.allFinite()) throw Error(ErrorKind::InvalidInput, "sample_cov: non-finite observations");
    const double t = static_cast<double>(Z.rows());
    Matrix gram;
    if (center) {
        const Matrix zc = Z.rowwise() - Z.colwise().mean();
        gram = crossprod(zc);
    } else {
        gram = crossprod(Z);
    }
    return SampleCov{SymMatrix::from_lower(gram / t), Z.rows(), center};
}

RRCovEstimate::RRCovEstimate(Matrix U, Vector lambda, double sigma2, int requested_rank, Index n_samples)
    : k_(U.rows()),
      U_(std::move(U)),
      lambda_(std::move(lambda)),
      sigma2_(sigma2),
      requested_rank_(requested_rank),
      n_samples_(n_samples) {
    if (U_.cols() != lambda_.size()) {
        throw Error(ErrorKind::InvalidInput, "RRCovEstimate: U columns and lambda length differ");
    }
    if (k_ < 1) throw Error(ErrorKind::InvalidInput, "RRCovEstimate: dimension must be >= 1");
    if (!(sigma2_ >= 0.0) || !std::isfinite(sigma2_)) {
        throw Error(ErrorKind::InvalidInput, "RRCovEstimate: sigma2 must be finite and non-negative");
    }
    for (Index i = 0; i < lambda_.size(); ++i) {
        if (!(lambda_(i) > 0.0)) throw Error(ErrorKind::InvalidInput, "RRCovEstimate: lambda must be positive");
    }
}

SymMatrix RRCovEstimate::full_matrix() const {
    Matrix m = U_ * lambda_.asDiagonal() * U_.transpose();
    m.diagonal().array() += sigma2_;
    return SymMatrix::symmetrize(m);
}

Matrix RRCovEstimate::solve(const Matrix& x) const {
    if (!invertible()) throw Error(ErrorKind::SingularEstimate, "reduced-rank estimate has sigma2 = 0");
    if (x.rows() != k_) throw Error(ErrorKind::InvalidInput, "solve: row mismatch");
    const Vector w = (lambda_.array() / (lambda_.array() + sigma2_)).matrix();
    const Matrix proj = U_.transpose() * x;
    return (x - U_ * (w.asDiagonal() * proj)) / sigma2_;
}

SymMatrix RRCovEstimate::inverse() const {
    if (!invertible()) throw Error(ErrorKind::SingularEstimate, "reduced-rank estimate has sigma2 = 0");
    const Vector w = (lambda_.array() / (lambda_.array() + sigma2_)).matrix();
    Matrix m = -(U_ * w.asDiagonal() * U_.transpose());
    m.diagonal().array() += 1.0;
    return SymMatrix::symmetrize(m / sigma2_);
}

double RRCovEstimate::log_det() const {
    if (!invertible()) throw Error(ErrorKind::SingularEstimate, "reduced-rank estimate has sigma2 = 0");
    double ld = static_cast<double>(k_ - rank()) * std::log(sigma2_);
    for (Index i = 0; i < lambda_.size(); ++i) ld += std::log(lambda_(i) + sigma2_);
    return ld;
}

RRCovEstimate fit_rr(const SampleCov& s, int d) {
    if (d < 1 || d > s.dim() - 1) {
        throw Error(ErrorKind::InvalidRank,
                    "rank " + std::to_string(d) + " outside [1, " + std::to_string(s.dim() - 1) + "]");
    }
    return fit_rr(s, eigh(s.S), d);
}

RRCovEstimate fit_rr(const SampleCov& s, const EigenSystem& es, int d) {
    const Index k = s.dim();
    if (d < 1 || d > k - 1) {
        throw Error(ErrorKind::InvalidRank,
                    "rank " + std::to_string(d) + " outside [1, " + std::to_string(k - 1) + "]");
    }
    if (es.values.size() != k) throw Error(ErrorKind::InvalidInput, "fit_rr: eigen-system dimension mismatch");
    const Vector& c = es.values;
    double sigma2 = c.tail(k - d).mean();
    const double scale = std::max(std::abs(c(0)), std::numeric_limits<double>::min());
    const double tol = 64.0 * kEps * scale * static_cast<double>(k);
    // Trailing eigenvalues at rounding level mean S has rank <= d.
    if (sigma2 <= tol) sigma2 = 0.0;

    // lambda_i = c_i - sigma2 is non-increasing; keep the positive prefix.
    int effective = 0;
    while (effective < d && c(effective) - sigma2 > tol) ++effective;

    Vector lambda = (c.head(effective).array() - sigma2).matrix();
    RRCovEstimate est(es.vectors.leftCols(effective), std::move(lambda), sigma2, d, s.T);
    est.set_boundary_tie(std::abs(c(d - 1) - c(d)) <= tol);
    return est;
}

RRCovEstimate fit_isotropic(const SampleCov& s) {
    const Index k = s.dim();
    const double sigma2 = std::max(s.S.dense().trace() / static_cast<double>(k), 0.0);
    return RRCovEstimate(Matrix(k, 0), Vector(0), sigma2, 0, s.T);
}

RRCovEstimate fit_full(const SampleCov& s) {
    return s.dim() == 1 ? fit_isotropic(s) : fit_rr(s, static_cast<int>(s.dim() - 1));
}

RRCovEstimate fit_rank(const SampleCov& s, int d) { return d == 0 ? fit_isotropic(s) : fit_rr(s, d); }

double neg2_loglik_avg(const RRCovEstimate& est, const SampleCov& s) {
    require_same_dim(est, s);
    if (!est.invertible()) throw Error(ErrorKind::SingularEstimate, "likelihood undefined for singular estimate");
    const Matrix& S = s.S.dense();
    const double sigma2 = est.sigma2();
    double quad = 0.0;
    for (int i = 0; i < est.rank(); ++i) {
        const auto u = est.U().col(i);
        const double l = est.lambda()(i);
        quad += l / (l + sigma2) * u.dot(S * u);
    }
    const double trace = (S.trace() - quad) / sigma2;
    return est.log_det() + trace;
}

double rr_param_count(Index k, int d) {
    const double dd = static_cast<double>(d);
    return static_cast<double>(k) * dd - dd * (dd - 1.0) / 2.0 + 1.0;
}

double bic(const RRCovEstimate& est, const SampleCov& s) {
    const double t = static_cast<double>(s.T);
    return t * neg2_loglik_avg(est, s) + std::log(t) * rr_param_count(est.dim(), est.requested_rank());
}

std::vector<int> default_rank_candidates(Index k, bool include_isotropic) {
    std::vector<int> out;
    if (include_isotropic) out.push_back(0);
    for (int d = 1; d < k; ++d) out.push_back(d);
    return out;
}

RankSelection select_rank(const SampleCov& s, std::span<const int> candidates) {
    if (candidates.empty()) throw Error(ErrorKind::InvalidRank, "select_rank: empty candidate set");
    std::vector<int> ranks(candidates.begin(), candidates.end());
    std::sort(ranks.begin(), ranks.end());
    ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());

    const EigenSystem es = eigh(s.S);
    RankSelection out;
    bool found = false;
    double best = std::numeric_limits<double>::infinity();
    for (int d : ranks) {
        if (d < 0 || d > s.dim() - 1) {
            throw Error(ErrorKind::InvalidRank, "candidate rank " + std::to_string(d) + " out of range");
        }
        RRCovEstimate est = d == 0 ? fit_isotropic(s) : fit_rr(s, es, d);
        if (!est.invertible()) {
            out.curve.push_back({d, std::numeric_limits<double>::quiet_NaN(), true});
            continue;
        }
        const double b = bic(est, s);
        out.curve.push_back({d, b, false});
        if (b < best) {
            best = b;
            out.estimate = std::move(est);
            found = true;
        }
    }
    if (!found) throw Error(ErrorKind::SingularEstimate, "select_rank: every candidate fit is singular");
    return out;
}

Matrix latent_scores(const RRCovEstimate& est, const Matrix& Z) {
    if (est.rank() == 0) throw Error(ErrorKind::InvalidRank, "latent scores need rank >= 1");
    if (Z.cols() != est.dim()) throw Error(ErrorKind::InvalidInput, "latent_scores: column mismatch");
    return Z * est.U();
}

std::vector<CcfEntry> cross_correlations(const Matrix& X, int max_lag) {
    const Index n = X.rows();
    const Index k = X.cols();
    if (n < 2) throw Error(ErrorKind::InsufficientData, "cross_correlations needs T >= 2");
    if (max_lag < 0 || max_lag >= n) throw Error(ErrorKind::InvalidInput, "cross_correlations: bad max_lag");
    const Matrix xc = X.rowwise() - X.colwise().mean();
    const Vector sd = (xc.colwise().squaredNorm().transpose() / static_cast<double>(n)).cwiseSqrt();

    // c(i, j, h) for h >= 0; negative lags reuse the swapped pair.
    auto lagged = [&](Index i, Index j, int h) {
        const Index len = n - h;
        return xc.col(i).tail(len).dot(xc.col(j).head(len)) / static_cast<double>(n) / (sd(i) * sd(j));
    };
    std::vector<CcfEntry> out;
    out.reserve(static_cast<std::size_t>(k * k * (2 * max_lag + 1)));
    for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < k; ++j) {
            for (int h = -max_lag; h <= max_lag; ++h) {
                double c;
                if (i == j && h == 0) {
                    c = 1.0;
                } else if (sd(i) == 0.0 || sd(j) == 0.0) {
                    c = 0.0;
                } else {
                    c = h >= 0 ? lagged(i, j, h) : lagged(j, i, -h);
                }
                out.push_back({i, j, h, c});
            }
        }
    }
    return out;
}

double contemporaneous_cov(const RRCovEstimate& est, Index i, Index j) {
    if (i < 0 || j < 0 || i >= est.dim() || j >= est.dim()) {
        throw Error(ErrorKind::InvalidInput, "contemporaneous_cov: index out of range");
    }
    if (i == j) throw Error(ErrorKind::InvalidInput, "contemporaneous_cov needs i != j; use full_matrix()");
    double acc = 0.0;
    for (int k = 0; k < est.rank(); ++k) acc += est.U()(i, k) * est.lambda()(k) * est.U()(j, k);
    return acc;
}

}  // namespace varcov
