#pragma once

#include <span>
#include <vector>

#include "varcov/linalg.hpp"

namespace varcov {

/// S = (1/T) sum_t Z_t Z_t^T, optionally after subtracting the column mean.
struct SampleCov {
    SymMatrix S;
    Index T = 0;
    bool centered = false;

    Index dim() const noexcept { return S.dim(); }
};

/// Throws InsufficientData when Z has fewer than two rows.
SampleCov sample_cov(const Matrix& Z, bool center = true);

/// Reduced-rank covariance U diag(lambda) U^T + sigma2 I.
///
/// `requested_rank` is the d asked for; `rank()` is the effective rank after
/// dropping non-positive lambda (U and lambda have `rank()` columns). A rank
/// of zero is the isotropic model sigma2 * I.
class RRCovEstimate {
public:
    RRCovEstimate() = default;
    RRCovEstimate(Matrix U, Vector lambda, double sigma2, int requested_rank, Index n_samples);

    Index dim() const noexcept { return k_; }
    int rank() const noexcept { return static_cast<int>(lambda_.size()); }
    int requested_rank() const noexcept { return requested_rank_; }
    Index n_samples() const noexcept { return n_samples_; }
    const Matrix& U() const noexcept { return U_; }
    const Vector& lambda() const noexcept { return lambda_; }
    double sigma2() const noexcept { return sigma2_; }

    /// sigma2 > 0. A zero sigma2 leaves the estimate singular since rank < K.
    bool invertible() const noexcept { return sigma2_ > 0.0; }

    /// Set when c_d == c_{d+1} at fit time, where the estimate is not unique.
    bool boundary_tie() const noexcept { return boundary_tie_; }
    void set_boundary_tie(bool v) noexcept { boundary_tie_ = v; }

    SymMatrix full_matrix() const;

    /// Woodbury inverse (1/s2)(I - U diag(l/(l+s2)) U^T). Throws SingularEstimate.
    SymMatrix inverse() const;

    /// (K-d) log s2 + sum log(l_i + s2). Throws SingularEstimate.
    double log_det() const;

    /// Multiplies the inverse into the columns of `x` without forming it.
    Matrix solve(const Matrix& x) const;

private:
    Index k_ = 0;
    Matrix U_;
    Vector lambda_;
    double sigma2_ = 0.0;
    int requested_rank_ = 0;
    Index n_samples_ = 0;
    bool boundary_tie_ = false;
};

/// Analytic maximum-likelihood fit for a fixed rank d in [1, K-1].
/// A zero trailing-eigenvalue mean yields a non-invertible estimate rather than
/// an exception; likelihood evaluation on it throws SingularEstimate.
RRCovEstimate fit_rr(const SampleCov& s, int d);

/// Same fit reusing an eigen-system of s.S computed by eigh().
RRCovEstimate fit_rr(const SampleCov& s, const EigenSystem& es, int d);

/// The d = 0 extreme: mean eigenvalue times the identity.
RRCovEstimate fit_isotropic(const SampleCov& s);

/// Largest-rank model: d = K-1, which reproduces S (d = 0 when K = 1).
RRCovEstimate fit_full(const SampleCov& s);

/// Dispatches to fit_isotropic for d == 0 and fit_rr otherwise.
RRCovEstimate fit_rank(const SampleCov& s, int d);

/// -(2/T) log-likelihood without the additive constant: log|Sigma| + tr(Sigma^{-1} S).
double neg2_loglik_avg(const RRCovEstimate& est, const SampleCov& s);

/// Number of free parameters K d - d(d-1)/2 + 1 of a rank-d model.
double rr_param_count(Index k, int d);

/// T * neg2_loglik_avg + log(T) * rr_param_count(K, requested d).
double bic(const RRCovEstimate& est, const SampleCov& s);

struct BicPoint {
    int d = 0;
    double bic = 0.0;
    bool singular = false;
};

struct RankSelection {
    RRCovEstimate estimate;
    std::vector<BicPoint> curve;
};

/// {1, ..., K-1}, with 0 prepended when include_isotropic is set.
std::vector<int> default_rank_candidates(Index k, bool include_isotropic = false);

/// Minimum-BIC rank among `candidates`; ties go to the smaller d. Candidates
/// whose fit is singular are recorded in the curve and skipped.
RankSelection select_rank(const SampleCov& s, std::span<const int> candidates);

/// Row t holds U^T Z_t. Throws InvalidRank when the estimate has rank 0.
Matrix latent_scores(const RRCovEstimate& est, const Matrix& Z);

struct CcfEntry {
    Index i = 0;
    Index j = 0;
    int lag = 0;
    double corr = 0.0;
};

/// Sample correlations corr(x_i[t + lag], x_j[t]) for every ordered column
/// pair and lag in [-max_lag, max_lag], with divisor T at every lag.
/// corr(i, j, lag) == corr(j, i, -lag) and corr(i, i, 0) == 1 hold exactly.
std::vector<CcfEntry> cross_correlations(const Matrix& X, int max_lag);

/// u_i^T diag(lambda) u_j for i != j; throws InvalidInput when i == j.
double contemporaneous_cov(const RRCovEstimate& est, Index i, Index j);

}  // namespace varcov
