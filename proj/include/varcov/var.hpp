#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varcov/linalg.hpp"
#include "varcov/rrcov.hpp"

namespace varcov {

/// One free autoregressive coefficient: entry (row, col) of A_lag.
/// `lag` is 1-based, `row` and `col` are 0-based.
struct LagPosition {
    int lag = 1;
    Index row = 0;
    Index col = 0;

    friend bool operator==(const LagPosition&, const LagPosition&) = default;
};

/// Zero-restriction pattern alpha = R gamma, with alpha = vec(A_1, ..., A_p).
/// R is stored as the sorted list of alpha indices that are free.
class ConstraintSpec {
public:
    ConstraintSpec() = default;

    static ConstraintSpec unconstrained(Index k, int p);

    /// Throws InvalidInput on out-of-range or duplicate positions.
    static ConstraintSpec from_positions(Index k, int p, std::span<const LagPosition> free);

    static Index alpha_index(Index k, int lag, Index row, Index col) noexcept {
        return (static_cast<Index>(lag - 1) * k + col) * k + row;
    }

    Index dim() const noexcept { return k_; }
    int order() const noexcept { return p_; }
    Index m() const noexcept { return static_cast<Index>(free_.size()); }
    const std::vector<Index>& free_indices() const noexcept { return free_; }
    std::vector<LagPosition> positions() const;
    bool is_full() const noexcept { return m() == k_ * k_ * p_; }

    /// Dense K^2 p x m selection matrix; for tests and small problems.
    Matrix dense() const;

private:
    Index k_ = 0;
    int p_ = 0;
    std::vector<Index> free_;
};

/// Demeaned regression layout. Column s of L holds the stacked predictors
/// (Y_{t-1}, ..., Y_{t-p}) of the response in column s of `responses`,
/// where t runs over the rows p+1..T of the data.
struct RegressionView {
    Matrix L;          // Kp x T_eff
    Matrix responses;  // K x T_eff
    Vector mu;         // sample mean removed from the data
    Index T_eff = 0;
    int p = 0;

    Index dim() const noexcept { return responses.rows(); }
    Vector y() const { return vec(responses); }
};

struct FitMeta {
    std::string procedure = "given";
    int iterations = 0;
    bool converged = true;
    std::vector<double> trace;          // Gaussian -2 log-likelihood per iteration
    double max_abs_alpha_change = 0.0;  // last iteration
    std::vector<BicPoint> rank_curve;
};

struct VarModel {
    Index K = 0;
    int p = 0;
    Vector mu;
    std::vector<Matrix> A;
    std::optional<RRCovEstimate> noise_cov;
    std::optional<ConstraintSpec> constraint;  // unset means unconstrained
    FitMeta meta;

    /// (A_1, ..., A_p) as one K x Kp block.
    Matrix coef() const;
    Vector alpha() const { return vec(coef()); }
};

/// Builds A_1..A_p from alpha = vec(A_1, ..., A_p).
std::vector<Matrix> coef_from_alpha(const Vector& alpha, Index k, int p);

/// Gaussian VAR draws with noise from the model's noise covariance. Throws
/// NonCausalModel when the companion spectral radius is >= 1 - 1e-12.
Matrix simulate(const VarModel& model, Index T, Index burn_in, std::uint64_t seed);

/// Throws InsufficientData when T <= p.
RegressionView build_regression(const Matrix& Y, int p);

/// Per-equation least squares. The noise covariance is left unset.
VarModel fit_ols(const Matrix& Y, int p);

/// Residual rows Y_t - mu - sum_k A_k (Y_{t-k} - mu) for t = p+1..T, as T_eff x K.
Matrix residuals(const Matrix& coef, const RegressionView& view);

struct ConstrainedFit {
    Vector gamma;
    Vector alpha;
};

/// Constrained GLS with the inverse noise covariance plugged in, evaluated
/// without forming any Kronecker product. Throws RankDeficientDesign.
ConstrainedFit fit_constrained(const Matrix& Y, int p, const ConstraintSpec& R, const SymMatrix& sigma_inv);
ConstrainedFit fit_constrained(const RegressionView& view, const ConstraintSpec& R, const SymMatrix& sigma_inv);

/// OLS coefficients followed by a BIC-selected reduced-rank fit to the residual covariance.
VarModel fit_two_step(const Matrix& Y, int p, std::span<const int> rank_candidates);

struct IterativeOptions {
    int max_iter = 200;
    double tol = 1e-8;
};

/// Alternates constrained GLS (covariance fixed) and the rank-d covariance fit
/// (coefficients fixed) until the relative change of -2 log L drops below tol.
VarModel fit_iterative(const Matrix& Y, int p, const ConstraintSpec& R, int d,
                       const IterativeOptions& opts = {});

enum class OrderFitter { OlsFull, TwoStepRR };

struct OrderBicPoint {
    int p = 0;
    double bic = 0.0;
    double neg2_loglik = 0.0;
    double params = 0.0;
};

struct OrderSelection {
    int p = 0;
    std::vector<OrderBicPoint> table;
};

/// Minimum-BIC order over a common estimation sample t = max(orders)+1..T.
OrderSelection select_order(const Matrix& Y, std::span<const int> orders, OrderFitter fitter);

/// Standard errors of alpha (zero for restricted entries) from the diagonal of
/// R [R^T (L L^T kron Sigma^-1) R]^-1 R^T.
Vector coef_stderr(const VarModel& model, const RegressionView& view);

/// Gaussian -2 log-likelihood (no constant) of residuals under a noise covariance.
double gaussian_neg2_loglik(const Matrix& resid, const RRCovEstimate& noise);

}  // namespace varcov
