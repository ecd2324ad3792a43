#include "varcov/var.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "varcov/error.hpp"
#include "varcov/forecast.hpp"

namespace varcov {

namespace {

void require_data(const Matrix& Y) {
    if (Y.cols() < 1) throw Error(ErrorKind::InvalidInput, "data must have at least one series");
    if (!Y.allFinite()) throw Error(ErrorKind::InvalidInput, "data contains non-finite values");
}

/// Cholesky of a normal matrix; rejects matrices that are singular to working precision.
Eigen::LLT<Matrix> factor_normal(const Matrix& n, const char* what) {
    Eigen::LLT<Matrix> llt(n);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::RankDeficientDesign, std::string(what) + ": normal matrix is singular");
    }
    const Vector d = llt.matrixLLT().diagonal();
    const double lo = d.minCoeff();
    const double hi = d.maxCoeff();
    if (!(lo > 0.0) || lo * lo < 1e-13 * hi * hi) {
        throw Error(ErrorKind::RankDeficientDesign, std::string(what) + ": normal matrix is numerically singular");
    }
    return llt;
}

/// N_ab = G(c_a, c_b) W(r_a, r_b) for free alpha positions a, b; this is
/// R^T (G kron W) R without the Kronecker product.
Matrix constrained_normal(const Matrix& G, const Matrix& W, const std::vector<Index>& free, Index k) {
    const Index m = static_cast<Index>(free.size());
    Matrix n(m, m);
    for (Index b = 0; b < m; ++b) {
        const Index cb = free[b] / k;
        const Index rb = free[b] % k;
        for (Index a = b; a < m; ++a) {
            const double v = G(free[a] / k, cb) * W(free[a] % k, rb);
            n(a, b) = v;
            n(b, a) = v;
        }
    }
    return n;
}

Matrix gram_of(const RegressionView& view) {
    const Matrix lt = view.L.transpose();
    return crossprod(lt);
}

Matrix response_cross(const RegressionView& view) {
    const Matrix yt = view.responses.transpose();
    const Matrix lt = view.L.transpose();
    return crossprod(yt, lt);  // K x Kp = responses * L^T
}

VarModel model_from_coef(const Matrix& coef, const RegressionView& view) {
    VarModel m;
    m.K = view.dim();
    m.p = view.p;
    m.mu = view.mu;
    m.A = coef_from_alpha(vec(coef), m.K, m.p);
    return m;
}

}  // namespace

ConstraintSpec ConstraintSpec::unconstrained(Index k, int p) {
    if (k < 1 || p < 0) throw Error(ErrorKind::InvalidInput, "constraint: need K >= 1 and p >= 0");
    ConstraintSpec c;
    c.k_ = k;
    c.p_ = p;
    c.free_.resize(static_cast<std::size_t>(k * k * p));
    for (std::size_t i = 0; i < c.free_.size(); ++i) c.free_[i] = static_cast<Index>(i);
    return c;
}

ConstraintSpec ConstraintSpec::from_positions(Index k, int p, std::span<const LagPosition> free) {
    if (k < 1 || p < 0) throw Error(ErrorKind::InvalidInput, "constraint: need K >= 1 and p >= 0");
    std::set<Index> seen;
    for (const auto& pos : free) {
        if (pos.lag < 1 || pos.lag > p || pos.row < 0 || pos.row >= k || pos.col < 0 || pos.col >= k) {
            throw Error(ErrorKind::InvalidInput, "constraint position (lag " + std::to_string(pos.lag) + ", row " +
                                                     std::to_string(pos.row) + ", col " + std::to_string(pos.col) +
                                                     ") out of range");
        }
        if (!seen.insert(alpha_index(k, pos.lag, pos.row, pos.col)).second) {
            throw Error(ErrorKind::InvalidInput, "constraint: duplicate free position");
        }
    }
    ConstraintSpec c;
    c.k_ = k;
    c.p_ = p;
    c.free_.assign(seen.begin(), seen.end());
    return c;
}

std::vector<LagPosition> ConstraintSpec::positions() const {
    std::vector<LagPosition> out;
    out.reserve(free_.size());
    for (Index idx : free_) {
        const Index col_all = idx / k_;
        out.push_back({static_cast<int>(col_all / k_) + 1, idx % k_, col_all % k_});
    }
    return out;
}

Matrix ConstraintSpec::dense() const {
    Matrix r = Matrix::Zero(k_ * k_ * p_, m());
    for (Index j = 0; j < m(); ++j) r(free_[static_cast<std::size_t>(j)], j) = 1.0;
    return r;
}

Matrix VarModel::coef() const {
    Matrix b(K, K * p);
    for (int k = 0; k < p; ++k) b.block(0, static_cast<Index>(k) * K, K, K) = A[static_cast<std::size_t>(k)];
    return b;
}

std::vector<Matrix> coef_from_alpha(const Vector& alpha, Index k, int p) {
    if (alpha.size() != k * k * p) throw Error(ErrorKind::InvalidInput, "alpha length does not match K^2 p");
    const Matrix b = unvec(alpha, k, k * p);
    std::vector<Matrix> a;
    for (int l = 0; l < p; ++l) a.push_back(b.block(0, static_cast<Index>(l) * k, k, k));
    return a;
}

Matrix simulate(const VarModel& model, Index T, Index burn_in, std::uint64_t seed) {
    if (!model.noise_cov) throw Error(ErrorKind::InvalidInput, "simulate: model has no noise covariance");
    if (T < 1 || burn_in < 0) throw Error(ErrorKind::InvalidInput, "simulate: need T >= 1 and burn_in >= 0");
    const Index k = model.K;
    if (model.noise_cov->dim() != k || model.mu.size() != k) {
        throw Error(ErrorKind::InvalidInput, "simulate: model dimensions are inconsistent");
    }
    if (!is_causal(model)) throw Error(ErrorKind::NonCausalModel, "simulate: companion spectral radius >= 1");

    // Square root of the (possibly singular) noise covariance.
    const SymMatrix sigma = model.noise_cov->full_matrix();
    Matrix root;
    Eigen::LLT<Matrix> llt(sigma.dense());
    if (llt.info() == Eigen::Success) {
        root = llt.matrixL();
    } else {
        const EigenSystem es = eigh(sigma);
        root = es.vectors * es.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index total = T + burn_in;
    const int p = model.p;
    Matrix dev = Matrix::Zero(total + p, k);  // deviations from mu, p zero rows of presample
    Vector z(k);
    for (Index t = 0; t < total; ++t) {
        for (Index i = 0; i < k; ++i) z(i) = normal(rng);
        Vector x = root * z;
        for (int l = 1; l <= p; ++l) x.noalias() += model.A[static_cast<std::size_t>(l - 1)] * dev.row(t + p - l).transpose();
        dev.row(t + p) = x.transpose();
    }
    Matrix out = dev.bottomRows(T);
    out.rowwise() += model.mu.transpose();
    return out;
}

RegressionView build_regression(const Matrix& Y, int p) {
    require_data(Y);
    if (p < 0) throw Error(ErrorKind::InvalidOrder, "order must be non-negative");
    if (Y.rows() <= p) {
        throw Error(ErrorKind::InsufficientData,
                    "need T > p (T = " + std::to_string(Y.rows()) + ", p = " + std::to_string(p) + ")");
    }
    const Index k = Y.cols();
    const Index t_eff = Y.rows() - p;
    RegressionView v;
    v.p = p;
    v.T_eff = t_eff;
    v.mu = Y.colwise().mean().transpose();
    const Matrix yc = Y.rowwise() - v.mu.transpose();
    v.responses = yc.bottomRows(t_eff).transpose();
    v.L.resize(k * p, t_eff);
    for (Index s = 0; s < t_eff; ++s) {
        for (int l = 1; l <= p; ++l) v.L.block(static_cast<Index>(l - 1) * k, s, k, 1) = yc.row(s + p - l).transpose();
    }
    return v;
}

Matrix residuals(const Matrix& coef, const RegressionView& view) {
    if (view.p == 0) return view.responses.transpose();
    if (coef.rows() != view.dim() || coef.cols() != view.L.rows()) {
        throw Error(ErrorKind::InvalidInput, "residuals: coefficient shape does not match the regression");
    }
    return (view.responses - coef * view.L).transpose();
}

VarModel fit_ols(const Matrix& Y, int p) {
    const RegressionView view = build_regression(Y, p);
    const Index k = view.dim();
    VarModel m;
    if (p == 0) {
        m = model_from_coef(Matrix(k, 0), view);
    } else {
        const auto llt = factor_normal(gram_of(view), "fit_ols");
        const Matrix coef = llt.solve(response_cross(view).transpose()).transpose();
        m = model_from_coef(coef, view);
    }
    m.meta.procedure = "ols";
    return m;
}

ConstrainedFit fit_constrained(const RegressionView& view, const ConstraintSpec& R, const SymMatrix& sigma_inv) {
    const Index k = view.dim();
    if (R.dim() != k || R.order() != view.p) {
        throw Error(ErrorKind::InvalidInput, "constraint shape does not match the regression");
    }
    if (sigma_inv.dim() != k) throw Error(ErrorKind::InvalidInput, "sigma_inv dimension mismatch");
    ConstrainedFit out;
    out.alpha = Vector::Zero(k * k * view.p);
    out.gamma = Vector(R.m());
    if (R.m() == 0) return out;

    const Matrix& W = sigma_inv.dense();
    const Matrix G = gram_of(view);
    // (L kron W) y = vec(W responses L^T).
    const Matrix rhs_full = W * response_cross(view);
    const auto& free = R.free_indices();
    Vector rhs(R.m());
    for (Index a = 0; a < R.m(); ++a) rhs(a) = rhs_full(free[a] % k, free[a] / k);

    const auto llt = factor_normal(constrained_normal(G, W, free, k), "fit_constrained");
    out.gamma = llt.solve(rhs);
    for (Index a = 0; a < R.m(); ++a) out.alpha(free[a]) = out.gamma(a);
    return out;
}

ConstrainedFit fit_constrained(const Matrix& Y, int p, const ConstraintSpec& R, const SymMatrix& sigma_inv) {
    return fit_constrained(build_regression(Y, p), R, sigma_inv);
}

double gaussian_neg2_loglik(const Matrix& resid, const RRCovEstimate& noise) {
    const SampleCov s{SymMatrix::from_lower(crossprod(resid) / static_cast<double>(resid.rows())), resid.rows(), false};
    return static_cast<double>(resid.rows()) * neg2_loglik_avg(noise, s);
}

VarModel fit_two_step(const Matrix& Y, int p, std::span<const int> rank_candidates) {
    const RegressionView view = build_regression(Y, p);
    VarModel m = fit_ols(Y, p);
    const Matrix resid = residuals(m.coef(), view);
    const SampleCov s = sample_cov(resid, false);
    RankSelection sel = select_rank(s, rank_candidates);
    m.noise_cov = std::move(sel.estimate);
    m.meta.procedure = "two_step";
    m.meta.rank_curve = std::move(sel.curve);
    m.meta.trace = {gaussian_neg2_loglik(resid, *m.noise_cov)};
    return m;
}

VarModel fit_iterative(const Matrix& Y, int p, const ConstraintSpec& R, int d, const IterativeOptions& opts) {
    const RegressionView view = build_regression(Y, p);
    const Index k = view.dim();
    if (d < 0 || d > k - 1) throw Error(ErrorKind::InvalidRank, "fit_iterative: rank out of range");
    if (opts.max_iter < 1) throw Error(ErrorKind::InvalidInput, "fit_iterative: max_iter must be >= 1");

    auto covariance_step = [&](const Vector& alpha, RRCovEstimate& noise) {
        const Matrix resid = residuals(unvec(alpha, k, k * p), view);
        const SampleCov s = sample_cov(resid, false);
        noise = fit_rank(s, d);
        if (!noise.invertible()) throw Error(ErrorKind::SingularEstimate, "fit_iterative: residual covariance is singular");
        return static_cast<double>(view.T_eff) * neg2_loglik_avg(noise, s);
    };

    ConstrainedFit current = fit_constrained(view, R, SymMatrix::identity(k));
    RRCovEstimate noise;
    double value = covariance_step(current.alpha, noise);

    FitMeta meta;
    meta.procedure = "iterative";
    meta.converged = false;
    meta.trace.push_back(value);

    ConstrainedFit best_fit = current;
    RRCovEstimate best_noise = noise;
    double best_value = value;

    for (int it = 1; it <= opts.max_iter; ++it) {
        ConstrainedFit next = fit_constrained(view, R, noise.inverse());
        RRCovEstimate next_noise;
        const double next_value = covariance_step(next.alpha, next_noise);
        meta.max_abs_alpha_change =
            next.alpha.size() > 0 ? (next.alpha - current.alpha).cwiseAbs().maxCoeff() : 0.0;
        meta.trace.push_back(next_value);
        meta.iterations = it;
        const double rel = std::abs(value - next_value) / std::max(std::abs(value), std::numeric_limits<double>::min());
        current = std::move(next);
        noise = std::move(next_noise);
        value = next_value;
        if (value <= best_value) {
            best_value = value;
            best_fit = current;
            best_noise = noise;
        }
        if (rel < opts.tol) {
            meta.converged = true;
            break;
        }
    }

    VarModel m = model_from_coef(unvec(best_fit.alpha, k, k * p), view);
    m.noise_cov = std::move(best_noise);
    m.constraint = R;
    m.meta = std::move(meta);
    return m;
}

OrderSelection select_order(const Matrix& Y, std::span<const int> orders, OrderFitter fitter) {
    if (orders.empty()) throw Error(ErrorKind::InvalidOrder, "select_order: empty order set");
    std::vector<int> ps(orders.begin(), orders.end());
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    if (ps.front() < 0) throw Error(ErrorKind::InvalidOrder, "select_order: negative order");
    const int max_p = ps.back();
    if (max_p >= Y.rows() - 1) throw Error(ErrorKind::InsufficientData, "select_order: max order must be < T - 1");

    const Index k = Y.cols();
    const double t_eff = static_cast<double>(Y.rows() - max_p);
    OrderSelection out;
    double best = std::numeric_limits<double>::infinity();
    for (int p : ps) {
        // Drop max_p - p leading rows so every order predicts the same responses.
        const Matrix sub = Y.bottomRows(Y.rows() - (max_p - p));
        const RegressionView view = build_regression(sub, p);
        const VarModel m = fit_ols(sub, p);
        const SampleCov s = sample_cov(residuals(m.coef(), view), false);
        RRCovEstimate noise;
        double cov_params = 0.0;
        if (fitter == OrderFitter::OlsFull) {
            noise = fit_full(s);
            cov_params = static_cast<double>(k * (k + 1)) / 2.0;
        } else {
            noise = select_rank(s, default_rank_candidates(k, k == 1)).estimate;
            cov_params = rr_param_count(k, noise.requested_rank());
        }
        OrderBicPoint pt;
        pt.p = p;
        pt.neg2_loglik = t_eff * neg2_loglik_avg(noise, s);
        pt.params = static_cast<double>(k * k * p) + cov_params;
        pt.bic = pt.neg2_loglik + std::log(t_eff) * pt.params;
        out.table.push_back(pt);
        if (pt.bic < best) {
            best = pt.bic;
            out.p = p;
        }
    }
    return out;
}

Vector coef_stderr(const VarModel& model, const RegressionView& view) {
    if (!model.noise_cov) throw Error(ErrorKind::InvalidInput, "coef_stderr: model has no noise covariance");
    const Index k = model.K;
    if (view.dim() != k || view.p != model.p) throw Error(ErrorKind::InvalidInput, "coef_stderr: view mismatch");
    const ConstraintSpec R = model.constraint ? *model.constraint : ConstraintSpec::unconstrained(k, model.p);
    Vector se = Vector::Zero(k * k * model.p);
    if (R.m() == 0) return se;
    const Matrix W = model.noise_cov->inverse().dense();
    const auto& free = R.free_indices();
    const auto llt = factor_normal(constrained_normal(gram_of(view), W, free, k), "coef_stderr");
    const Matrix cov = llt.solve(Matrix::Identity(R.m(), R.m()));
    for (Index a = 0; a < R.m(); ++a) se(free[a]) = std::sqrt(std::max(cov(a, a), 0.0));
    return se;
}

}  // namespace varcov
