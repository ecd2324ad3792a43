#include "varcov/metrics.hpp"

#include <cmath>

#include "varcov/error.hpp"

namespace varcov {

namespace {

void require_same_dim(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) throw Error(ErrorKind::InvalidInput, "loss: dimension mismatch");
}

}  // namespace

double steins_loss(const SymMatrix& est, const SymMatrix& truth) {
    require_same_dim(est, truth);
    const Matrix L = chol(truth);
    const auto tri = L.triangularView<Eigen::Lower>();
    // W = L^-1 E L^-T shares its spectrum with E truth^-1.
    const Matrix half = tri.solve(est.dense());
    const Matrix whitened = tri.solve(half.transpose());
    const EigenSystem es = eigh(SymMatrix::symmetrize(whitened));
    double loss = 0.0;
    for (Index i = 0; i < es.values.size(); ++i) {
        const double e = es.values(i);
        if (!(e > 0.0)) throw Error(ErrorKind::NotPositiveDefinite, "steins_loss: estimate is not positive definite");
        loss += e - std::log(e) - 1.0;
    }
    return std::max(loss, 0.0);
}

double mse_loss(const SymMatrix& est, const SymMatrix& truth, MseNorm norm) {
    require_same_dim(est, truth);
    const Matrix diff = est.dense() - truth.dense();
    if (norm == MseNorm::Frobenius) return diff.squaredNorm();
    const EigenSystem es = eigh(SymMatrix::symmetrize(diff));
    const double top = std::max(std::abs(es.values(0)), std::abs(es.values(es.values.size() - 1)));
    return top * top;
}

double pct_reduction(double loss_est, double loss_sample) {
    if (!(loss_sample > 0.0)) throw Error(ErrorKind::InvalidInput, "pct_reduction: baseline loss must be positive");
    return 100.0 * (1.0 - loss_est / loss_sample);
}

LossReport evaluate_losses(const std::string& tag, const SymMatrix& est, const SymMatrix& truth) {
    return LossReport{tag, steins_loss(est, truth), mse_loss(est, truth, MseNorm::Spectral),
                      mse_loss(est, truth, MseNorm::Frobenius)};
}

}  // namespace varcov
