#pragma once

#include <string>

#include "varcov/linalg.hpp"

namespace varcov {

enum class MseNorm { Spectral, Frobenius };

/// tr(E S^-1) - log det(E S^-1) - K, evaluated on the spectrum of the
/// whitened matrix L^-1 E L^-T (L = chol(truth)). Throws NotPositiveDefinite.
double steins_loss(const SymMatrix& est, const SymMatrix& truth);

/// Squared norm of est - truth; spectral by default.
double mse_loss(const SymMatrix& est, const SymMatrix& truth, MseNorm norm = MseNorm::Spectral);

/// 100 (1 - loss_est / loss_sample). Throws InvalidInput when loss_sample <= 0.
double pct_reduction(double loss_est, double loss_sample);

struct LossReport {
    std::string estimator_tag;
    double stein = 0.0;
    double mse = 0.0;            // spectral
    double mse_frobenius = 0.0;
};

LossReport evaluate_losses(const std::string& tag, const SymMatrix& est, const SymMatrix& truth);

}  // namespace varcov
