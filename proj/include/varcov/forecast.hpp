#pragma once

#include "varcov/linalg.hpp"
#include "varcov/var.hpp"

namespace varcov {

/// VAR(1) form L_t = Psi L_{t-1} + V_t of a VAR(p).
struct CompanionForm {
    Matrix Psi;       // Kp x Kp
    SymMatrix SigmaV; // Kp x Kp, noise covariance in the upper-left K x K block
};

/// Psi only; throws InvalidOrder for p = 0.
Matrix companion_matrix(const VarModel& model);

/// Psi and Sigma_V; requires the model's noise covariance.
CompanionForm companion(const VarModel& model);

/// Spectral radius of the companion matrix below 1 - 1e-12 (true for p = 0).
bool is_causal(const VarModel& model);

enum class LyapunovMethod { Auto, VecSolve, FixedPoint };

/// Above this Kp the Auto method switches from the dense vec solve to fixed-point iteration.
inline constexpr Index kVecSolveMaxDim = 40;

/// Gamma_Y solving Gamma = Psi Gamma Psi^T + Sigma_V. Throws NonCausalModel.
SymMatrix stationary_cov(const CompanionForm& cf, LyapunovMethod method = LyapunovMethod::Auto);

/// ||Gamma - Psi Gamma Psi^T - Sigma_V||_F / ||Gamma||_F.
double lyapunov_residual(const CompanionForm& cf, const SymMatrix& gamma);

/// Parameter-estimation part of the approximate one-step forecast MSE.
/// The average of q_t = L_t^T Gamma_Y^-1 L_t over the n = T - p available
/// predictor vectors, divided by n and multiplied by Sigma_Z.
SymMatrix omega1(const VarModel& model, const Matrix& Y);

struct ForecastMse {
    SymMatrix matrix;   // Sigma_Z + omega
    SymMatrix omega;
    SymMatrix gamma_y;
    double mean_quadratic_form = 0.0;  // average q_t
};

ForecastMse fmse1(const VarModel& model, const Matrix& Y);

/// mu + sum_k A_k (Y_{T+1-k} - mu) from the last p rows of `recent`.
Vector forecast1(const VarModel& model, const Matrix& recent);

}  // namespace varcov
