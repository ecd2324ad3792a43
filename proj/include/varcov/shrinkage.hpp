#pragma once

#include "varcov/linalg.hpp"
#include "varcov/rrcov.hpp"

namespace varcov {

enum class TargetKind { ScaledIdentity, DiagUnequal };

/// Schafer-Strimmer style variants.
///   DiagTarget      - shrink S towards diag(S) with one analytic intensity.
///   ShrinkVariances - additionally pull the variances towards their median
///                     with a second analytic intensity (the corpcor default).
enum class SsVariant { DiagTarget, ShrinkVariances };

struct ShrinkEstimate {
    SymMatrix matrix;
    double intensity = 0.0;           // weight on the target, in [0, 1]
    double variance_intensity = 0.0;  // ShrinkVariances only
    TargetKind target_kind = TargetKind::ScaledIdentity;
    bool clipped = false;             // an analytic intensity fell outside [0, 1]
};

/// Ledoit-Wolf shrinkage towards mu * I, mu = tr(S)/K. `Z` must be the
/// observations behind S (centered internally when S.centered is set).
ShrinkEstimate fit_lw(const SampleCov& s, const Matrix& Z);

/// Schafer-Strimmer shrinkage of the correlations towards zero (target: the
/// diagonal of S, unequal variances).
ShrinkEstimate fit_ss(const SampleCov& s, const Matrix& Z, SsVariant variant = SsVariant::ShrinkVariances);

}  // namespace varcov
