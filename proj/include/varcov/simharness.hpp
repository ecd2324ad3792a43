#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "varcov/linalg.hpp"
#include "varcov/metrics.hpp"
#include "varcov/shrinkage.hpp"

namespace varcov {

enum class CaseKind { I, II, III, Custom };

/// Population covariance for the independent-observation experiments.
///   I   identity
///   II  covariances 0.16, variances (1.0, 1.0, 0.5, ..., 0.5); rank-3 plus isotropic
///   III covariances (-1)^(i+j) 0.10, variances 0.47, 0.49, ... in steps of 0.02
struct CaseSpec {
    CaseKind kind = CaseKind::Custom;
    Index K = 0;
    SymMatrix Sigma;
};

std::string to_string(CaseKind kind);
CaseKind parse_case_kind(const std::string& text);

/// Throws InvalidCase when K is too small for the kind or Sigma is not PD.
CaseSpec make_case(CaseKind kind, Index K);
CaseSpec custom_case(const SymMatrix& sigma);

enum class Estimator { Sample, RR, LW, SS };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& text);

struct HarnessOptions {
    bool center = false;
    /// Let the isotropic d = 0 model compete in the BIC rank search.
    bool include_isotropic = true;
    SsVariant ss_variant = SsVariant::ShrinkVariances;
    /// 0 picks VARCOV_THREADS or the hardware concurrency.
    unsigned threads = 0;
};

struct ReplicationReport {
    Index replication = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure;
    LossReport sample;               // baseline losses
    std::vector<LossReport> losses;  // one per requested estimator, in request order
    std::vector<std::array<double, 3>> reductions;  // percent vs sample: stein, spectral, frobenius
    int selected_rank = -1;          // RR only
    double seconds = 0.0;
};

struct ReductionStat {
    double mean = 0.0;
    double se = 0.0;
};

struct EstimatorSummary {
    Estimator estimator = Estimator::Sample;
    ReductionStat stein;
    ReductionStat mse_spectral;
    ReductionStat mse_frobenius;
};

struct AggregateTable {
    Index T = 0;
    int reps = 0;
    int failed = 0;
    std::vector<EstimatorSummary> estimators;
    std::vector<int> rank_counts;  // index d, length K
};

struct ReplicationRun {
    std::vector<ReplicationReport> reports;
    AggregateTable table;
};

/// Seed of replication r, a fixed mixing function of (master, r).
std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r) noexcept;

/// T iid N(0, L L^T) rows.
Matrix draw_gaussian(const Matrix& chol_factor, Index T, std::uint64_t seed);

/// Worker count honoring VARCOV_THREADS as an upper bound.
unsigned worker_count(unsigned requested);

ReplicationRun run_replications(const CaseSpec& cs, Index T, int reps, std::span<const Estimator> estimators,
                                 std::uint64_t seed, const HarnessOptions& opts = {});

}  // namespace varcov
