#include "varcov/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "varcov/error.hpp"
#include "varcov/rrcov.hpp"

namespace varcov {

namespace {

ReductionStat summarize(const std::vector<double>& v) {
    ReductionStat s;
    if (v.empty()) return s;
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return s;
}

ReplicationReport run_one(const CaseSpec& cs, const Matrix& root, Index T, std::span<const Estimator> estimators,
                          std::uint64_t master, Index r, const HarnessOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    ReplicationReport rep;
    rep.replication = r;
    rep.seed = replication_seed(master, static_cast<std::uint64_t>(r));
    try {
        const Matrix Z = draw_gaussian(root, T, rep.seed);
        const SampleCov s = sample_cov(Z, opts.center);
        rep.sample = evaluate_losses("sample", s.S, cs.Sigma);
        for (Estimator e : estimators) {
            SymMatrix est;
            switch (e) {
                case Estimator::Sample: est = s.S; break;
                case Estimator::RR: {
                    const auto ranks = default_rank_candidates(cs.K, opts.include_isotropic);
                    RankSelection sel = select_rank(s, ranks);
                    rep.selected_rank = sel.estimate.requested_rank();
                    est = sel.estimate.full_matrix();
                    break;
                }
                case Estimator::LW: est = fit_lw(s, Z).matrix; break;
                case Estimator::SS: est = fit_ss(s, Z, opts.ss_variant).matrix; break;
            }
            rep.losses.push_back(e == Estimator::Sample ? LossReport{to_string(e), rep.sample.stein, rep.sample.mse,
                                                                     rep.sample.mse_frobenius}
                                                        : evaluate_losses(to_string(e), est, cs.Sigma));
            const LossReport& l = rep.losses.back();
            rep.reductions.push_back({pct_reduction(l.stein, rep.sample.stein), pct_reduction(l.mse, rep.sample.mse),
                                      pct_reduction(l.mse_frobenius, rep.sample.mse_frobenius)});
        }
    } catch (const Error& err) {
        rep.failed = true;
        rep.failure = err.what();
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

}  // namespace

std::string to_string(CaseKind kind) {
    switch (kind) {
        case CaseKind::I: return "I";
        case CaseKind::II: return "II";
        case CaseKind::III: return "III";
        case CaseKind::Custom: return "custom";
    }
    return "custom";
}

CaseKind parse_case_kind(const std::string& text) {
    if (text == "I" || text == "1") return CaseKind::I;
    if (text == "II" || text == "2") return CaseKind::II;
    if (text == "III" || text == "3") return CaseKind::III;
    throw Error(ErrorKind::InvalidCase, "unknown case '" + text + "' (expected I, II or III)");
}

CaseSpec make_case(CaseKind kind, Index K) {
    if (kind == CaseKind::Custom) throw Error(ErrorKind::InvalidCase, "use custom_case for a user-supplied matrix");
    if (K < 2 || (kind == CaseKind::II && K < 3)) {
        throw Error(ErrorKind::InvalidCase, "case " + to_string(kind) + " needs a larger dimension");
    }
    Matrix m(K, K);
    for (Index j = 0; j < K; ++j) {
        for (Index i = 0; i < K; ++i) {
            if (i == j) {
                switch (kind) {
                    case CaseKind::I: m(i, j) = 1.0; break;
                    case CaseKind::II: m(i, j) = i < 2 ? 1.0 : 0.5; break;
                    default: m(i, j) = 0.47 + 0.02 * static_cast<double>(i); break;
                }
            } else {
                switch (kind) {
                    case CaseKind::I: m(i, j) = 0.0; break;
                    case CaseKind::II: m(i, j) = 0.16; break;
                    default: m(i, j) = ((i + j) % 2 == 0 ? 0.10 : -0.10); break;
                }
            }
        }
    }
    CaseSpec cs;
    cs.kind = kind;
    cs.K = K;
    cs.Sigma = SymMatrix::from_lower(m);
    try {
        (void)chol(cs.Sigma);
    } catch (const Error&) {
        throw Error(ErrorKind::InvalidCase, "case " + to_string(kind) + " is not positive definite at K = " +
                                                std::to_string(K));
    }
    return cs;
}

CaseSpec custom_case(const SymMatrix& sigma) {
    try {
        (void)chol(sigma);
    } catch (const Error&) {
        throw Error(ErrorKind::InvalidCase, "custom covariance is not positive definite");
    }
    return CaseSpec{CaseKind::Custom, sigma.dim(), sigma};
}

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::Sample: return "sample";
        case Estimator::RR: return "rr";
        case Estimator::LW: return "lw";
        case Estimator::SS: return "ss";
    }
    return "sample";
}

Estimator parse_estimator(const std::string& text) {
    if (text == "sample") return Estimator::Sample;
    if (text == "rr") return Estimator::RR;
    if (text == "lw") return Estimator::LW;
    if (text == "ss") return Estimator::SS;
    throw Error(ErrorKind::InvalidInput, "unknown estimator '" + text + "'");
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r) noexcept {
    // splitmix64 finalizer over a Weyl step.
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (r + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Matrix draw_gaussian(const Matrix& chol_factor, Index T, std::uint64_t seed) {
    const Index k = chol_factor.rows();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix e(T, k);
    for (Index t = 0; t < T; ++t) {
        for (Index i = 0; i < k; ++i) e(t, i) = normal(rng);
    }
    return e * chol_factor.transpose();
}

unsigned worker_count(unsigned requested) {
    unsigned n = requested;
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("VARCOV_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return std::max(1u, n);
}

ReplicationRun run_replications(const CaseSpec& cs, Index T, int reps, std::span<const Estimator> estimators,
                                 std::uint64_t seed, const HarnessOptions& opts) {
    if (reps < 1) throw Error(ErrorKind::InvalidInput, "run_replications needs reps >= 1");
    if (T < 2) throw Error(ErrorKind::InsufficientData, "run_replications needs T >= 2");
    const Matrix root = chol(cs.Sigma);

    ReplicationRun run;
    run.reports.resize(static_cast<std::size_t>(reps));
    const unsigned workers = std::min<unsigned>(worker_count(opts.threads), static_cast<unsigned>(reps));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int r = next++; r < reps; r = next++) {
            run.reports[static_cast<std::size_t>(r)] = run_one(cs, root, T, estimators, seed, r, opts);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    // Fixed-order reduction over replication index.
    AggregateTable& table = run.table;
    table.T = T;
    table.reps = reps;
    table.rank_counts.assign(static_cast<std::size_t>(cs.K), 0);
    std::vector<std::vector<double>> sl(estimators.size()), sp(estimators.size()), fr(estimators.size());
    for (const auto& rep : run.reports) {
        if (rep.failed) {
            ++table.failed;
            continue;
        }
        if (rep.selected_rank >= 0) ++table.rank_counts[static_cast<std::size_t>(rep.selected_rank)];
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            const auto& red = rep.reductions[e];
            sl[e].push_back(red[0]);
            sp[e].push_back(red[1]);
            fr[e].push_back(red[2]);
        }
    }
    for (std::size_t e = 0; e < estimators.size(); ++e) {
        table.estimators.push_back({estimators[e], summarize(sl[e]), summarize(sp[e]), summarize(fr[e])});
    }
    return run;
}

}  // namespace varcov
