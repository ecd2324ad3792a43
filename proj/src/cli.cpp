#include "varcov/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "varcov/error.hpp"
#include "varcov/forecast.hpp"
#include "varcov/io.hpp"
#include "varcov/rrcov.hpp"
#include "varcov/simharness.hpp"
#include "varcov/var.hpp"

namespace varcov::cli {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NumericalFailure:
        case ErrorKind::NotPositiveDefinite:
        case ErrorKind::SingularEstimate:
        case ErrorKind::RankDeficientDesign:
        case ErrorKind::NonCausalModel:
            return kNumericalFailure;
        default:
            return kUsageError;
    }
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    return line + '\n';
}

std::string fmt_num(double v) { return std::isnan(v) ? std::string("NA") : io::format_double(v); }

/// Residual rows computed with the model's own mean and coefficients.
Matrix model_residuals(const VarModel& model, const Matrix& Y) {
    if (Y.cols() != model.K) throw Error(ErrorKind::InvalidInput, "data has the wrong number of series for the model");
    if (Y.rows() <= model.p) throw Error(ErrorKind::InsufficientData, "data is shorter than the model order");
    const Matrix dev = Y.rowwise() - model.mu.transpose();
    const Index n = Y.rows() - model.p;
    Matrix out(n, model.K);
    for (Index s = 0; s < n; ++s) {
        const Index t = s + model.p;
        Vector z = dev.row(t).transpose();
        for (int l = 1; l <= model.p; ++l) z.noalias() -= model.A[static_cast<std::size_t>(l - 1)] * dev.row(t - l).transpose();
        out.row(s) = z.transpose();
    }
    return out;
}

std::string residual_summary_csv(const Matrix& resid, const std::vector<std::string>& names) {
    std::string out = "series,mean,sd,lag1_acf\n";
    const Index n = resid.rows();
    for (Index i = 0; i < resid.cols(); ++i) {
        const double mean = resid.col(i).mean();
        const Vector c = resid.col(i).array() - mean;
        const double c0 = c.squaredNorm() / static_cast<double>(n);
        const double c1 = n > 1 ? c.tail(n - 1).dot(c.head(n - 1)) / static_cast<double>(n) : 0.0;
        out += csv_row({names[static_cast<std::size_t>(i)], fmt_num(mean), fmt_num(std::sqrt(c0)),
                        fmt_num(c0 > 0.0 ? c1 / c0 : 0.0)});
    }
    return out;
}

std::string rank_curve_csv(const std::vector<BicPoint>& curve) {
    std::string out = "d,bic,singular\n";
    for (const auto& pt : curve) out += csv_row({std::to_string(pt.d), fmt_num(pt.bic), pt.singular ? "1" : "0"});
    return out;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string data;
    std::string model_out = "model.json";
    std::string report_dir;
    std::string constraints;
    std::string order_select;
    std::string order_fitter = "full";
    int order = 1;
    std::optional<int> rank;
    bool rank_select = false;
    bool include_isotropic = false;
    int max_iter = 200;
    double tol = 1e-8;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
    const io::Dataset ds = io::read_dataset_csv(a.data);
    const Matrix& Y = ds.values;
    const Index k = Y.cols();

    int p = a.order;
    std::optional<OrderSelection> order_sel;
    if (!a.order_select.empty()) {
        const auto orders = parse_int_list(a.order_select);
        const OrderFitter fitter = a.order_fitter == "rr" ? OrderFitter::TwoStepRR : OrderFitter::OlsFull;
        order_sel = select_order(Y, orders, fitter);
        p = order_sel->p;
    }

    std::vector<int> candidates;
    if (a.rank && !a.rank_select) {
        candidates = {*a.rank};
    } else {
        candidates = default_rank_candidates(k, a.include_isotropic || k == 1);
    }

    VarModel model;
    if (a.constraints.empty()) {
        model = fit_two_step(Y, p, candidates);
    } else {
        const auto positions = io::read_constraints(a.constraints);
        const ConstraintSpec R = ConstraintSpec::from_positions(k, p, positions);
        const IterativeOptions opts{a.max_iter, a.tol};
        const double log_t = std::log(static_cast<double>(Y.rows() - p));
        std::vector<BicPoint> curve;
        std::optional<VarModel> best;
        double best_bic = std::numeric_limits<double>::infinity();
        std::optional<Error> last_error;
        std::sort(candidates.begin(), candidates.end());
        for (int d : candidates) {
            try {
                VarModel m = fit_iterative(Y, p, R, d, opts);
                const double n2 = *std::min_element(m.meta.trace.begin(), m.meta.trace.end());
                const double b = n2 + log_t * (static_cast<double>(R.m()) + rr_param_count(k, d));
                curve.push_back({d, b, false});
                if (b < best_bic) {
                    best_bic = b;
                    best = std::move(m);
                }
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::SingularEstimate) throw;
                curve.push_back({d, std::numeric_limits<double>::quiet_NaN(), true});
                last_error = e;
            }
        }
        if (!best) throw *last_error;
        model = std::move(*best);
        model.meta.rank_curve = std::move(curve);
    }

    io::save_model(a.model_out, model, ds.names);

    const RRCovEstimate& noise = *model.noise_cov;
    out << "procedure=" << model.meta.procedure << '\n'
        << "order=" << model.p << '\n'
        << "rank=" << noise.requested_rank() << '\n'
        << "effective_rank=" << noise.rank() << '\n'
        << "sigma2=" << io::format_double(noise.sigma2()) << '\n'
        << "iterations=" << model.meta.iterations << '\n'
        << "converged=" << (model.meta.converged ? "true" : "false") << '\n';
    if (!model.meta.trace.empty()) out << "neg2_loglik=" << io::format_double(model.meta.trace.back()) << '\n';
    out << "rank_bic\n" << rank_curve_csv(model.meta.rank_curve);
    if (order_sel) {
        out << "order_bic\n";
        for (const auto& pt : order_sel->table) out << pt.p << ',' << fmt_num(pt.bic) << '\n';
    }

    if (!a.report_dir.empty()) {
        const fs::path dir(a.report_dir);
        io::write_text(dir / "rank_bic.csv", rank_curve_csv(model.meta.rank_curve));
        if (order_sel) {
            std::string csv = "p,bic,neg2_loglik,params\n";
            for (const auto& pt : order_sel->table) {
                csv += csv_row({std::to_string(pt.p), fmt_num(pt.bic), fmt_num(pt.neg2_loglik), fmt_num(pt.params)});
            }
            io::write_text(dir / "order_bic.csv", csv);
        }
        std::string trace = "iteration,neg2_loglik\n";
        for (std::size_t i = 0; i < model.meta.trace.size(); ++i) {
            trace += csv_row({std::to_string(i), fmt_num(model.meta.trace[i])});
        }
        io::write_text(dir / "trace.csv", trace);
        io::write_text(dir / "residual_summary.csv", residual_summary_csv(model_residuals(model, Y), ds.names));
    }

    if (!model.meta.converged) {
        out << "warning: iterative fit did not converge within " << a.max_iter << " iterations\n";
        return kNotConverged;
    }
    return kSuccess;
}

// ---------------------------------------------------------------- forecast

struct ForecastArgs {
    std::string model;
    std::string data;
    std::string out_dir;
};

int cmd_forecast(const ForecastArgs& a, std::ostream& out) {
    std::vector<std::string> names;
    const VarModel model = io::load_model(a.model, &names);
    const io::Dataset ds = io::read_dataset_csv(a.data);
    if (ds.values.cols() != model.K) {
        throw Error(ErrorKind::InvalidInput, fmt::format("model has K = {} but data has {} series", model.K,
                                                         ds.values.cols()));
    }
    const Vector yhat = forecast1(model, ds.values);
    const ForecastMse mse = fmse1(model, ds.values);
    const SymMatrix sigma = model.noise_cov->full_matrix();

    std::string fc = csv_row(names);
    std::vector<std::string> cells;
    for (Index i = 0; i < yhat.size(); ++i) cells.push_back(io::format_double(yhat(i)));
    fc += csv_row(cells);

    std::string diag = "series,sigma_z,omega,fmse\n";
    for (Index i = 0; i < model.K; ++i) {
        diag += csv_row({names[static_cast<std::size_t>(i)], io::format_double(sigma(i, i)),
                         io::format_double(mse.omega(i, i)), io::format_double(mse.matrix(i, i))});
    }
    std::vector<std::string> header{"series"};
    header.insert(header.end(), names.begin(), names.end());
    std::string mat = csv_row(header);
    for (Index i = 0; i < model.K; ++i) {
        std::vector<std::string> row{names[static_cast<std::size_t>(i)]};
        for (Index j = 0; j < model.K; ++j) row.push_back(io::format_double(mse.matrix(i, j)));
        mat += csv_row(row);
    }

    out << "forecast\n" << fc << "fmse_diagonal\n" << diag;
    if (!a.out_dir.empty()) {
        const fs::path dir(a.out_dir);
        io::write_text(dir / "forecast.csv", fc);
        io::write_text(dir / "fmse_diag.csv", diag);
        io::write_text(dir / "fmse_matrix.csv", mat);
    }
    return kSuccess;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
    std::string model;
    std::string data;
    std::string out_dir = ".";
    int max_lag = 20;
};

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<std::string> names;
    const VarModel model = io::load_model(a.model, &names);
    if (!model.noise_cov) throw Error(ErrorKind::InvalidInput, "model has no noise covariance");
    if (model.noise_cov->rank() == 0) {
        err << "diagnose: the model's covariance has rank 0, there are no latent dimensions to diagnose\n";
        return kUsageError;
    }
    const io::Dataset ds = io::read_dataset_csv(a.data);
    const Matrix resid = model_residuals(model, ds.values);
    const Matrix scores = latent_scores(*model.noise_cov, resid);
    if (a.max_lag < 0 || a.max_lag >= scores.rows()) {
        throw Error(ErrorKind::InvalidInput, "max-lag must lie in [0, T)");
    }
    const auto ccf = cross_correlations(scores, a.max_lag);
    const double band = 1.96 / std::sqrt(static_cast<double>(scores.rows()));

    std::string csv = "dim_i,dim_j,lag,corr,band\n";
    std::size_t nonzero = 0;
    std::size_t inside = 0;
    for (const auto& e : ccf) {
        csv += csv_row({std::to_string(e.i + 1), std::to_string(e.j + 1), std::to_string(e.lag), io::format_double(e.corr),
                        io::format_double(band)});
        if (e.lag != 0) {
            ++nonzero;
            if (std::abs(e.corr) <= band) ++inside;
        }
    }
    const RRCovEstimate& noise = *model.noise_cov;
    std::vector<std::string> header{"series"};
    for (int d = 0; d < noise.rank(); ++d) header.push_back("u" + std::to_string(d + 1));
    std::string pos = csv_row(header);
    for (Index i = 0; i < model.K; ++i) {
        std::vector<std::string> row{names[static_cast<std::size_t>(i)]};
        for (int d = 0; d < noise.rank(); ++d) row.push_back(io::format_double(noise.U()(i, d)));
        pos += csv_row(row);
    }

    const fs::path dir(a.out_dir);
    io::write_text(dir / "latent_ccf.csv", csv);
    io::write_text(dir / "latent_positions.csv", pos);
    io::write_text(dir / "residual_summary.csv", residual_summary_csv(resid, names));
    out << "latent_dims=" << noise.rank() << '\n'
        << "samples=" << scores.rows() << '\n'
        << "band=" << io::format_double(band) << '\n'
        << "inside_band_fraction=" << io::format_double(nonzero ? static_cast<double>(inside) / static_cast<double>(nonzero) : 1.0)
        << '\n';
    return kSuccess;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string case_kind;
    std::string model;
    Index K = 15;
    Index T = 0;
    Index burn_in = 200;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    if (!a.seed) {
        err << "simulate: --seed is required for reproducible output\n"
            << "usage: varcov simulate (--case I|II|III --K k | --model m.json) --T n --seed s [--out file]\n";
        return kUsageError;
    }
    if (a.case_kind.empty() == a.model.empty()) {
        err << "simulate: give exactly one of --case or --model\n";
        return kUsageError;
    }
    if (a.T < 1) throw Error(ErrorKind::InvalidInput, "--T must be >= 1");
    io::Dataset ds;
    if (!a.case_kind.empty()) {
        const CaseSpec cs = make_case(parse_case_kind(a.case_kind), a.K);
        ds.values = draw_gaussian(chol(cs.Sigma), a.T, *a.seed);
        ds.names = io::default_names(cs.K);
    } else {
        const VarModel model = io::load_model(a.model, &ds.names);
        ds.values = simulate(model, a.T, a.burn_in, *a.seed);
    }
    const std::string csv = io::format_dataset_csv(ds);
    if (a.out.empty()) {
        out << csv;
    } else {
        io::write_text(a.out, csv);
    }
    return kSuccess;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    std::string case_kind;
    Index K = 15;
    std::string t_grid = "50,100,200,400";
    int reps = 500;
    std::uint64_t seed = 1;
    std::string estimators = "rr,lw,ss,sample";
    std::string out_dir = ".";
    bool no_isotropic = false;
    bool center = false;
    std::string ss_variant = "median";
    unsigned threads = 0;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
    const CaseSpec cs = make_case(parse_case_kind(a.case_kind), a.K);
    std::vector<Estimator> est;
    {
        std::stringstream ss(a.estimators);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) est.push_back(parse_estimator(item));
        }
    }
    if (est.empty()) throw Error(ErrorKind::InvalidInput, "no estimators given");
    if (a.ss_variant != "median" && a.ss_variant != "diag") {
        throw Error(ErrorKind::InvalidInput, "--ss-variant must be 'median' or 'diag'");
    }
    HarnessOptions opts;
    opts.center = a.center;
    opts.include_isotropic = !a.no_isotropic;
    opts.ss_variant = a.ss_variant == "diag" ? SsVariant::DiagTarget : SsVariant::ShrinkVariances;
    opts.threads = a.threads;

    std::vector<std::string> t2_header{"T", "reps", "failed"};
    for (Index d = 0; d < cs.K; ++d) t2_header.push_back("d" + std::to_string(d));
    std::string table2 = csv_row(t2_header);
    std::string table3 =
        "T,estimator,sl_reduction,sl_se,mse_spectral_reduction,mse_spectral_se,mse_frobenius_reduction,"
        "mse_frobenius_se\n";

    int total_ok = 0;
    for (int t : parse_int_list(a.t_grid)) {
        const ReplicationRun run = run_replications(cs, t, a.reps, est, a.seed, opts);
        const AggregateTable& tab = run.table;
        total_ok += tab.reps - tab.failed;
        std::vector<std::string> row{std::to_string(t), std::to_string(tab.reps), std::to_string(tab.failed)};
        for (int c : tab.rank_counts) row.push_back(std::to_string(c));
        table2 += csv_row(row);
        for (const auto& s : tab.estimators) {
            table3 += csv_row({std::to_string(t), to_string(s.estimator), fmt_num(s.stein.mean), fmt_num(s.stein.se),
                               fmt_num(s.mse_spectral.mean), fmt_num(s.mse_spectral.se), fmt_num(s.mse_frobenius.mean),
                               fmt_num(s.mse_frobenius.se)});
            out << fmt::format("case={} T={} estimator={} SL={:.1f} ({:.3f}) MSE2={:.1f} ({:.3f}) MSEF={:.1f} ({:.3f})\n",
                               to_string(cs.kind), t, to_string(s.estimator), s.stein.mean, s.stein.se,
                               s.mse_spectral.mean, s.mse_spectral.se, s.mse_frobenius.mean, s.mse_frobenius.se);
        }
        if (tab.failed > 0) out << fmt::format("T={} failed replications: {}\n", t, tab.failed);
    }
    const fs::path dir(a.out_dir);
    io::write_text(dir / "table2.csv", table2);
    io::write_text(dir / "table3.csv", table3);
    return total_ok > 0 ? kSuccess : kNumericalFailure;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    auto to_int = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) throw Error(ErrorKind::ParseError, "bad integer list '" + text + "'");
        return v;
    };
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const int lo = to_int(text.substr(0, dots));
        const int hi = to_int(text.substr(dots + 2));
        if (hi < lo) throw Error(ErrorKind::ParseError, "empty range '" + text + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_int(item));
    if (out.empty()) throw Error(ErrorKind::ParseError, "empty integer list");
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reduced-rank covariance estimation for VAR models"};
    app.name("varcov");
    app.require_subcommand(1);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a VAR model with a reduced-rank noise covariance");
    fit_cmd->add_option("--data", fit.data, "CSV dataset (rows = time)")->required();
    fit_cmd->add_option("--out", fit.model_out, "Model JSON output");
    fit_cmd->add_option("--report-dir", fit.report_dir, "Directory for BIC curves, trace and residual summary");
    auto* order_opt = fit_cmd->add_option("--order", fit.order, "VAR order p");
    fit_cmd->add_option("--order-select", fit.order_select, "Candidate orders, e.g. 0..3")->excludes(order_opt);
    fit_cmd->add_option("--order-fitter", fit.order_fitter, "Covariance used for order BIC: full or rr");
    fit_cmd->add_option("--constraints", fit.constraints, "Free coefficients, one 'lag,row,col' per line");
    auto* rank_opt = fit_cmd->add_option("--rank", fit.rank, "Fixed reduced rank d");
    fit_cmd->add_flag("--rank-select", fit.rank_select, "Select d by minimum BIC")->excludes(rank_opt);
    fit_cmd->add_flag("--include-isotropic", fit.include_isotropic, "Let d = 0 compete in rank selection");
    fit_cmd->add_option("--max-iter", fit.max_iter, "Iteration cap for the constrained procedure");
    fit_cmd->add_option("--tol", fit.tol, "Relative -2logL change that stops the iteration");

    ForecastArgs fc;
    auto* fc_cmd = app.add_subcommand("forecast", "One-step forecast and approximate forecast MSE");
    fc_cmd->add_option("--model", fc.model, "Model JSON")->required();
    fc_cmd->add_option("--data", fc.data, "CSV dataset")->required();
    fc_cmd->add_option("--out-dir", fc.out_dir, "Directory for forecast.csv, fmse_matrix.csv, fmse_diag.csv");

    DiagnoseArgs dg;
    auto* dg_cmd = app.add_subcommand("diagnose", "Latent-score correlation diagnostics");
    dg_cmd->add_option("--model", dg.model, "Model JSON")->required();
    dg_cmd->add_option("--data", dg.data, "CSV dataset")->required();
    dg_cmd->add_option("--max-lag", dg.max_lag, "Largest lag of the correlation functions");
    dg_cmd->add_option("--out-dir", dg.out_dir, "Output directory");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate a dataset from a case or a fitted model");
    sim_cmd->add_option("--case", sim.case_kind, "I, II or III");
    sim_cmd->add_option("--model", sim.model, "Model JSON");
    sim_cmd->add_option("--K", sim.K, "Dimension for --case");
    sim_cmd->add_option("--T", sim.T, "Number of rows")->required();
    sim_cmd->add_option("--burn-in", sim.burn_in, "Discarded warm-up draws for --model");
    sim_cmd->add_option("--seed", sim.seed, "Random seed (required)");
    sim_cmd->add_option("--out", sim.out, "Output CSV (stdout when omitted)");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Covariance estimator comparison over replications");
    bench_cmd->add_option("--case", bench.case_kind, "I, II or III")->required();
    bench_cmd->add_option("--K", bench.K, "Dimension");
    bench_cmd->add_option("--T", bench.t_grid, "Sample sizes, e.g. 50,100,200,400");
    bench_cmd->add_option("--reps", bench.reps, "Replications per sample size");
    bench_cmd->add_option("--seed", bench.seed, "Master seed");
    bench_cmd->add_option("--estimators", bench.estimators, "Subset of rr,lw,ss,sample");
    bench_cmd->add_option("--out-dir", bench.out_dir, "Directory for table2.csv and table3.csv");
    bench_cmd->add_flag("--no-isotropic", bench.no_isotropic, "Exclude d = 0 from the rank search");
    bench_cmd->add_flag("--center", bench.center, "Subtract the sample mean before estimating");
    bench_cmd->add_option("--ss-variant", bench.ss_variant, "median (variances shrunk to median) or diag");
    bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = auto, capped by VARCOV_THREADS)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kSuccess;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsageError;
    }

    try {
        if (*fit_cmd) return cmd_fit(fit, out);
        if (*fc_cmd) return cmd_forecast(fc, out);
        if (*dg_cmd) return cmd_diagnose(dg, out, err);
        if (*sim_cmd) return cmd_simulate(sim, out, err);
        if (*bench_cmd) return cmd_bench(bench, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    return kUsageError;
}

}  // namespace varcov::cli
