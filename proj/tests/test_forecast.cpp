#include <doctest.h>

#include <cmath>
#include <complex>

#include "support.hpp"
#include "varcov/error.hpp"
#include "varcov/forecast.hpp"

using namespace varcov;
using testsupport::max_abs_diff;

namespace {

RRCovEstimate iso(Index k, double s2) { return RRCovEstimate(Matrix(k, 0), Vector(0), s2, 0, 0); }

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an exception");
    return ErrorKind::InvalidInput;
}

}  // namespace

TEST_CASE("companion matrix examples") {
    Matrix a(2, 2);
    a << 0.1, 0.2, 0.3, 0.4;
    const auto m1 = testsupport::make_model({a}, iso(2, 1.0));
    CHECK(companion_matrix(m1) == a);

    Matrix a1(1, 1), a2(1, 1);
    a1 << 0.5;
    a2 << -0.2;
    const auto m2 = testsupport::make_model({a1, a2}, iso(1, 1.0));
    Matrix expect(2, 2);
    expect << 0.5, -0.2, 1, 0;
    CHECK(companion_matrix(m2) == expect);

    const auto m0 = testsupport::make_model({}, iso(2, 1.0));
    CHECK(kind_of([&] { companion_matrix(m0); }) == ErrorKind::InvalidOrder);
    CHECK(is_causal(m0));
}

TEST_CASE("causality agrees with the roots of the characteristic polynomial") {
    // Scalar AR(2): causal iff both roots of z^2 - a1 z - a2 lie inside the unit circle.
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int r = 0; r < 200; ++r) {
        const double a1 = u(rng), a2 = u(rng) * 0.6;
        const std::complex<double> disc = std::sqrt(std::complex<double>(a1 * a1 + 4 * a2, 0.0));
        const double rho = std::max(std::abs((a1 + disc) / 2.0), std::abs((a1 - disc) / 2.0));
        if (std::abs(rho - 1.0) < 1e-6) continue;
        Matrix m1(1, 1), m2(1, 1);
        m1 << a1;
        m2 << a2;
        CHECK(is_causal(testsupport::make_model({m1, m2}, iso(1, 1.0))) == (rho < 1.0));
    }
}

TEST_CASE("stationary covariance: zero dynamics and the AR(1) closed form") {
    Matrix zero = Matrix::Zero(3, 3);
    std::mt19937_64 rng(92);
    const auto noise = testsupport::random_rr(3, 1, rng, 0.4);
    const auto cf0 = companion(testsupport::make_model({zero}, noise));
    CHECK(max_abs_diff(stationary_cov(cf0).dense(), noise.full_matrix().dense()) < 1e-15);

    for (double a : {-0.95, -0.3, 0.0, 0.5, 0.9, 0.99}) {
        Matrix m(1, 1);
        m << a;
        const auto cf = companion(testsupport::make_model({m}, iso(1, 2.5)));
        const double exact = 2.5 / (1.0 - a * a);
        for (auto method : {LyapunovMethod::VecSolve, LyapunovMethod::FixedPoint}) {
            CHECK(std::abs(stationary_cov(cf, method)(0, 0) - exact) <= 1e-10 * exact);
        }
    }
}

TEST_CASE("vec-solve and fixed-point Lyapunov paths agree") {
    std::mt19937_64 rng(93);
    for (int r = 0; r < 15; ++r) {
        const Index k = 2 + r % 4;
        const int p = 1 + r % 3;
        const auto m = testsupport::make_model(testsupport::random_causal_coefs(k, p, rng, 0.5 + 0.03 * r),
                                               testsupport::random_rr(k, 1, rng, 0.5));
        const auto cf = companion(m);
        const auto g1 = stationary_cov(cf, LyapunovMethod::VecSolve);
        const auto g2 = stationary_cov(cf, LyapunovMethod::FixedPoint);
        CHECK((g1.dense() - g2.dense()).norm() / g1.dense().norm() < 1e-8);
        CHECK(lyapunov_residual(cf, g1) < 1e-8);
        CHECK(lyapunov_residual(cf, g2) < 1e-8);
    }
}

TEST_CASE("large systems use the fixed-point path") {
    std::mt19937_64 rng(94);
    const auto m = testsupport::make_model(testsupport::random_causal_coefs(25, 2, rng, 0.9),
                                           testsupport::random_rr(25, 3, rng, 0.5));
    const auto cf = companion(m);
    CHECK(cf.Psi.rows() > kVecSolveMaxDim);
    CHECK(lyapunov_residual(cf, stationary_cov(cf)) < 1e-8);
}

TEST_CASE("non-causal systems are rejected by the Lyapunov solver") {
    const auto m = testsupport::make_model({1.2 * Matrix::Identity(2, 2)}, iso(2, 1.0));
    CHECK(kind_of([&] { stationary_cov(companion(m)); }) == ErrorKind::NonCausalModel);
}

TEST_CASE("omega and forecast MSE") {
    std::mt19937_64 rng(95);
    Matrix a(1, 1);
    a << 0.5;
    const auto m = testsupport::make_model({a}, iso(1, 1.0));

    // All predictors zero: no parameter-uncertainty term.
    const Matrix zeros = Matrix::Zero(30, 1);
    const auto z = fmse1(m, zeros);
    CHECK(z.omega(0, 0) == 0.0);
    CHECK(z.matrix(0, 0) == 1.0);

    // Scalar identity: omega = sigma2 * mean(y_t^2) / gamma / n.
    const Matrix y = simulate(m, 200, 50, 3);
    const auto f = fmse1(m, y);
    const double gamma = 1.0 / (1.0 - 0.25);
    double q = 0.0;
    for (Index t = 0; t < 199; ++t) q += std::pow(y(t, 0) - m.mu(0), 2) / gamma;
    q /= 199.0;
    CHECK(f.mean_quadratic_form == doctest::Approx(q).epsilon(1e-12));
    CHECK(f.omega(0, 0) == doctest::Approx(q / 199.0).epsilon(1e-12));
    CHECK(f.matrix(0, 0) >= m.noise_cov->full_matrix()(0, 0));

    // Omega is PSD, so the forecast MSE dominates Sigma_Z.
    const auto mk = testsupport::make_model(testsupport::random_causal_coefs(4, 2, rng, 0.7),
                                            testsupport::random_rr(4, 2, rng, 0.4));
    const auto fk = fmse1(mk, simulate(mk, 150, 50, 4));
    CHECK(eigh(fk.omega).values.minCoeff() > -1e-14);
    for (Index i = 0; i < 4; ++i) CHECK(fk.matrix(i, i) >= mk.noise_cov->full_matrix()(i, i));

    const auto m0 = testsupport::make_model({}, iso(2, 1.0));
    CHECK(fmse1(m0, Matrix::Ones(5, 2)).omega.dense().isZero());
}

TEST_CASE("one-step forecasts") {
    Vector mu(2);
    mu << 1.5, -2.0;
    const auto zero = testsupport::make_model({Matrix::Zero(2, 2)}, iso(2, 1.0), mu);
    Matrix y(3, 2);
    y << 1, 2, 3, 4, 5, 6;
    CHECK(forecast1(zero, y) == mu);

    const auto unit = testsupport::make_model({Matrix::Identity(2, 2)}, iso(2, 1.0), mu);
    CHECK(max_abs_diff(forecast1(unit, y), y.row(2).transpose()) < 1e-15);

    Matrix a1(1, 1), a2(1, 1);
    a1 << 0.5;
    a2 << 0.25;
    Vector m1(1);
    m1 << 1.0;
    const auto ar2 = testsupport::make_model({a1, a2}, iso(1, 1.0), m1);
    Matrix h(3, 1);
    h << 9, 3, 5;
    CHECK(forecast1(ar2, h)(0) == doctest::Approx(1.0 + 0.5 * 4.0 + 0.25 * 2.0));
    CHECK(kind_of([&] { forecast1(ar2, h.topRows(1)); }) == ErrorKind::InsufficientData);
}

TEST_CASE("forecast MSE is calibrated on a small Monte Carlo") {
    std::mt19937_64 rng(96);
    Matrix a(3, 3);
    a << 0.5, 0.1, 0.0, 0.0, 0.4, 0.2, 0.1, 0.0, 0.3;
    const auto truth = testsupport::make_model({a}, testsupport::random_rr(3, 1, rng, 0.5));
    const Index T = 100, H = 20;
    Vector emp = Vector::Zero(3), pred = Vector::Zero(3);
    const int reps = 100;
    for (int r = 0; r < reps; ++r) {
        const Matrix y = simulate(truth, T + H, 100, 7000 + static_cast<std::uint64_t>(r));
        const std::vector<int> cands{1, 2};
        const auto m = fit_two_step(y.topRows(T), 1, cands);
        const auto f = fmse1(m, y.topRows(T));
        for (Index i = 0; i < 3; ++i) pred(i) += f.matrix(i, i);
        for (Index h = 0; h < H; ++h) {
            const Vector e = y.row(T + h).transpose() - forecast1(m, y.topRows(T + h));
            emp += e.cwiseAbs2() / static_cast<double>(H);
        }
    }
    for (Index i = 0; i < 3; ++i) CHECK(std::abs(emp(i) / pred(i) - 1.0) < 0.15);
}
