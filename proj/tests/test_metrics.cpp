#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "varcov/error.hpp"
#include "varcov/metrics.hpp"

using namespace varcov;

TEST_CASE("Stein's loss examples") {
    std::mt19937_64 rng(61);
    const SymMatrix truth = testsupport::random_spd(6, rng);
    CHECK(steins_loss(truth, truth) == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    const SymMatrix twice = SymMatrix::from_lower(2.0 * truth.dense());
    CHECK(steins_loss(twice, truth) == doctest::Approx(6.0 * (1.0 - std::log(2.0))).epsilon(1e-12));
}

TEST_CASE("Stein's loss matches the trace/log-det definition") {
    std::mt19937_64 rng(62);
    for (int r = 0; r < 10; ++r) {
        const Index k = 2 + r;
        const SymMatrix e = testsupport::random_spd(k, rng), t = testsupport::random_spd(k, rng);
        const Matrix m = e.dense() * t.dense().inverse();
        const double ref = m.trace() - std::log(m.determinant()) - static_cast<double>(k);
        CHECK(steins_loss(e, t) == doctest::Approx(ref).epsilon(1e-10));
        CHECK(steins_loss(e, t) >= 0.0);
    }
    CHECK_THROWS_AS(steins_loss(SymMatrix::identity(2), SymMatrix(2)), Error);
}

TEST_CASE("MSE norm conventions") {
    const SymMatrix z = SymMatrix::identity(2);
    Vector d(2);
    d << 3, 0;
    const SymMatrix a = SymMatrix::from_lower(z.dense() + Matrix(d.asDiagonal()));
    CHECK(mse_loss(a, z) == doctest::Approx(9.0));
    CHECK(mse_loss(a, z, MseNorm::Frobenius) == doctest::Approx(9.0));
    d << 3, 4;
    const SymMatrix b = SymMatrix::from_lower(z.dense() + Matrix(d.asDiagonal()));
    CHECK(mse_loss(b, z) == doctest::Approx(16.0));
    CHECK(mse_loss(b, z, MseNorm::Frobenius) == doctest::Approx(25.0));
    CHECK(mse_loss(z, z) == 0.0);
    CHECK_THROWS_AS(mse_loss(z, SymMatrix::identity(3)), Error);
}

TEST_CASE("spectral MSE is the squared largest singular value") {
    std::mt19937_64 rng(63);
    const SymMatrix a = testsupport::random_spd(5, rng), b = testsupport::random_spd(5, rng);
    Eigen::JacobiSVD<Matrix> svd(a.dense() - b.dense());
    CHECK(mse_loss(a, b) == doctest::Approx(std::pow(svd.singularValues()(0), 2)).epsilon(1e-12));
}

TEST_CASE("percentage reduction") {
    CHECK(pct_reduction(2.0, 2.0) == 0.0);
    CHECK(pct_reduction(0.0, 2.0) == 100.0);
    CHECK(pct_reduction(0.008, 1.0) == doctest::Approx(99.2));
    CHECK_THROWS_AS(pct_reduction(1.0, 0.0), Error);
}

TEST_CASE("evaluate_losses fills every field") {
    const auto r = evaluate_losses("x", SymMatrix::identity(3), SymMatrix::identity(3));
    CHECK(r.estimator_tag == "x");
    CHECK(r.stein == doctest::Approx(0.0));
    CHECK(r.mse == 0.0);
    CHECK(r.mse_frobenius == 0.0);
}
