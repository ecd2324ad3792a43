#include <doctest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "varcov/error.hpp"
#include "varcov/linalg.hpp"

using namespace varcov;
using testsupport::max_abs_diff;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
    Index i = 0;
    for (const auto& r : rows) {
        Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

bool sign_convention_holds(const Matrix& v) {
    for (Index c = 0; c < v.cols(); ++c) {
        Index arg = 0;
        for (Index i = 1; i < v.rows(); ++i)
            if (std::abs(v(i, c)) > std::abs(v(arg, c))) arg = i;
        if (v(arg, c) < 0.0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("eigh on the identity") {
    const auto es = eigh(SymMatrix::identity(3));
    CHECK(max_abs_diff(es.values, Vector::Ones(3)) < 1e-14);
    CHECK(max_abs_diff(es.vectors.transpose() * es.vectors, Matrix::Identity(3, 3)) < 1e-14);
    CHECK(sign_convention_holds(es.vectors));
}

TEST_CASE("eigh on diag(3,1,2) gives sorted values and signed unit vectors") {
    Vector d(3);
    d << 3, 1, 2;
    const auto es = eigh(SymMatrix::diagonal(d));
    CHECK(es.values(0) == doctest::Approx(3));
    CHECK(es.values(1) == doctest::Approx(2));
    CHECK(es.values(2) == doctest::Approx(1));
    const Matrix expect = mat({{1, 0, 0}, {0, 0, 1}, {0, 1, 0}});
    CHECK(max_abs_diff(es.vectors, expect) < 1e-14);
}

TEST_CASE("eigh on [[2,1],[1,2]]") {
    const auto es = eigh(SymMatrix::from_lower(mat({{2, 1}, {1, 2}})));
    CHECK(es.values(0) == doctest::Approx(3).epsilon(1e-14));
    CHECK(es.values(1) == doctest::Approx(1).epsilon(1e-14));
    CHECK(es.vectors(0, 0) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(es.vectors(1, 0) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("eigh reconstructs random symmetric matrices") {
    std::mt19937_64 rng(21);
    for (int r = 0; r < 20; ++r) {
        const Index k = 2 + r % 9;
        const Matrix g = testsupport::gaussian_matrix(k, k, rng);
        const SymMatrix s = SymMatrix::symmetrize(g + g.transpose());
        const auto es = eigh(s);
        CHECK(max_abs_diff(es.vectors * es.values.asDiagonal() * es.vectors.transpose(), s.dense()) < 1e-12);
        for (Index i = 1; i < k; ++i) CHECK(es.values(i - 1) >= es.values(i));
        CHECK(sign_convention_holds(es.vectors));
    }
}

TEST_CASE("eigh rejects non-finite input") {
    Matrix m = Matrix::Identity(2, 2);
    m(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(eigh(SymMatrix::from_lower(m)), Error);
}

TEST_CASE("SymMatrix mirrors the lower triangle exactly") {
    const auto s = SymMatrix::from_lower(mat({{1, 99}, {2, 3}}));
    CHECK(s(0, 1) == 2.0);
    CHECK(s(1, 0) == 2.0);
    CHECK_THROWS_AS(SymMatrix::from_lower(Matrix(2, 3)), Error);
}

TEST_CASE("kron examples") {
    const Matrix b = mat({{1, 2}, {3, 4}});
    Matrix blk = Matrix::Zero(4, 4);
    blk.topLeftCorner(2, 2) = b;
    blk.bottomRightCorner(2, 2) = b;
    CHECK(max_abs_diff(kron(Matrix::Identity(2, 2), b), blk) == 0.0);

    Matrix perm = Matrix::Zero(4, 4);
    perm.topRightCorner(2, 2).setIdentity();
    perm.bottomLeftCorner(2, 2).setIdentity();
    CHECK(max_abs_diff(kron(mat({{0, 1}, {1, 0}}), Matrix::Identity(2, 2)), perm) == 0.0);

    CHECK(max_abs_diff(kron(mat({{1, 2}}), mat({{3}, {4}})), mat({{3, 6}, {4, 8}})) == 0.0);
}

TEST_CASE("kron mixed-product identity with vec") {
    std::mt19937_64 rng(22);
    const Matrix a = testsupport::gaussian_matrix(3, 4, rng);
    const Matrix x = testsupport::gaussian_matrix(4, 2, rng);
    const Matrix b = testsupport::gaussian_matrix(2, 5, rng);
    // vec(A X B) = (B^T kron A) vec(X)
    CHECK(max_abs_diff(vec(a * x * b), kron(b.transpose(), a) * vec(x)) < 1e-12);
}

TEST_CASE("vec and unvec") {
    Vector expect(4);
    expect << 1, 2, 3, 4;
    CHECK(max_abs_diff(vec(mat({{1, 3}, {2, 4}})), expect) == 0.0);
    const Matrix col = mat({{5}, {6}, {7}});
    CHECK(max_abs_diff(vec(col), col) == 0.0);
    CHECK(max_abs_diff(unvec(expect, 2, 2), mat({{1, 3}, {2, 4}})) == 0.0);
    CHECK_THROWS_AS(unvec(expect, 3, 2), Error);
}

TEST_CASE("chol examples") {
    CHECK(max_abs_diff(chol(SymMatrix::identity(4)), Matrix::Identity(4, 4)) == 0.0);
    Vector d(2);
    d << 4, 9;
    CHECK(max_abs_diff(chol(SymMatrix::diagonal(d)), mat({{2, 0}, {0, 3}})) < 1e-15);
    const auto m = SymMatrix::from_lower(mat({{2, 1}, {1, 2}}));
    const Matrix l = chol(m);
    CHECK(max_abs_diff(l * l.transpose(), m.dense()) < 1e-12);
    CHECK(l(0, 1) == 0.0);
    CHECK_THROWS_AS(chol(SymMatrix::from_lower(mat({{1, 2}, {2, 1}}))), Error);
    try {
        chol(SymMatrix::from_lower(mat({{1, 2}, {2, 1}})));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
    }
}

TEST_CASE("condition number") {
    CHECK(condition_number(SymMatrix::identity(5)) == doctest::Approx(1.0));
    Vector d(2);
    d << 10, 1;
    CHECK(condition_number(SymMatrix::diagonal(d)) == doctest::Approx(10.0));
    CHECK(std::isinf(condition_number(SymMatrix::from_lower(mat({{1, 1}, {1, 1}})))));
}

TEST_CASE("spectral radius of a rotation-scaling matrix") {
    const double r = 0.9, th = 0.7;
    const Matrix m = r * mat({{std::cos(th), -std::sin(th)}, {std::sin(th), std::cos(th)}});
    CHECK(spectral_radius(m) == doctest::Approx(r).epsilon(1e-12));
}
