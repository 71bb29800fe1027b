#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "poisonlab/errors.hpp"
#include "poisonlab/matrix.hpp"
#include "poisonlab/random.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <cmath>

using namespace poisonlab;

namespace {

Matrix reconstruct(const EigenDecomposition& e) {
    const std::size_t n = e.values.size();
    Matrix lambda(n, n);
    for (std::size_t i = 0; i < n; ++i) lambda.at(i, i) = e.values[i];
    return multiply(multiply(e.vectors, lambda), transpose(e.vectors));
}

double orthonormality_error(const Matrix& v) {
    const Matrix gram = multiply(transpose(v), v);
    return testutil::max_abs_diff(gram, Matrix::identity(v.cols));
}

// Roots of det(s_b - lambda * m) = 0 for 3x3 symmetric pencils, via the
// characteristic cubic. Independent of the whitening route under test.
struct CubicRoots {
    double r[3];
};

double det3(const Matrix& a) {
    return a.at(0, 0) * (a.at(1, 1) * a.at(2, 2) - a.at(1, 2) * a.at(2, 1)) -
           a.at(0, 1) * (a.at(1, 0) * a.at(2, 2) - a.at(1, 2) * a.at(2, 0)) +
           a.at(0, 2) * (a.at(1, 0) * a.at(2, 1) - a.at(1, 1) * a.at(2, 0));
}

CubicRoots generalized_eigenvalues_3x3(const Matrix& s_b, const Matrix& m) {
    // p(lambda) = det(s_b - lambda m) is cubic; fit coefficients exactly from
    // four evaluations, then solve the depressed cubic trigonometrically.
    double p[4];
    for (int k = 0; k < 4; ++k) {
        Matrix t = s_b;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) t.at(i, j) -= static_cast<double>(k) * m.at(i, j);
        p[k] = det3(t);
    }
    // Vandermonde on lambda = 0,1,2,3: finite differences give the monomial coefficients
    const double c0 = p[0];
    const double d1 = p[1] - p[0], d2 = p[2] - p[1], d3 = p[3] - p[2];
    const double dd1 = d2 - d1, dd2 = d3 - d2;
    const double ddd = dd2 - dd1;
    const double c3 = ddd / 6.0;
    const double c2 = dd1 / 2.0 - c3 * 3.0;
    const double c1 = d1 - c2 - c3;

    REQUIRE(std::abs(c3) > 1e-12); // m is positive definite, so the cubic is genuine
    const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
    // depressed: t^3 + pt + q with lambda = t - a/3
    const double pp = b - a * a / 3.0;
    const double qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const double disc = -4.0 * pp * pp * pp - 27.0 * qq * qq;
    REQUIRE(disc > -1e-6); // symmetric pencil: all roots real
    const double mag = 2.0 * std::sqrt(std::max(0.0, -pp / 3.0));
    double phi = 0.0;
    if (mag > 0.0) {
        double arg = 3.0 * qq / (pp * mag);
        arg = std::clamp(arg, -1.0, 1.0);
        phi = std::acos(arg) / 3.0;
    }
    CubicRoots roots;
    for (int k = 0; k < 3; ++k)
        roots.r[k] = mag * std::cos(phi - 2.0 * M_PI * static_cast<double>(k) / 3.0) - a / 3.0;
    std::sort(roots.r, roots.r + 3, std::greater<>());
    return roots;
}

// Null-space direction of the (rank-2) 3x3 matrix s_b - lambda m via the
// largest cross product of two rows.
std::vector<double> pencil_direction(const Matrix& s_b, const Matrix& m, double lambda) {
    Matrix t = s_b;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) t.at(i, j) -= lambda * m.at(i, j);
    auto cross = [&](std::size_t r0, std::size_t r1) {
        return std::vector<double>{
            t.at(r0, 1) * t.at(r1, 2) - t.at(r0, 2) * t.at(r1, 1),
            t.at(r0, 2) * t.at(r1, 0) - t.at(r0, 0) * t.at(r1, 2),
            t.at(r0, 0) * t.at(r1, 1) - t.at(r0, 1) * t.at(r1, 0)};
    };
    std::vector<double> best;
    double best_norm = -1.0;
    for (auto [r0, r1] : {std::pair<std::size_t, std::size_t>{0, 1}, {0, 2}, {1, 2}}) {
        auto v = cross(r0, r1);
        const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if (norm > best_norm) {
            best_norm = norm;
            best = v;
        }
    }
    for (double& x : best) x /= best_norm;
    return best;
}

} // namespace

TEST_CASE("sym_eig: identity matrix") {
    const EigenDecomposition e = sym_eig(Matrix::identity(3));
    for (double v : e.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(orthonormality_error(e.vectors) < 1e-10);
}

TEST_CASE("sym_eig: diagonal matrix is sorted with axis-aligned vectors") {
    Matrix a(3, 3);
    a.at(0, 0) = 5.0;
    a.at(1, 1) = 2.0;
    a.at(2, 2) = -1.0;
    const EigenDecomposition e = sym_eig(a);
    CHECK(e.values[0] == doctest::Approx(5.0));
    CHECK(e.values[1] == doctest::Approx(2.0));
    CHECK(e.values[2] == doctest::Approx(-1.0));
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(e.vectors.at(j, j) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("sym_eig: reconstruction oracle on random symmetric matrices") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        RandomStream stream(seed, "sym-eig-test");
        const Matrix a = testutil::random_symmetric(6, stream);
        const EigenDecomposition e = sym_eig(a);

        CHECK(testutil::max_abs_diff(reconstruct(e), a) < 1e-8);
        CHECK(orthonormality_error(e.vectors) < 1e-8);
        CHECK(std::is_sorted(e.values.begin(), e.values.end(), std::greater<>()));

        // A v_i = lambda_i v_i per column
        for (std::size_t j = 0; j < 6; ++j) {
            for (std::size_t i = 0; i < 6; ++i) {
                double av = 0.0;
                for (std::size_t k = 0; k < 6; ++k) av += a.at(i, k) * e.vectors.at(k, j);
                CHECK(std::abs(av - e.values[j] * e.vectors.at(i, j)) < 1e-8);
            }
        }
    }
}

TEST_CASE("sym_eig: rejects bad input") {
    CHECK_THROWS_AS(sym_eig(Matrix(2, 3)), DimensionError);
    Matrix asym(2, 2);
    asym.at(0, 1) = 1.0;
    asym.at(1, 0) = 2.0;
    CHECK_THROWS_AS(sym_eig(asym), DimensionError);
}

TEST_CASE("generalized directions: isotropic within-class scatter") {
    Matrix s_w = Matrix::identity(2);
    Matrix s_b(2, 2);
    s_b.at(0, 0) = 4.0;
    s_b.at(1, 1) = 1.0;
    const Matrix dirs = generalized_eig_directions(s_b, s_w, 1, 0.0);
    CHECK(std::abs(dirs.at(0, 0) - 1.0) < 1e-10);
    CHECK(std::abs(dirs.at(1, 0)) < 1e-10);
}

TEST_CASE("generalized directions: zero between-class scatter gives zero eigenvalues") {
    RandomStream stream(3, "gen-eig-test");
    const Matrix s_w = testutil::random_spd(3, stream);
    const Matrix s_b(3, 3);
    const Matrix dirs = generalized_eig_directions(s_b, s_w, 3, 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
        double quad = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t k = 0; k < 3; ++k)
                quad += dirs.at(i, j) * s_b.at(i, k) * dirs.at(k, j);
        CHECK(std::abs(quad) < 1e-12);
    }
}

TEST_CASE("generalized directions: 3x3 characteristic-polynomial oracle") {
    std::size_t tested = 0;
    for (std::uint64_t seed = 1; seed <= 30 && tested < 10; ++seed) {
        RandomStream stream(seed, "gen-eig-oracle");
        const Matrix s_b = testutil::random_symmetric(3, stream, -2.0, 2.0);
        const Matrix s_w = testutil::random_spd(3, stream);
        const double ridge = default_ridge(s_w);

        Matrix m = s_w;
        for (std::size_t i = 0; i < 3; ++i) m.at(i, i) += ridge;
        const CubicRoots roots = generalized_eigenvalues_3x3(s_b, m);

        // skip near-degenerate pencils where directions are ill-conditioned
        if (roots.r[0] - roots.r[1] < 0.1 || roots.r[1] - roots.r[2] < 0.1) continue;
        ++tested;

        const Matrix dirs = generalized_eig_directions(s_b, s_w, 3, ridge);
        Matrix expected(3, 3);
        for (std::size_t j = 0; j < 3; ++j) {
            const auto v = pencil_direction(s_b, m, roots.r[j]);
            for (std::size_t i = 0; i < 3; ++i) expected.at(i, j) = v[i];
        }
        CHECK(testutil::direction_mismatch(dirs, expected) < 1e-6);
    }
    CHECK(tested >= 10);
}

TEST_CASE("generalized directions: invariant under simultaneous rotation") {
    RandomStream stream(11, "rotation-test");
    const Matrix s_b = testutil::random_symmetric(3, stream, -2.0, 2.0);
    const Matrix s_w = testutil::random_spd(3, stream);

    // rotation from two plane rotations
    Matrix q = Matrix::identity(3);
    auto rotate = [&](std::size_t i, std::size_t j, double angle) {
        Matrix r = Matrix::identity(3);
        r.at(i, i) = std::cos(angle);
        r.at(j, j) = std::cos(angle);
        r.at(i, j) = -std::sin(angle);
        r.at(j, i) = std::sin(angle);
        q = multiply(q, r);
    };
    rotate(0, 1, 0.7);
    rotate(1, 2, -1.2);

    const Matrix s_b_rot = multiply(multiply(q, s_b), transpose(q));
    const Matrix s_w_rot = multiply(multiply(q, s_w), transpose(q));

    const double ridge = 1e-8;
    const Matrix dirs = generalized_eig_directions(s_b, s_w, 2, ridge);
    const Matrix dirs_rot = generalized_eig_directions(s_b_rot, s_w_rot, 2, ridge);
    CHECK(testutil::direction_mismatch(dirs_rot, multiply(q, dirs)) < 1e-6);
}

TEST_CASE("generalized directions: singular scatter demands a ridge") {
    const Matrix s_w(2, 2); // all zero
    Matrix s_b = Matrix::identity(2);
    CHECK_THROWS_AS(generalized_eig_directions(s_b, s_w, 1, 0.0), SingularityError);
    CHECK_NOTHROW(generalized_eig_directions(s_b, s_w, 1, 1e-3));
}

TEST_CASE("default_ridge follows trace scaling") {
    Matrix s_w = Matrix::identity(4);
    s_w.at(0, 0) = 3.0;
    CHECK(default_ridge(s_w) == doctest::Approx(1e-6 * 6.0 / 4.0));
}

TEST_CASE("RandomStream: replay is byte-identical") {
    RandomStream a(42, "poison-sampling");
    RandomStream b(42, "poison-sampling");
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());

    RandomStream c(42, "poison-sampling");
    RandomStream d(42, "poison-sampling");
    for (int i = 0; i < 100; ++i) {
        REQUIRE(c.uniform() == d.uniform());
        REQUIRE(c.normal() == d.normal());
    }
}

TEST_CASE("RandomStream: purpose label separates streams") {
    RandomStream a(42, "init");
    RandomStream b(42, "dataset");
    bool differ = false;
    for (int i = 0; i < 10 && !differ; ++i) differ = a.next_u64() != b.next_u64();
    CHECK(differ);
}

TEST_CASE("RandomStream: fork is deterministic and position-independent") {
    RandomStream a(7, "root");
    RandomStream b(7, "root");
    b.next_u64(); // advance one stream
    RandomStream fa = a.fork("child");
    RandomStream fb = b.fork("child");
    for (int i = 0; i < 100; ++i) REQUIRE(fa.next_u64() == fb.next_u64());
}

TEST_CASE("RandomStream: uniform_int stays in range") {
    RandomStream s(5, "range");
    for (int i = 0; i < 1000; ++i) CHECK(s.uniform_int(7) < 7);
    CHECK_THROWS_AS(s.uniform_int(0), InputError);
}

TEST_CASE("matrix multiply shape checking") {
    CHECK_THROWS_AS(multiply(Matrix(2, 3), Matrix(2, 3)), DimensionError);
    const Matrix i2 = Matrix::identity(2);
    Matrix a(2, 2);
    a.at(0, 1) = 2.5;
    CHECK(testutil::max_abs_diff(multiply(i2, a), a) == 0.0);
}
