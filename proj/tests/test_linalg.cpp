#include "fracms/linalg.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fracms::linalg;

namespace {

DenseMatrix dense_of(const oracle::Mat& m) {
    DenseMatrix d(static_cast<Index>(m.size()), static_cast<Index>(m.size()));
    for (std::size_t r = 0; r < m.size(); ++r)
        for (std::size_t c = 0; c < m.size(); ++c) d(static_cast<Index>(r), static_cast<Index>(c)) = m[r][c];
    return d;
}

} // namespace

TEST_CASE("from_triplets sums duplicates and drops exact zeros") {
    const SparseMatrix a = from_triplets(2, 3, {{0, 1, 1.5}, {0, 1, 2.5}, {1, 2, 3.0}, {1, 2, -3.0}, {1, 0, -1.0}});
    CHECK(a.rows() == 2);
    CHECK(a.cols() == 3);
    CHECK(a.coeff(0, 1) == 4.0);
    CHECK(a.coeff(1, 0) == -1.0);
    CHECK(a.nonZeros() == 2);
}

TEST_CASE("identity, diagonal and norms") {
    const SparseMatrix i = identity(4);
    CHECK(inf_norm(i) == 1.0);
    Vector d(3);
    d << 1.0, -7.0, 2.0;
    const SparseMatrix dm = diagonal(d);
    CHECK(inf_norm(dm) == 7.0);
    CHECK(symmetry_defect(dm) == 0.0);
    const SparseMatrix a = from_triplets(2, 2, {{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 0.5}, {1, 1, 1.0}});
    // ||A||_inf = 3 and the largest asymmetry is 0.5.
    CHECK(inf_norm(a) == 3.0);
    CHECK(symmetry_defect(a) == doctest::Approx(0.5 / 3.0));
    CHECK(symmetry_defect(SparseMatrix(3, 3)) == 0.0);
}

TEST_CASE("principal_submatrix keeps exactly the selected rows and columns") {
    std::mt19937_64 rng(7);
    const oracle::Mat dense = oracle::random_matrix(6, 6, rng);
    const SparseMatrix a = oracle::to_sparse(dense);
    const std::vector<Index> idx = {4, 1, 3};
    const oracle::Mat sub = oracle::to_dense(principal_submatrix(a, idx));
    REQUIRE(sub.size() == 3);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(sub[r][c] == dense[static_cast<std::size_t>(idx[r])][static_cast<std::size_t>(idx[c])]);
}

TEST_CASE("spd_solve matches Gaussian elimination") {
    SUBCASE("identity") {
        Vector b(3);
        b << 1.0, -2.0, 3.0;
        CHECK((spd_solve(identity(3), b) - b).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("diagonal") {
        Vector d(3), b(3);
        d << 2.0, 4.0, 8.0;
        b << 1.0, 1.0, 1.0;
        const Vector x = spd_solve(diagonal(d), b);
        CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(x[1] == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(x[2] == doctest::Approx(0.125).epsilon(1e-15));
    }
    SUBCASE("random 50x50") {
        std::mt19937_64 rng(11);
        const oracle::Mat a = oracle::random_spd(50, rng);
        oracle::Vec b(50);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double& v : b) v = u(rng);
        const oracle::Vec expected = oracle::gauss_solve(a, b);
        const oracle::Vec got = oracle::to_vec(spd_solve(oracle::to_sparse(a), oracle::to_eigen(b)));
        CHECK(oracle::max_abs_diff(got, expected) <= 1e-12 * oracle::max_abs(expected));
    }
    SUBCASE("solver reused for several right-hand sides") {
        std::mt19937_64 rng(12);
        const oracle::Mat a = oracle::random_spd(10, rng);
        const SpdSolver solver(oracle::to_sparse(a));
        for (int k = 0; k < 3; ++k) {
            oracle::Vec b(10, 0.0);
            b[static_cast<std::size_t>(k)] = 1.0;
            const oracle::Vec got = oracle::to_vec(solver.solve(oracle::to_eigen(b)));
            CHECK(oracle::max_abs_diff(got, oracle::gauss_solve(a, b)) <= 1e-13);
        }
    }
}

TEST_CASE("spd_solve rejects an indefinite matrix") {
    const SparseMatrix a = from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 1.0}});
    CHECK_THROWS_AS(SpdSolver{a}, SolverError);
}

TEST_CASE("saddle_solve: minimum-norm split of a unit sum") {
    // min x^T x subject to x0 + x1 = 1 gives x = (0.5, 0.5), and x + B^T mu = 0 gives mu = -0.5.
    const SparseMatrix a = identity(2);
    const SparseMatrix b = from_triplets(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
    Vector g(1);
    g << 1.0;
    const SaddleSolution s = saddle_solve(a, b, g);
    CHECK(s.primal[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.primal[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.multipliers[0] == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("saddle_solve without constraints returns zero") {
    const SaddleSolution s = saddle_solve(identity(3), SparseMatrix(0, 3), Vector(0));
    CHECK(s.primal.size() == 3);
    CHECK(s.primal.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.multipliers.size() == 0);
}

TEST_CASE("saddle_solve matches dense KKT elimination on random systems") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 30, k = 6;
        const oracle::Mat a = oracle::random_spd(n, rng);
        const oracle::Mat b = oracle::random_matrix(k, n, rng);
        oracle::Vec g(k);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (double& v : g) v = u(rng);
        const auto expected = oracle::dense_kkt(a, b, g);
        const SaddleSolution s = saddle_solve(oracle::to_sparse(a), oracle::to_sparse(b), oracle::to_eigen(g));
        CHECK(oracle::max_abs_diff(oracle::to_vec(s.primal), expected.primal) <= 1e-10);
        CHECK(oracle::max_abs_diff(oracle::to_vec(s.multipliers), expected.multipliers) <= 1e-10);
    }
}

TEST_CASE("saddle_solve handles a singular A that is definite on ker B") {
    // Neumann Laplacian on a 1D chain (kernel = constants) with a mean constraint.
    const std::size_t n = 8;
    oracle::Mat a = oracle::zeros(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        a[i][i] += 1.0;
        a[i + 1][i + 1] += 1.0;
        a[i][i + 1] -= 1.0;
        a[i + 1][i] -= 1.0;
    }
    oracle::Mat b = oracle::zeros(2, n);
    for (std::size_t i = 0; i < n / 2; ++i) b[0][i] = 1.0 / (n / 2);
    for (std::size_t i = n / 2; i < n; ++i) b[1][i] = 1.0 / (n / 2);
    const oracle::Vec g = {1.0, 0.0};
    const auto expected = oracle::dense_kkt(a, b, g);
    const SaddleSolution s = saddle_solve(oracle::to_sparse(a), oracle::to_sparse(b), oracle::to_eigen(g));
    CHECK(oracle::max_abs_diff(oracle::to_vec(s.primal), expected.primal) <= 1e-12);
    const oracle::Vec bx = oracle::apply(b, oracle::to_vec(s.primal));
    CHECK(oracle::max_abs_diff(bx, g) <= 1e-13);
}

TEST_CASE("saddle solver reports the first dependent constraint row") {
    const SparseMatrix a = identity(3);
    const SparseMatrix b =
        from_triplets(3, 3, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 0, 2.0}, {2, 1, 2.0}});
    try {
        SaddleSolver solver(a, b);
        FAIL("expected RankDeficientConstraints");
    } catch (const RankDeficientConstraints& e) {
        CHECK(e.row() == 2);
    }
}

TEST_CASE("sym_gen_eig on small pencils matches characteristic polynomial roots") {
    SUBCASE("2x2 standard") {
        DenseMatrix a(2, 2);
        a << 2.0, 1.0, 1.0, 2.0;
        const EigenPairs p = sym_gen_eig(a, Vector::Ones(2), 2);
        CHECK(std::abs(p.values[0] - 1.0) <= 1e-12);
        CHECK(std::abs(p.values[1] - 3.0) <= 1e-12);
        CHECK_FALSE(p.clamped);
    }
    SUBCASE("random 2x2 and 3x3 pencils") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> pos(0.5, 3.0);
        for (std::size_t n : {std::size_t{2}, std::size_t{3}}) {
            for (int trial = 0; trial < 20; ++trial) {
                oracle::Mat g = oracle::random_matrix(n, n, rng);
                oracle::Mat a = oracle::multiply(g, oracle::transpose(g));
                oracle::Vec s(n);
                for (double& v : s) v = pos(rng);
                const oracle::Vec roots = n == 2 ? oracle::pencil_roots_2x2(a, s) : oracle::pencil_roots_3x3(a, s);
                const EigenPairs p = sym_gen_eig(dense_of(a), oracle::to_eigen(s), static_cast<Index>(n));
                double scale = 1.0;
                for (double r : roots) scale = std::max(scale, std::abs(r));
                for (std::size_t k = 0; k < n; ++k)
                    CHECK(std::abs(p.values[static_cast<Index>(k)] - roots[k]) <= 1e-12 * scale);
            }
        }
    }
}

TEST_CASE("sym_gen_eig vectors are S-orthonormal eigenvectors with positive dominant entry") {
    std::mt19937_64 rng(9);
    const std::size_t n = 12;
    const oracle::Mat a = oracle::random_spd(n, rng);
    oracle::Vec s(n);
    std::uniform_real_distribution<double> pos(0.1, 2.0);
    for (double& v : s) v = pos(rng);
    const EigenPairs p = sym_gen_eig(dense_of(a), oracle::to_eigen(s), 5);
    REQUIRE(p.values.size() == 5);
    for (Index k = 0; k + 1 < 5; ++k) CHECK(p.values[k] <= p.values[k + 1]);
    for (Index k = 0; k < 5; ++k) {
        oracle::Vec v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = p.vectors(static_cast<Index>(i), k);
        const oracle::Vec av = oracle::apply(a, v);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(av[i] - p.values[k] * s[i] * v[i]));
        CHECK(res <= 1e-10 * p.values[k]);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
        CHECK(v[arg] > 0.0);
        for (Index l = 0; l < 5; ++l) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += v[i] * s[i] * p.vectors(static_cast<Index>(i), l);
            CHECK(std::abs(dot - (k == l ? 1.0 : 0.0)) <= 1e-12);
        }
    }
}

TEST_CASE("sym_gen_eig clamps oversized requests and validates input") {
    DenseMatrix a = DenseMatrix::Identity(3, 3);
    const EigenPairs p = sym_gen_eig(a, Vector::Ones(3), 10);
    CHECK(p.clamped);
    CHECK(p.values.size() == 3);
    CHECK_THROWS_AS(sym_gen_eig(a, Vector::Zero(3), 1), std::invalid_argument);
    CHECK_THROWS_AS(sym_gen_eig(a, Vector::Ones(2), 1), std::invalid_argument);
}

TEST_CASE("sym_gen_eig with a known null vector") {
    SUBCASE("path Laplacian with tiny uniform weights") {
        // w [1 -1 0; -1 2 -1; 0 -1 1] has eigenvalues w {0, 1, 3}; dividing by s scales them.
        const double w = 1e-5, sv = 2.5e-9;
        DenseMatrix a(3, 3);
        a << w, -w, 0.0, -w, 2.0 * w, -w, 0.0, -w, w;
        const EigenPairs p = sym_gen_eig(a, Vector::Constant(3, sv), Vector::Ones(3), 3);
        CHECK(p.values[0] == 0.0);
        CHECK(std::abs(p.values[1] - w / sv) <= 1e-12 * 3.0 * w / sv);
        CHECK(std::abs(p.values[2] - 3.0 * w / sv) <= 1e-12 * 3.0 * w / sv);
        const double c = 1.0 / std::sqrt(3.0 * sv);
        for (Index i = 0; i < 3; ++i) CHECK(std::abs(p.vectors(i, 0) - c) <= 1e-14 * c);
    }
    SUBCASE("random weighted paths match the characteristic roots") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> pos(0.2, 4.0);
        for (int trial = 0; trial < 20; ++trial) {
            const double w1 = pos(rng), w2 = pos(rng);
            const oracle::Mat a = {{w1, -w1, 0.0}, {-w1, w1 + w2, -w2}, {0.0, -w2, w2}};
            const oracle::Vec s = {pos(rng), pos(rng), pos(rng)};
            const oracle::Vec roots = oracle::pencil_roots_3x3(a, s);
            const EigenPairs p = sym_gen_eig(dense_of(a), oracle::to_eigen(s), Vector::Ones(3), 3);
            const double scale = std::max(1.0, std::abs(roots[2]));
            CHECK(p.values[0] == 0.0);
            for (Index k = 1; k < 3; ++k)
                CHECK(std::abs(p.values[k] - roots[static_cast<std::size_t>(k)]) <= 1e-12 * scale);
            for (Index k = 0; k < 3; ++k)
                for (Index l = 0; l < 3; ++l) {
                    double dot = 0.0;
                    for (Index i = 0; i < 3; ++i) dot += p.vectors(i, k) * s[static_cast<std::size_t>(i)] * p.vectors(i, l);
                    CHECK(std::abs(dot - (k == l ? 1.0 : 0.0)) <= 1e-12);
                }
        }
    }
    SUBCASE("validation") {
        const DenseMatrix a = DenseMatrix::Zero(2, 2);
        CHECK_THROWS_AS(sym_gen_eig(a, Vector::Ones(2), Vector::Ones(3), 1), std::invalid_argument);
        CHECK_THROWS_AS(sym_gen_eig(a, Vector::Ones(2), Vector::Zero(2), 1), std::invalid_argument);
        const EigenPairs one = sym_gen_eig(DenseMatrix::Zero(1, 1), Vector::Constant(1, 4.0), Vector::Ones(1), 1);
        CHECK(one.values[0] == 0.0);
        CHECK(one.vectors(0, 0) == doctest::Approx(0.5));
    }
}

TEST_CASE("triple_product matches dense triple loops") {
    std::mt19937_64 rng(21);
    SUBCASE("R = I") {
        const oracle::Mat a = oracle::random_spd(5, rng);
        const oracle::Mat got = oracle::to_dense(triple_product(identity(5), oracle::to_sparse(a)));
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(got[r][c] - a[r][c]) <= 1e-14 * std::abs(a[r][c]));
    }
    SUBCASE("single row is a quadratic form") {
        const oracle::Mat a = oracle::random_spd(4, rng);
        const oracle::Mat r = oracle::random_matrix(1, 4, rng);
        double q = 0.0;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) q += r[0][i] * a[i][j] * r[0][j];
        const oracle::Mat got = oracle::to_dense(triple_product(oracle::to_sparse(r), oracle::to_sparse(a)));
        CHECK(std::abs(got[0][0] - q) <= 1e-13 * std::abs(q));
    }
    SUBCASE("random rectangular R") {
        const oracle::Mat a = oracle::random_spd(9, rng);
        const oracle::Mat r = oracle::random_matrix(4, 9, rng);
        const oracle::Mat expected = oracle::multiply(oracle::multiply(r, a), oracle::transpose(r));
        const oracle::Mat got = oracle::to_dense(triple_product(oracle::to_sparse(r), oracle::to_sparse(a)));
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(got[i][j] - expected[i][j]) <= 1e-12);
        CHECK(symmetry_defect(triple_product(oracle::to_sparse(r), oracle::to_sparse(a))) == 0.0);
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(triple_product(SparseMatrix(2, 3), identity(4)), std::invalid_argument);
    }
}

TEST_CASE("pivoted_cholesky finds dependent columns") {
    // Columns of G: c0, c1, c0 + c1, c3. Gram matrix has rank 3.
    oracle::Mat g = {{1, 0, 1, 0}, {0, 1, 1, 0}, {0, 0, 0, 1}, {1, 2, 3, 1}};
    const oracle::Mat gram = oracle::multiply(oracle::transpose(g), g);
    const PivotedCholesky p = pivoted_cholesky(dense_of(gram), 1e-10);
    CHECK(p.kept.size() == 3);
    REQUIRE(p.dropped.size() == 1);
    const PivotedCholesky full = pivoted_cholesky(DenseMatrix::Identity(4, 4), 1e-10);
    CHECK(full.dropped.empty());
    // Ties on the unit diagonal go to the lowest index.
    CHECK(full.kept == std::vector<Index>{0, 1, 2, 3});
}
