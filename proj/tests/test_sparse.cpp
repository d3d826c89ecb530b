#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "flexamg/errors.hpp"
#include "flexamg/matrix_market.hpp"
#include "flexamg/problems.hpp"
#include "flexamg/sparse.hpp"
#include "support.hpp"

using namespace flexamg;
using testing::dense;
using testing::rel_diff;
using testing::vec;

namespace {

void check_invariants(const SparseMatrix& a)
{
    const auto offs = a.row_offsets();
    REQUIRE(offs.size() == a.rows() + 1);
    CHECK(offs[0] == 0);
    CHECK(offs.back() == a.nnz());
    for (Index i = 0; i < a.rows(); ++i) {
        CHECK(offs[i] <= offs[i + 1]);
        auto cols = a.row_cols(i);
        for (Index k = 0; k < cols.size(); ++k) {
            CHECK(cols[k] < a.cols());
            if (k > 0) CHECK(cols[k - 1] < cols[k]);
        }
    }
}

} // namespace

TEST_CASE("from_triplets")
{
    SUBCASE("diagonal entries give the identity")
    {
        const std::vector<Triplet> t{{0, 0, 1.0}, {1, 1, 1.0}};
        CHECK(from_triplets(2, 2, t) == SparseMatrix::identity(2));
    }
    SUBCASE("duplicates are summed")
    {
        const std::vector<Triplet> t{{0, 1, 2.0}, {0, 1, 3.0}};
        const SparseMatrix a = from_triplets(2, 2, t);
        CHECK(a.nnz() == 1);
        CHECK(a.at(0, 1) == 5.0);
    }
    SUBCASE("entries summing to zero disappear")
    {
        const std::vector<Triplet> t{{1, 0, 2.0}, {1, 0, -2.0}, {0, 0, 1.0}};
        CHECK(from_triplets(2, 2, t).nnz() == 1);
    }
    SUBCASE("out of range index")
    {
        const std::vector<Triplet> t{{0, 2, 1.0}};
        CHECK_THROWS_AS(from_triplets(2, 2, t), StructuralError);
    }
    SUBCASE("hand-written 5-point stencil on a 5x5 grid matches the generator")
    {
        // 3x3 interior points, h = 1/4
        std::vector<Triplet> t;
        auto id = [](int i, int j) { return static_cast<Index>(j * 3 + i); };
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i) {
                t.push_back({id(i, j), id(i, j), 4.0});
                if (i > 0) t.push_back({id(i, j), id(i - 1, j), -1.0});
                if (i < 2) t.push_back({id(i, j), id(i + 1, j), -1.0});
                if (j > 0) t.push_back({id(i, j), id(i, j - 1), -1.0});
                if (j < 2) t.push_back({id(i, j), id(i, j + 1), -1.0});
            }
        std::reverse(t.begin(), t.end());
        CHECK(from_triplets(9, 9, t) == poisson_2d(5).matrix);
    }
    SUBCASE("poisson_2d(3) is the 1x1 matrix [4]")
    {
        const std::vector<Triplet> t{{0, 0, 4.0}};
        CHECK(from_triplets(1, 1, t) == poisson_2d(3).matrix);
    }
}

TEST_CASE("CSR constructor rejects broken arrays")
{
    CHECK_THROWS_AS(SparseMatrix(2, 2, {0, 1, 2}, {1, 0}, {1.0}), StructuralError);
    CHECK_THROWS_AS(SparseMatrix(1, 3, {0, 2}, {2, 1}, {1.0, 1.0}), StructuralError);
    CHECK_THROWS_AS(SparseMatrix(1, 3, {0, 2}, {1, 1}, {1.0, 1.0}), StructuralError);
    CHECK_THROWS_AS(SparseMatrix(1, 2, {0, 1}, {2}, {1.0}), StructuralError);
    CHECK_NOTHROW(SparseMatrix(1, 3, {0, 2}, {0, 2}, {1.0, 0.0}));
}

TEST_CASE("spmv")
{
    Rng rng(11);
    const auto x = testing::random_vector(6, rng);
    CHECK(spmv(SparseMatrix::identity(6), x) == x);
    CHECK(spmv(from_triplets(6, 6, {}), x) == Vector(6, 0.0));

    const ProblemInstance p = poisson_2d(6);
    const Vector ones(p.matrix.cols(), 1.0);
    const Eigen::VectorXd expected = dense(p.matrix) * Eigen::VectorXd::Ones(p.matrix.cols());
    const Vector y = spmv(p.matrix, ones);
    for (Index i = 0; i < y.size(); ++i) CHECK(y[i] == expected[i]);
    // Interior rows sum to zero, corners keep two missing neighbours.
    CHECK(y[0] == 2.0);
    CHECK(y[1] == 1.0);
    CHECK(y[5] == 0.0);

    const SparseMatrix r = testing::random_sparse(9, 5, 0.4, rng);
    const auto z = testing::random_vector(5, rng);
    CHECK(rel_diff(vec(spmv(r, z)), dense(r) * vec(z)) < 1e-15);
    CHECK_THROWS_AS(spmv(r, testing::random_vector(4, rng)), StructuralError);
}

TEST_CASE("spmv is linear")
{
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const SparseMatrix a = testing::random_sparse(30, 25, 0.2, rng);
        const auto x = testing::random_vector(25, rng);
        const auto y = testing::random_vector(25, rng);
        const double alpha = rng.uniform(-3, 3);
        const double beta = rng.uniform(-3, 3);
        const Eigen::VectorXd combo = alpha * vec(x) + beta * vec(y);
        const Eigen::VectorXd lhs = vec(spmv(a, testing::stdvec(combo)));
        const Eigen::VectorXd rhs = alpha * vec(spmv(a, x)) + beta * vec(spmv(a, y));
        CHECK(rel_diff(lhs, rhs) < 1e-13);
    }
}

TEST_CASE("residual")
{
    Rng rng(5);
    const SparseMatrix a = testing::random_diag_dominant(10, 0.5, rng);
    const auto x = testing::random_vector(10, rng);
    const auto b = testing::random_vector(10, rng);
    const Eigen::VectorXd expected = vec(b) - dense(a) * vec(x);
    CHECK(rel_diff(vec(residual(a, x, b)), expected) < 1e-14);

    CHECK(residual(a, Vector(10, 0.0), b) == b);

    const Eigen::VectorXd exact = dense(a).fullPivLu().solve(vec(b));
    CHECK(testing::vec(residual(a, testing::stdvec(exact), b)).norm() < 1e-14 * vec(b).norm());
    CHECK_THROWS_AS(residual(a, x, Vector(9, 0.0)), StructuralError);
}

TEST_CASE("norm2")
{
    CHECK(norm2(Vector{3.0, 4.0}) == 5.0);
    CHECK(norm2(Vector(7, 0.0)) == 0.0);
    CHECK(norm2(Vector(100, 1.0)) == 10.0);
    CHECK(norm2(Vector{}) == 0.0);
}

TEST_CASE("transpose")
{
    Rng rng(9);
    const SparseMatrix sym = poisson_2d(7).matrix;
    CHECK(transpose(sym) == sym);

    const std::vector<Triplet> row{{0, 0, 1.0}, {0, 3, 2.0}, {0, 4, -1.0}};
    const SparseMatrix r = from_triplets(1, 5, row);
    const SparseMatrix c = transpose(r);
    CHECK(c.rows() == 5);
    CHECK(c.cols() == 1);
    CHECK(c.at(3, 0) == 2.0);

    const SparseMatrix a = testing::random_sparse(20, 7, 0.3, rng);
    const SparseMatrix at = transpose(a);
    check_invariants(at);
    CHECK(dense(at) == dense(a).transpose());
    CHECK(transpose(at) == a);
}

TEST_CASE("multiply and rap")
{
    Rng rng(21);
    const SparseMatrix a = testing::random_diag_dominant(12, 0.3, rng);

    SUBCASE("identity transfers return A")
    {
        const SparseMatrix i = SparseMatrix::identity(12);
        CHECK(rap(i, a, i) == a);
    }
    SUBCASE("a column of ones sums every entry")
    {
        const std::vector<Triplet> t{{0, 0, 2.0}, {0, 1, -1.0}, {1, 0, 0.5}, {1, 1, 3.0}};
        const SparseMatrix a2 = from_triplets(2, 2, t);
        const std::vector<Triplet> ones{{0, 0, 1.0}, {1, 0, 1.0}};
        const SparseMatrix p = from_triplets(2, 1, ones);
        const SparseMatrix c = rap(transpose(p), a2, p);
        CHECK(c.rows() == 1);
        CHECK(c.at(0, 0) == 4.5);
    }
    SUBCASE("random 12x8 chain against the dense triple product")
    {
        for (int trial = 0; trial < 10; ++trial) {
            const SparseMatrix p = testing::random_sparse(12, 8, 0.25, rng);
            const SparseMatrix r = testing::random_sparse(8, 12, 0.25, rng);
            const SparseMatrix c = rap(r, a, p);
            check_invariants(c);
            CHECK(rel_diff(dense(c), dense(r) * dense(a) * dense(p)) < 1e-13);
            CHECK(rel_diff(dense(multiply(a, p)), dense(a) * dense(p)) < 1e-14);
        }
    }
    SUBCASE("Galerkin product of a symmetric matrix is symmetric")
    {
        const SparseMatrix s = poisson_2d(9).matrix;
        for (int trial = 0; trial < 5; ++trial) {
            const SparseMatrix p = testing::random_sparse(49, 13, 0.15, rng);
            const Eigen::MatrixXd c = dense(rap(transpose(p), s, p));
            CHECK(rel_diff(c, c.transpose()) < 1e-13);
        }
    }
    SUBCASE("dimension mismatch")
    {
        const SparseMatrix p = testing::random_sparse(11, 8, 0.25, rng);
        CHECK_THROWS_AS(rap(transpose(p), a, p), StructuralError);
        CHECK_THROWS_AS(multiply(a, p), StructuralError);
    }
}

TEST_CASE("Matrix Market round trip")
{
    Rng rng(2);
    const SparseMatrix a = testing::random_sparse(13, 9, 0.3, rng);
    std::stringstream buf;
    write_matrix_market(buf, a);
    CHECK(read_matrix_market(buf) == a);

    const Vector v = testing::random_vector(17, rng);
    std::stringstream vbuf;
    write_matrix_market_vector(vbuf, v);
    CHECK(read_matrix_market_vector(vbuf) == v);
}

TEST_CASE("Matrix Market symmetric storage is expanded")
{
    std::istringstream in("%%MatrixMarket matrix coordinate real symmetric\n"
                          "% comment\n"
                          "2 2 2\n"
                          "1 1 4\n"
                          "2 1 -1\n");
    const SparseMatrix a = read_matrix_market(in);
    CHECK(a.at(0, 1) == -1.0);
    CHECK(a.at(1, 0) == -1.0);
    CHECK(a.at(1, 1) == 0.0);
}

TEST_CASE("Matrix Market errors name the line")
{
    std::istringstream bad("%%MatrixMarket matrix coordinate real general\n"
                           "2 2 2\n"
                           "1 1 4\n"
                           "2 x 1\n");
    try {
        read_matrix_market(bad);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    std::istringstream banner("hello\n");
    CHECK_THROWS_AS(read_matrix_market(banner), ParseError);
}
