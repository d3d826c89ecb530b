#include <doctest.h>

#include "flexamg/errors.hpp"
#include "flexamg/smoothers.hpp"
#include "smoother_oracle.hpp"
#include "support.hpp"

using namespace flexamg;
using testing::dense;
using testing::rel_diff;
using testing::vec;

namespace {

SparseMatrix laplacian_1d(Index n)
{
    std::vector<Triplet> t;
    for (Index i = 0; i < n; ++i) {
        t.push_back({i, i, 2.0});
        if (i > 0) t.push_back({i, i - 1, -1.0});
        if (i + 1 < n) t.push_back({i, i + 1, -1.0});
    }
    return from_triplets(n, n, t);
}

CFSplit random_split(Index n, Rng& rng)
{
    CFSplit s(n);
    for (auto& p : s) p = rng.uniform() < 0.5 ? PointType::Coarse : PointType::Fine;
    return s;
}

double sample_weight(Rng& rng)
{
    return sample_set::value(static_cast<int>(rng.index(sample_set::size)));
}

constexpr SmootherKind all_kinds[] = {
    SmootherKind::Jacobi,      SmootherKind::GsForward,   SmootherKind::GsBackward,  SmootherKind::L1Jacobi,
    SmootherKind::L1GsForward, SmootherKind::L1GsBackward, SmootherKind::GsSymmetric,
};

} // namespace

TEST_CASE("precompute_relax_data")
{
    const RelaxData id = precompute_relax_data(SparseMatrix::identity(5), {}, partition_blocks(5, 2));
    CHECK(id.diag == Vector(5, 1.0));
    CHECK(id.l1_sums == Vector(5, 1.0));

    const SparseMatrix a = laplacian_1d(4);
    const RelaxData one = precompute_relax_data(a, {}, partition_blocks(4, 1));
    CHECK(one.l1_sums == Vector(4, 2.0));
    const RelaxData two = precompute_relax_data(a, {}, partition_blocks(4, 2));
    CHECK(two.l1_sums == Vector{2.0, 3.0, 3.0, 2.0});

    const std::vector<Triplet> t{{0, 0, 1.0}, {1, 0, 1.0}, {2, 2, 1.0}};
    try {
        precompute_relax_data(from_triplets(3, 3, t), {}, partition_blocks(3, 1));
        FAIL("expected a setup error");
    } catch (const SetupError& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("exact solves")
{
    Rng rng(1);
    const RowPartition single = partition_blocks(6, 1);
    SUBCASE("Jacobi on a diagonal matrix")
    {
        std::vector<Triplet> t;
        for (Index i = 0; i < 6; ++i) t.push_back({i, i, 1.0 + static_cast<double>(i)});
        const SparseMatrix a = from_triplets(6, 6, t);
        const auto b = testing::random_vector(6, rng);
        const RelaxData d = precompute_relax_data(a, {}, single);
        const Vector x = relax_sweep(a, b, Vector(6, 0.0), {SmootherKind::Jacobi, RelaxOrdering::Lexicographic}, d);
        CHECK(norm2(residual(a, x, b)) < 1e-15);
    }
    SUBCASE("forward Gauss-Seidel on a lower triangular matrix")
    {
        std::vector<Triplet> t;
        for (Index i = 0; i < 6; ++i)
            for (Index j = 0; j <= i; ++j) t.push_back({i, j, i == j ? 3.0 : rng.uniform(-1, 1)});
        const SparseMatrix a = from_triplets(6, 6, t);
        const auto b = testing::random_vector(6, rng);
        const RelaxData d = precompute_relax_data(a, {}, single);
        const Vector x = relax_sweep(a, b, testing::random_vector(6, rng),
                                     {SmootherKind::GsForward, RelaxOrdering::Lexicographic}, d);
        CHECK(norm2(residual(a, x, b)) < 1e-14);
    }
}

TEST_CASE("fixed point for every smoother")
{
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        // Exact arithmetic: b = A x holds without rounding, so x is a true solution.
        const SparseMatrix a = testing::random_dyadic_diag_dominant(10, 0.4, rng);
        const auto x = testing::random_eighths(10, rng);
        const Eigen::VectorXd xs = vec(x);
        const Vector b = spmv(a, x);
        REQUIRE(norm2(residual(a, x, b)) == 0.0);
        const CFSplit split = random_split(10, rng);
        for (Index blocks : {Index{1}, Index{3}}) {
            const RelaxData d = precompute_relax_data(a, split, partition_blocks(10, blocks));
            for (SmootherKind kind : all_kinds)
                for (RelaxOrdering ord : {RelaxOrdering::Lexicographic, RelaxOrdering::CF, RelaxOrdering::FC}) {
                    const SmootherSpec spec{kind, ord, sample_weight(rng), sample_weight(rng),
                                            1 + static_cast<int>(rng.index(4))};
                    const Vector y = relax_sweep(a, b, x, spec, d);
                    CHECK_MESSAGE(rel_diff(vec(y), xs) < 1e-13, to_token(spec));
                }
        }
    }
}

TEST_CASE("iteration matrices match the dense oracle")
{
    Rng rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        const SparseMatrix a = testing::random_diag_dominant(10, 0.5, rng);
        const Eigen::MatrixXd ad = dense(a);
        const CFSplit split = random_split(10, rng);
        for (Index blocks : {Index{1}, Index{2}, Index{4}}) {
            const RowPartition part = partition_blocks(10, blocks);
            const RelaxData d = precompute_relax_data(a, split, part);
            for (SmootherKind kind : all_kinds)
                for (RelaxOrdering ord : {RelaxOrdering::Lexicographic, RelaxOrdering::CF, RelaxOrdering::FC}) {
                    const double wo = blocks == 1 && trial % 2 == 0 ? 1.0 : sample_weight(rng);
                    const SmootherSpec spec{kind, ord, sample_weight(rng), wo, 1 + static_cast<int>(rng.index(2))};
                    const auto got = testing::probe_relax(a, spec, d);
                    const auto want = testing::sweep_oracle(ad, spec, part, split);
                    CHECK_MESSAGE(rel_diff(got.iteration, want.iteration) < 1e-13, to_token(spec), " blocks=", blocks);
                    CHECK_MESSAGE(rel_diff(got.rhs_map, want.rhs_map) < 1e-13, to_token(spec), " blocks=", blocks);
                }
        }
    }
}

TEST_CASE("textbook forms on one block")
{
    Rng rng(31);
    const SparseMatrix a = testing::random_diag_dominant(10, 0.5, rng);
    const Eigen::MatrixXd ad = dense(a);
    const RelaxData d = precompute_relax_data(a, {}, partition_blocks(10, 1));
    const Eigen::MatrixXd diag = ad.diagonal().asDiagonal();
    const Eigen::MatrixXd lower = ad.triangularView<Eigen::StrictlyLower>();
    const Eigen::MatrixXd upper = ad.triangularView<Eigen::StrictlyUpper>();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(10, 10);
    const double w = 0.85;
    auto g = [&](SmootherKind k) {
        return testing::probe_relax(a, {k, RelaxOrdering::Lexicographic, w, 1.0, 1}, d).iteration;
    };
    CHECK(rel_diff(g(SmootherKind::Jacobi), eye - w * diag.inverse() * ad) < 1e-14);
    CHECK(rel_diff(g(SmootherKind::GsForward), eye - (diag / w + lower).inverse() * ad) < 1e-13);
    CHECK(rel_diff(g(SmootherKind::GsBackward), eye - (diag / w + upper).inverse() * ad) < 1e-13);
    // Without block boundaries the l1 variants coincide with the plain ones.
    CHECK(rel_diff(g(SmootherKind::L1GsForward), g(SmootherKind::GsForward)) == 0.0);
}

TEST_CASE("weighted Jacobi damps high frequencies")
{
    const Index n = 63;
    const SparseMatrix a = laplacian_1d(n);
    const RelaxData d = precompute_relax_data(a, {}, partition_blocks(n, 1));
    const Eigen::MatrixXd g =
        testing::probe_relax(a, {SmootherKind::Jacobi, RelaxOrdering::Lexicographic, 0.65, 1.0, 1}, d).iteration;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense(a));
    // Eigenvalues are ascending; the upper half are the oscillatory modes.
    double worst = 0.0;
    for (Index k = n / 2; k < n; ++k) {
        const Eigen::VectorXd v = eig.eigenvectors().col(k);
        worst = std::max(worst, (g * v).norm());
    }
    CHECK(worst <= 0.45);
}

TEST_CASE("CF ordering relaxes independent sets exactly")
{
    // Red-black split of the 5-point Laplacian: every F row only touches C rows.
    const Index m = 9;
    std::vector<Triplet> t;
    CFSplit split(m * m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i) {
            const Index r = j * m + i;
            split[r] = (i + j) % 2 == 0 ? PointType::Coarse : PointType::Fine;
            t.push_back({r, r, 4.0});
            if (i > 0) t.push_back({r, r - 1, -1.0});
            if (i + 1 < m) t.push_back({r, r + 1, -1.0});
            if (j > 0) t.push_back({r, r - m, -1.0});
            if (j + 1 < m) t.push_back({r, r + m, -1.0});
        }
    const SparseMatrix a = from_triplets(m * m, m * m, t);
    const RelaxData d = precompute_relax_data(a, split, partition_blocks(m * m, 1));
    Rng rng(5);
    const auto b = testing::random_vector(m * m, rng);
    const auto x0 = testing::random_vector(m * m, rng);

    const Vector cf = relax_sweep(a, b, x0, {SmootherKind::GsForward, RelaxOrdering::CF}, d);
    const Vector r_cf = residual(a, cf, b);
    const Vector fc = relax_sweep(a, b, x0, {SmootherKind::GsForward, RelaxOrdering::FC}, d);
    const Vector r_fc = residual(a, fc, b);
    for (Index i = 0; i < m * m; ++i) {
        if (split[i] == PointType::Fine)
            CHECK(std::abs(r_cf[i]) < 1e-14);
        else
            CHECK(std::abs(r_fc[i]) < 1e-14);
    }
    // On a red-black split two-phase Jacobi is the same as Gauss-Seidel.
    CHECK(relax_sweep(a, b, x0, {SmootherKind::Jacobi, RelaxOrdering::CF}, d) == cf);
}

TEST_CASE("tokens")
{
    const SmootherSpec spec{SmootherKind::L1GsForward, RelaxOrdering::CF, 0.65, 1.0, 2};
    CHECK(to_token(spec) == "l1-gs-fwd/cf/wi=0.65/wo=1.0/s=2");
    CHECK(parse_smoother_token("l1-gs-fwd/cf/wi=0.65/wo=1.0/s=2") == spec);
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const SmootherSpec s{all_kinds[rng.index(7)], static_cast<RelaxOrdering>(rng.index(3)), sample_weight(rng),
                             sample_weight(rng), 1 + static_cast<int>(rng.index(4))};
        CHECK(parse_smoother_token(to_token(s)) == s);
        CHECK(check_smoother(s).empty());
    }
    CHECK_THROWS_AS(parse_smoother_token("gs-fwd/zz/wi=1.0/wo=1.0/s=1"), ParseError);
    CHECK_THROWS_AS(parse_smoother_token("gs-fwd/cf"), ParseError);
    CHECK(check_smoother({SmootherKind::Jacobi, RelaxOrdering::CF, 2.0, 1.0, 5}).size() == 2);
}

TEST_CASE("sample set")
{
    CHECK(sample_set::value(0) == 0.1);
    CHECK(sample_set::value(36) == 1.9);
    CHECK(sample_set::index_of(0.65) == 11);
    CHECK(sample_set::index_of(2.0 / 3.0) == -1);
    CHECK(!sample_set::contains(2.5));
}

TEST_CASE("relax is deterministic and smoother work counts sweeps")
{
    Rng rng(44);
    const SparseMatrix a = testing::random_diag_dominant(30, 0.2, rng);
    const RelaxData d = precompute_relax_data(a, random_split(30, rng), partition_blocks(30, 4));
    const auto b = testing::random_vector(30, rng);
    const auto x = testing::random_vector(30, rng);
    const SmootherSpec spec{SmootherKind::L1GsBackward, RelaxOrdering::CF, 0.9, 0.7, 3};
    CHECK(relax_sweep(a, b, x, spec, d) == relax_sweep(a, b, x, spec, d));
    CHECK(smoother_work(spec, 100) == 300);
    CHECK(smoother_work({SmootherKind::GsSymmetric, RelaxOrdering::CF, 1.0, 1.0, 2}, 100) == 400);
}
