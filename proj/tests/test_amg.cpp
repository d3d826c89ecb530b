#include <doctest.h>

#include "flexamg/amg.hpp"
#include "flexamg/errors.hpp"
#include "flexamg/problems.hpp"
#include "support.hpp"

using namespace flexamg;
using testing::dense;

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

/// Graph Laplacian of an m x m grid: rows sum to zero exactly.
SparseMatrix grid_graph_laplacian(Index m)
{
    std::vector<Triplet> t;
    auto id = [m](Index i, Index j) { return j * m + i; };
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i) {
            double deg = 0.0;
            auto link = [&](Index k) {
                t.push_back({id(i, j), k, -1.0});
                deg += 1.0;
            };
            if (i > 0) link(id(i - 1, j));
            if (i + 1 < m) link(id(i + 1, j));
            if (j > 0) link(id(i, j - 1));
            if (j + 1 < m) link(id(i, j + 1));
            t.push_back({id(i, j), id(i, j), deg});
        }
    return from_triplets(m * m, m * m, t);
}

std::vector<Index> coarse_index(const CFSplit& split)
{
    std::vector<Index> idx(split.size(), SIZE_MAX);
    Index k = 0;
    for (Index i = 0; i < split.size(); ++i)
        if (split[i] == PointType::Coarse) idx[i] = k++;
    return idx;
}

void check_interpolation_support(const SparseMatrix& p, const StrengthGraph& s, const CFSplit& split)
{
    const auto cidx = coarse_index(split);
    for (Index i = 0; i < p.rows(); ++i) {
        if (split[i] == PointType::Coarse) {
            REQUIRE(p.row_cols(i).size() == 1);
            CHECK(p.row_cols(i)[0] == cidx[i]);
            CHECK(p.row_values(i)[0] == 1.0);
            continue;
        }
        for (Index c : p.row_cols(i)) {
            bool found = false;
            for (Index j : s.row(i)) found = found || (split[j] == PointType::Coarse && cidx[j] == c);
            CHECK(found);
        }
    }
}

} // namespace

TEST_CASE("strength_matrix")
{
    SUBCASE("diagonal matrix has no strong couplings")
    {
        const std::vector<Triplet> t{{0, 0, 3.0}, {1, 1, 2.0}, {2, 2, 1.0}};
        CHECK(strength_matrix(from_triplets(3, 3, t), 0.8, 0.9).edges() == 0);
    }
    SUBCASE("1D Poisson interior row: both neighbours strong")
    {
        const StrengthGraph s = strength_matrix(laplacian_1d(5), 0.8, 0.9);
        CHECK(s.contains(2, 1));
        CHECK(s.contains(2, 3));
        CHECK(s.row(2).size() == 2);
    }
    SUBCASE("anisotropic row: only the x neighbours")
    {
        const SparseMatrix a = anisotropic_2d(7, 0.001).matrix;
        const StrengthGraph s = strength_matrix(a, 0.8, 0.9);
        const Index i = 2 * 5 + 2; // interior point (2, 2) of the 5x5 grid
        CHECK(s.row(i).size() == 2);
        CHECK(s.contains(i, i - 1));
        CHECK(s.contains(i, i + 1));
        CHECK(!s.contains(i, i - 5));
    }
    SUBCASE("strongly dominant rows lose all couplings")
    {
        const std::vector<Triplet> t{{0, 0, 10.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 1.0}};
        const SparseMatrix a = from_triplets(2, 2, t);
        const StrengthGraph s = strength_matrix(a, 0.25, 0.5);
        CHECK(s.row(0).empty());
        CHECK(s.row(1).size() == 1);
        CHECK(strength_matrix(a, 0.25, 1.0).row(0).size() == 1);
    }
    SUBCASE("rows with only positive couplings fall back to magnitudes")
    {
        const std::vector<Triplet> t{{0, 0, 2.0}, {0, 1, 0.5}, {0, 2, 0.1}, {1, 1, 1.0}, {2, 2, 1.0}};
        const StrengthGraph s = strength_matrix(from_triplets(3, 3, t), 0.8, 1.0);
        CHECK(s.contains(0, 1));
        CHECK(!s.contains(0, 2));
    }
    CHECK_THROWS_AS(strength_matrix(from_triplets(2, 3, {}), 0.8, 0.9), StructuralError);
}

TEST_CASE("rs_coarsen")
{
    SUBCASE("1D Poisson n=5 alternates")
    {
        const CFSplit split = rs_coarsen(strength_matrix(laplacian_1d(5), 0.25, 0.9));
        REQUIRE(split.size() == 5);
        for (Index i = 0; i + 1 < 5; ++i) CHECK(split[i] != split[i + 1]);
    }
    SUBCASE("empty strength gives all F")
    {
        const std::vector<Triplet> t{{0, 0, 1.0}, {1, 1, 1.0}};
        const CFSplit split = rs_coarsen(strength_matrix(from_triplets(2, 2, t), 0.8, 0.9));
        CHECK(split == CFSplit{PointType::Fine, PointType::Fine});
    }
    SUBCASE("strong F-F pairs share a strong C point")
    {
        Rng rng(4);
        for (int trial = 0; trial < 20; ++trial) {
            const SparseMatrix a = testing::random_diag_dominant(40, 0.1, rng);
            const StrengthGraph s = strength_matrix(a, 0.25, 1.0);
            const CFSplit split = rs_coarsen(s);
            REQUIRE(split.size() == 40);
            for (Index i = 0; i < 40; ++i) {
                if (split[i] != PointType::Fine) continue;
                for (Index j : s.row(i)) {
                    if (split[j] != PointType::Fine) continue;
                    bool shared = false;
                    for (Index k : s.row(i))
                        shared = shared || (split[k] == PointType::Coarse && s.contains(j, k));
                    CHECK(shared);
                }
            }
        }
    }
}

TEST_CASE("classical_interpolation")
{
    SUBCASE("1D Poisson: halves from both C neighbours")
    {
        const SparseMatrix a = laplacian_1d(7);
        const StrengthGraph s = strength_matrix(a, 0.25, 0.9);
        const CFSplit split = rs_coarsen(s);
        const SparseMatrix p = classical_interpolation(a, s, split);
        const auto cidx = coarse_index(split);
        for (Index i = 1; i + 1 < 7; ++i) {
            if (split[i] != PointType::Fine) continue;
            CHECK(p.at(i, cidx[i - 1]) == doctest::Approx(0.5).epsilon(1e-15));
            CHECK(p.at(i, cidx[i + 1]) == doctest::Approx(0.5).epsilon(1e-15));
        }
        check_interpolation_support(p, s, split);
    }
    SUBCASE("all C gives the identity")
    {
        const SparseMatrix a = laplacian_1d(4);
        const StrengthGraph s = strength_matrix(a, 0.25, 0.9);
        const SparseMatrix p = classical_interpolation(a, s, CFSplit(4, PointType::Coarse));
        CHECK(p == SparseMatrix::identity(4));
    }
    SUBCASE("zero row sum operators interpolate constants exactly")
    {
        const SparseMatrix a = grid_graph_laplacian(9);
        const StrengthGraph s = strength_matrix(a, 0.25, 1.0);
        const CFSplit split = rs_coarsen(s);
        const SparseMatrix p = classical_interpolation(a, s, split);
        check_interpolation_support(p, s, split);
        const Vector sums = spmv(p, Vector(p.cols(), 1.0));
        for (double v : sums) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("build_hierarchy")
{
    SUBCASE("1x1 input is a single level")
    {
        const std::vector<Triplet> t{{0, 0, 4.0}};
        const AmgHierarchy h = build_hierarchy(from_triplets(1, 1, t));
        CHECK(h.depth() == 1);
        Vector x(1, 0.0);
        h.coarse_solver().solve(Vector{2.0}, x);
        CHECK(x[0] == 0.5);
    }
    SUBCASE("poisson_2d(65) with defaults")
    {
        const ProblemInstance prob = poisson_2d(65);
        const AmgHierarchy h = build_hierarchy(prob.matrix, {}, prob.row_partition);
        CHECK(h.depth() >= 3);
        CHECK(h.levels.back().a.rows() <= h.params.min_coarse_size);
        for (Index l = 0; l + 1 < h.depth(); ++l) {
            const AmgLevel& lv = h.levels[l];
            const Index n_c = std::count(lv.cf_split.begin(), lv.cf_split.end(), PointType::Coarse);
            CHECK(lv.cf_split.size() == lv.a.rows());
            CHECK(lv.p.cols() == n_c);
            CHECK(h.levels[l + 1].a.rows() == n_c);
            CHECK(h.levels[l + 1].a.rows() < lv.a.rows());
            CHECK(lv.r == transpose(lv.p));
            CHECK(rap(lv.r, lv.a, lv.p) == h.levels[l + 1].a);
            // Independent dense check of the Galerkin product.
            if (lv.a.rows() <= 1000)
                CHECK(testing::rel_diff(dense(h.levels[l + 1].a),
                                        dense(lv.r) * dense(lv.a) * dense(lv.p)) < 1e-15);
            const StrengthGraph s = strength_matrix(lv.a, h.params.strength_threshold, h.params.max_row_sum);
            check_interpolation_support(lv.p, s, lv.cf_split);
            CHECK(h.levels[l + 1].partition.rows() == n_c);
        }
        const HierarchyStats st = h.stats();
        CHECK(st.sizes.front() == 63 * 63);
        CHECK(st.operator_complexity > 1.0);
        CHECK(st.grid_complexity > 1.0);
    }
    SUBCASE("coupled thermo-elastic system")
    {
        const ProblemInstance prob = coupled_thermoelastic_2d(8, 4);
        const AmgHierarchy h = build_hierarchy(prob.matrix, {}, prob.row_partition);
        CHECK(h.depth() >= 2);
        CHECK((h.levels.back().a.rows() <= h.params.min_coarse_size || h.depth() == h.params.max_levels));
    }
    SUBCASE("max_levels caps the depth")
    {
        SetupParams params;
        params.max_levels = 2;
        CHECK(build_hierarchy(poisson_2d(33).matrix, params).depth() == 2);
    }
    SUBCASE("parameter checks")
    {
        SetupParams params;
        params.strength_threshold = 1.5;
        CHECK_THROWS_AS(build_hierarchy(poisson_2d(9).matrix, params), ParameterError);
        params = {};
        params.max_levels = 1;
        CHECK_THROWS_AS(build_hierarchy(poisson_2d(9).matrix, params), ParameterError);
    }
}

TEST_CASE("coarse solver")
{
    Rng rng(8);
    const SparseMatrix a = testing::random_diag_dominant(15, 0.4, rng);
    const CoarseSolver solver(a);
    const auto b = testing::random_vector(15, rng);
    Vector x(15, 0.0);
    solver.solve(b, x);
    CHECK(norm2(residual(a, x, b)) < 1e-13 * norm2(b));
    Vector y = testing::random_vector(15, rng);
    solver.solve_correction(a, b, y);
    CHECK(norm2(residual(a, y, b)) < 1e-13 * norm2(b));
}
