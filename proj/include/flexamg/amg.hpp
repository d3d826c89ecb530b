#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flexamg/problems.hpp"
#include "flexamg/smoothers.hpp"
#include "flexamg/sparse.hpp"

namespace flexamg {

struct SetupParams {
    double strength_threshold = 0.8;
    /// Rows with |sum_j a_ij| > max_row_sum * |a_ii| get no strong couplings;
    /// 1.0 disables the test.
    double max_row_sum = 0.9;
    Index max_levels = 25;
    Index min_coarse_size = 9;

    void check() const;
};

/// Row i lists the points that strongly influence i.
struct StrengthGraph {
    Index n = 0;
    std::vector<Index> offsets{0};
    std::vector<Index> cols;

    [[nodiscard]] std::span<const Index> row(Index i) const noexcept
    {
        return {cols.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }
    [[nodiscard]] Index edges() const noexcept { return cols.size(); }
    [[nodiscard]] bool contains(Index i, Index j) const;
    [[nodiscard]] StrengthGraph transposed() const;
};

StrengthGraph strength_matrix(const SparseMatrix& a, double theta, double max_row_sum);

/// Classical Ruge-Stueben splitting: greedy first pass by influence measure
/// (lowest index wins ties), then a second pass that promotes F points until
/// every strong F-F pair shares a strong C neighbour. Points without strong
/// couplings stay F.
CFSplit rs_coarsen(const StrengthGraph& strength);

/// Direct (classical) interpolation; C rows inject, F rows interpolate from
/// their strong C neighbours with strong F couplings distributed through
/// common C points. Columns follow the C points in fine index order.
SparseMatrix classical_interpolation(const SparseMatrix& a, const StrengthGraph& strength,
                                     const CFSplit& cf_split);

/// Dense LU of the coarsest operator.
class CoarseSolver {
public:
    explicit CoarseSolver(const SparseMatrix& a);
    ~CoarseSolver();
    CoarseSolver(const CoarseSolver&) = delete;
    CoarseSolver& operator=(const CoarseSolver&) = delete;

    /// x <- x + A^{-1} (b - A x)
    void solve_correction(const SparseMatrix& a, std::span<const double> b,
                          std::span<double> x) const;
    void solve(std::span<const double> b, std::span<double> x) const;
    [[nodiscard]] Index size() const noexcept { return n_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Index n_ = 0;
};

struct AmgLevel {
    SparseMatrix a;
    /// Interpolation to this level from the next coarser one; empty on the coarsest.
    SparseMatrix p;
    SparseMatrix r;
    CFSplit cf_split;
    RelaxData relax;
    RowPartition partition;
};

struct HierarchyStats {
    std::vector<Index> sizes;
    std::vector<Index> nnz;
    double operator_complexity = 0.0;
    double grid_complexity = 0.0;
};

class AmgHierarchy {
public:
    std::vector<AmgLevel> levels;
    SetupParams params;

    [[nodiscard]] Index depth() const noexcept { return levels.size(); }
    [[nodiscard]] Index coarsest() const noexcept { return levels.size() - 1; }
    [[nodiscard]] const CoarseSolver& coarse_solver() const { return *coarse_; }
    [[nodiscard]] HierarchyStats stats() const;
    /// Levels, sizes, nnz, complexities and the setup substitutions as JSON text.
    [[nodiscard]] std::string stats_json() const;

    friend AmgHierarchy build_hierarchy(const SparseMatrix&, const SetupParams&,
                                        const RowPartition&);

private:
    std::shared_ptr<const CoarseSolver> coarse_;
};

AmgHierarchy build_hierarchy(const SparseMatrix& a, const SetupParams& params,
                             const RowPartition& partition);
AmgHierarchy build_hierarchy(const SparseMatrix& a, const SetupParams& params = {});

} // namespace flexamg
