#include "flexamg/amg.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

#include "flexamg/errors.hpp"

namespace flexamg {

void SetupParams::check() const
{
    if (!(strength_threshold > 0 && strength_threshold < 1))
        throw ParameterError("setup: strength_threshold must lie in (0, 1)");
    if (!(max_row_sum > 0 && max_row_sum <= 1))
        throw ParameterError("setup: max_row_sum must lie in (0, 1]");
    if (max_levels < 2) throw ParameterError("setup: max_levels must be at least 2");
    if (min_coarse_size < 1) throw ParameterError("setup: min_coarse_size must be at least 1");
}

bool StrengthGraph::contains(Index i, Index j) const
{
    auto r = row(i);
    return std::binary_search(r.begin(), r.end(), j);
}

StrengthGraph StrengthGraph::transposed() const
{
    StrengthGraph t;
    t.n = n;
    t.offsets.assign(n + 1, 0);
    for (Index c : cols) ++t.offsets[c + 1];
    for (Index i = 0; i < n; ++i) t.offsets[i + 1] += t.offsets[i];
    t.cols.resize(cols.size());
    auto next = t.offsets;
    for (Index i = 0; i < n; ++i)
        for (Index j : row(i)) t.cols[next[j]++] = i;
    return t;
}

StrengthGraph strength_matrix(const SparseMatrix& a, double theta, double max_row_sum)
{
    if (!a.is_square()) throw StructuralError("strength_matrix: matrix must be square");
    StrengthGraph s;
    s.n = a.rows();
    s.offsets.assign(s.n + 1, 0);
    for (Index i = 0; i < s.n; ++i) {
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        double diag = 0.0;
        double row_sum = 0.0;
        for (Index k = 0; k < cols.size(); ++k) {
            if (cols[k] == i) diag = vals[k];
            row_sum += vals[k];
        }
        const bool dominant = max_row_sum < 1.0 && std::abs(row_sum) > max_row_sum * std::abs(diag);
        if (!dominant) {
            // "Negative" means opposite in sign to the diagonal.
            const double sign = diag < 0 ? -1.0 : 1.0;
            double max_opp = 0.0;
            double max_abs = 0.0;
            for (Index k = 0; k < cols.size(); ++k) {
                if (cols[k] == i) continue;
                max_opp = std::max(max_opp, -sign * vals[k]);
                max_abs = std::max(max_abs, std::abs(vals[k]));
            }
            for (Index k = 0; k < cols.size(); ++k) {
                if (cols[k] == i) continue;
                const bool strong = max_opp > 0 ? -sign * vals[k] >= theta * max_opp
                                                : max_abs > 0 && std::abs(vals[k]) >= theta * max_abs;
                if (strong) s.cols.push_back(cols[k]);
            }
        }
        s.offsets[i + 1] = s.cols.size();
    }
    return s;
}

CFSplit rs_coarsen(const StrengthGraph& strength)
{
    enum class State : std::uint8_t { Undecided, C, F };
    const Index n = strength.n;
    const StrengthGraph influences = strength.transposed();
    std::vector<State> state(n, State::Undecided);
    std::vector<long long> measure(n);
    // Ordered by (-measure, index): begin() is the largest measure, lowest index.
    std::set<std::pair<long long, Index>> queue;
    for (Index i = 0; i < n; ++i) {
        measure[i] = static_cast<long long>(influences.row(i).size());
        if (measure[i] == 0 && strength.row(i).empty())
            state[i] = State::F;
        else
            queue.insert({-measure[i], i});
    }
    auto bump = [&](Index m, long long delta) {
        queue.erase({-measure[m], m});
        measure[m] += delta;
        queue.insert({-measure[m], m});
    };

    while (!queue.empty()) {
        auto [neg, i] = *queue.begin();
        if (neg == 0) break;
        queue.erase(queue.begin());
        state[i] = State::C;
        for (Index k : influences.row(i)) {
            if (state[k] != State::Undecided) continue;
            queue.erase({-measure[k], k});
            state[k] = State::F;
            for (Index m : strength.row(k))
                if (state[m] == State::Undecided) bump(m, +1);
        }
        for (Index m : strength.row(i))
            if (state[m] == State::Undecided) bump(m, -1);
    }
    for (auto& st : state)
        if (st == State::Undecided) st = State::F;

    // Second pass: every strong F-F pair needs a common strong C point.
    auto shares_c = [&](Index i, Index j, Index tentative) {
        for (Index k : strength.row(j))
            if ((state[k] == State::C || k == tentative) && (strength.contains(i, k)))
                return true;
        return false;
    };
    constexpr Index none = static_cast<Index>(-1);
    for (Index i = 0; i < n; ++i) {
        if (state[i] != State::F) continue;
        Index tentative = none;
        bool promote_self = false;
        for (Index j : strength.row(i)) {
            if (state[j] != State::F || j == tentative) continue;
            if (shares_c(i, j, tentative)) continue;
            if (tentative == none) {
                tentative = j;
            } else {
                promote_self = true;
                break;
            }
        }
        if (promote_self)
            state[i] = State::C;
        else if (tentative != none)
            state[tentative] = State::C;
    }

    CFSplit out(n);
    for (Index i = 0; i < n; ++i) out[i] = state[i] == State::C ? PointType::Coarse : PointType::Fine;
    return out;
}

SparseMatrix classical_interpolation(const SparseMatrix& a, const StrengthGraph& strength,
                                     const CFSplit& cf_split)
{
    const Index n = a.rows();
    if (!a.is_square() || strength.n != n || cf_split.size() != n)
        throw StructuralError("classical_interpolation: inconsistent dimensions");
    constexpr Index none = static_cast<Index>(-1);
    std::vector<Index> coarse_index(n, none);
    Index nc = 0;
    for (Index i = 0; i < n; ++i)
        if (cf_split[i] == PointType::Coarse) coarse_index[i] = nc++;

    std::vector<Triplet> t;
    std::vector<double> weight(n, 0.0);
    std::vector<char> in_ci(n, 0);
    for (Index i = 0; i < n; ++i) {
        if (cf_split[i] == PointType::Coarse) {
            t.push_back({i, coarse_index[i], 1.0});
            continue;
        }
        auto s_row = strength.row(i);
        if (s_row.empty()) continue;

        std::vector<Index> ci;
        for (Index j : s_row)
            if (cf_split[j] == PointType::Coarse) ci.push_back(j);
        if (ci.empty())
            throw SetupError("F point " + std::to_string(i) + " has no strong C neighbour");
        for (Index k : ci) {
            in_ci[k] = 1;
            weight[k] = 0.0;
        }

        double denom = 0.0;
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        for (Index k = 0; k < cols.size(); ++k) {
            const Index j = cols[k];
            const double aij = vals[k];
            if (j == i) {
                denom += aij;
            } else if (in_ci[j]) {
                weight[j] += aij;
            } else if (std::binary_search(s_row.begin(), s_row.end(), j)) {
                // Strong F neighbour: distribute through the common C points.
                double sum_c = 0.0;
                double diag_m = 0.0;
                auto mc = a.row_cols(j);
                auto mv = a.row_values(j);
                for (Index q = 0; q < mc.size(); ++q) {
                    if (in_ci[mc[q]]) sum_c += mv[q];
                    if (mc[q] == j) diag_m = mv[q];
                }
                if (sum_c != 0.0 && (sum_c < 0) != (diag_m < 0)) {
                    for (Index q = 0; q < mc.size(); ++q)
                        if (in_ci[mc[q]]) weight[mc[q]] += aij * mv[q] / sum_c;
                } else {
                    denom += aij;
                }
            } else {
                denom += aij;
            }
        }
        if (denom == 0.0)
            throw SetupError("interpolation denominator vanishes in row " + std::to_string(i));
        for (Index k : ci) {
            t.push_back({i, coarse_index[k], -weight[k] / denom});
            in_ci[k] = 0;
        }
    }
    return from_triplets(n, nc, t);
}

struct CoarseSolver::Impl {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

CoarseSolver::CoarseSolver(const SparseMatrix& a)
    : impl_(std::make_unique<Impl>())
    , n_(a.rows())
{
    if (!a.is_square()) throw StructuralError("coarse solver: matrix must be square");
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_),
                                                  static_cast<Eigen::Index>(n_));
    for (Index i = 0; i < n_; ++i) {
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        for (Index k = 0; k < cols.size(); ++k)
            dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[k])) = vals[k];
    }
    impl_->lu.compute(dense);
    const auto& lu = impl_->lu.matrixLU();
    for (Eigen::Index i = 0; i < lu.rows(); ++i)
        if (lu(i, i) == 0.0 || !std::isfinite(lu(i, i)))
            throw SetupError("coarsest operator is singular (zero pivot " + std::to_string(i) + ")");
}

CoarseSolver::~CoarseSolver() = default;

void CoarseSolver::solve(std::span<const double> b, std::span<double> x) const
{
    if (b.size() != n_ || x.size() != n_) throw StructuralError("coarse solve: dimension mismatch");
    Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(n_));
    Eigen::Map<Eigen::VectorXd> out(x.data(), static_cast<Eigen::Index>(n_));
    out = impl_->lu.solve(rhs);
}

void CoarseSolver::solve_correction(const SparseMatrix& a, std::span<const double> b,
                                    std::span<double> x) const
{
    Vector r = residual(a, x, b);
    Vector e(n_);
    solve(r, e);
    for (Index i = 0; i < n_; ++i) x[i] += e[i];
}

namespace {

RowPartition coarsen_partition(const RowPartition& fine, const CFSplit& cf)
{
    RowPartition out;
    out.offsets = {0};
    for (Index b = 0; b < fine.blocks(); ++b) {
        Index count = 0;
        for (Index i = fine.begin(b); i < fine.end(b); ++i)
            if (cf[i] == PointType::Coarse) ++count;
        if (count > 0) out.offsets.push_back(out.offsets.back() + count);
    }
    return out;
}

} // namespace

AmgHierarchy build_hierarchy(const SparseMatrix& a, const SetupParams& params,
                             const RowPartition& partition)
{
    params.check();
    if (!a.is_square()) throw StructuralError("build_hierarchy: matrix must be square");
    if (a.rows() == 0) throw StructuralError("build_hierarchy: empty matrix");
    if (partition.rows() != a.rows())
        throw StructuralError("build_hierarchy: partition does not cover the matrix rows");

    AmgHierarchy h;
    h.params = params;
    h.levels.push_back({});
    h.levels.back().a = a;
    h.levels.back().partition = partition;

    while (h.levels.size() < params.max_levels) {
        AmgLevel& fine = h.levels.back();
        const Index n = fine.a.rows();
        if (n <= params.min_coarse_size) break;
        StrengthGraph s = strength_matrix(fine.a, params.strength_threshold, params.max_row_sum);
        CFSplit cf = rs_coarsen(s);
        const auto nc = static_cast<Index>(std::count(cf.begin(), cf.end(), PointType::Coarse));
        if (nc == 0 || nc >= n) break;
        fine.p = classical_interpolation(fine.a, s, cf);
        fine.r = transpose(fine.p);
        fine.cf_split = std::move(cf);
        AmgLevel coarse;
        coarse.a = rap(fine.r, fine.a, fine.p);
        coarse.partition = coarsen_partition(fine.partition, fine.cf_split);
        h.levels.push_back(std::move(coarse));
    }
    for (auto& lvl : h.levels) lvl.relax = precompute_relax_data(lvl.a, lvl.cf_split, lvl.partition);
    h.coarse_ = std::make_shared<const CoarseSolver>(h.levels.back().a);
    return h;
}

AmgHierarchy build_hierarchy(const SparseMatrix& a, const SetupParams& params)
{
    return build_hierarchy(a, params, partition_blocks(a.rows(), 1));
}

HierarchyStats AmgHierarchy::stats() const
{
    HierarchyStats s;
    double nnz_total = 0;
    double rows_total = 0;
    for (const auto& lvl : levels) {
        s.sizes.push_back(lvl.a.rows());
        s.nnz.push_back(lvl.a.nnz());
        nnz_total += static_cast<double>(lvl.a.nnz());
        rows_total += static_cast<double>(lvl.a.rows());
    }
    s.operator_complexity = nnz_total / static_cast<double>(levels.front().a.nnz());
    s.grid_complexity = rows_total / static_cast<double>(levels.front().a.rows());
    return s;
}

std::string AmgHierarchy::stats_json() const
{
    const HierarchyStats s = stats();
    nlohmann::json j;
    j["levels"] = levels.size();
    j["sizes"] = s.sizes;
    j["nnz"] = s.nnz;
    j["operator_complexity"] = s.operator_complexity;
    j["grid_complexity"] = s.grid_complexity;
    j["setup"] = {{"coarsening", "classical Ruge-Stueben (serial substitute for Falgout)"},
                  {"interpolation", "classical direct (serial substitute for Extended+i)"},
                  {"strength_threshold", params.strength_threshold},
                  {"max_row_sum", params.max_row_sum},
                  {"max_levels", params.max_levels},
                  {"min_coarse_size", params.min_coarse_size}};
    return j.dump(2);
}

} // namespace flexamg
