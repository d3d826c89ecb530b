#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flexamg/problems.hpp"
#include "flexamg/sparse.hpp"

namespace flexamg {

enum class PointType : std::uint8_t { Fine = 0, Coarse = 1 };
using CFSplit = std::vector<PointType>;

enum class SmootherKind : std::uint8_t {
    Jacobi,
    GsForward,
    GsBackward,
    L1Jacobi,
    L1GsForward,
    L1GsBackward,
    /// Forward then backward hybrid Gauss-Seidel per sweep. Used by the
    /// reference V-cycles and the recursive tail; not part of the grammar.
    GsSymmetric,
};

enum class RelaxOrdering : std::uint8_t { Lexicographic, CF, FC };

/// The six relaxation schemes the cycle grammar draws from.
inline constexpr SmootherKind grammar_smoother_kinds[] = {
    SmootherKind::Jacobi,      SmootherKind::GsForward,   SmootherKind::GsBackward,
    SmootherKind::L1Jacobi,    SmootherKind::L1GsForward, SmootherKind::L1GsBackward,
};

/// Weights, CGC scalings: 0.10, 0.15, ..., 1.90.
namespace sample_set {
inline constexpr int size = 37;
/// Exact decimal value of the k-th sample (nearest double to 0.10 + 0.05 k).
inline double value(int k) { return static_cast<double>(10 + 5 * k) / 100.0; }
/// Sample index of v, or -1 when v is not (to 1e-9) a member.
int index_of(double v);
inline bool contains(double v) { return index_of(v) >= 0; }
} // namespace sample_set

inline constexpr int max_sweeps = 4;

struct SmootherSpec {
    SmootherKind kind = SmootherKind::GsForward;
    RelaxOrdering ordering = RelaxOrdering::Lexicographic;
    double omega_inner = 1.0;
    double omega_outer = 1.0;
    int sweeps = 1;

    friend bool operator==(const SmootherSpec&, const SmootherSpec&) = default;
};

/// Compact token, e.g. "l1-gs-fwd/cf/wi=0.65/wo=1.0/s=2".
std::string to_token(const SmootherSpec& spec);
SmootherSpec parse_smoother_token(const std::string& token);

std::string to_string(SmootherKind kind);
std::string to_string(RelaxOrdering ordering);
/// Human-readable problems with the spec's parameters (sample-set membership, sweep range).
std::vector<std::string> check_smoother(const SmootherSpec& spec);

/// Per-level data the relaxation kernels need, computed once at setup.
struct RelaxData {
    Vector diag;
    /// |a_ii| + sum of |a_ij| over columns owned by other blocks.
    Vector l1_sums;
    CFSplit cf_split;
    RowPartition partition;
    std::vector<Index> owner;
    /// Rows of each block in C-then-F and F-then-C order, laid out with the
    /// partition offsets; n_coarse_in_block[b] splits the two phases.
    std::vector<Index> cf_order;
    std::vector<Index> fc_order;
    std::vector<Index> n_coarse_in_block;
};

/// Throws SetupError naming the first row with a zero diagonal. An empty
/// cf_split means "no splitting available": every point counts as C.
RelaxData precompute_relax_data(const SparseMatrix& a, const CFSplit& cf_split,
                                const RowPartition& partition);

/// Applies spec.sweeps sweeps of the hybrid block smoother to x in place.
///
/// Inside a block rows are relaxed in the requested order with inner damping
/// omega_inner; values owned by other blocks are read from the sweep-start
/// iterate and each block's update is scaled by omega_outer.
void relax(const SparseMatrix& a, std::span<const double> b, std::span<double> x,
           const SmootherSpec& spec, const RelaxData& data);

Vector relax_sweep(const SparseMatrix& a, std::span<const double> b, std::span<const double> x,
                   const SmootherSpec& spec, const RelaxData& data);

/// Nonzeros touched by one application of spec on a matrix with nnz entries.
std::uint64_t smoother_work(const SmootherSpec& spec, Index nnz);

} // namespace flexamg
