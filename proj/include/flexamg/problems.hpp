#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexamg/sparse.hpp"

namespace flexamg {

/// Contiguous row ranges emulating processor subdomains.
///
/// Block b owns rows [offsets[b], offsets[b+1]).
struct RowPartition {
    std::vector<Index> offsets{0};

    [[nodiscard]] Index blocks() const noexcept { return offsets.size() - 1; }
    [[nodiscard]] Index begin(Index b) const noexcept { return offsets[b]; }
    [[nodiscard]] Index end(Index b) const noexcept { return offsets[b + 1]; }
    [[nodiscard]] Index rows() const noexcept { return offsets.back(); }
    /// Per-row block id.
    [[nodiscard]] std::vector<Index> owner() const;

    friend bool operator==(const RowPartition&, const RowPartition&) = default;
};

/// p contiguous ranges over [0, n_rows) whose sizes differ by at most one.
RowPartition partition_blocks(Index n_rows, Index p);

struct DofBlocks {
    std::vector<Index> displacement;
    std::vector<Index> temperature;
};

struct ProblemInstance {
    std::string name;
    SparseMatrix matrix;
    Vector rhs;
    std::optional<DofBlocks> dof_blocks;
    RowPartition row_partition;
};

/// Austenitic chrome-nickel steel 1.4301 at 20 C. Units are kept as tabulated
/// (N/mm^2, 1/K, W/(m K), J/(kg K), C, s); nothing is normalized.
struct MaterialParams {
    double youngs_modulus = 20.0e4;
    double poisson_ratio = 0.271;
    double thermal_expansion = 1.6e-5;
    double conductivity = 15.6;
    double heat_capacity = 5.11e5;
    double initial_temperature = 20.0;
    double pool_temperature = 1460.0;
    double time_step = 0.1;

    void check() const;
};

/// Rectangular plate in mm.
struct PlateGeometry {
    double length = 100.0;
    double width = 30.0;
};

inline constexpr Index default_partition_blocks = 8;

/// 5-point Laplacian on the unit square with eliminated homogeneous Dirichlet
/// boundary; n grid points per side, (n-2)^2 unknowns, rhs = h^2.
ProblemInstance poisson_2d(Index n, Index blocks = default_partition_blocks);

/// 5-point discretization of -u_xx - epsilon u_yy, scaled like poisson_2d.
ProblemInstance anisotropic_2d(Index n, double epsilon, Index blocks = default_partition_blocks);

/// Linearized plane-strain Q1-Q1 thermo-elastic block system on an nx x ny
/// element plate. Unknowns are interleaved per node as (u_x, u_y, theta) with
/// nodes numbered x-major, so contiguous row blocks are strips of the plate.
ProblemInstance coupled_thermoelastic_2d(Index nx, Index ny, const MaterialParams& mat = {},
                                         Index blocks = default_partition_blocks,
                                         const PlateGeometry& plate = {});

/// Textual problem description: a generator name plus key=value parameters.
struct ProblemSpec {
    std::string name;
    std::map<std::string, std::string> params;

    /// Accepts "poisson_2d n=33", "poisson_2d:n=33,blocks=4" and similar.
    static ProblemSpec parse(const std::string& text);
    [[nodiscard]] std::string to_string() const;
};

ProblemInstance make_problem(const ProblemSpec& spec);

} // namespace flexamg
