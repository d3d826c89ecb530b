#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flexamg/cycle.hpp"
#include "flexamg/sparse.hpp"

namespace flexamg {

struct SolverParams {
    /// Converged when ||b - A x|| <= max(rtol ||b||, atol) in the unpreconditioned 2-norm.
    double rtol = 1e-4;
    double atol = 1e-8;
    Index restart = 50;
    Index maxiter = 500;
    bool record_history = false;
};

struct SolveReport {
    Index iterations = 0;
    bool converged = false;
    /// Krylov breakdown without reaching the tolerance.
    bool stagnated = false;
    /// NaN or Inf appeared in the iterates.
    bool diverged = false;
    double final_rel_residual = 0.0;
    double final_abs_residual = 0.0;
    double time_total = 0.0;
    double time_per_iteration = 0.0;
    /// Matrix-vector product plus one preconditioner application, in nonzeros touched.
    std::uint64_t work_units_per_iteration = 0;
    /// Residual estimate after each iteration (only when requested).
    std::vector<double> residual_history;

    [[nodiscard]] std::string to_json() const;
    /// "iteration,residual" rows.
    [[nodiscard]] std::string history_csv() const;
};

struct SolveResult {
    Vector x;
    SolveReport report;
};

/// out = M^{-1} in; must be a fixed linear operator.
using Preconditioner = std::function<void(std::span<const double>, std::span<double>)>;

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt, zero initial guess.
SolveResult gmres(const SparseMatrix& a, std::span<const double> b, const Preconditioner& precond,
                  std::uint64_t precond_work, const SolverParams& params = {});

/// Unpreconditioned GMRES.
SolveResult gmres(const SparseMatrix& a, std::span<const double> b, const SolverParams& params = {});

/// GMRES preconditioned by one application of a flexible cycle per iteration.
SolveResult gmres(const SparseMatrix& a, std::span<const double> b, const CycleIR& ir,
                  const AmgHierarchy& hierarchy, const SolverParams& params = {});

} // namespace flexamg
