#include "flexamg/krylov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "flexamg/errors.hpp"

namespace flexamg {

std::string SolveReport::to_json() const
{
    nlohmann::json j;
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["stagnated"] = stagnated;
    j["diverged"] = diverged;
    j["final_rel_residual"] = final_rel_residual;
    j["final_abs_residual"] = final_abs_residual;
    j["time_total"] = time_total;
    j["time_per_iteration"] = time_per_iteration;
    j["work_units_per_iteration"] = work_units_per_iteration;
    return j.dump(2);
}

std::string SolveReport::history_csv() const
{
    std::string out = "iteration,residual\n";
    char buf[64];
    for (std::size_t k = 0; k < residual_history.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k + 1, residual_history[k]);
        out += buf;
    }
    return out;
}

namespace {

bool finite(std::span<const double> v)
{
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y)
{
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

} // namespace

SolveResult gmres(const SparseMatrix& a, std::span<const double> b, const Preconditioner& precond,
                  std::uint64_t precond_work, const SolverParams& params)
{
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    if (!a.is_square() || b.size() != a.rows()) throw StructuralError("gmres: dimension mismatch");
    if (!(params.rtol > 0) || !(params.atol > 0)) throw ParameterError("gmres: tolerances must be positive");
    if (params.restart < 1) throw ParameterError("gmres: restart must be at least 1");

    const Index n = a.rows();
    const Index m = params.restart;
    SolveResult result;
    SolveReport& rep = result.report;
    rep.work_units_per_iteration = a.nnz() + precond_work;
    Vector& x = result.x;
    x.assign(n, 0.0);

    const double b_norm = norm2(b);
    const double target = std::max(params.rtol * b_norm, params.atol);
    Vector r(b.begin(), b.end());
    double beta = b_norm;

    std::vector<Vector> v(m + 1, Vector(n));
    std::vector<Vector> z(m, Vector(n));
    std::vector<std::vector<double>> hess(m + 1, std::vector<double>(m, 0.0));
    std::vector<double> cs(m), sn(m), g(m + 1);
    Vector w(n);

    auto finish = [&]() {
        rep.final_abs_residual = beta;
        rep.final_rel_residual = b_norm > 0 ? beta / b_norm : beta;
        rep.time_total = std::chrono::duration<double>(clock::now() - start).count();
        rep.time_per_iteration = rep.time_total / static_cast<double>(std::max<Index>(rep.iterations, 1));
        return result;
    };

    if (!std::isfinite(beta)) {
        rep.diverged = true;
        return finish();
    }
    if (beta <= target) {
        rep.converged = true;
        return finish();
    }

    while (rep.iterations < params.maxiter) {
        for (Index i = 0; i < n; ++i) v[0][i] = r[i] / beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;
        Index k = 0;
        bool breakdown = false;
        for (; k < m && rep.iterations < params.maxiter; ++k) {
            if (precond)
                precond(v[k], z[k]);
            else
                z[k] = v[k];
            spmv_into(a, z[k], w);
            for (Index i = 0; i <= k; ++i) {
                hess[i][k] = dot(w, v[i]);
                axpy(-hess[i][k], v[i], w);
            }
            hess[k + 1][k] = norm2(w);
            if (!std::isfinite(hess[k + 1][k])) {
                rep.diverged = true;
                beta = std::numeric_limits<double>::infinity();
                return finish();
            }
            for (Index i = 0; i < k; ++i) {
                const double t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            const double denom = std::hypot(hess[k][k], hess[k + 1][k]);
            const double h_sub = hess[k + 1][k];
            if (denom == 0.0) {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = hess[k][k] / denom;
                sn[k] = hess[k + 1][k] / denom;
            }
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            ++rep.iterations;
            if (params.record_history) rep.residual_history.push_back(std::abs(g[k + 1]));
            if (h_sub < 1e-30) {
                breakdown = true;
                ++k;
                break;
            }
            for (Index i = 0; i < n; ++i) v[k + 1][i] = w[i] / h_sub;
            if (std::abs(g[k + 1]) <= target) {
                ++k;
                break;
            }
        }

        // Back substitution on the k x k triangular system, then x += Z y.
        std::vector<double> y(k, 0.0);
        for (Index i = k; i-- > 0;) {
            double s = g[i];
            for (Index j = i + 1; j < k; ++j) s -= hess[i][j] * y[j];
            y[i] = hess[i][i] != 0.0 ? s / hess[i][i] : 0.0;
        }
        for (Index j = 0; j < k; ++j) axpy(y[j], z[j], x);

        residual_into(a, x, b, r);
        beta = norm2(r);
        if (!std::isfinite(beta) || !finite(x)) {
            rep.diverged = true;
            return finish();
        }
        if (beta <= target) {
            rep.converged = true;
            return finish();
        }
        if (breakdown) {
            rep.stagnated = true;
            return finish();
        }
    }
    return finish();
}

SolveResult gmres(const SparseMatrix& a, std::span<const double> b, const SolverParams& params)
{
    return gmres(a, b, Preconditioner{}, 0, params);
}

SolveResult gmres(const SparseMatrix& a, std::span<const double> b, const CycleIR& ir,
                  const AmgHierarchy& hierarchy, const SolverParams& params)
{
    if (hierarchy.depth() == 0 || hierarchy.levels.front().a.rows() != a.rows())
        throw StructuralError("gmres: hierarchy does not match the matrix");
    CycleRunner runner(ir, hierarchy);
    Preconditioner pc = [&runner](std::span<const double> in, std::span<double> out) {
        runner.apply(in, out);
    };
    return gmres(a, b, pc, cycle_work_units(ir, hierarchy), params);
}

} // namespace flexamg
