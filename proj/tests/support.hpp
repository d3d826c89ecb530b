#pragma once

// Dense Eigen views of flexamg objects plus random instance generators.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "flexamg/rng.hpp"
#include "flexamg/sparse.hpp"

namespace testing {

using flexamg::Index;
using flexamg::SparseMatrix;

inline Eigen::MatrixXd dense(const SparseMatrix& a)
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        for (Index k = 0; k < cols.size(); ++k) d(i, cols[k]) = vals[k];
    }
    return d;
}

inline Eigen::VectorXd vec(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

inline std::vector<double> stdvec(const Eigen::VectorXd& v)
{
    return {v.data(), v.data() + v.size()};
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline std::vector<double> random_vector(Index n, flexamg::Rng& rng)
{
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

/// Random sparse matrix with roughly `density` fill.
inline SparseMatrix random_sparse(Index rows, Index cols, double density, flexamg::Rng& rng)
{
    std::vector<flexamg::Triplet> t;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            if (rng.uniform() < density) t.push_back({i, j, rng.uniform(-1.0, 1.0)});
    return flexamg::from_triplets(rows, cols, t);
}

/// Strictly diagonally dominant with random signs off the diagonal and a
/// positive diagonal.
inline SparseMatrix random_diag_dominant(Index n, double density, flexamg::Rng& rng)
{
    std::vector<flexamg::Triplet> t;
    for (Index i = 0; i < n; ++i) {
        double off = 0.0;
        for (Index j = 0; j < n; ++j) {
            if (j == i || rng.uniform() >= density) continue;
            const double v = rng.uniform(-1.0, 1.0);
            off += std::abs(v);
            t.push_back({i, j, v});
        }
        t.push_back({i, i, off + rng.uniform(0.5, 1.5)});
    }
    return flexamg::from_triplets(n, n, t);
}

/// Diagonally dominant matrix whose entries are multiples of 1/8, so that
/// products with vectors of eighths are computed exactly.
inline SparseMatrix random_dyadic_diag_dominant(Index n, double density, flexamg::Rng& rng)
{
    std::vector<flexamg::Triplet> t;
    for (Index i = 0; i < n; ++i) {
        double off = 0.0;
        for (Index j = 0; j < n; ++j) {
            if (j == i || rng.uniform() >= density) continue;
            const double v = (static_cast<double>(rng.index(17)) - 8.0) / 8.0;
            off += std::abs(v);
            t.push_back({i, j, v});
        }
        t.push_back({i, i, off + static_cast<double>(4 + rng.index(9)) / 8.0});
    }
    return flexamg::from_triplets(n, n, t);
}

inline std::vector<double> random_eighths(Index n, flexamg::Rng& rng)
{
    std::vector<double> v(n);
    for (auto& x : v) x = (static_cast<double>(rng.index(17)) - 8.0) / 8.0;
    return v;
}

} // namespace testing
