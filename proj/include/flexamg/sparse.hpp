#pragma once

#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

namespace flexamg {

using Index = std::size_t;
using Vector = std::vector<double>;

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Compressed sparse row matrix.
///
/// Column indices inside a row are strictly increasing; there are no
/// duplicate entries. Instances are immutable once constructed.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Takes ownership of raw CSR arrays and checks every invariant.
    SparseMatrix(Index n_rows, Index n_cols, std::vector<Index> row_offsets,
                 std::vector<Index> col_indices, std::vector<double> values);

    static SparseMatrix identity(Index n);

    [[nodiscard]] Index rows() const noexcept { return n_rows_; }
    [[nodiscard]] Index cols() const noexcept { return n_cols_; }
    [[nodiscard]] Index nnz() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
    [[nodiscard]] std::span<const Index> col_indices() const noexcept { return col_indices_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    [[nodiscard]] std::span<const Index> row_cols(Index i) const noexcept
    {
        return {col_indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
    }
    [[nodiscard]] std::span<const double> row_values(Index i) const noexcept
    {
        return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
    }

    /// Stored value at (i, j), or 0 when the entry is not present.
    [[nodiscard]] double at(Index i, Index j) const;

    [[nodiscard]] bool is_square() const noexcept { return n_rows_ == n_cols_; }

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
    Index n_rows_ = 0;
    Index n_cols_ = 0;
    std::vector<Index> row_offsets_{0};
    std::vector<Index> col_indices_;
    std::vector<double> values_;
};

/// Builds a CSR matrix, summing duplicates and dropping entries that sum to zero.
SparseMatrix from_triplets(Index n_rows, Index n_cols, std::span<const Triplet> entries);

Vector spmv(const SparseMatrix& a, std::span<const double> x);
void spmv_into(const SparseMatrix& a, std::span<const double> x, std::span<double> y);

/// b - A x
Vector residual(const SparseMatrix& a, std::span<const double> x, std::span<const double> b);
void residual_into(const SparseMatrix& a, std::span<const double> x, std::span<const double> b,
                   std::span<double> r);

double norm2(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);

SparseMatrix transpose(const SparseMatrix& a);

/// Sparse product A*B (symbolic pass, then numeric pass).
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

/// Galerkin triple product R*A*P, evaluated as (R*A)*P.
SparseMatrix rap(const SparseMatrix& r, const SparseMatrix& a, const SparseMatrix& p);

/// Row-major dense copy; intended for small matrices in tests and coarse solves.
std::vector<double> to_dense(const SparseMatrix& a);

} // namespace flexamg
