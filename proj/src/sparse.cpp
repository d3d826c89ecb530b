#include "flexamg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "flexamg/errors.hpp"

namespace flexamg {

namespace {

void require(bool cond, const std::string& what)
{
    if (!cond) throw StructuralError(what);
}

} // namespace

SparseMatrix::SparseMatrix(Index n_rows, Index n_cols, std::vector<Index> row_offsets,
                           std::vector<Index> col_indices, std::vector<double> values)
    : n_rows_(n_rows)
    , n_cols_(n_cols)
    , row_offsets_(std::move(row_offsets))
    , col_indices_(std::move(col_indices))
    , values_(std::move(values))
{
    require(row_offsets_.size() == n_rows_ + 1, "row_offsets must have n_rows+1 entries");
    require(row_offsets_.front() == 0, "row_offsets[0] must be 0");
    require(row_offsets_.back() == values_.size() && values_.size() == col_indices_.size(),
            "row_offsets[n_rows] must equal the number of stored entries");
    for (Index i = 0; i < n_rows_; ++i) {
        require(row_offsets_[i] <= row_offsets_[i + 1], "row_offsets must be non-decreasing");
        for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            require(col_indices_[k] < n_cols_,
                    "column index out of range in row " + std::to_string(i));
            if (k > row_offsets_[i])
                require(col_indices_[k - 1] < col_indices_[k],
                        "column indices must be strictly increasing in row " + std::to_string(i));
        }
    }
}

SparseMatrix SparseMatrix::identity(Index n)
{
    std::vector<Index> offsets(n + 1);
    std::iota(offsets.begin(), offsets.end(), Index{0});
    std::vector<Index> cols(n);
    std::iota(cols.begin(), cols.end(), Index{0});
    return {n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0)};
}

double SparseMatrix::at(Index i, Index j) const
{
    auto cols = row_cols(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return values_[row_offsets_[i] + static_cast<Index>(it - cols.begin())];
}

SparseMatrix from_triplets(Index n_rows, Index n_cols, std::span<const Triplet> entries)
{
    std::vector<Index> count(n_rows + 1, 0);
    for (const auto& t : entries) {
        if (t.row >= n_rows || t.col >= n_cols)
            throw StructuralError("triplet (" + std::to_string(t.row) + ", " +
                                  std::to_string(t.col) + ") outside " + std::to_string(n_rows) +
                                  "x" + std::to_string(n_cols));
        ++count[t.row + 1];
    }
    std::partial_sum(count.begin(), count.end(), count.begin());

    // Bucket by row, keeping input order so duplicate summation is deterministic.
    std::vector<std::pair<Index, double>> bucket(entries.size());
    {
        auto fill = count;
        for (const auto& t : entries) bucket[fill[t.row]++] = {t.col, t.value};
    }

    std::vector<Index> offsets(n_rows + 1, 0);
    std::vector<Index> cols;
    std::vector<double> vals;
    cols.reserve(entries.size());
    vals.reserve(entries.size());
    for (Index i = 0; i < n_rows; ++i) {
        auto first = bucket.begin() + static_cast<std::ptrdiff_t>(count[i]);
        auto last = bucket.begin() + static_cast<std::ptrdiff_t>(count[i + 1]);
        std::stable_sort(first, last, [](const auto& x, const auto& y) { return x.first < y.first; });
        for (auto it = first; it != last;) {
            Index c = it->first;
            double sum = 0.0;
            for (; it != last && it->first == c; ++it) sum += it->second;
            if (sum != 0.0) {
                cols.push_back(c);
                vals.push_back(sum);
            }
        }
        offsets[i + 1] = cols.size();
    }
    return {n_rows, n_cols, std::move(offsets), std::move(cols), std::move(vals)};
}

void spmv_into(const SparseMatrix& a, std::span<const double> x, std::span<double> y)
{
    if (x.size() != a.cols() || y.size() != a.rows())
        throw StructuralError("spmv: dimension mismatch (" + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()) + " times " + std::to_string(x.size()) + ")");
    const auto offs = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (Index i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (Index k = offs[i]; k < offs[i + 1]; ++k) s += vals[k] * x[cols[k]];
        y[i] = s;
    }
}

Vector spmv(const SparseMatrix& a, std::span<const double> x)
{
    Vector y(a.rows());
    spmv_into(a, x, y);
    return y;
}

void residual_into(const SparseMatrix& a, std::span<const double> x, std::span<const double> b,
                   std::span<double> r)
{
    if (x.size() != a.cols() || b.size() != a.rows() || r.size() != a.rows())
        throw StructuralError("residual: dimension mismatch");
    const auto offs = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (Index i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (Index k = offs[i]; k < offs[i + 1]; ++k) s += vals[k] * x[cols[k]];
        r[i] = b[i] - s;
    }
}

Vector residual(const SparseMatrix& a, std::span<const double> x, std::span<const double> b)
{
    Vector r(a.rows());
    residual_into(a, x, b, r);
    return r;
}

double dot(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw StructuralError("dot: length mismatch");
    double s = 0.0;
    for (Index i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(std::span<const double> x)
{
    return std::sqrt(dot(x, x));
}

SparseMatrix transpose(const SparseMatrix& a)
{
    std::vector<Index> offsets(a.cols() + 1, 0);
    for (Index c : a.col_indices()) ++offsets[c + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());

    std::vector<Index> cols(a.nnz());
    std::vector<double> vals(a.nnz());
    auto next = offsets;
    for (Index i = 0; i < a.rows(); ++i) {
        auto rc = a.row_cols(i);
        auto rv = a.row_values(i);
        for (Index k = 0; k < rc.size(); ++k) {
            Index dst = next[rc[k]]++;
            cols[dst] = i;
            vals[dst] = rv[k];
        }
    }
    return {a.cols(), a.rows(), std::move(offsets), std::move(cols), std::move(vals)};
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b)
{
    if (a.cols() != b.rows())
        throw StructuralError("multiply: inner dimensions differ (" + std::to_string(a.cols()) +
                              " vs " + std::to_string(b.rows()) + ")");
    const Index n = a.rows();
    const Index m = b.cols();
    constexpr Index unset = static_cast<Index>(-1);

    // Symbolic pass.
    std::vector<Index> offsets(n + 1, 0);
    std::vector<Index> marker(m, unset);
    for (Index i = 0; i < n; ++i) {
        Index count = 0;
        for (Index k : a.row_cols(i))
            for (Index j : b.row_cols(k))
                if (marker[j] != i) {
                    marker[j] = i;
                    ++count;
                }
        offsets[i + 1] = offsets[i] + count;
    }

    // Numeric pass.
    std::vector<Index> cols(offsets[n]);
    std::vector<double> vals(offsets[n]);
    std::vector<double> acc(m, 0.0);
    std::fill(marker.begin(), marker.end(), unset);
    for (Index i = 0; i < n; ++i) {
        Index pos = offsets[i];
        auto ac = a.row_cols(i);
        auto av = a.row_values(i);
        for (Index ka = 0; ka < ac.size(); ++ka) {
            auto bc = b.row_cols(ac[ka]);
            auto bv = b.row_values(ac[ka]);
            for (Index kb = 0; kb < bc.size(); ++kb) {
                Index j = bc[kb];
                if (marker[j] != i) {
                    marker[j] = i;
                    cols[pos++] = j;
                    acc[j] = 0.0;
                }
                acc[j] += av[ka] * bv[kb];
            }
        }
        auto first = cols.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
        auto last = cols.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
        std::sort(first, last);
        for (Index k = offsets[i]; k < offsets[i + 1]; ++k) vals[k] = acc[cols[k]];
    }
    return {n, m, std::move(offsets), std::move(cols), std::move(vals)};
}

SparseMatrix rap(const SparseMatrix& r, const SparseMatrix& a, const SparseMatrix& p)
{
    if (r.cols() != a.rows() || a.cols() != p.rows() || r.rows() != p.cols())
        throw StructuralError("rap: dimension chain mismatch");
    return multiply(multiply(r, a), p);
}

std::vector<double> to_dense(const SparseMatrix& a)
{
    std::vector<double> d(a.rows() * a.cols(), 0.0);
    for (Index i = 0; i < a.rows(); ++i) {
        auto rc = a.row_cols(i);
        auto rv = a.row_values(i);
        for (Index k = 0; k < rc.size(); ++k) d[i * a.cols() + rc[k]] = rv[k];
    }
    return d;
}

} // namespace flexamg
