#include "flexamg/smoothers.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "flexamg/errors.hpp"

namespace flexamg {

int sample_set::index_of(double v)
{
    if (!std::isfinite(v)) return -1;
    const double k = std::round((v - 0.1) / 0.05);
    if (k < 0 || k >= size) return -1;
    if (std::abs(value(static_cast<int>(k)) - v) > 1e-9) return -1;
    return static_cast<int>(k);
}

std::string to_string(SmootherKind kind)
{
    switch (kind) {
    case SmootherKind::Jacobi: return "jacobi";
    case SmootherKind::GsForward: return "gs-fwd";
    case SmootherKind::GsBackward: return "gs-bwd";
    case SmootherKind::L1Jacobi: return "l1-jacobi";
    case SmootherKind::L1GsForward: return "l1-gs-fwd";
    case SmootherKind::L1GsBackward: return "l1-gs-bwd";
    case SmootherKind::GsSymmetric: return "gs-sym";
    }
    return "?";
}

std::string to_string(RelaxOrdering ordering)
{
    switch (ordering) {
    case RelaxOrdering::Lexicographic: return "lex";
    case RelaxOrdering::CF: return "cf";
    case RelaxOrdering::FC: return "fc";
    }
    return "?";
}

namespace {

std::string weight_text(double w)
{
    char buf[32];
    if (std::round(w * 100.0) / 100.0 != w) {
        std::snprintf(buf, sizeof buf, "%.17g", w);
        return buf;
    }
    std::snprintf(buf, sizeof buf, "%.2f", w);
    std::string s = buf;
    if (s.size() > 3 && s.back() == '0') s.pop_back();
    return s;
}

double parse_weight(const std::string& field, const std::string& key, const std::string& token)
{
    if (field.rfind(key, 0) != 0)
        throw ParseError("smoother token '" + token + "': expected '" + key + "'");
    try {
        std::size_t pos = 0;
        std::string num = field.substr(key.size());
        double v = std::stod(num, &pos);
        if (pos != num.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("smoother token '" + token + "': bad number in '" + field + "'");
    }
}

} // namespace

std::string to_token(const SmootherSpec& spec)
{
    return to_string(spec.kind) + "/" + to_string(spec.ordering) + "/wi=" +
           weight_text(spec.omega_inner) + "/wo=" + weight_text(spec.omega_outer) +
           "/s=" + std::to_string(spec.sweeps);
}

SmootherSpec parse_smoother_token(const std::string& token)
{
    std::vector<std::string> parts;
    std::stringstream ss(token);
    for (std::string part; std::getline(ss, part, '/');) parts.push_back(part);
    if (parts.size() != 5) throw ParseError("smoother token '" + token + "': expected 5 fields");

    SmootherSpec spec;
    bool found = false;
    for (auto kind : {SmootherKind::Jacobi, SmootherKind::GsForward, SmootherKind::GsBackward,
                      SmootherKind::L1Jacobi, SmootherKind::L1GsForward, SmootherKind::L1GsBackward,
                      SmootherKind::GsSymmetric})
        if (parts[0] == to_string(kind)) {
            spec.kind = kind;
            found = true;
        }
    if (!found) throw ParseError("smoother token '" + token + "': unknown kind '" + parts[0] + "'");

    if (parts[1] == "lex")
        spec.ordering = RelaxOrdering::Lexicographic;
    else if (parts[1] == "cf")
        spec.ordering = RelaxOrdering::CF;
    else if (parts[1] == "fc")
        spec.ordering = RelaxOrdering::FC;
    else
        throw ParseError("smoother token '" + token + "': unknown ordering '" + parts[1] + "'");

    spec.omega_inner = parse_weight(parts[2], "wi=", token);
    spec.omega_outer = parse_weight(parts[3], "wo=", token);
    if (parts[4].rfind("s=", 0) != 0)
        throw ParseError("smoother token '" + token + "': expected 's='");
    try {
        std::size_t pos = 0;
        spec.sweeps = std::stoi(parts[4].substr(2), &pos);
        if (pos != parts[4].size() - 2) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw ParseError("smoother token '" + token + "': bad sweep count");
    }
    return spec;
}

std::vector<std::string> check_smoother(const SmootherSpec& spec)
{
    std::vector<std::string> out;
    if (!sample_set::contains(spec.omega_inner))
        out.push_back("omega_i " + weight_text(spec.omega_inner) + " outside sample set");
    if (!sample_set::contains(spec.omega_outer))
        out.push_back("omega_o " + weight_text(spec.omega_outer) + " outside sample set");
    if (spec.sweeps < 1 || spec.sweeps > max_sweeps)
        out.push_back("sweeps " + std::to_string(spec.sweeps) + " outside [1, 4]");
    return out;
}

RelaxData precompute_relax_data(const SparseMatrix& a, const CFSplit& cf_split,
                                const RowPartition& partition)
{
    const Index n = a.rows();
    if (!a.is_square() || partition.rows() != n || (!cf_split.empty() && cf_split.size() != n))
        throw StructuralError("precompute_relax_data: inconsistent dimensions");

    RelaxData d;
    d.partition = partition;
    d.owner = partition.owner();
    d.cf_split = cf_split;
    d.diag.assign(n, 0.0);
    d.l1_sums.assign(n, 0.0);
    for (Index i = 0; i < n; ++i) {
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        double off_block = 0.0;
        for (Index k = 0; k < cols.size(); ++k) {
            if (cols[k] == i)
                d.diag[i] = vals[k];
            else if (d.owner[cols[k]] != d.owner[i])
                off_block += std::abs(vals[k]);
        }
        if (d.diag[i] == 0.0)
            throw SetupError("zero diagonal in row " + std::to_string(i));
        d.l1_sums[i] = std::abs(d.diag[i]) + off_block;
    }

    auto is_c = [&](Index i) { return cf_split.empty() || cf_split[i] == PointType::Coarse; };
    d.cf_order.reserve(n);
    d.fc_order.reserve(n);
    d.n_coarse_in_block.assign(partition.blocks(), 0);
    for (Index b = 0; b < partition.blocks(); ++b) {
        for (Index i = partition.begin(b); i < partition.end(b); ++i)
            if (is_c(i)) {
                d.cf_order.push_back(i);
                ++d.n_coarse_in_block[b];
            }
        for (Index i = partition.begin(b); i < partition.end(b); ++i)
            if (!is_c(i)) {
                d.cf_order.push_back(i);
                d.fc_order.push_back(i);
            }
        for (Index i = partition.begin(b); i < partition.end(b); ++i)
            if (is_c(i)) d.fc_order.push_back(i);
    }
    return d;
}

namespace {

bool uses_l1(SmootherKind k)
{
    return k == SmootherKind::L1Jacobi || k == SmootherKind::L1GsForward ||
           k == SmootherKind::L1GsBackward;
}

bool is_jacobi(SmootherKind k)
{
    return k == SmootherKind::Jacobi || k == SmootherKind::L1Jacobi;
}

bool is_backward(SmootherKind k)
{
    return k == SmootherKind::GsBackward || k == SmootherKind::L1GsBackward;
}

/// Rows of block b in the requested order; `split` is where the second
/// phase (F rows for CF, C rows for FC) starts.
struct BlockOrder {
    std::span<const Index> rows;
    Index split;
};

BlockOrder block_order(const RelaxData& d, Index b, RelaxOrdering ordering,
                       std::vector<Index>& lex_scratch)
{
    const Index begin = d.partition.begin(b);
    const Index len = d.partition.end(b) - begin;
    switch (ordering) {
    case RelaxOrdering::CF:
        return {std::span<const Index>(d.cf_order).subspan(begin, len), d.n_coarse_in_block[b]};
    case RelaxOrdering::FC:
        return {std::span<const Index>(d.fc_order).subspan(begin, len),
                len - d.n_coarse_in_block[b]};
    case RelaxOrdering::Lexicographic: break;
    }
    lex_scratch.resize(len);
    for (Index k = 0; k < len; ++k) lex_scratch[k] = begin + k;
    return {lex_scratch, len};
}

// One hybrid sweep of a single-direction smoother.
void hybrid_sweep(const SparseMatrix& a, std::span<const double> b, std::span<double> x,
                  SmootherKind kind, const SmootherSpec& spec, const RelaxData& d, Vector& x_old,
                  Vector& update, std::vector<Index>& lex_scratch)
{
    const auto offs = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    const bool l1 = uses_l1(kind);
    const double wi = spec.omega_inner;
    const double wo = spec.omega_outer;

    x_old.assign(x.begin(), x.end());
    auto divisor = [&](Index i) {
        return l1 ? std::copysign(d.l1_sums[i], d.diag[i]) : d.diag[i];
    };
    // Residual of row i reading in-block values from x and off-block values
    // from the sweep-start iterate.
    auto row_residual = [&](Index i) {
        const Index blk = d.owner[i];
        double s = b[i];
        for (Index k = offs[i]; k < offs[i + 1]; ++k) {
            const Index j = cols[k];
            s -= vals[k] * (d.owner[j] == blk ? x[j] : x_old[j]);
        }
        return s;
    };

    for (Index blk = 0; blk < d.partition.blocks(); ++blk) {
        const BlockOrder order = block_order(d, blk, spec.ordering, lex_scratch);
        const Index len = order.rows.size();
        if (is_jacobi(kind)) {
            // Each phase reads the values present at its start.
            const Index phases[3] = {0, order.split, len};
            for (int ph = 0; ph < 2; ++ph) {
                const Index lo = phases[ph];
                const Index hi = phases[ph + 1];
                update.resize(hi - lo);
                for (Index k = lo; k < hi; ++k) {
                    const Index i = order.rows[k];
                    update[k - lo] = wi * row_residual(i) / divisor(i);
                }
                for (Index k = lo; k < hi; ++k) x[order.rows[k]] += update[k - lo];
            }
        } else if (is_backward(kind)) {
            for (Index k = len; k-- > 0;) {
                const Index i = order.rows[k];
                x[i] += wi * row_residual(i) / divisor(i);
            }
        } else {
            for (Index k = 0; k < len; ++k) {
                const Index i = order.rows[k];
                x[i] += wi * row_residual(i) / divisor(i);
            }
        }
        if (wo != 1.0)
            for (Index i = d.partition.begin(blk); i < d.partition.end(blk); ++i)
                x[i] = x_old[i] + wo * (x[i] - x_old[i]);
    }
}

} // namespace

void relax(const SparseMatrix& a, std::span<const double> b, std::span<double> x,
           const SmootherSpec& spec, const RelaxData& data)
{
    if (b.size() != a.rows() || x.size() != a.rows() || data.diag.size() != a.rows())
        throw StructuralError("relax: dimension mismatch");
    Vector x_old;
    Vector update;
    std::vector<Index> lex;
    for (int s = 0; s < spec.sweeps; ++s) {
        if (spec.kind == SmootherKind::GsSymmetric) {
            hybrid_sweep(a, b, x, SmootherKind::GsForward, spec, data, x_old, update, lex);
            hybrid_sweep(a, b, x, SmootherKind::GsBackward, spec, data, x_old, update, lex);
        } else {
            hybrid_sweep(a, b, x, spec.kind, spec, data, x_old, update, lex);
        }
    }
}

Vector relax_sweep(const SparseMatrix& a, std::span<const double> b, std::span<const double> x,
                   const SmootherSpec& spec, const RelaxData& data)
{
    Vector out(x.begin(), x.end());
    relax(a, b, out, spec, data);
    return out;
}

std::uint64_t smoother_work(const SmootherSpec& spec, Index nnz)
{
    const std::uint64_t per_sweep = spec.kind == SmootherKind::GsSymmetric ? 2 : 1;
    return per_sweep * static_cast<std::uint64_t>(spec.sweeps) * nnz;
}

} // namespace flexamg
