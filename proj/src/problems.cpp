#include "flexamg/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>

#include "flexamg/errors.hpp"

namespace flexamg {

std::vector<Index> RowPartition::owner() const
{
    std::vector<Index> own(rows());
    for (Index b = 0; b < blocks(); ++b)
        std::fill(own.begin() + static_cast<std::ptrdiff_t>(begin(b)),
                  own.begin() + static_cast<std::ptrdiff_t>(end(b)), b);
    return own;
}

RowPartition partition_blocks(Index n_rows, Index p)
{
    if (p < 1 || p > n_rows)
        throw ParameterError("partition_blocks: block count " + std::to_string(p) +
                             " outside [1, " + std::to_string(n_rows) + "]");
    RowPartition part;
    part.offsets.resize(p + 1);
    const Index base = n_rows / p;
    const Index extra = n_rows % p;
    part.offsets[0] = 0;
    for (Index b = 0; b < p; ++b) part.offsets[b + 1] = part.offsets[b] + base + (b < extra ? 1 : 0);
    return part;
}

void MaterialParams::check() const
{
    if (!(youngs_modulus > 0)) throw ParameterError("material: E must be positive");
    if (!(poisson_ratio > 0 && poisson_ratio < 0.5))
        throw ParameterError("material: nu must lie in (0, 0.5)");
    if (!(time_step > 0)) throw ParameterError("material: dt must be positive");
    if (!(pool_temperature > initial_temperature))
        throw ParameterError("material: theta_l must exceed theta0");
}

namespace {

ProblemInstance five_point(const std::string& name, Index n, double ex, double ey, Index blocks)
{
    if (n < 3) throw ParameterError(name + ": need n >= 3, got " + std::to_string(n));
    const Index m = n - 2;
    const Index rows = m * m;
    const double h = 1.0 / static_cast<double>(n - 1);
    std::vector<Triplet> t;
    t.reserve(5 * rows);
    for (Index iy = 0; iy < m; ++iy)
        for (Index ix = 0; ix < m; ++ix) {
            const Index i = ix + m * iy;
            if (iy > 0) t.push_back({i, i - m, -ey});
            if (ix > 0) t.push_back({i, i - 1, -ex});
            t.push_back({i, i, 2.0 * ex + 2.0 * ey});
            if (ix + 1 < m) t.push_back({i, i + 1, -ex});
            if (iy + 1 < m) t.push_back({i, i + m, -ey});
        }
    ProblemInstance p;
    p.name = name;
    p.matrix = from_triplets(rows, rows, t);
    p.rhs.assign(rows, h * h);
    p.row_partition = partition_blocks(rows, std::min(blocks, rows));
    return p;
}

// Bilinear shape functions on a rectangle at reference point (xi, eta) in [-1,1]^2.
// Local node order: (0,0), (1,0), (1,1), (0,1).
struct ShapeEval {
    std::array<double, 4> n;
    std::array<double, 4> dx;
    std::array<double, 4> dy;
};

ShapeEval q1_shape(double xi, double eta, double hx, double hy)
{
    static constexpr std::array<double, 4> sx{-1, 1, 1, -1};
    static constexpr std::array<double, 4> sy{-1, -1, 1, 1};
    ShapeEval s{};
    for (int a = 0; a < 4; ++a) {
        s.n[a] = 0.25 * (1 + sx[a] * xi) * (1 + sy[a] * eta);
        s.dx[a] = 0.25 * sx[a] * (1 + sy[a] * eta) * 2.0 / hx;
        s.dy[a] = 0.25 * sy[a] * (1 + sx[a] * xi) * 2.0 / hy;
    }
    return s;
}

} // namespace

ProblemInstance poisson_2d(Index n, Index blocks)
{
    return five_point("poisson_2d", n, 1.0, 1.0, blocks);
}

ProblemInstance anisotropic_2d(Index n, double epsilon, Index blocks)
{
    if (!(epsilon > 0)) throw ParameterError("anisotropic_2d: epsilon must be positive");
    return five_point("anisotropic_2d", n, 1.0, epsilon, blocks);
}

ProblemInstance coupled_thermoelastic_2d(Index nx, Index ny, const MaterialParams& mat,
                                         Index blocks, const PlateGeometry& plate)
{
    if (nx < 2 || ny < 2)
        throw ParameterError("coupled_thermoelastic_2d: degenerate mesh " + std::to_string(nx) +
                             "x" + std::to_string(ny) + " (need at least 2x2 elements)");
    if (!(plate.length > 0 && plate.width > 0))
        throw ParameterError("coupled_thermoelastic_2d: plate dimensions must be positive");
    mat.check();

    const double hx = plate.length / static_cast<double>(nx);
    const double hy = plate.width / static_cast<double>(ny);
    const Index nodes_y = ny + 1;
    const Index n_nodes = (nx + 1) * nodes_y;
    const Index n_dofs = 3 * n_nodes;
    auto node_id = [&](Index ix, Index iy) { return ix * nodes_y + iy; };

    const double e = mat.youngs_modulus;
    const double nu = mat.poisson_ratio;
    const double bulk = e / (3.0 * (1.0 - 2.0 * nu));
    const double shear = e / (2.0 * (1.0 + nu));
    const double lame = bulk - 2.0 * shear / 3.0;
    const double gamma = 3.0 * mat.thermal_expansion * bulk;
    const double inv_dt = 1.0 / mat.time_step;
    const std::array<std::array<double, 3>, 3> stiff{{{lame + 2 * shear, lame, 0.0},
                                                      {lame, lame + 2 * shear, 0.0},
                                                      {0.0, 0.0, shear}}};

    // Element matrices are identical on a structured mesh; integrate once.
    std::array<std::array<double, 12>, 12> ke{};
    const double g = 1.0 / std::sqrt(3.0);
    const double det_j = 0.25 * hx * hy;
    for (double xi : {-g, g})
        for (double eta : {-g, g}) {
            const ShapeEval s = q1_shape(xi, eta, hx, hy);
            std::array<std::array<double, 8>, 3> bu{};
            for (int a = 0; a < 4; ++a) {
                bu[0][2 * a] = s.dx[a];
                bu[1][2 * a + 1] = s.dy[a];
                bu[2][2 * a] = s.dy[a];
                bu[2][2 * a + 1] = s.dx[a];
            }
            std::array<double, 8> div{};
            for (int j = 0; j < 8; ++j) div[j] = bu[0][j] + bu[1][j];

            // Local dof order: u_x(a) = 3a, u_y(a) = 3a+1, theta(a) = 3a+2.
            auto ud = [](int j) { return 3 * (j / 2) + (j % 2); };
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j) {
                    double v = 0.0;
                    for (int p = 0; p < 3; ++p)
                        for (int q = 0; q < 3; ++q) v += bu[p][i] * stiff[p][q] * bu[q][j];
                    ke[ud(i)][ud(j)] += v * det_j;
                }
            for (int i = 0; i < 8; ++i)
                for (int b = 0; b < 4; ++b) {
                    ke[ud(i)][3 * b + 2] += -gamma * div[i] * s.n[b] * det_j;
                    ke[3 * b + 2][ud(i)] +=
                        -inv_dt * mat.initial_temperature * gamma * s.n[b] * div[i] * det_j;
                }
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    ke[3 * a + 2][3 * b + 2] +=
                        (-mat.conductivity * (s.dx[a] * s.dx[b] + s.dy[a] * s.dy[b]) -
                         inv_dt * mat.heat_capacity * s.n[a] * s.n[b]) *
                        det_j;
        }

    std::vector<Triplet> t;
    t.reserve(144 * nx * ny);
    for (Index ex = 0; ex < nx; ++ex)
        for (Index ey = 0; ey < ny; ++ey) {
            const std::array<Index, 4> nodes{node_id(ex, ey), node_id(ex + 1, ey),
                                             node_id(ex + 1, ey + 1), node_id(ex, ey + 1)};
            for (int a = 0; a < 12; ++a)
                for (int b = 0; b < 12; ++b)
                    t.push_back({3 * nodes[a / 3] + a % 3, 3 * nodes[b / 3] + b % 3, ke[a][b]});
        }
    const SparseMatrix full = from_triplets(n_dofs, n_dofs, t);

    // Dirichlet data: clamped displacements on y = 0 and y = width, and the
    // melting-pool strip of two node columns straddling x = length / 2.
    std::vector<char> fixed(n_dofs, 0);
    Vector lift(n_dofs, 0.0);
    for (Index ix = 0; ix <= nx; ++ix) {
        for (Index iy : {Index{0}, ny}) {
            fixed[3 * node_id(ix, iy)] = 1;
            fixed[3 * node_id(ix, iy) + 1] = 1;
        }
        if (nx <= 2 * ix + 2 && 2 * ix < nx + 2)
            for (Index iy = 0; iy <= ny; ++iy) {
                fixed[3 * node_id(ix, iy) + 2] = 1;
                lift[3 * node_id(ix, iy) + 2] = mat.pool_temperature;
            }
    }

    std::vector<Index> reduced(n_dofs, static_cast<Index>(-1));
    Index n_free = 0;
    for (Index d = 0; d < n_dofs; ++d)
        if (!fixed[d]) reduced[d] = n_free++;
    if (n_free == 0) throw ParameterError("coupled_thermoelastic_2d: no free unknowns remain");

    std::vector<Triplet> kept;
    kept.reserve(full.nnz());
    ProblemInstance p;
    p.name = "coupled_thermoelastic_2d";
    p.rhs.assign(n_free, 0.0);
    DofBlocks blocks_out;
    for (Index d = 0; d < n_dofs; ++d) {
        if (fixed[d]) continue;
        const Index i = reduced[d];
        (d % 3 == 2 ? blocks_out.temperature : blocks_out.displacement).push_back(i);
        auto cols = full.row_cols(d);
        auto vals = full.row_values(d);
        for (Index k = 0; k < cols.size(); ++k) {
            if (fixed[cols[k]])
                p.rhs[i] -= vals[k] * lift[cols[k]];
            else
                kept.push_back({i, reduced[cols[k]], vals[k]});
        }
    }
    p.matrix = from_triplets(n_free, n_free, kept);
    p.dof_blocks = std::move(blocks_out);
    p.row_partition = partition_blocks(n_free, std::min(blocks, n_free));
    return p;
}

ProblemSpec ProblemSpec::parse(const std::string& text)
{
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    if (auto colon = s.find(':'); colon != std::string::npos) s[colon] = ' ';
    std::istringstream in(s);
    ProblemSpec spec;
    if (!(in >> spec.name)) throw ParameterError("problem spec: missing problem name");
    std::string kv;
    while (in >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ParameterError("problem spec: expected key=value, got '" + kv + "'");
        spec.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return spec;
}

std::string ProblemSpec::to_string() const
{
    std::string out = name;
    for (const auto& [k, v] : params) out += " " + k + "=" + v;
    return out;
}

namespace {

class ParamReader {
public:
    explicit ParamReader(const ProblemSpec& spec)
        : spec_(spec)
    {
    }

    Index count(const std::string& key, std::optional<Index> fallback = std::nullopt)
    {
        used_.insert(key);
        auto it = spec_.params.find(key);
        if (it == spec_.params.end()) {
            if (!fallback) throw ParameterError(spec_.name + ": missing parameter '" + key + "'");
            return *fallback;
        }
        try {
            std::size_t pos = 0;
            long long v = std::stoll(it->second, &pos);
            if (pos != it->second.size() || v < 0) throw std::invalid_argument("");
            return static_cast<Index>(v);
        } catch (const std::exception&) {
            throw ParameterError(spec_.name + ": parameter '" + key +
                                 "' must be a non-negative integer");
        }
    }

    double real(const std::string& key, double fallback)
    {
        used_.insert(key);
        auto it = spec_.params.find(key);
        if (it == spec_.params.end()) return fallback;
        try {
            std::size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ParameterError(spec_.name + ": parameter '" + key + "' must be a number");
        }
    }

    void finish() const
    {
        for (const auto& [k, v] : spec_.params)
            if (!used_.contains(k)) throw ParameterError(spec_.name + ": unknown parameter '" + k + "'");
    }

private:
    const ProblemSpec& spec_;
    std::set<std::string> used_;
};

} // namespace

ProblemInstance make_problem(const ProblemSpec& spec)
{
    ParamReader r(spec);
    ProblemInstance p;
    if (spec.name == "poisson_2d") {
        const Index n = r.count("n");
        const Index blocks = r.count("blocks", default_partition_blocks);
        r.finish();
        p = poisson_2d(n, blocks);
    } else if (spec.name == "anisotropic_2d") {
        const Index n = r.count("n");
        const double eps = r.real("epsilon", 1.0);
        const Index blocks = r.count("blocks", default_partition_blocks);
        r.finish();
        p = anisotropic_2d(n, eps, blocks);
    } else if (spec.name == "coupled_thermoelastic_2d") {
        const Index nx = r.count("nx");
        const Index ny = r.count("ny");
        MaterialParams m;
        m.youngs_modulus = r.real("E", m.youngs_modulus);
        m.poisson_ratio = r.real("nu", m.poisson_ratio);
        m.thermal_expansion = r.real("alpha_T", m.thermal_expansion);
        m.conductivity = r.real("lambda", m.conductivity);
        m.heat_capacity = r.real("c_rho", m.heat_capacity);
        m.initial_temperature = r.real("theta0", m.initial_temperature);
        m.pool_temperature = r.real("theta_l", m.pool_temperature);
        m.time_step = r.real("dt", m.time_step);
        PlateGeometry g;
        g.length = r.real("length", g.length);
        g.width = r.real("width", g.width);
        const Index blocks = r.count("blocks", default_partition_blocks);
        r.finish();
        p = coupled_thermoelastic_2d(nx, ny, m, blocks, g);
    } else {
        throw ParameterError("unknown problem '" + spec.name + "'");
    }
    return p;
}

} // namespace flexamg
