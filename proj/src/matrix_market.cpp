#include "flexamg/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "flexamg/errors.hpp"

namespace flexamg {

namespace {

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

struct Banner {
    std::string format;
    std::string field;
    std::string symmetry;
};

Banner read_banner(std::istream& in, std::size_t& line_no)
{
    std::string line;
    if (!std::getline(in, line)) throw ParseError("matrix market: empty input");
    line_no = 1;
    std::istringstream ss(line);
    std::string tag, object;
    Banner b;
    ss >> tag >> object >> b.format >> b.field >> b.symmetry;
    if (tag != "%%MatrixMarket" || lower(object) != "matrix")
        throw ParseError("matrix market line 1: missing %%MatrixMarket matrix banner");
    b.format = lower(b.format);
    b.field = lower(b.field);
    b.symmetry = lower(b.symmetry);
    if (b.field != "real" && b.field != "integer" && b.field != "double")
        throw ParseError("matrix market line 1: unsupported field '" + b.field + "'");
    if (b.symmetry != "general" && b.symmetry != "symmetric")
        throw ParseError("matrix market line 1: unsupported symmetry '" + b.symmetry + "'");
    return b;
}

bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no)
{
    while (std::getline(in, line)) {
        ++line_no;
        auto pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos || line[pos] == '%') continue;
        return true;
    }
    return false;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    return in;
}

} // namespace

void write_matrix_market(std::ostream& out, const SparseMatrix& a)
{
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
    out << std::setprecision(17);
    for (Index i = 0; i < a.rows(); ++i) {
        auto cols = a.row_cols(i);
        auto vals = a.row_values(i);
        for (Index k = 0; k < cols.size(); ++k)
            out << i + 1 << ' ' << cols[k] + 1 << ' ' << vals[k] << '\n';
    }
}

void write_matrix_market(const std::string& path, const SparseMatrix& a)
{
    auto out = open_out(path);
    write_matrix_market(out, a);
}

SparseMatrix read_matrix_market(std::istream& in)
{
    std::size_t line_no = 0;
    Banner b = read_banner(in, line_no);
    if (b.format != "coordinate")
        throw ParseError("matrix market line 1: expected coordinate format for a sparse matrix");
    std::string line;
    if (!next_data_line(in, line, line_no)) throw ParseError("matrix market: missing size line");
    std::istringstream size_line(line);
    std::size_t rows = 0, cols = 0, nnz = 0;
    if (!(size_line >> rows >> cols >> nnz))
        throw ParseError("matrix market line " + std::to_string(line_no) + ": malformed size line");

    std::vector<Triplet> entries;
    entries.reserve(b.symmetry == "symmetric" ? 2 * nnz : nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
        if (!next_data_line(in, line, line_no))
            throw ParseError("matrix market: expected " + std::to_string(nnz) + " entries, got " +
                             std::to_string(k));
        std::istringstream ss(line);
        std::size_t i = 0, j = 0;
        double v = 0.0;
        if (!(ss >> i >> j >> v) || i == 0 || j == 0 || i > rows || j > cols)
            throw ParseError("matrix market line " + std::to_string(line_no) + ": malformed entry");
        entries.push_back({i - 1, j - 1, v});
        if (b.symmetry == "symmetric" && i != j) entries.push_back({j - 1, i - 1, v});
    }
    return from_triplets(rows, cols, entries);
}

SparseMatrix read_matrix_market(const std::string& path)
{
    auto in = open_in(path);
    return read_matrix_market(in);
}

void write_matrix_market_vector(std::ostream& out, const Vector& v)
{
    out << "%%MatrixMarket matrix array real general\n";
    out << v.size() << " 1\n";
    out << std::setprecision(17);
    for (double x : v) out << x << '\n';
}

void write_matrix_market_vector(const std::string& path, const Vector& v)
{
    auto out = open_out(path);
    write_matrix_market_vector(out, v);
}

Vector read_matrix_market_vector(std::istream& in)
{
    std::size_t line_no = 0;
    Banner b = read_banner(in, line_no);
    if (b.format != "array") throw ParseError("matrix market line 1: expected array format");
    std::string line;
    if (!next_data_line(in, line, line_no)) throw ParseError("matrix market: missing size line");
    std::istringstream size_line(line);
    std::size_t rows = 0, cols = 0;
    if (!(size_line >> rows >> cols) || cols != 1)
        throw ParseError("matrix market line " + std::to_string(line_no) +
                         ": expected an n x 1 array");
    Vector v(rows);
    for (std::size_t k = 0; k < rows; ++k) {
        if (!next_data_line(in, line, line_no)) throw ParseError("matrix market: truncated array");
        std::istringstream ss(line);
        if (!(ss >> v[k]))
            throw ParseError("matrix market line " + std::to_string(line_no) + ": malformed value");
    }
    return v;
}

Vector read_matrix_market_vector(const std::string& path)
{
    auto in = open_in(path);
    return read_matrix_market_vector(in);
}

} // namespace flexamg
