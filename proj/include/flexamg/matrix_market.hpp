#pragma once

#include <iosfwd>
#include <string>

#include "flexamg/sparse.hpp"

namespace flexamg {

/// Writes "%%MatrixMarket matrix coordinate real general" with 1-based indices.
void write_matrix_market(std::ostream& out, const SparseMatrix& a);
void write_matrix_market(const std::string& path, const SparseMatrix& a);

/// Reads coordinate real/integer matrices, general or symmetric.
SparseMatrix read_matrix_market(std::istream& in);
SparseMatrix read_matrix_market(const std::string& path);

/// Dense vectors use the "array real general" flavour.
void write_matrix_market_vector(std::ostream& out, const Vector& v);
void write_matrix_market_vector(const std::string& path, const Vector& v);
Vector read_matrix_market_vector(std::istream& in);
Vector read_matrix_market_vector(const std::string& path);

} // namespace flexamg
