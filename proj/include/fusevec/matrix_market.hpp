#pragma once

#include <string>

#include "fusevec/block.hpp"

namespace fusevec {

/// MatrixMarket coordinate real general files, 1-based indices.
SparseMatrix load_matrix_market(const std::string& path, Precision prec = Precision::f64);
void store_matrix_market(const std::string& path, const SparseMatrix& m);

}  // namespace fusevec
