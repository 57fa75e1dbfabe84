#include <cstdio>
#include <fstream>
#include <sstream>

#include "fusevec/matrix_market.hpp"

namespace fusevec {

SparseMatrix load_matrix_market(const std::string& path, Precision prec) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": empty file");
    {
        std::istringstream hs(line);
        std::string banner, object, format, field, symmetry;
        hs >> banner >> object >> format >> field >> symmetry;
        if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate" ||
            field != "real" || symmetry != "general")
            throw Error(path + ": expected a coordinate real general MatrixMarket header");
    }

    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    std::size_t rows = 0, cols = 0, nnz = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> rows >> cols >> nnz)) throw Error(path + ": malformed size line");
    }

    std::vector<Triplet> triplets;
    triplets.reserve(nnz);
    while (triplets.size() < nnz) {
        if (!std::getline(in, line)) throw Error(path + ": truncated entry list");
        if (line.empty() || line[0] == '%') continue;
        std::istringstream ss(line);
        std::size_t r, c;
        double v;
        if (!(ss >> r >> c >> v)) throw Error(path + ": malformed entry line");
        if (r < 1 || c < 1) throw Error(path + ": indices are 1-based");
        triplets.push_back({r - 1, c - 1, v});
    }
    return SparseMatrix(rows, cols, triplets, prec);
}

void store_matrix_market(const std::string& path, const SparseMatrix& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.rows() << " " << m.cols() << " " << m.nnz() << "\n";
    char buf[64];
    for (const Triplet& t : m.to_triplets()) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.value);
        out << (t.row + 1) << " " << (t.col + 1) << " " << buf << "\n";
    }
    if (!out) throw Error("write error on " + path);
}

}  // namespace fusevec
