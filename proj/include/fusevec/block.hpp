#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fusevec/backend.hpp"
#include "fusevec/expr.hpp"

namespace fusevec {

enum class StorageOrder : std::uint8_t { RowMajor, ColMajor };

constexpr std::size_t linear_index(std::size_t r, std::size_t c, std::size_t nrow,
                                   std::size_t ncol, StorageOrder order) {
    return order == StorageOrder::RowMajor ? r * ncol + c : c * nrow + r;
}

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// CSR sparse matrix built from (row, col, value) triplets. Values are stored
/// rounded to the declared precision.
class SparseMatrix {
  public:
    SparseMatrix(std::size_t rows, std::size_t cols, const std::vector<Triplet>& triplets,
                 Precision prec = Precision::f64);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return val_.size(); }
    Precision precision() const { return prec_; }

    /// Stored value at (row, col), zero if the entry is not present.
    double at(std::size_t row, std::size_t col) const;
    /// Overwrite an existing entry; throws IndexOutOfRange if none is stored.
    void set_value(std::size_t row, std::size_t col, double value);

    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::size_t>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return val_; }

    std::vector<Triplet> to_triplets() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Precision prec_ = Precision::f64;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> val_;
};

namespace detail {
void check_block_shape(std::size_t nrow, std::size_t ncol, std::size_t count);
void check_matrix_grid(std::size_t nrow, std::size_t ncol, StorageOrder order,
                       const std::vector<const SparseMatrix*>& items);
}  // namespace detail

/// Non-owning fixed-shape grid of sparse matrices. Mutations of the
/// underlying matrices are visible through the view.
class BlockMatrixView {
  public:
    BlockMatrixView(std::size_t nrow, std::size_t ncol, std::vector<const SparseMatrix*> items,
                    StorageOrder order = StorageOrder::RowMajor);

    template <class... Ms>
    BlockMatrixView(std::size_t nrow, std::size_t ncol, const Ms&... ms)
        : BlockMatrixView(nrow, ncol, std::vector<const SparseMatrix*>{&ms...}) {}

    std::size_t block_rows() const { return nrow_; }
    std::size_t block_cols() const { return ncol_; }
    StorageOrder order() const { return order_; }

    const SparseMatrix& get(std::size_t i) const;
    const SparseMatrix& item(std::size_t r, std::size_t c) const {
        return *items_[linear_index(r, c, nrow_, ncol_, order_)];
    }

  private:
    std::size_t nrow_, ncol_;
    StorageOrder order_;
    std::vector<const SparseMatrix*> items_;
};

/// Owning counterpart of BlockMatrixView: construction copies the item
/// matrices, so later mutation of the originals is not observed.
class BlockMatrix {
  public:
    BlockMatrix(std::size_t nrow, std::size_t ncol, std::vector<SparseMatrix> items,
                StorageOrder order = StorageOrder::RowMajor);

    template <class... Ms>
    BlockMatrix(std::size_t nrow, std::size_t ncol, const Ms&... ms)
        : BlockMatrix(nrow, ncol, std::vector<SparseMatrix>{ms...}) {}

    std::size_t block_rows() const { return nrow_; }
    std::size_t block_cols() const { return ncol_; }
    StorageOrder order() const { return order_; }

    const SparseMatrix& get(std::size_t i) const;
    const SparseMatrix& item(std::size_t r, std::size_t c) const {
        return items_[linear_index(r, c, nrow_, ncol_, order_)];
    }

    BlockMatrixView view() const;

  private:
    std::size_t nrow_, ncol_;
    StorageOrder order_;
    std::vector<SparseMatrix> items_;
};

class BlockExpr;

/// Column of owned dense vectors; construction moves the vectors in.
class BlockColVector {
  public:
    explicit BlockColVector(std::vector<DenseVector> items) : items_(std::move(items)) {}

    std::size_t size() const { return items_.size(); }

    DenseVector& get(std::size_t i);
    const DenseVector& get(std::size_t i) const;

    // Assignment from a block expression evaluates it item-wise with the
    // scalar reference backend.
    BlockColVector& operator=(const BlockExpr& e);

  private:
    std::vector<DenseVector> items_;
};

/// General grid of owned dense vectors, the assignment target for
/// matrix-shaped block expressions such as the inviscid flux.
class BlockVectorGrid {
  public:
    BlockVectorGrid(std::size_t nrow, std::size_t ncol, std::vector<DenseVector> items,
                    StorageOrder order = StorageOrder::RowMajor);

    /// Grid of nrow x ncol zeroed vectors, all of one length and precision.
    BlockVectorGrid(std::size_t nrow, std::size_t ncol, Precision prec, std::size_t len,
                    StorageOrder order = StorageOrder::RowMajor);

    std::size_t block_rows() const { return nrow_; }
    std::size_t block_cols() const { return ncol_; }
    StorageOrder order() const { return order_; }

    DenseVector& get(std::size_t i);
    const DenseVector& get(std::size_t i) const;
    DenseVector& item(std::size_t r, std::size_t c) {
        return items_[linear_index(r, c, nrow_, ncol_, order_)];
    }
    const DenseVector& item(std::size_t r, std::size_t c) const {
        return items_[linear_index(r, c, nrow_, ncol_, order_)];
    }

    BlockVectorGrid& operator=(const BlockExpr& e);

  private:
    std::size_t nrow_, ncol_;
    StorageOrder order_;
    std::vector<DenseVector> items_;
};

enum class ItemKind : std::uint8_t { Expression, Vector, Matrix, MatVec };

/// One term of a lazily accumulated block matrix-vector row:
/// dest += mat * eval(operand).
struct MatVecTerm {
    const SparseMatrix* mat;
    Expr operand;
};

/// A single entry of a BlockExpr. Expressions are held by value, vector and
/// matrix leaves by reference.
class BlockItem {
  public:
    BlockItem(Expr e) : kind_(ItemKind::Expression), expr_(std::move(e)) {}
    BlockItem(const DenseVector& v) : kind_(ItemKind::Vector), vec_(&v) {}
    BlockItem(const SparseMatrix& m) : kind_(ItemKind::Matrix), mat_(&m) {}
    explicit BlockItem(std::vector<MatVecTerm> terms)
        : kind_(ItemKind::MatVec), terms_(std::move(terms)) {}

    ItemKind kind() const { return kind_; }

    const Expr& expr() const;
    const DenseVector& vector() const;
    const SparseMatrix& matrix() const;
    const std::vector<MatVecTerm>& terms() const;

    /// The entry as a lazy expression; vector leaves wrap, matrix and matvec
    /// entries have no element-wise reading and throw KindMismatch.
    Expr as_expr() const;

  private:
    ItemKind kind_;
    Expr expr_;
    const DenseVector* vec_ = nullptr;
    const SparseMatrix* mat_ = nullptr;
    std::vector<MatVecTerm> terms_;
};

/// Fixed-shape grid of heterogeneous lazy entries. Items may differ in kind
/// and precision; nothing is evaluated until assignment.
class BlockExpr {
  public:
    BlockExpr(std::size_t nrow, std::size_t ncol, std::vector<BlockItem> items,
              StorageOrder order = StorageOrder::RowMajor);

    std::size_t block_rows() const { return nrow_; }
    std::size_t block_cols() const { return ncol_; }
    StorageOrder order() const { return order_; }

    const BlockItem& get(std::size_t i) const;
    const BlockItem& item(std::size_t r, std::size_t c) const {
        return items_[linear_index(r, c, nrow_, ncol_, order_)];
    }

  private:
    std::size_t nrow_, ncol_;
    StorageOrder order_;
    std::vector<BlockItem> items_;
};

namespace detail {
inline BlockItem to_block_item(const Expr& e) { return BlockItem(e); }
inline BlockItem to_block_item(const DenseVector& v) { return BlockItem(v); }
inline BlockItem to_block_item(const SparseMatrix& m) { return BlockItem(m); }
inline BlockItem to_block_item(const BlockItem& it) { return it; }
}  // namespace detail

template <class... Items>
BlockExpr make_block_expr(std::size_t nrow, std::size_t ncol, const Items&... items) {
    std::vector<BlockItem> v;
    v.reserve(sizeof...(items));
    (v.push_back(detail::to_block_item(items)), ...);
    return BlockExpr(nrow, ncol, std::move(v));
}

BlockExpr make_block_expr(std::size_t nrow, std::size_t ncol, std::vector<BlockItem> items,
                          StorageOrder order = StorageOrder::RowMajor);

template <class B>
decltype(auto) get(std::size_t i, const B& b) {
    return b.get(i);
}
template <class B>
decltype(auto) get(std::size_t i, B& b) {
    return b.get(i);
}

/// Lazy block matrix-vector product: item i of the result accumulates
/// sum_j M(i,j) * eval(E(j)). No arithmetic happens until assignment.
BlockExpr block_matvec(const BlockMatrixView& m, const BlockExpr& e);
BlockExpr block_matvec(const BlockMatrixView& m, const BlockColVector& x);
BlockExpr block_matvec(const BlockMatrix& m, const BlockExpr& e);
BlockExpr block_matvec(const BlockMatrix& m, const BlockColVector& x);

inline BlockExpr operator*(const BlockMatrixView& m, const BlockExpr& e) {
    return block_matvec(m, e);
}
inline BlockExpr operator*(const BlockMatrix& m, const BlockExpr& e) {
    return block_matvec(m, e);
}
inline BlockExpr operator*(const BlockMatrixView& m, const BlockColVector& x) {
    return block_matvec(m, x);
}
inline BlockExpr operator*(const BlockMatrix& m, const BlockColVector& x) {
    return block_matvec(m, x);
}

/// Item-wise lazy application over vector-valued entries.
BlockExpr block_elementwise(UnaryOp op, const BlockExpr& a);
BlockExpr block_elementwise(BinaryOp op, const BlockExpr& a, const BlockExpr& b);

void evaluate_block(const Backend& backend, const BlockExpr& e, BlockColVector& dest);
void evaluate_block(const Backend& backend, const BlockExpr& e, BlockVectorGrid& dest);

}  // namespace fusevec
