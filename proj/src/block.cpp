#include <algorithm>
#include <cstring>
#include <map>
#include <numeric>

#include "fusevec/block.hpp"
#include "scalar_ops.hpp"

namespace fusevec {

// ---------------------------------------------------------------------------
// SparseMatrix
// ---------------------------------------------------------------------------

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols,
                           const std::vector<Triplet>& triplets, Precision prec)
    : rows_(rows), cols_(cols), prec_(prec) {
    for (const auto& t : triplets) {
        if (t.row >= rows_ || t.col >= cols_)
            throw IndexOutOfRange("triplet (" + std::to_string(t.row) + "," +
                                  std::to_string(t.col) + ") outside " + std::to_string(rows_) +
                                  "x" + std::to_string(cols_));
    }

    std::vector<std::size_t> order(triplets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (triplets[a].row != triplets[b].row) return triplets[a].row < triplets[b].row;
        return triplets[a].col < triplets[b].col;
    });

    row_ptr_.assign(rows_ + 1, 0);
    col_idx_.reserve(triplets.size());
    val_.reserve(triplets.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Triplet& t = triplets[order[k]];
        if (k > 0) {
            const Triplet& p = triplets[order[k - 1]];
            if (p.row == t.row && p.col == t.col)
                throw Error("duplicate sparse entry at (" + std::to_string(t.row) + "," +
                            std::to_string(t.col) + ")");
        }
        ++row_ptr_[t.row + 1];
        col_idx_.push_back(t.col);
        val_.push_back(detail::narrow_value(t.value, prec_));
    }
    for (std::size_t r = 0; r < rows_; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

double SparseMatrix::at(std::size_t row, std::size_t col) const {
    if (row >= rows_ || col >= cols_) throw IndexOutOfRange("sparse index out of range");
    for (std::size_t k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k)
        if (col_idx_[k] == col) return val_[k];
    return 0.0;
}

void SparseMatrix::set_value(std::size_t row, std::size_t col, double value) {
    if (row >= rows_ || col >= cols_) throw IndexOutOfRange("sparse index out of range");
    for (std::size_t k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) {
        if (col_idx_[k] == col) {
            val_[k] = detail::narrow_value(value, prec_);
            return;
        }
    }
    throw IndexOutOfRange("no stored entry at (" + std::to_string(row) + "," +
                          std::to_string(col) + ")");
}

std::vector<Triplet> SparseMatrix::to_triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            out.push_back({r, col_idx_[k], val_[k]});
    return out;
}

// ---------------------------------------------------------------------------
// Block containers
// ---------------------------------------------------------------------------

namespace detail {

void check_block_shape(std::size_t nrow, std::size_t ncol, std::size_t count) {
    if (nrow == 0 || ncol == 0) throw ShapeMismatch("block shape must be nonzero");
    if (count != nrow * ncol)
        throw ArityMismatch("expected " + std::to_string(nrow * ncol) + " items for a " +
                            std::to_string(nrow) + "x" + std::to_string(ncol) + " block, got " +
                            std::to_string(count));
}

void check_matrix_grid(std::size_t nrow, std::size_t ncol, StorageOrder order,
                       const std::vector<const SparseMatrix*>& items) {
    auto at = [&](std::size_t r, std::size_t c) -> const SparseMatrix& {
        return *items[linear_index(r, c, nrow, ncol, order)];
    };
    for (std::size_t r = 0; r < nrow; ++r)
        for (std::size_t c = 1; c < ncol; ++c)
            if (at(r, c).rows() != at(r, 0).rows())
                throw ShapeMismatch("blocks in one block row must share their row count");
    for (std::size_t c = 0; c < ncol; ++c)
        for (std::size_t r = 1; r < nrow; ++r)
            if (at(r, c).cols() != at(0, c).cols())
                throw ShapeMismatch("blocks in one block column must share their column count");
}

}  // namespace detail

BlockMatrixView::BlockMatrixView(std::size_t nrow, std::size_t ncol,
                                 std::vector<const SparseMatrix*> items, StorageOrder order)
    : nrow_(nrow), ncol_(ncol), order_(order), items_(std::move(items)) {
    detail::check_block_shape(nrow_, ncol_, items_.size());
    detail::check_matrix_grid(nrow_, ncol_, order_, items_);
}

const SparseMatrix& BlockMatrixView::get(std::size_t i) const {
    if (i >= items_.size()) throw IndexOutOfRange("block index " + std::to_string(i));
    return *items_[i];
}

BlockMatrix::BlockMatrix(std::size_t nrow, std::size_t ncol, std::vector<SparseMatrix> items,
                         StorageOrder order)
    : nrow_(nrow), ncol_(ncol), order_(order), items_(std::move(items)) {
    detail::check_block_shape(nrow_, ncol_, items_.size());
    std::vector<const SparseMatrix*> ptrs;
    ptrs.reserve(items_.size());
    for (const auto& m : items_) ptrs.push_back(&m);
    detail::check_matrix_grid(nrow_, ncol_, order_, ptrs);
}

const SparseMatrix& BlockMatrix::get(std::size_t i) const {
    if (i >= items_.size()) throw IndexOutOfRange("block index " + std::to_string(i));
    return items_[i];
}

BlockMatrixView BlockMatrix::view() const {
    std::vector<const SparseMatrix*> ptrs;
    ptrs.reserve(items_.size());
    for (const auto& m : items_) ptrs.push_back(&m);
    return BlockMatrixView(nrow_, ncol_, std::move(ptrs), order_);
}

DenseVector& BlockColVector::get(std::size_t i) {
    if (i >= items_.size()) throw IndexOutOfRange("block index " + std::to_string(i));
    return items_[i];
}

const DenseVector& BlockColVector::get(std::size_t i) const {
    if (i >= items_.size()) throw IndexOutOfRange("block index " + std::to_string(i));
    return items_[i];
}

BlockColVector& BlockColVector::operator=(const BlockExpr& e) {
    evaluate_block(Backend::scalar_ref(), e, *this);
    return *this;
}

BlockVectorGrid::BlockVectorGrid(std::size_t nrow, std::size_t ncol,
                                 std::vector<DenseVector> items, StorageOrder order)
    : nrow_(nrow), ncol_(ncol), order_(order), items_(std::move(items)) {
    detail::check_block_shape(nrow_, ncol_, items_.size());
}

BlockVectorGrid::BlockVectorGrid(std::size_t nrow, std::size_t ncol, Precision prec,
                                 std::size_t len, StorageOrder order)
    : nrow_(nrow), ncol_(ncol), order_(order) {
    detail::check_block_shape(nrow, ncol, nrow * ncol);
    items_.reserve(nrow * ncol);
    for (std::size_t i = 0; i < nrow * ncol; ++i) items_.emplace_back(prec, len);
}

DenseVector& BlockVectorGrid::get(std::size_t i) {
    if (i >= items_.size()) throw IndexOutOfRange("block index " + std::to_string(i));
    return items_[i];
}

const DenseVector& BlockVectorGrid::get(std::size_t i) const {
    if (i >= items_.size()) throw IndexOutOfRange("block index " + std::to_string(i));
    return items_[i];
}

BlockVectorGrid& BlockVectorGrid::operator=(const BlockExpr& e) {
    evaluate_block(Backend::scalar_ref(), e, *this);
    return *this;
}

// ---------------------------------------------------------------------------
// BlockExpr
// ---------------------------------------------------------------------------

const Expr& BlockItem::expr() const {
    if (kind_ != ItemKind::Expression) throw KindMismatch("block item is not an expression");
    return expr_;
}

const DenseVector& BlockItem::vector() const {
    if (kind_ != ItemKind::Vector) throw KindMismatch("block item is not a vector");
    return *vec_;
}

const SparseMatrix& BlockItem::matrix() const {
    if (kind_ != ItemKind::Matrix) throw KindMismatch("block item is not a sparse matrix");
    return *mat_;
}

const std::vector<MatVecTerm>& BlockItem::terms() const {
    if (kind_ != ItemKind::MatVec) throw KindMismatch("block item is not a matvec row");
    return terms_;
}

Expr BlockItem::as_expr() const {
    switch (kind_) {
        case ItemKind::Expression: return expr_;
        case ItemKind::Vector: return leaf(*vec_);
        case ItemKind::Matrix:
            throw KindMismatch("element-wise use of a sparse-matrix block item");
        case ItemKind::MatVec:
            throw KindMismatch("element-wise use of a matvec block item");
    }
    throw KindMismatch("corrupt block item");
}

BlockExpr::BlockExpr(std::size_t nrow, std::size_t ncol, std::vector<BlockItem> items,
                     StorageOrder order)
    : nrow_(nrow), ncol_(ncol), order_(order), items_(std::move(items)) {
    detail::check_block_shape(nrow_, ncol_, items_.size());
}

const BlockItem& BlockExpr::get(std::size_t i) const {
    if (i >= items_.size()) throw IndexOutOfRange("block index " + std::to_string(i));
    return items_[i];
}

BlockExpr make_block_expr(std::size_t nrow, std::size_t ncol, std::vector<BlockItem> items,
                          StorageOrder order) {
    return BlockExpr(nrow, ncol, std::move(items), order);
}

// ---------------------------------------------------------------------------
// block_matvec
// ---------------------------------------------------------------------------

namespace {

std::size_t first_leaf_length(const ExprNode& n) {
    if (n.kind == NodeKind::Leaf) return n.vec->size();
    if (n.left)
        if (std::size_t len = first_leaf_length(*n.left)) return len;
    if (n.right)
        if (std::size_t len = first_leaf_length(*n.right)) return len;
    return 0;
}

const DenseVector* bare_leaf(const ExprNode& n) {
    switch (n.kind) {
        case NodeKind::Leaf: return n.vec;
        case NodeKind::Tagged:
        case NodeKind::Cached: return bare_leaf(*n.left);
        default: return nullptr;
    }
}

}  // namespace

BlockExpr block_matvec(const BlockMatrixView& m, const BlockExpr& e) {
    if (e.block_cols() != 1)
        throw ShapeMismatch("matvec operand must be a block column");
    if (m.block_cols() != e.block_rows())
        throw ShapeMismatch("block shapes " + std::to_string(m.block_rows()) + "x" +
                            std::to_string(m.block_cols()) + " * " +
                            std::to_string(e.block_rows()) + "x1 do not agree");

    std::vector<Expr> ops;
    ops.reserve(m.block_cols());
    for (std::size_t j = 0; j < m.block_cols(); ++j) {
        const BlockItem& it = e.item(j, 0);
        if (it.kind() == ItemKind::Matrix || it.kind() == ItemKind::MatVec)
            throw KindMismatch("matvec operand items must be vector-valued");
        Expr op = it.as_expr();
        if (std::size_t len = first_leaf_length(op.node()); len != 0) {
            if (len != m.item(0, j).cols())
                throw LengthMismatch("operand " + std::to_string(j) + " has length " +
                                     std::to_string(len) + ", block column needs " +
                                     std::to_string(m.item(0, j).cols()));
        }
        ops.push_back(std::move(op));
    }

    std::vector<BlockItem> items;
    items.reserve(m.block_rows());
    for (std::size_t i = 0; i < m.block_rows(); ++i) {
        std::vector<MatVecTerm> terms;
        terms.reserve(m.block_cols());
        for (std::size_t j = 0; j < m.block_cols(); ++j)
            terms.push_back({&m.item(i, j), ops[j]});
        items.push_back(BlockItem(std::move(terms)));
    }
    return BlockExpr(m.block_rows(), 1, std::move(items));
}

BlockExpr block_matvec(const BlockMatrixView& m, const BlockColVector& x) {
    std::vector<BlockItem> items;
    items.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) items.push_back(BlockItem(x.get(i)));
    return block_matvec(m, BlockExpr(x.size(), 1, std::move(items)));
}

BlockExpr block_matvec(const BlockMatrix& m, const BlockExpr& e) {
    return block_matvec(m.view(), e);
}

BlockExpr block_matvec(const BlockMatrix& m, const BlockColVector& x) {
    return block_matvec(m.view(), x);
}

// ---------------------------------------------------------------------------
// Element-wise block ops
// ---------------------------------------------------------------------------

BlockExpr block_elementwise(UnaryOp op, const BlockExpr& a) {
    std::vector<BlockItem> items;
    items.reserve(a.block_rows() * a.block_cols());
    for (std::size_t i = 0; i < a.block_rows() * a.block_cols(); ++i)
        items.push_back(BlockItem(unary(op, a.get(i).as_expr())));
    return BlockExpr(a.block_rows(), a.block_cols(), std::move(items), a.order());
}

BlockExpr block_elementwise(BinaryOp op, const BlockExpr& a, const BlockExpr& b) {
    if (a.block_rows() != b.block_rows() || a.block_cols() != b.block_cols())
        throw ShapeMismatch("element-wise block op needs equal block shapes");
    std::vector<BlockItem> items;
    items.reserve(a.block_rows() * a.block_cols());
    for (std::size_t r = 0; r < a.block_rows(); ++r)
        for (std::size_t c = 0; c < a.block_cols(); ++c)
            items.push_back(BlockItem(binary(op, a.item(r, c).as_expr(), b.item(r, c).as_expr())));
    return BlockExpr(a.block_rows(), a.block_cols(), std::move(items));
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

template <class TY, class TX>
void csr_matvec_acc_t(const SparseMatrix& a, const TX* x, TY* y) {
    const auto& rp = a.row_ptr();
    const auto& ci = a.col_idx();
    const auto& v = a.values();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        TY acc = 0;
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k)
            acc += static_cast<TY>(v[k]) * static_cast<TY>(x[ci[k]]);
        y[r] += acc;
    }
}

// Accumulation runs in the destination's precision.
void csr_matvec_acc(const SparseMatrix& a, const DenseVector& x, DenseVector& y) {
    if (y.precision() == Precision::f64) {
        if (x.precision() == Precision::f64)
            csr_matvec_acc_t(a, x.f64().data(), y.f64().data());
        else
            csr_matvec_acc_t(a, x.f32().data(), y.f64().data());
    } else {
        if (x.precision() == Precision::f64)
            csr_matvec_acc_t(a, x.f64().data(), y.f32().data());
        else
            csr_matvec_acc_t(a, x.f32().data(), y.f32().data());
    }
}

template <class DestAt>
void eval_block_core(const Backend& backend, const BlockExpr& e, std::size_t nrow,
                     std::size_t ncol, DestAt&& dest_at) {
    if (e.block_rows() != nrow || e.block_cols() != ncol)
        throw ShapeMismatch("block expression shape " + std::to_string(e.block_rows()) + "x" +
                            std::to_string(e.block_cols()) + " does not match destination " +
                            std::to_string(nrow) + "x" + std::to_string(ncol));

    std::vector<const DenseVector*> dests;
    dests.reserve(nrow * ncol);
    for (std::size_t r = 0; r < nrow; ++r)
        for (std::size_t c = 0; c < ncol; ++c) dests.push_back(&dest_at(r, c));
    auto is_dest = [&](const DenseVector* v) {
        return std::find(dests.begin(), dests.end(), v) != dests.end();
    };

    // One scratch per distinct matvec operand, the documented fusion
    // exception: a sparse product cannot read through a lazy expression
    // without re-evaluating it per nonzero. Bare vector operands are used in
    // place unless they alias a destination.
    std::map<const ExprNode*, DenseVector> owned;
    std::map<const ExprNode*, const DenseVector*> scratch;
    for (std::size_t i = 0; i < nrow * ncol; ++i) {
        const BlockItem& it = e.get(i);
        if (it.kind() != ItemKind::MatVec) continue;
        for (const MatVecTerm& t : it.terms()) {
            const ExprNode* key = t.operand.ptr().get();
            if (scratch.count(key)) continue;
            if (const DenseVector* lf = bare_leaf(t.operand.node()); lf && !is_dest(lf)) {
                scratch[key] = lf;
                continue;
            }
            DenseVector s(t.operand.result_precision(), t.mat->cols());
            evaluate(backend, t.operand, s);
            auto [pos, inserted] = owned.emplace(key, std::move(s));
            (void)inserted;
            scratch[key] = &pos->second;
        }
    }

    for (std::size_t r = 0; r < nrow; ++r) {
        for (std::size_t c = 0; c < ncol; ++c) {
            DenseVector& d = dest_at(r, c);
            const BlockItem& it = e.item(r, c);
            switch (it.kind()) {
                case ItemKind::Expression:
                    // Aliased pass-through: assigning a field to itself moves
                    // no memory.
                    if (bare_leaf(it.expr().node()) == &d) break;
                    evaluate(backend, it.expr(), d);
                    break;
                case ItemKind::Vector:
                    if (&it.vector() == &d) break;
                    evaluate(backend, leaf(it.vector()), d);
                    break;
                case ItemKind::Matrix:
                    throw KindMismatch("cannot assign a sparse-matrix item into a vector");
                case ItemKind::MatVec: {
                    std::memset(d.raw(), 0, d.byte_size());
                    for (const MatVecTerm& t : it.terms()) {
                        if (t.mat->rows() != d.size())
                            throw LengthMismatch("matvec row count " +
                                                 std::to_string(t.mat->rows()) +
                                                 " vs destination length " +
                                                 std::to_string(d.size()));
                        const DenseVector& x = *scratch.at(t.operand.ptr().get());
                        if (t.mat->cols() != x.size())
                            throw LengthMismatch("matvec column count " +
                                                 std::to_string(t.mat->cols()) +
                                                 " vs operand length " +
                                                 std::to_string(x.size()));
                        csr_matvec_acc(*t.mat, x, d);
                    }
                    break;
                }
            }
        }
    }
}

}  // namespace

void evaluate_block(const Backend& backend, const BlockExpr& e, BlockColVector& dest) {
    eval_block_core(backend, e, dest.size(), 1,
                    [&](std::size_t r, std::size_t) -> DenseVector& { return dest.get(r); });
}

void evaluate_block(const Backend& backend, const BlockExpr& e, BlockVectorGrid& dest) {
    eval_block_core(backend, e, dest.block_rows(), dest.block_cols(),
                    [&](std::size_t r, std::size_t c) -> DenseVector& { return dest.item(r, c); });
}

}  // namespace fusevec
