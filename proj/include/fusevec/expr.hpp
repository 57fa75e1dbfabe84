#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <string>

#include "fusevec/dense_vector.hpp"

namespace fusevec {

enum class UnaryOp : std::uint8_t {
    Neg,
    Abs,
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Log2,
    Log10,
    Sqrt,
    Cbrt,
    Ceil,
    Floor,
    Round,
    Erf,
};

enum class BinaryOp : std::uint8_t {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
    Atan2,
};

constexpr int kUnaryOpCount = 21;
constexpr int kBinaryOpCount = 8;

const char* unary_name(UnaryOp op);
const char* binary_name(BinaryOp op);

enum class NodeKind : std::uint8_t { Leaf, Constant, Unary, Binary, Tagged, Cached };

struct ExprNode {
    NodeKind kind;
    Precision prec;  // result precision of this subtree

    const DenseVector* vec = nullptr;  // Leaf
    double value = 0.0;                // Constant
    UnaryOp uop{};                     // Unary
    BinaryOp bop{};                    // Binary
    int tag = -1;                      // Tagged / Cached

    std::shared_ptr<const ExprNode> left;   // Unary/Tagged/Cached child, Binary lhs
    std::shared_ptr<const ExprNode> right;  // Binary rhs
};

/// Immutable lazy element-wise expression over dense vectors. Composing
/// expressions shares subtrees; nothing is evaluated until the tree is
/// assigned into a DenseVector through a backend.
class Expr {
  public:
    Expr() = default;
    explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

    const ExprNode& node() const { return *node_; }
    const std::shared_ptr<const ExprNode>& ptr() const { return node_; }
    bool valid() const { return node_ != nullptr; }

    Precision result_precision() const { return node_->prec; }

    /// Number of nodes in the tree (shared subtrees counted per occurrence).
    std::size_t node_count() const;

  private:
    std::shared_ptr<const ExprNode> node_;
};

Expr leaf(const DenseVector& v);
Expr constant(double value, const Expr& like);
Expr constant(double value, Precision prec);
Expr tag(int id, const Expr& e);
Expr unary(UnaryOp kind, const Expr& e);
Expr binary(BinaryOp kind, const Expr& a, const Expr& b);

/// Cache wrapper: owns its sub-expression by value so a composition built
/// from temporaries outlives the statement that created it. Re-evaluated on
/// every assignment, never memoized.
class CacheExpr {
  public:
    CacheExpr(int tag_id, Expr inner);

    int tag_id() const;
    /// The full tree including the cache node.
    const Expr& expr() const { return cached_; }
    /// The wrapped sub-expression, for mixing with plain expression code.
    Expr get() const;

    operator Expr() const { return cached_; }

  private:
    Expr cached_;
};

CacheExpr cache(int id, const Expr& e);
CacheExpr cache(int id, const DenseVector& v);

// Named element-wise aliases.
Expr elem_neg(const Expr& e);
Expr elem_abs(const Expr& e);
Expr elem_sin(const Expr& e);
Expr elem_cos(const Expr& e);
Expr elem_tan(const Expr& e);
Expr elem_asin(const Expr& e);
Expr elem_acos(const Expr& e);
Expr elem_atan(const Expr& e);
Expr elem_sinh(const Expr& e);
Expr elem_cosh(const Expr& e);
Expr elem_tanh(const Expr& e);
Expr elem_exp(const Expr& e);
Expr elem_log(const Expr& e);
Expr elem_log2(const Expr& e);
Expr elem_log10(const Expr& e);
Expr elem_sqrt(const Expr& e);
Expr elem_cbrt(const Expr& e);
Expr elem_ceil(const Expr& e);
Expr elem_floor(const Expr& e);
Expr elem_round(const Expr& e);
Expr elem_erf(const Expr& e);
Expr elem_pow(const Expr& a, const Expr& b);
Expr elem_min(const Expr& a, const Expr& b);
Expr elem_max(const Expr& a, const Expr& b);
Expr elem_atan2(const Expr& a, const Expr& b);

inline Expr operator+(const Expr& a, const Expr& b) { return binary(BinaryOp::Add, a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return binary(BinaryOp::Sub, a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return binary(BinaryOp::Mul, a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return binary(BinaryOp::Div, a, b); }
inline Expr operator-(const Expr& e) { return unary(UnaryOp::Neg, e); }

// Scalar operands take the precision of the expression side, like the
// constant() factory.
inline Expr operator+(double s, const Expr& e) { return constant(s, e) + e; }
inline Expr operator+(const Expr& e, double s) { return e + constant(s, e); }
inline Expr operator-(double s, const Expr& e) { return constant(s, e) - e; }
inline Expr operator-(const Expr& e, double s) { return e - constant(s, e); }
inline Expr operator*(double s, const Expr& e) { return constant(s, e) * e; }
inline Expr operator*(const Expr& e, double s) { return e * constant(s, e); }
inline Expr operator/(double s, const Expr& e) { return constant(s, e) / e; }
inline Expr operator/(const Expr& e, double s) { return e / constant(s, e); }

/// Single-line infix rendering: constants as E(value), leaves as E(<type>).
void pretty_print(const Expr& e, std::ostream& os);
void pretty_print(const CacheExpr& e, std::ostream& os);
std::string pretty_string(const Expr& e);

/// Multi-line tree dump, one node per line, indented by depth.
void print_debug(const Expr& e, std::ostream& os);
std::string debug_string(const Expr& e);

}  // namespace fusevec
