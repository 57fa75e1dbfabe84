#include "fusevec/expr.hpp"

#include <sstream>
#include <typeinfo>

namespace fusevec {

const char* precision_name(Precision p) {
    return p == Precision::f32 ? "f32" : "f64";
}

const char* unary_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return "neg";
        case UnaryOp::Abs: return "abs";
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Tan: return "tan";
        case UnaryOp::Asin: return "asin";
        case UnaryOp::Acos: return "acos";
        case UnaryOp::Atan: return "atan";
        case UnaryOp::Sinh: return "sinh";
        case UnaryOp::Cosh: return "cosh";
        case UnaryOp::Tanh: return "tanh";
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Log: return "log";
        case UnaryOp::Log2: return "log2";
        case UnaryOp::Log10: return "log10";
        case UnaryOp::Sqrt: return "sqrt";
        case UnaryOp::Cbrt: return "cbrt";
        case UnaryOp::Ceil: return "ceil";
        case UnaryOp::Floor: return "floor";
        case UnaryOp::Round: return "round";
        case UnaryOp::Erf: return "erf";
    }
    return "?";
}

const char* binary_name(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "add";
        case BinaryOp::Sub: return "sub";
        case BinaryOp::Mul: return "mul";
        case BinaryOp::Div: return "div";
        case BinaryOp::Pow: return "pow";
        case BinaryOp::Min: return "min";
        case BinaryOp::Max: return "max";
        case BinaryOp::Atan2: return "atan2";
    }
    return "?";
}

namespace {

std::size_t count_nodes(const ExprNode& n) {
    std::size_t count = 1;
    if (n.left) count += count_nodes(*n.left);
    if (n.right) count += count_nodes(*n.right);
    return count;
}

}  // namespace

std::size_t Expr::node_count() const {
    return node_ ? count_nodes(*node_) : 0;
}

Expr leaf(const DenseVector& v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Leaf;
    n->prec = v.precision();
    n->vec = &v;
    return Expr(std::move(n));
}

Expr constant(double value, Precision prec) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Constant;
    n->prec = prec;
    n->value = value;
    return Expr(std::move(n));
}

Expr constant(double value, const Expr& like) {
    return constant(value, like.result_precision());
}

Expr tag(int id, const Expr& e) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Tagged;
    n->prec = e.result_precision();
    n->tag = id;
    n->left = e.ptr();
    return Expr(std::move(n));
}

Expr unary(UnaryOp kind, const Expr& e) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Unary;
    n->prec = e.result_precision();
    n->uop = kind;
    n->left = e.ptr();
    return Expr(std::move(n));
}

Expr binary(BinaryOp kind, const Expr& a, const Expr& b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Binary;
    n->prec = promote(a.result_precision(), b.result_precision());
    n->bop = kind;
    n->left = a.ptr();
    n->right = b.ptr();
    return Expr(std::move(n));
}

CacheExpr::CacheExpr(int tag_id, Expr inner) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Cached;
    n->prec = inner.result_precision();
    n->tag = tag_id;
    n->left = inner.ptr();
    cached_ = Expr(std::move(n));
}

int CacheExpr::tag_id() const {
    return cached_.node().tag;
}

Expr CacheExpr::get() const {
    return Expr(cached_.node().left);
}

CacheExpr cache(int id, const Expr& e) {
    return CacheExpr(id, e);
}

CacheExpr cache(int id, const DenseVector& v) {
    return CacheExpr(id, leaf(v));
}

Expr elem_neg(const Expr& e) { return unary(UnaryOp::Neg, e); }
Expr elem_abs(const Expr& e) { return unary(UnaryOp::Abs, e); }
Expr elem_sin(const Expr& e) { return unary(UnaryOp::Sin, e); }
Expr elem_cos(const Expr& e) { return unary(UnaryOp::Cos, e); }
Expr elem_tan(const Expr& e) { return unary(UnaryOp::Tan, e); }
Expr elem_asin(const Expr& e) { return unary(UnaryOp::Asin, e); }
Expr elem_acos(const Expr& e) { return unary(UnaryOp::Acos, e); }
Expr elem_atan(const Expr& e) { return unary(UnaryOp::Atan, e); }
Expr elem_sinh(const Expr& e) { return unary(UnaryOp::Sinh, e); }
Expr elem_cosh(const Expr& e) { return unary(UnaryOp::Cosh, e); }
Expr elem_tanh(const Expr& e) { return unary(UnaryOp::Tanh, e); }
Expr elem_exp(const Expr& e) { return unary(UnaryOp::Exp, e); }
Expr elem_log(const Expr& e) { return unary(UnaryOp::Log, e); }
Expr elem_log2(const Expr& e) { return unary(UnaryOp::Log2, e); }
Expr elem_log10(const Expr& e) { return unary(UnaryOp::Log10, e); }
Expr elem_sqrt(const Expr& e) { return unary(UnaryOp::Sqrt, e); }
Expr elem_cbrt(const Expr& e) { return unary(UnaryOp::Cbrt, e); }
Expr elem_ceil(const Expr& e) { return unary(UnaryOp::Ceil, e); }
Expr elem_floor(const Expr& e) { return unary(UnaryOp::Floor, e); }
Expr elem_round(const Expr& e) { return unary(UnaryOp::Round, e); }
Expr elem_erf(const Expr& e) { return unary(UnaryOp::Erf, e); }
Expr elem_pow(const Expr& a, const Expr& b) { return binary(BinaryOp::Pow, a, b); }
Expr elem_min(const Expr& a, const Expr& b) { return binary(BinaryOp::Min, a, b); }
Expr elem_max(const Expr& a, const Expr& b) { return binary(BinaryOp::Max, a, b); }
Expr elem_atan2(const Expr& a, const Expr& b) { return binary(BinaryOp::Atan2, a, b); }

namespace {

const char* infix_symbol(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        default: return nullptr;
    }
}

void render_pretty(const ExprNode& n, std::ostream& os) {
    switch (n.kind) {
        case NodeKind::Leaf:
            os << "E(" << typeid(DenseVector).name() << ")";
            break;
        case NodeKind::Constant:
            os << "E(" << n.value << ")";
            break;
        case NodeKind::Unary:
            if (n.uop == UnaryOp::Neg) {
                os << "(-";
                render_pretty(*n.left, os);
                os << ")";
            } else {
                os << unary_name(n.uop) << "(";
                render_pretty(*n.left, os);
                os << ")";
            }
            break;
        case NodeKind::Binary:
            if (const char* sym = infix_symbol(n.bop)) {
                os << "(";
                render_pretty(*n.left, os);
                os << sym;
                render_pretty(*n.right, os);
                os << ")";
            } else {
                os << binary_name(n.bop) << "(";
                render_pretty(*n.left, os);
                os << ",";
                render_pretty(*n.right, os);
                os << ")";
            }
            break;
        case NodeKind::Tagged:
        case NodeKind::Cached:
            render_pretty(*n.left, os);
            break;
    }
}

void render_debug(const ExprNode& n, std::ostream& os, int depth) {
    for (int i = 0; i < depth; ++i) os << "  ";
    switch (n.kind) {
        case NodeKind::Leaf:
            os << "Leaf len=" << n.vec->size() << " prec=" << precision_name(n.prec);
            break;
        case NodeKind::Constant:
            os << "Const value=" << n.value << " prec=" << precision_name(n.prec);
            break;
        case NodeKind::Unary:
            os << "Unary op=" << unary_name(n.uop) << " prec=" << precision_name(n.prec);
            break;
        case NodeKind::Binary:
            os << "Binary op=" << binary_name(n.bop) << " prec=" << precision_name(n.prec);
            break;
        case NodeKind::Tagged:
            os << "Tagged id=" << n.tag << " prec=" << precision_name(n.prec);
            break;
        case NodeKind::Cached:
            os << "Cached id=" << n.tag << " prec=" << precision_name(n.prec);
            break;
    }
    os << "\n";
    if (n.left) render_debug(*n.left, os, depth + 1);
    if (n.right) render_debug(*n.right, os, depth + 1);
}

}  // namespace

void pretty_print(const Expr& e, std::ostream& os) {
    render_pretty(e.node(), os);
}

void pretty_print(const CacheExpr& e, std::ostream& os) {
    pretty_print(e.expr(), os);
}

std::string pretty_string(const Expr& e) {
    std::ostringstream os;
    pretty_print(e, os);
    return os.str();
}

void print_debug(const Expr& e, std::ostream& os) {
    render_debug(e.node(), os, 0);
}

std::string debug_string(const Expr& e) {
    std::ostringstream os;
    print_debug(e, os);
    return os.str();
}

}  // namespace fusevec
