#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>

#include "fusevec/backend.hpp"
#include "scalar_ops.hpp"

namespace fusevec {

namespace {

const char* opencl_type(Precision p) {
    return p == Precision::f32 ? "float" : "double";
}

std::string param_name(int tag) {
    return "prm_tag_" + std::to_string(tag);
}

std::string render_constant(double value, Precision prec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.16e", detail::narrow_value(value, prec));
    std::string lit(buf);
    if (prec == Precision::f32) lit += "f";
    return lit;
}

const char* opencl_unary(UnaryOp op) {
    switch (op) {
        case UnaryOp::Abs: return "fabs";
        default: return unary_name(op);
    }
}

const char* opencl_binary_fn(BinaryOp op) {
    switch (op) {
        case BinaryOp::Pow: return "pow";
        case BinaryOp::Min: return "fmin";
        case BinaryOp::Max: return "fmax";
        case BinaryOp::Atan2: return "atan2";
        default: return nullptr;
    }
}

const char* opencl_binary_sym(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        default: return nullptr;
    }
}

void collect_params(const ExprNode& n, std::vector<std::pair<int, Precision>>& params) {
    switch (n.kind) {
        case NodeKind::Leaf:
            throw UntaggedLeaf("kernel generation requires every leaf to carry a tag");
        case NodeKind::Constant:
            return;
        case NodeKind::Tagged:
            if (n.left->kind == NodeKind::Leaf) {
                for (const auto& [id, prec] : params) {
                    if (id == n.tag) return;  // dedup by tag id
                }
                params.emplace_back(n.tag, n.left->prec);
                return;
            }
            collect_params(*n.left, params);
            return;
        case NodeKind::Cached:
        case NodeKind::Unary:
            collect_params(*n.left, params);
            return;
        case NodeKind::Binary:
            collect_params(*n.left, params);
            collect_params(*n.right, params);
            return;
    }
}

void check_tag_conflicts(const ExprNode& n, std::map<int, const DenseVector*>& bindings) {
    if (n.kind == NodeKind::Tagged && n.left->kind == NodeKind::Leaf) {
        auto [it, inserted] = bindings.emplace(n.tag, n.left->vec);
        if (!inserted && it->second != n.left->vec)
            throw TagConflict("tag " + std::to_string(n.tag) + " bound to two different leaves");
        return;
    }
    if (n.left) check_tag_conflicts(*n.left, bindings);
    if (n.right) check_tag_conflicts(*n.right, bindings);
}

void render_expr(const ExprNode& n, std::string& out) {
    switch (n.kind) {
        case NodeKind::Leaf:
            throw UntaggedLeaf("kernel generation requires every leaf to carry a tag");
        case NodeKind::Constant:
            out += "( " + render_constant(n.value, n.prec) + " )";
            return;
        case NodeKind::Tagged:
            if (n.left->kind == NodeKind::Leaf) {
                out += param_name(n.tag) + "[idx]";
                return;
            }
            render_expr(*n.left, out);
            return;
        case NodeKind::Cached:
            render_expr(*n.left, out);
            return;
        case NodeKind::Unary:
            if (n.uop == UnaryOp::Neg) {
                out += "( -";
                render_expr(*n.left, out);
                out += " )";
            } else {
                out += std::string(opencl_unary(n.uop)) + "( ";
                render_expr(*n.left, out);
                out += " )";
            }
            return;
        case NodeKind::Binary:
            if (const char* sym = opencl_binary_sym(n.bop)) {
                out += "( ";
                render_expr(*n.left, out);
                out += " ";
                out += sym;
                out += " ";
                render_expr(*n.right, out);
                out += " )";
            } else {
                out += std::string(opencl_binary_fn(n.bop)) + "( ";
                render_expr(*n.left, out);
                out += ", ";
                render_expr(*n.right, out);
                out += " )";
            }
            return;
    }
}

}  // namespace

KernelSource generate_kernel(const Expr& e, int dest_tag, Dialect dialect,
                             const std::string& name) {
    (void)dialect;  // OpenCL-like is the only dialect
    if (!e.valid()) throw Error("cannot generate a kernel from an empty expression");

    std::map<int, const DenseVector*> bindings;
    check_tag_conflicts(e.node(), bindings);

    std::vector<std::pair<int, Precision>> operands;
    collect_params(e.node(), operands);

    KernelSource k;
    k.name = name;
    // Destination first; its precision comes from the tree when the tag is
    // bound there, otherwise from the expression result.
    Precision dest_prec = e.result_precision();
    for (const auto& [id, prec] : operands) {
        if (id == dest_tag) dest_prec = prec;
    }
    k.params.emplace_back(dest_tag, dest_prec);
    for (const auto& [id, prec] : operands) {
        if (id != dest_tag) k.params.emplace_back(id, prec);
    }

    std::string body;
    render_expr(e.node(), body);

    std::ostringstream os;
    const std::string head = "kernel void " + name + " ( ";
    const std::string indent(head.size(), ' ');
    os << head << "ulong n";
    for (const auto& [id, prec] : k.params) {
        os << ",\n" << indent << "global " << opencl_type(prec) << " * " << param_name(id);
    }
    os << " )\n";
    os << "{\n";
    os << "  for(ulong idx = get_global_id(0); idx < n; idx += get_global_size(0))\n";
    os << "  {\n";
    os << "    " << param_name(dest_tag) << "[idx] = " << body << ";\n";
    os << "  }\n";
    os << "}\n";
    k.text = os.str();
    return k;
}

// ---------------------------------------------------------------------------
// Kernel text interpreter
// ---------------------------------------------------------------------------

namespace {

struct Token {
    enum Kind { Ident, Number, Punct, End } kind;
    std::string text;
    double value = 0.0;
    bool f32_suffix = false;
};

class Lexer {
  public:
    explicit Lexer(const std::string& text) : s_(text) {}

    Token next() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ >= s_.size()) return {Token::End, ""};
        char c = s_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            return {Token::Ident, s_.substr(start, pos_ - start)};
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < s_.size() &&
             std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) throw KernelParseError("bad numeric literal");
            pos_ += static_cast<std::size_t>(end - begin);
            Token t{Token::Number, std::string(begin, static_cast<std::size_t>(end - begin)), v};
            if (pos_ < s_.size() && (s_[pos_] == 'f' || s_[pos_] == 'F')) {
                t.f32_suffix = true;
                ++pos_;
            }
            return t;
        }
        if (c == '+' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '=') {
            pos_ += 2;
            return {Token::Punct, "+="};
        }
        ++pos_;
        return {Token::Punct, std::string(1, c)};
    }

  private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

struct InterpNode {
    enum Kind { Num, Param, Un, Bin } kind;
    Precision prec = Precision::f64;
    double value = 0.0;
    int tag = -1;
    UnaryOp uop{};
    BinaryOp bop{};
    std::unique_ptr<InterpNode> left, right;
};

std::optional<UnaryOp> lookup_unary(const std::string& name) {
    if (name == "fabs") return UnaryOp::Abs;
    for (int i = 0; i < kUnaryOpCount; ++i) {
        auto op = static_cast<UnaryOp>(i);
        if (op != UnaryOp::Neg && op != UnaryOp::Abs && name == unary_name(op)) return op;
    }
    return std::nullopt;
}

std::optional<BinaryOp> lookup_binary_fn(const std::string& name) {
    if (name == "pow") return BinaryOp::Pow;
    if (name == "fmin") return BinaryOp::Min;
    if (name == "fmax") return BinaryOp::Max;
    if (name == "atan2") return BinaryOp::Atan2;
    return std::nullopt;
}

class Parser {
  public:
    Parser(Lexer lex, const std::map<int, Precision>& params)
        : lex_(std::move(lex)), params_(params) {
        advance();
    }

    void expect(const std::string& text) {
        if (cur_.text != text)
            throw KernelParseError("expected '" + text + "', got '" + cur_.text + "'");
        advance();
    }

    bool accept(const std::string& text) {
        if (cur_.text == text) {
            advance();
            return true;
        }
        return false;
    }

    const Token& cur() const { return cur_; }
    void advance() { cur_ = lex_.next(); }

    std::unique_ptr<InterpNode> parse_expr() { return parse_additive(); }

  private:
    std::unique_ptr<InterpNode> parse_additive() {
        auto n = parse_multiplicative();
        while (cur_.text == "+" || cur_.text == "-") {
            BinaryOp op = cur_.text == "+" ? BinaryOp::Add : BinaryOp::Sub;
            advance();
            auto rhs = parse_multiplicative();
            n = make_bin(op, std::move(n), std::move(rhs));
        }
        return n;
    }

    std::unique_ptr<InterpNode> parse_multiplicative() {
        auto n = parse_primary();
        while (cur_.text == "*" || cur_.text == "/") {
            BinaryOp op = cur_.text == "*" ? BinaryOp::Mul : BinaryOp::Div;
            advance();
            auto rhs = parse_primary();
            n = make_bin(op, std::move(n), std::move(rhs));
        }
        return n;
    }

    std::unique_ptr<InterpNode> parse_primary() {
        if (cur_.kind == Token::Number) {
            auto n = std::make_unique<InterpNode>();
            n->kind = InterpNode::Num;
            n->prec = cur_.f32_suffix ? Precision::f32 : Precision::f64;
            n->value = detail::narrow_value(cur_.value, n->prec);
            advance();
            return n;
        }
        if (cur_.text == "(") {
            advance();
            auto n = parse_expr();
            expect(")");
            return n;
        }
        if (cur_.text == "-") {
            advance();
            auto child = parse_primary();
            auto n = std::make_unique<InterpNode>();
            n->kind = InterpNode::Un;
            n->uop = UnaryOp::Neg;
            n->prec = child->prec;
            n->left = std::move(child);
            return n;
        }
        if (cur_.kind == Token::Ident) {
            std::string name = cur_.text;
            advance();
            if (auto uop = lookup_unary(name)) {
                expect("(");
                auto child = parse_expr();
                expect(")");
                auto n = std::make_unique<InterpNode>();
                n->kind = InterpNode::Un;
                n->uop = *uop;
                n->prec = child->prec;
                n->left = std::move(child);
                return n;
            }
            if (auto bop = lookup_binary_fn(name)) {
                expect("(");
                auto lhs = parse_expr();
                expect(",");
                auto rhs = parse_expr();
                expect(")");
                return make_bin(*bop, std::move(lhs), std::move(rhs));
            }
            if (name.rfind("prm_tag_", 0) == 0) {
                int tag = std::atoi(name.c_str() + 8);
                auto it = params_.find(tag);
                if (it == params_.end())
                    throw KernelParseError("reference to undeclared parameter " + name);
                expect("[");
                expect("idx");
                expect("]");
                auto n = std::make_unique<InterpNode>();
                n->kind = InterpNode::Param;
                n->tag = tag;
                n->prec = it->second;
                return n;
            }
            throw KernelParseError("unknown identifier '" + name + "'");
        }
        throw KernelParseError("unexpected token '" + cur_.text + "'");
    }

    static std::unique_ptr<InterpNode> make_bin(BinaryOp op, std::unique_ptr<InterpNode> l,
                                                std::unique_ptr<InterpNode> r) {
        auto n = std::make_unique<InterpNode>();
        n->kind = InterpNode::Bin;
        n->bop = op;
        n->prec = promote(l->prec, r->prec);
        n->left = std::move(l);
        n->right = std::move(r);
        return n;
    }

    Lexer lex_;
    Token cur_;
    std::map<int, Precision> params_;
};

// Values are carried as doubles; f32 nodes round after every step, matching
// what a single-precision buffer pipeline computes.
double interp_eval(const InterpNode& n, const std::map<int, const DenseVector*>& inputs,
                   std::size_t i) {
    switch (n.kind) {
        case InterpNode::Num:
            return n.value;
        case InterpNode::Param:
            return inputs.at(n.tag)->at(i);
        case InterpNode::Un: {
            double c = interp_eval(*n.left, inputs, i);
            if (n.prec == Precision::f32)
                return static_cast<double>(
                    detail::apply_unary_scalar<float>(n.uop, static_cast<float>(c)));
            return detail::apply_unary_scalar<double>(n.uop, c);
        }
        case InterpNode::Bin: {
            double a = interp_eval(*n.left, inputs, i);
            double b = interp_eval(*n.right, inputs, i);
            if (n.prec == Precision::f32)
                return static_cast<double>(detail::apply_binary_scalar<float>(
                    n.bop, static_cast<float>(a), static_cast<float>(b)));
            return detail::apply_binary_scalar<double>(n.bop, a, b);
        }
    }
    return 0.0;
}

}  // namespace

DenseVector interpret_kernel(const KernelSource& k,
                             const std::map<int, const DenseVector*>& inputs) {
    Lexer lex(k.text);

    // Signature: kernel void <name> ( ulong n, global <type> * prm_tag_<id>, ... )
    std::map<int, Precision> params;
    std::vector<int> param_order;
    {
        Token t = lex.next();
        if (t.text != "kernel") throw KernelParseError("missing 'kernel'");
        if (lex.next().text != "void") throw KernelParseError("missing 'void'");
        if (lex.next().kind != Token::Ident) throw KernelParseError("missing kernel name");
        if (lex.next().text != "(") throw KernelParseError("missing '('");
        if (lex.next().text != "ulong") throw KernelParseError("missing length parameter");
        if (lex.next().text != "n") throw KernelParseError("missing length parameter");
        for (;;) {
            Token sep = lex.next();
            if (sep.text == ")") break;
            if (sep.text != ",") throw KernelParseError("malformed parameter list");
            if (lex.next().text != "global") throw KernelParseError("missing 'global'");
            Token type = lex.next();
            Precision prec;
            if (type.text == "float")
                prec = Precision::f32;
            else if (type.text == "double")
                prec = Precision::f64;
            else
                throw KernelParseError("unsupported parameter type '" + type.text + "'");
            if (lex.next().text != "*") throw KernelParseError("parameters must be pointers");
            Token name = lex.next();
            if (name.text.rfind("prm_tag_", 0) != 0)
                throw KernelParseError("unexpected parameter name '" + name.text + "'");
            int tag = std::atoi(name.text.c_str() + 8);
            if (!params.emplace(tag, prec).second)
                throw KernelParseError("duplicate parameter " + name.text);
            param_order.push_back(tag);
        }
    }
    if (param_order.empty()) throw KernelParseError("kernel has no pointer parameters");

    Parser p(std::move(lex), params);
    p.expect("{");
    // Grid-stride loop header, token for token.
    for (const char* tok : {"for", "(", "ulong", "idx", "=", "get_global_id", "(", "0", ")", ";",
                            "idx", "<", "n", ";", "idx", "+=", "get_global_size", "(", "0", ")",
                            ")"})
        p.expect(tok);
    p.expect("{");

    // The single assignment statement.
    if (p.cur().text.rfind("prm_tag_", 0) != 0)
        throw KernelParseError("expected assignment to a parameter");
    int dest_tag = std::atoi(p.cur().text.c_str() + 8);
    if (params.find(dest_tag) == params.end())
        throw KernelParseError("assignment to undeclared parameter");
    p.advance();
    p.expect("[");
    p.expect("idx");
    p.expect("]");
    p.expect("=");
    auto root = p.parse_expr();
    p.expect(";");
    p.expect("}");
    p.expect("}");
    if (p.cur().kind != Token::End) throw KernelParseError("trailing tokens after kernel body");

    // Inputs must cover every parameter, at one common length.
    std::size_t n = 0;
    bool have_n = false;
    for (int tag : param_order) {
        auto it = inputs.find(tag);
        if (it == inputs.end() || it->second == nullptr)
            throw Error("missing input for kernel parameter tag " + std::to_string(tag));
        if (!have_n) {
            n = it->second->size();
            have_n = true;
        } else if (it->second->size() != n) {
            throw LengthMismatch("kernel inputs must share one length");
        }
    }

    DenseVector out(params.at(dest_tag), n);
    for (std::size_t i = 0; i < n; ++i) out.set(i, interp_eval(*root, inputs, i));
    return out;
}

}  // namespace fusevec
