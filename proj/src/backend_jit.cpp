#include "jit.hpp"

#include <dlfcn.h>
#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "scalar_ops.hpp"

// Runtime kernel compilation. A whole expression tree becomes one C loop,
// compiled with the system compiler and loaded via dlopen, so evaluation of
// large vectors runs the same machine code a hand-written loop would. The
// generated source follows the interpreter's per-element operation order and
// conversion points exactly, and transcendentals are forced to the same libm
// calls the interpreter makes (no compile-time folding), so both paths
// produce bitwise-identical results.

namespace fusevec::detail {
namespace {

const char* unary_fn(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return nullptr;  // rendered as an operator
        case UnaryOp::Abs: return "fabs";
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
    return "";
}

const char* binary_infix(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        default: return nullptr;
    }
}

const char* binary_fn(BinaryOp op) {
    switch (op) {
        case BinaryOp::Pow: return "pow";
        case BinaryOp::Min: return "fmin";
        case BinaryOp::Max: return "fmax";
        case BinaryOp::Atan2: return "atan2";
        default: return "";
    }
}

const char* ctype(Precision p) { return p == Precision::f32 ? "float" : "double"; }

// Distinct leaf buffers in first-appearance order; this is the kernel's
// parameter order after the destination.
void collect_slots(const ExprNode& n, std::vector<const DenseVector*>& slots) {
    switch (n.kind) {
        case NodeKind::Leaf:
            for (const DenseVector* v : slots)
                if (v == n.vec) return;
            slots.push_back(n.vec);
            return;
        case NodeKind::Constant:
            return;
        case NodeKind::Tagged:
        case NodeKind::Cached:
        case NodeKind::Unary:
            collect_slots(*n.left, slots);
            return;
        case NodeKind::Binary:
            collect_slots(*n.left, slots);
            collect_slots(*n.right, slots);
            return;
    }
}

std::size_t slot_of(const std::vector<const DenseVector*>& slots, const DenseVector* v) {
    std::size_t i = 0;
    while (slots[i] != v) ++i;
    return i;
}

char prec_char(Precision p) { return p == Precision::f32 ? 's' : 'd'; }

// Structural signature: same key <=> same generated source. Leaf identity
// enters only through its parameter slot, so distinct data with the same
// sharing pattern reuses one kernel.
void key_node(const ExprNode& n, const std::vector<const DenseVector*>& slots, bool& ok,
              std::string& out) {
    switch (n.kind) {
        case NodeKind::Leaf:
            out += 'L';
            out += prec_char(n.prec);
            out += std::to_string(slot_of(slots, n.vec));
            out += ';';
            return;
        case NodeKind::Constant: {
            const double v = narrow_value(n.value, n.prec);
            if (!std::isfinite(v)) ok = false;
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            char buf[32];
            std::snprintf(buf, sizeof buf, "C%c%016llx;", prec_char(n.prec),
                          static_cast<unsigned long long>(bits));
            out += buf;
            return;
        }
        case NodeKind::Tagged:
        case NodeKind::Cached:
            key_node(*n.left, slots, ok, out);  // evaluation no-ops
            return;
        case NodeKind::Unary:
            out += 'U';
            out += std::to_string(static_cast<int>(n.uop));
            out += prec_char(n.prec);
            out += '(';
            key_node(*n.left, slots, ok, out);
            out += ')';
            return;
        case NodeKind::Binary:
            out += 'B';
            out += std::to_string(static_cast<int>(n.bop));
            out += prec_char(n.prec);
            out += '(';
            key_node(*n.left, slots, ok, out);
            out += ',';
            key_node(*n.right, slots, ok, out);
            out += ')';
            return;
    }
}

// Hex float literals are exact, so the compiled constant holds the very bits
// the interpreter broadcasts.
std::string literal(double narrowed, Precision prec) {
    char buf[64];
    if (prec == Precision::f32)
        std::snprintf(buf, sizeof buf, "(%af)", narrowed);
    else
        std::snprintf(buf, sizeof buf, "(%a)", narrowed);
    return buf;
}

std::string emit(const ExprNode& n, const std::vector<const DenseVector*>& slots);

// Operands convert to the consuming node's precision, same as the
// interpreter's adapt step.
std::string emit_as(Precision want, const ExprNode& n,
                    const std::vector<const DenseVector*>& slots) {
    std::string s = emit(n, slots);
    if (n.prec != want) s = std::string("(") + ctype(want) + ")(" + s + ")";
    return s;
}

std::string emit(const ExprNode& n, const std::vector<const DenseVector*>& slots) {
    switch (n.kind) {
        case NodeKind::Leaf:
            return "p" + std::to_string(slot_of(slots, n.vec)) + "[i]";
        case NodeKind::Constant:
            return literal(narrow_value(n.value, n.prec), n.prec);
        case NodeKind::Tagged:
        case NodeKind::Cached:
            return emit(*n.left, slots);
        case NodeKind::Unary: {
            std::string c = emit_as(n.prec, *n.left, slots);
            if (n.uop == UnaryOp::Neg) return "(-(" + c + "))";
            std::string fn = unary_fn(n.uop);
            if (n.prec == Precision::f32) fn += 'f';
            return fn + "(" + c + ")";
        }
        case NodeKind::Binary: {
            std::string l = emit_as(n.prec, *n.left, slots);
            std::string r = emit_as(n.prec, *n.right, slots);
            if (const char* op = binary_infix(n.bop)) return "(" + l + " " + op + " " + r + ")";
            std::string fn = binary_fn(n.bop);
            if (n.prec == Precision::f32) fn += 'f';
            return fn + "(" + l + ", " + r + ")";
        }
    }
    return "0";
}

std::string render_source(const ExprNode& root, Precision dest_prec,
                          const std::vector<const DenseVector*>& slots) {
    std::string src = "#include <math.h>\n\n";
    src += "void fusevec_kernel(unsigned long begin, unsigned long end, void* const* a)\n{\n";
    src += std::string("    ") + ctype(dest_prec) + "* d = (" + ctype(dest_prec) + "*)a[0];\n";
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const char* t = ctype(slots[i]->precision());
        src += std::string("    const ") + t + "* p" + std::to_string(i) + " = (const " + t +
               "*)a[" + std::to_string(i + 1) + "];\n";
    }
    src += "    for (unsigned long i = begin; i < end; ++i)\n";
    src += "        d[i] = " + emit_as(dest_prec, root, slots) + ";\n";
    src += "}\n";
    return src;
}

// Folding a transcendental at compile time could differ from the runtime
// libm call by an ulp; keep those as calls. Exact ops (abs, sqrt, rounding,
// arithmetic) may fold freely.
const char* kNoFoldFlags =
    " -fno-builtin-sin -fno-builtin-cos -fno-builtin-tan"
    " -fno-builtin-asin -fno-builtin-acos -fno-builtin-atan"
    " -fno-builtin-sinh -fno-builtin-cosh -fno-builtin-tanh"
    " -fno-builtin-exp -fno-builtin-log -fno-builtin-log2 -fno-builtin-log10"
    " -fno-builtin-cbrt -fno-builtin-erf -fno-builtin-pow -fno-builtin-atan2"
    " -fno-builtin-fmin -fno-builtin-fmax"
    " -fno-builtin-sinf -fno-builtin-cosf -fno-builtin-tanf"
    " -fno-builtin-asinf -fno-builtin-acosf -fno-builtin-atanf"
    " -fno-builtin-sinhf -fno-builtin-coshf -fno-builtin-tanhf"
    " -fno-builtin-expf -fno-builtin-logf -fno-builtin-log2f -fno-builtin-log10f"
    " -fno-builtin-cbrtf -fno-builtin-erff -fno-builtin-powf -fno-builtin-atan2f"
    " -fno-builtin-fminf -fno-builtin-fmaxf";

struct JitState {
    std::mutex mu;
    bool probed = false;
    bool disabled = false;
    std::string cc;
    std::string dir;
    int counter = 0;
    std::unordered_map<std::string, std::unique_ptr<JitKernel>> cache;  // null fn = known bad
};

JitState& state() {
    static JitState s;
    return s;
}

bool run_quiet(const std::string& cmd) {
    return std::system((cmd + " >/dev/null 2>&1").c_str()) == 0;
}

void probe(JitState& s) {
    s.probed = true;
    if (const char* off = std::getenv("FUSEVEC_NO_JIT"); off && *off) {
        s.disabled = true;
        return;
    }
    std::vector<std::string> candidates;
    if (const char* env = std::getenv("FUSEVEC_CC"); env && *env) candidates.push_back(env);
    candidates.push_back("cc");
    candidates.push_back("gcc");
    candidates.push_back("clang");
    for (const std::string& c : candidates) {
        if (run_quiet(c + " --version")) {
            s.cc = c;
            break;
        }
    }
    if (s.cc.empty()) {
        s.disabled = true;
        return;
    }
    const char* base = std::getenv("TMPDIR");
    std::string tmpl = std::string(base && *base ? base : "/tmp") + "/fusevec-jit-XXXXXX";
    if (!mkdtemp(tmpl.data())) {
        s.disabled = true;
        return;
    }
    s.dir = tmpl;
}

JitKernel::Fn compile(JitState& s, const std::string& src_text) {
    const std::string stem = s.dir + "/k" + std::to_string(s.counter++);
    const std::string c_path = stem + ".c";
    const std::string so_path = stem + ".so";
    std::FILE* f = std::fopen(c_path.c_str(), "w");
    if (!f) return nullptr;
    std::fputs(src_text.c_str(), f);
    std::fclose(f);

    const bool built = run_quiet(s.cc + " -O3 -fPIC -shared -ffp-contract=off" + kNoFoldFlags +
                                 " " + c_path + " -o " + so_path + " -lm");
    JitKernel::Fn fn = nullptr;
    if (built) {
        if (void* h = dlopen(so_path.c_str(), RTLD_NOW | RTLD_LOCAL)) {
            void* sym = dlsym(h, "fusevec_kernel");
            fn = reinterpret_cast<JitKernel::Fn>(reinterpret_cast<std::uintptr_t>(sym));
        }
    }
    unlink(c_path.c_str());
    unlink(so_path.c_str());
    return fn;
}

}  // namespace

const JitKernel* jit_kernel_for(const Expr& e, Precision dest_prec) {
    JitState& s = state();
    std::lock_guard<std::mutex> lock(s.mu);
    if (!s.probed) probe(s);
    if (s.disabled) return nullptr;

    std::vector<const DenseVector*> slots;
    collect_slots(e.node(), slots);

    bool ok = true;
    std::string key(1, prec_char(dest_prec));
    key_node(e.node(), slots, ok, key);
    if (!ok) return nullptr;

    auto it = s.cache.find(key);
    if (it == s.cache.end()) {
        auto kernel = std::make_unique<JitKernel>();
        kernel->fn = compile(s, render_source(e.node(), dest_prec, slots));
        it = s.cache.emplace(key, std::move(kernel)).first;
    }
    return it->second->fn ? it->second.get() : nullptr;
}

JitArgs jit_args(const Expr& e, DenseVector& dest) {
    std::vector<const DenseVector*> slots;
    collect_slots(e.node(), slots);
    JitArgs a;
    a.ptrs.reserve(slots.size() + 1);
    a.ptrs.push_back(dest.raw());
    for (const DenseVector* v : slots) a.ptrs.push_back(const_cast<void*>(v->raw()));
    return a;
}

}  // namespace fusevec::detail
