#include <algorithm>
#include <cstring>
#include <thread>
#include <vector>

#include "fusevec/backend.hpp"
#include "jit.hpp"
#include "scalar_ops.hpp"

namespace fusevec {

namespace {

using detail::apply_binary_scalar;
using detail::apply_unary_scalar;
using detail::dispatch_binary;
using detail::dispatch_unary;
using detail::narrow_value;

// Elements processed per fused pass. Intermediate results for one chunk stay
// in a thread-local arena, so evaluation never allocates vector buffers.
constexpr std::size_t kChunk = 1024;

class Arena {
  public:
    void require(std::size_t bytes) {
        if (buf_.size() < bytes) buf_.resize(bytes);
    }
    void reset() { pos_ = 0; }
    void* alloc(std::size_t bytes) {
        bytes = (bytes + 63) & ~std::size_t(63);
        assert(pos_ + bytes <= buf_.size());
        void* p = buf_.data() + pos_;
        pos_ += bytes;
        return p;
    }

  private:
    std::vector<std::byte> buf_;
    std::size_t pos_ = 0;
};

thread_local Arena t_arena;

// One operand of a fused loop: either a dense slice or a broadcast scalar.
struct View {
    const void* data = nullptr;  // nullptr => broadcast scalar
    Precision prec = Precision::f64;
    double scalar = 0.0;  // already narrowed to prec
};

template <class T>
constexpr Precision precision_of() {
    return sizeof(T) == sizeof(float) ? Precision::f32 : Precision::f64;
}

template <class To, class From>
void convert_loop(To* out, const From* in, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<To>(in[i]);
}

template <class T>
struct Operand {
    const T* data = nullptr;
    T scalar{};
};

// Bring a view to compute type T, materializing a converted chunk only for
// mixed-precision operands.
template <class T>
Operand<T> adapt(const View& v, std::size_t cnt, Arena& arena) {
    Operand<T> op;
    if (!v.data) {
        op.scalar = static_cast<T>(v.scalar);
        return op;
    }
    if (v.prec == precision_of<T>()) {
        op.data = static_cast<const T*>(v.data);
        return op;
    }
    T* buf = static_cast<T*>(arena.alloc(cnt * sizeof(T)));
    if (v.prec == Precision::f32)
        convert_loop(buf, static_cast<const float*>(v.data), cnt);
    else
        convert_loop(buf, static_cast<const double*>(v.data), cnt);
    op.data = buf;
    return op;
}

template <class T>
void run_unary(UnaryOp kind, T* out, const T* in, std::size_t cnt) {
    dispatch_unary<T>(kind, [&](auto f) {
        for (std::size_t i = 0; i < cnt; ++i) out[i] = f(in[i]);
    });
}

template <class T>
void run_binary(BinaryOp kind, T* out, Operand<T> l, Operand<T> r, std::size_t cnt) {
    dispatch_binary<T>(kind, [&](auto f) {
        if (l.data && r.data) {
            const T* a = l.data;
            const T* b = r.data;
            for (std::size_t i = 0; i < cnt; ++i) out[i] = f(a[i], b[i]);
        } else if (l.data) {
            const T* a = l.data;
            const T b = r.scalar;
            for (std::size_t i = 0; i < cnt; ++i) out[i] = f(a[i], b);
        } else if (r.data) {
            const T a = l.scalar;
            const T* b = r.data;
            for (std::size_t i = 0; i < cnt; ++i) out[i] = f(a, b[i]);
        } else {
            const T c = f(l.scalar, r.scalar);
            for (std::size_t i = 0; i < cnt; ++i) out[i] = c;
        }
    });
}

View eval_operand(const ExprNode& n, std::size_t off, std::size_t cnt, Arena& arena) {
    switch (n.kind) {
        case NodeKind::Leaf: {
            const auto* base = static_cast<const std::byte*>(n.vec->raw());
            return {base + off * scalar_width(n.prec), n.prec, 0.0};
        }
        case NodeKind::Constant:
            return {nullptr, n.prec, narrow_value(n.value, n.prec)};
        case NodeKind::Tagged:
        case NodeKind::Cached:
            return eval_operand(*n.left, off, cnt, arena);
        case NodeKind::Unary: {
            View c = eval_operand(*n.left, off, cnt, arena);
            if (!c.data) {
                double r = n.prec == Precision::f32
                               ? static_cast<double>(apply_unary_scalar<float>(
                                     n.uop, static_cast<float>(c.scalar)))
                               : apply_unary_scalar<double>(n.uop, c.scalar);
                return {nullptr, n.prec, r};
            }
            void* out = arena.alloc(cnt * scalar_width(n.prec));
            if (n.prec == Precision::f32)
                run_unary(n.uop, static_cast<float*>(out), static_cast<const float*>(c.data), cnt);
            else
                run_unary(n.uop, static_cast<double*>(out), static_cast<const double*>(c.data),
                          cnt);
            return {out, n.prec, 0.0};
        }
        case NodeKind::Binary: {
            View l = eval_operand(*n.left, off, cnt, arena);
            View r = eval_operand(*n.right, off, cnt, arena);
            if (!l.data && !r.data) {
                double res;
                if (n.prec == Precision::f32)
                    res = static_cast<double>(apply_binary_scalar<float>(
                        n.bop, static_cast<float>(l.scalar), static_cast<float>(r.scalar)));
                else
                    res = apply_binary_scalar<double>(n.bop, l.scalar, r.scalar);
                return {nullptr, n.prec, res};
            }
            void* out = arena.alloc(cnt * scalar_width(n.prec));
            if (n.prec == Precision::f32)
                run_binary(n.bop, static_cast<float*>(out), adapt<float>(l, cnt, arena),
                           adapt<float>(r, cnt, arena), cnt);
            else
                run_binary(n.bop, static_cast<double*>(out), adapt<double>(l, cnt, arena),
                           adapt<double>(r, cnt, arena), cnt);
            return {out, n.prec, 0.0};
        }
    }
    return {};
}

template <class T>
void store_view(const View& v, T* dest, std::size_t cnt) {
    if (!v.data) {
        const T c = static_cast<T>(v.scalar);
        for (std::size_t i = 0; i < cnt; ++i) dest[i] = c;
        return;
    }
    if (v.prec == precision_of<T>()) {
        if (v.data != dest) std::memcpy(dest, v.data, cnt * sizeof(T));
        return;
    }
    if (v.prec == Precision::f32)
        convert_loop(dest, static_cast<const float*>(v.data), cnt);
    else
        convert_loop(dest, static_cast<const double*>(v.data), cnt);
}

// Evaluate one chunk of the root node, writing straight into the
// destination slice. Reads of index i always precede the write of index i,
// which is what makes destination/leaf aliasing well-defined.
template <class T>
void eval_root(const ExprNode& n, T* dest, std::size_t off, std::size_t cnt, Arena& arena) {
    if (n.kind == NodeKind::Tagged || n.kind == NodeKind::Cached)
        return eval_root(*n.left, dest, off, cnt, arena);
    if (n.kind == NodeKind::Unary && n.prec == precision_of<T>()) {
        View c = eval_operand(*n.left, off, cnt, arena);
        if (c.data) {
            run_unary(n.uop, dest, static_cast<const T*>(c.data), cnt);
            return;
        }
        store_view({nullptr, n.prec,
                    static_cast<double>(apply_unary_scalar<T>(n.uop, static_cast<T>(c.scalar)))},
                   dest, cnt);
        return;
    }
    if (n.kind == NodeKind::Binary && n.prec == precision_of<T>()) {
        View l = eval_operand(*n.left, off, cnt, arena);
        View r = eval_operand(*n.right, off, cnt, arena);
        run_binary(n.bop, dest, adapt<T>(l, cnt, arena), adapt<T>(r, cnt, arena), cnt);
        return;
    }
    store_view(eval_operand(n, off, cnt, arena), dest, cnt);
}

std::size_t arena_bound(const Expr& e) {
    return (e.node_count() + 6) * kChunk * sizeof(double) + 1024;
}

void eval_range(const ExprNode& root, DenseVector& dest, std::size_t begin, std::size_t end,
                std::size_t bound) {
    Arena& arena = t_arena;
    arena.require(bound);
    auto* base = static_cast<std::byte*>(dest.raw());
    const std::size_t width = scalar_width(dest.precision());
    for (std::size_t off = begin; off < end; off += kChunk) {
        const std::size_t cnt = std::min(kChunk, end - off);
        arena.reset();
        if (dest.precision() == Precision::f32)
            eval_root(root, reinterpret_cast<float*>(base + off * width), off, cnt, arena);
        else
            eval_root(root, reinterpret_cast<double*>(base + off * width), off, cnt, arena);
    }
}

void validate(const ExprNode& n, std::size_t dest_len,
              std::map<int, const DenseVector*>& bindings) {
    switch (n.kind) {
        case NodeKind::Leaf:
            if (n.vec->size() != dest_len)
                throw LengthMismatch("leaf length " + std::to_string(n.vec->size()) +
                                     " does not match destination length " +
                                     std::to_string(dest_len));
            return;
        case NodeKind::Constant:
            return;
        case NodeKind::Tagged:
            if (n.left->kind == NodeKind::Leaf) {
                auto [it, inserted] = bindings.emplace(n.tag, n.left->vec);
                if (!inserted && it->second != n.left->vec)
                    throw TagConflict("tag " + std::to_string(n.tag) +
                                      " bound to two different leaves");
            }
            validate(*n.left, dest_len, bindings);
            return;
        case NodeKind::Cached:
        case NodeKind::Unary:
            validate(*n.left, dest_len, bindings);
            return;
        case NodeKind::Binary:
            validate(*n.left, dest_len, bindings);
            validate(*n.right, dest_len, bindings);
            return;
    }
}

}  // namespace

Backend Backend::parallel(std::size_t chunk_size, std::size_t workers) {
    Backend b(BackendKind::Parallel);
    b.chunk_size_ = chunk_size == 0 ? kChunk : chunk_size;
    b.workers_ = std::max<std::size_t>(1, workers);
    return b;
}

void Backend::evaluate(const Expr& e, DenseVector& dest) const {
    fusevec::evaluate(*this, e, dest);
}

void evaluate(const Backend& backend, const Expr& e, DenseVector& dest) {
    if (!e.valid()) throw Error("cannot evaluate an empty expression");
    if (backend.kind() == BackendKind::Codegen)
        throw Error("codegen backend emits kernel source; it does not evaluate");

    std::map<int, const DenseVector*> bindings;
    validate(e.node(), dest.size(), bindings);

    const std::size_t n = dest.size();
    if (n == 0) return;

    // Large inputs take the compiled-kernel path when the toolchain allows;
    // the chunked interpreter below is the reference. Both follow the same
    // per-element operation order, so results are bitwise identical.
    if (n >= detail::kJitMinLength) {
        if (const detail::JitKernel* k = detail::jit_kernel_for(e, dest.precision())) {
            detail::JitArgs args = detail::jit_args(e, dest);
            if (backend.kind() == BackendKind::Parallel && backend.workers() > 1) {
                const std::size_t cs = backend.chunk_size();
                const std::size_t workers = backend.workers();
                const std::size_t units = (n + cs - 1) / cs;
                if (units > 1) {
                    std::vector<std::thread> pool;
                    pool.reserve(workers);
                    for (std::size_t w = 0; w < workers; ++w) {
                        pool.emplace_back([&, w] {
                            for (std::size_t u = w; u < units; u += workers)
                                k->fn(u * cs, std::min(n, u * cs + cs), args.ptrs.data());
                        });
                    }
                    for (auto& t : pool) t.join();
                    return;
                }
            }
            k->fn(0, n, args.ptrs.data());
            return;
        }
    }

    const std::size_t bound = arena_bound(e);
    if (backend.kind() == BackendKind::ScalarRef) {
        eval_range(e.node(), dest, 0, n, bound);
        return;
    }

    const std::size_t cs = backend.chunk_size();
    const std::size_t workers = backend.workers();
    const std::size_t units = (n + cs - 1) / cs;
    if (workers == 1 || units <= 1) {
        eval_range(e.node(), dest, 0, n, bound);
        return;
    }

    const ExprNode& root = e.node();
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t u = w; u < units; u += workers) {
                const std::size_t begin = u * cs;
                const std::size_t end = std::min(n, begin + cs);
                eval_range(root, dest, begin, end, bound);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace fusevec
