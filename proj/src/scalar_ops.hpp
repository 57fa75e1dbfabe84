#pragma once

// Single source of truth for per-element op semantics. Every evaluator in
// the library dispatches through these tables so backends agree bitwise.

#include <cmath>

#include "fusevec/expr.hpp"

namespace fusevec::detail {

#define FUSEVEC_UNARY_OPS(X)      \
    X(Neg, -x)                    \
    X(Abs, std::fabs(x))          \
    X(Sin, std::sin(x))           \
    X(Cos, std::cos(x))           \
    X(Tan, std::tan(x))           \
    X(Asin, std::asin(x))         \
    X(Acos, std::acos(x))         \
    X(Atan, std::atan(x))         \
    X(Sinh, std::sinh(x))         \
    X(Cosh, std::cosh(x))         \
    X(Tanh, std::tanh(x))         \
    X(Exp, std::exp(x))           \
    X(Log, std::log(x))           \
    X(Log2, std::log2(x))         \
    X(Log10, std::log10(x))       \
    X(Sqrt, std::sqrt(x))         \
    X(Cbrt, std::cbrt(x))         \
    X(Ceil, std::ceil(x))         \
    X(Floor, std::floor(x))       \
    X(Round, std::round(x))       \
    X(Erf, std::erf(x))

#define FUSEVEC_BINARY_OPS(X)     \
    X(Add, a + b)                 \
    X(Sub, a - b)                 \
    X(Mul, a* b)                  \
    X(Div, a / b)                 \
    X(Pow, std::pow(a, b))        \
    X(Min, std::fmin(a, b))       \
    X(Max, std::fmax(a, b))       \
    X(Atan2, std::atan2(a, b))

template <class T, class Visitor>
decltype(auto) dispatch_unary(UnaryOp kind, Visitor&& v) {
    switch (kind) {
#define X(NAME, EXPR) \
    case UnaryOp::NAME: return v([](T x) { return EXPR; });
        FUSEVEC_UNARY_OPS(X)
#undef X
    }
    return v([](T x) { return x; });  // unreachable
}

template <class T, class Visitor>
decltype(auto) dispatch_binary(BinaryOp kind, Visitor&& v) {
    switch (kind) {
#define X(NAME, EXPR) \
    case BinaryOp::NAME: return v([](T a, T b) { return EXPR; });
        FUSEVEC_BINARY_OPS(X)
#undef X
    }
    return v([](T a, T b) { return a; });  // unreachable
}

template <class T>
T apply_unary_scalar(UnaryOp kind, T x) {
    T r{};
    dispatch_unary<T>(kind, [&](auto f) { r = f(x); });
    return r;
}

template <class T>
T apply_binary_scalar(BinaryOp kind, T a, T b) {
    T r{};
    dispatch_binary<T>(kind, [&](auto f) { r = f(a, b); });
    return r;
}

/// A constant's effective value: f32 constants are rounded to float before
/// any use, mirroring what a single-precision buffer would hold.
inline double narrow_value(double value, Precision prec) {
    return prec == Precision::f32 ? static_cast<double>(static_cast<float>(value)) : value;
}

}  // namespace fusevec::detail
