#pragma once

#include <atomic>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "fusevec/error.hpp"

namespace fusevec {

enum class Precision : std::uint8_t { f32, f64 };

constexpr std::size_t scalar_width(Precision p) {
    return p == Precision::f32 ? sizeof(float) : sizeof(double);
}

constexpr Precision promote(Precision a, Precision b) {
    return (a == Precision::f64 || b == Precision::f64) ? Precision::f64 : Precision::f32;
}

const char* precision_name(Precision p);

/// Process-wide count of vector buffer allocations. Tests use deltas of this
/// counter to assert that lazy construction and fused evaluation never
/// materialize intermediate vectors.
std::uint64_t vector_alloc_count();

class Expr;
class CacheExpr;

/// Contiguous single- or double-precision buffer. The only array type the
/// evaluators ever write to; every allocation bumps the instrumented counter.
class DenseVector {
  public:
    DenseVector() = default;
    DenseVector(Precision prec, std::size_t len);
    explicit DenseVector(std::initializer_list<double> values, Precision prec = Precision::f64);
    static DenseVector from(std::span<const double> values, Precision prec = Precision::f64);

    DenseVector(const DenseVector& other);
    DenseVector& operator=(const DenseVector& other);
    DenseVector(DenseVector&&) noexcept = default;
    DenseVector& operator=(DenseVector&&) noexcept = default;

    // Assignment from a lazy expression evaluates it in place with the
    // scalar reference backend.
    DenseVector& operator=(const Expr& e);
    DenseVector& operator=(const CacheExpr& e);

    Precision precision() const { return prec_; }
    std::size_t size() const { return len_; }
    bool empty() const { return len_ == 0; }

    void* raw() { return data_.get(); }
    const void* raw() const { return data_.get(); }
    std::size_t byte_size() const { return len_ * scalar_width(prec_); }

    std::span<float> f32() {
        assert(prec_ == Precision::f32);
        return {reinterpret_cast<float*>(data_.get()), len_};
    }
    std::span<const float> f32() const {
        assert(prec_ == Precision::f32);
        return {reinterpret_cast<const float*>(data_.get()), len_};
    }
    std::span<double> f64() {
        assert(prec_ == Precision::f64);
        return {reinterpret_cast<double*>(data_.get()), len_};
    }
    std::span<const double> f64() const {
        assert(prec_ == Precision::f64);
        return {reinterpret_cast<const double*>(data_.get()), len_};
    }

    double at(std::size_t i) const;
    void set(std::size_t i, double value);

    /// Snapshot of the raw bytes, for before/after purity checks.
    std::vector<std::byte> bytes() const;

  private:
    Precision prec_ = Precision::f64;
    std::size_t len_ = 0;
    std::unique_ptr<std::byte[]> data_;
};

}  // namespace fusevec
