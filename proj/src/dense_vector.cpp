#include "fusevec/dense_vector.hpp"

#include <algorithm>

#include "fusevec/backend.hpp"
#include "fusevec/expr.hpp"

namespace fusevec {

namespace {
std::atomic<std::uint64_t> g_vector_allocs{0};
}

std::uint64_t vector_alloc_count() {
    return g_vector_allocs.load(std::memory_order_relaxed);
}

DenseVector::DenseVector(Precision prec, std::size_t len) : prec_(prec), len_(len) {
    if (len_ > 0) {
        data_ = std::make_unique<std::byte[]>(byte_size());
        std::memset(data_.get(), 0, byte_size());
        g_vector_allocs.fetch_add(1, std::memory_order_relaxed);
    }
}

DenseVector::DenseVector(std::initializer_list<double> values, Precision prec)
    : DenseVector(prec, values.size()) {
    std::size_t i = 0;
    for (double v : values) set(i++, v);
}

DenseVector DenseVector::from(std::span<const double> values, Precision prec) {
    DenseVector out(prec, values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out.set(i, values[i]);
    return out;
}

DenseVector::DenseVector(const DenseVector& other) : prec_(other.prec_), len_(other.len_) {
    if (len_ > 0) {
        data_ = std::make_unique<std::byte[]>(byte_size());
        std::memcpy(data_.get(), other.data_.get(), byte_size());
        g_vector_allocs.fetch_add(1, std::memory_order_relaxed);
    }
}

DenseVector& DenseVector::operator=(const DenseVector& other) {
    if (this == &other) return *this;
    if (prec_ == other.prec_ && len_ == other.len_) {
        if (len_ > 0) std::memcpy(data_.get(), other.data_.get(), byte_size());
        return *this;
    }
    DenseVector copy(other);
    *this = std::move(copy);
    return *this;
}

DenseVector& DenseVector::operator=(const Expr& e) {
    evaluate(Backend::scalar_ref(), e, *this);
    return *this;
}

DenseVector& DenseVector::operator=(const CacheExpr& e) {
    return *this = e.expr();
}

double DenseVector::at(std::size_t i) const {
    assert(i < len_);
    return prec_ == Precision::f32 ? static_cast<double>(f32()[i]) : f64()[i];
}

void DenseVector::set(std::size_t i, double value) {
    assert(i < len_);
    if (prec_ == Precision::f32)
        f32()[i] = static_cast<float>(value);
    else
        f64()[i] = value;
}

std::vector<std::byte> DenseVector::bytes() const {
    const auto* p = data_.get();
    return std::vector<std::byte>(p, p + byte_size());
}

}  // namespace fusevec
