#pragma once

#include <cstddef>
#include <vector>

#include "fusevec/backend.hpp"

namespace fusevec::detail {

// Below this length the chunked interpreter wins; above it an evaluation is
// worth a one-time kernel compile, cached per tree shape.
constexpr std::size_t kJitMinLength = 8192;

struct JitKernel {
    using Fn = void (*)(std::size_t begin, std::size_t end, void* const* args);
    Fn fn = nullptr;
};

/// Compiled single-loop kernel for the shape of e writing a dest_prec buffer,
/// or nullptr when the host toolchain is unavailable or the tree is not
/// eligible. Kernels live for the process lifetime; safe from any thread.
const JitKernel* jit_kernel_for(const Expr& e, Precision dest_prec);

struct JitArgs {
    std::vector<void*> ptrs;  // [0] = dest, then one slot per distinct leaf
};

/// Argument block matching the parameter order jit_kernel_for assigned.
JitArgs jit_args(const Expr& e, DenseVector& dest);

}  // namespace fusevec::detail
