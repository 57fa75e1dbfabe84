#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fusevec/expr.hpp"

namespace fusevec {

enum class BackendKind : std::uint8_t { ScalarRef, Parallel, Codegen };
enum class Dialect : std::uint8_t { OpenCL };

/// Evaluation strategy. Backends are stateless values; all operations are
/// re-entrant. The parallel backend fans out to a worker pool per call and
/// joins before returning.
class Backend {
  public:
    static Backend scalar_ref() { return Backend(BackendKind::ScalarRef); }
    static Backend parallel(std::size_t chunk_size, std::size_t workers);
    static Backend codegen(Dialect dialect) {
        Backend b(BackendKind::Codegen);
        b.dialect_ = dialect;
        return b;
    }

    BackendKind kind() const { return kind_; }
    std::size_t chunk_size() const { return chunk_size_; }
    std::size_t workers() const { return workers_; }
    Dialect dialect() const { return dialect_; }

    void evaluate(const Expr& e, DenseVector& dest) const;

  private:
    explicit Backend(BackendKind k) : kind_(k) {}

    BackendKind kind_;
    std::size_t chunk_size_ = 0;
    std::size_t workers_ = 1;
    Dialect dialect_ = Dialect::OpenCL;
};

/// dest[i] = e[i] for all i, in a single fused pass. dest may alias a leaf
/// of e: each index reads only that index of every operand before writing.
void evaluate(const Backend& backend, const Expr& e, DenseVector& dest);

struct KernelSource {
    std::string name;
    std::string text;
    /// Deduplicated by tag id: destination first, then operands by first
    /// appearance in a left-to-right tree walk.
    std::vector<std::pair<int, Precision>> params;
};

/// Emit fused kernel source for e. Every leaf must be tagged; the
/// destination buffer is identified by dest_tag.
KernelSource generate_kernel(const Expr& e, int dest_tag, Dialect dialect,
                             const std::string& name = "fused_vector_kernel");

/// Execute generated kernel text on host buffers, one element at a time.
/// Hermetic stand-in for a device runtime; doubles as a codegen oracle.
DenseVector interpret_kernel(const KernelSource& k,
                             const std::map<int, const DenseVector*>& inputs);

}  // namespace fusevec
