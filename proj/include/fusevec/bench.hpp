#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fusevec/backend.hpp"

namespace fusevec {

struct BenchConfig {
    std::string suite = "micro";  // micro | miniapp
    BackendKind backend = BackendKind::ScalarRef;
    std::vector<std::size_t> sizes = default_sizes();
    int reps = 0;  // 0 = auto: enough that each size runs >= 200 ms
    Precision precision = Precision::f64;
    std::string csv_path;  // empty = stdout only
    unsigned workers = 0;  // 0 = logical cores
    std::uint64_t seed = 0x5eed;

    static std::vector<std::size_t> default_sizes();  // 2^10 .. 2^24
    void validate() const;                            // throws ConfigError
};

struct BenchRecord {
    std::string suite;
    std::string backend;
    Precision precision = Precision::f64;
    std::size_t n = 0;
    double median_ns = 0;
    double mflops = 0;
    double bandwidth_mbs = 0;
    double overhead_ratio = 0;  // generic / hand-fused, from interleaved medians
    int reps = 0;               // harness detail, not a CSV column
};

/// ||v||^2 from the 3D conservative state: the generic fluid expression
/// against an independently written fused loop over the same buffers.
std::vector<BenchRecord> run_micro(const BenchConfig& cfg);

/// Full 5x3 inviscid flux evaluation into preallocated outputs.
std::vector<BenchRecord> run_miniapp(const BenchConfig& cfg);

/// Writes the fused kernel source for a named built-in expression:
/// "axpy-sin", "v-mag2" or "flux-col0". Byte-stable across runs.
void run_codegen(const std::string& expr_name, const std::string& out_path);

void write_csv(const std::vector<BenchRecord>& records, std::ostream& os);
void write_csv(const std::vector<BenchRecord>& records, const std::string& path);

}  // namespace fusevec
