#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fusevec/bench.hpp"

namespace {

struct SuiteOpts {
    std::string backend = "scalar";
    std::string sizes;
    int reps = 0;
    std::string precision = "f64";
    std::string csv;
    unsigned workers = 0;
    std::uint64_t seed = 0x5eed;
};

void add_suite_options(CLI::App* cmd, SuiteOpts& o) {
    cmd->add_option("--backend", o.backend, "evaluation backend")
        ->check(CLI::IsMember({"scalar", "parallel"}));
    cmd->add_option("--sizes", o.sizes,
                    "element counts: LO..HI (geometric, factor 2), a single N, or N,N,...");
    cmd->add_option("--reps", o.reps, "timed repetitions per size (>= 3; default: auto)");
    cmd->add_option("--precision", o.precision, "scalar precision")
        ->check(CLI::IsMember({"f32", "f64"}));
    cmd->add_option("--csv", o.csv, "write records to this CSV file");
    cmd->add_option("--workers", o.workers, "parallel backend workers (default: logical cores)");
    cmd->add_option("--seed", o.seed, "property-test RNG seed");
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    if (auto dots = text.find(".."); dots != std::string::npos) {
        std::size_t lo = std::stoull(text.substr(0, dots));
        std::size_t hi = std::stoull(text.substr(dots + 2));
        if (lo == 0 || lo > hi) throw fusevec::ConfigError("bad size range '" + text + "'");
        for (std::size_t n = lo; n <= hi; n *= 2) out.push_back(n);
        return out;
    }
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(std::stoull(text.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

fusevec::BenchConfig make_config(const std::string& suite, const SuiteOpts& o) {
    fusevec::BenchConfig cfg;
    cfg.suite = suite;
    cfg.backend = o.backend == "parallel" ? fusevec::BackendKind::Parallel
                                          : fusevec::BackendKind::ScalarRef;
    if (!o.sizes.empty()) cfg.sizes = parse_sizes(o.sizes);
    cfg.reps = o.reps;
    cfg.precision = o.precision == "f32" ? fusevec::Precision::f32 : fusevec::Precision::f64;
    cfg.csv_path = o.csv;
    cfg.workers = o.workers;
    cfg.seed = o.seed;
    return cfg;
}

void print_table(const std::vector<fusevec::BenchRecord>& records) {
    std::printf("%-8s %-9s %-5s %10s %8s %14s %12s %14s %8s\n", "suite", "backend", "prec", "n",
                "reps", "median_ns", "mflops", "bandwidth_mbs", "ratio");
    for (const auto& r : records)
        std::printf("%-8s %-9s %-5s %10zu %8d %14.0f %12.1f %14.1f %8.4f\n", r.suite.c_str(),
                    r.backend.c_str(), fusevec::precision_name(r.precision), r.n, r.reps,
                    r.median_ns, r.mflops, r.bandwidth_mbs, r.overhead_ratio);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fused lazy vector expressions: benchmark harness and kernel export"};
    app.require_subcommand(1);

    CLI::App* bench = app.add_subcommand("bench", "run a benchmark suite");
    bench->require_subcommand(1);
    SuiteOpts micro_opts, mini_opts;
    CLI::App* micro = bench->add_subcommand("micro", "v_mag2 kernel vs hand-fused loop");
    add_suite_options(micro, micro_opts);
    CLI::App* mini = bench->add_subcommand("miniapp", "full 5x3 inviscid flux evaluation");
    add_suite_options(mini, mini_opts);

    std::string cg_name, cg_out;
    CLI::App* codegen = app.add_subcommand("codegen", "write fused kernel source for a "
                                                      "built-in expression");
    codegen->add_option("name", cg_name, "axpy-sin | v-mag2 | flux-col0")->required();
    codegen->add_option("--out", cg_out, "output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<fusevec::BenchRecord> records;
        if (micro->parsed()) {
            records = fusevec::run_micro(make_config("micro", micro_opts));
            print_table(records);
            if (!micro_opts.csv.empty()) fusevec::write_csv(records, micro_opts.csv);
        } else if (mini->parsed()) {
            records = fusevec::run_miniapp(make_config("miniapp", mini_opts));
            print_table(records);
            if (!mini_opts.csv.empty()) fusevec::write_csv(records, mini_opts.csv);
        } else if (codegen->parsed()) {
            fusevec::run_codegen(cg_name, cg_out);
            std::printf("wrote %s\n", cg_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
