#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fusevec/bench.hpp"
#include "oracle.hpp"

using namespace fusevec;

namespace {

BenchConfig tiny(const std::string& suite) {
    BenchConfig cfg;
    cfg.suite = suite;
    cfg.sizes = {256, 1024};
    cfg.reps = 3;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("default sizes run 2^10 through 2^24") {
    auto s = BenchConfig::default_sizes();
    REQUIRE(s.size() == 15);
    CHECK(s.front() == 1024);
    CHECK(s.back() == 16777216);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] == 2 * s[i - 1]);
}

TEST_CASE("config validation") {
    BenchConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.suite = "macro";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = BenchConfig{};
    cfg.backend = BackendKind::Codegen;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = BenchConfig{};
    cfg.sizes = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = BenchConfig{};
    cfg.sizes = {1024, 1024};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = BenchConfig{};
    cfg.reps = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("micro produces one record per size with sane numbers") {
    for (Precision prec : {Precision::f64, Precision::f32}) {
        BenchConfig cfg = tiny("micro");
        cfg.precision = prec;
        auto recs = run_micro(cfg);  // throws OracleMismatch if results drift
        REQUIRE(recs.size() == 2);
        for (std::size_t i = 0; i < recs.size(); ++i) {
            const BenchRecord& r = recs[i];
            CHECK(r.suite == "micro");
            CHECK(r.backend == "scalar");
            CHECK(r.precision == prec);
            CHECK(r.n == cfg.sizes[i]);
            CHECK(r.median_ns > 0);
            CHECK(r.mflops > 0);
            CHECK(r.bandwidth_mbs > 0);
            CHECK(r.overhead_ratio > 0);
            CHECK(r.reps == 3);
        }
    }
}

TEST_CASE("miniapp runs its internal oracle and backend cross-check") {
    BenchConfig cfg = tiny("miniapp");
    cfg.sizes = {256};
    auto recs = run_miniapp(cfg);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].suite == "miniapp");
    CHECK(recs[0].n == 256);
    CHECK(recs[0].median_ns > 0);
    CHECK(recs[0].overhead_ratio > 0);
}

TEST_CASE("parallel records carry the backend label") {
    BenchConfig cfg = tiny("micro");
    cfg.backend = BackendKind::Parallel;
    cfg.workers = 2;
    auto recs = run_micro(cfg);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].backend == "parallel");
}

TEST_CASE("csv output has the documented header and one row per record") {
    std::vector<BenchRecord> recs(2);
    recs[0] = {"micro", "scalar", Precision::f64, 1024, 1500.5, 4000.25, 32000.125, 1.0423, 11};
    recs[1] = {"miniapp", "parallel", Precision::f32, 4096, 2.0, 3.0, 4.0, 0.9871, 3};

    std::ostringstream os;
    write_csv(recs, os);
    std::istringstream in(os.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);

    std::size_t h = 0;
    while (h < lines.size() && lines[h].rfind("#", 0) == 0) ++h;
    REQUIRE(h + 3 == lines.size());
    CHECK(lines[h] == "suite,backend,precision,n,median_ns,mflops,bandwidth_mbs,overhead_ratio");
    CHECK(lines[h + 1] == "micro,scalar,f64,1024,1500.500,4000.250,32000.125,1.0423");
    CHECK(lines[h + 2] == "miniapp,parallel,f32,4096,2.000,3.000,4.000,0.9871");
}

TEST_CASE("csv writes to a file path") {
    std::vector<BenchRecord> recs(1);
    recs[0] = {"micro", "scalar", Precision::f64, 8, 1.0, 2.0, 3.0, 1.0, 3};
    const char* path = "bench_csv_test.tmp";
    write_csv(recs, path);
    std::string text = slurp(path);
    CHECK(text.find("suite,backend,precision,n,") != std::string::npos);
    CHECK(text.find("micro,scalar,f64,8,") != std::string::npos);
    std::remove(path);
}

TEST_CASE("codegen export writes kernel text for the built-ins") {
    for (const char* name : {"axpy-sin", "v-mag2", "flux-col0"}) {
        std::string path = std::string("codegen_test_") + name + ".tmp";
        run_codegen(name, path);
        std::string text = slurp(path);
        CAPTURE(name);
        CHECK(text.rfind("kernel void fused_vector_kernel", 0) == 0);
        CHECK(text.find("get_global_id(0)") != std::string::npos);

        // byte-stable across runs
        std::string again = path + "2";
        run_codegen(name, again);
        CHECK(slurp(again) == text);
        std::remove(path.c_str());
        std::remove(again.c_str());
    }
    CHECK_THROWS_AS(run_codegen("no-such-kernel", "unused.tmp"), UnknownExpression);
}
