#include <cmath>
#include <map>

#include "doctest.h"
#include "fusevec/backend.hpp"
#include "fusevec/expr.hpp"
#include "oracle.hpp"

using namespace fusevec;
using namespace testutil;

namespace {

Expr tag_all(std::vector<DenseVector>& pool, std::vector<Expr>& leaves) {
    leaves.clear();
    for (std::size_t i = 0; i < pool.size(); ++i)
        leaves.push_back(tag(static_cast<int>(i), leaf(pool[i])));
    return leaves.empty() ? Expr() : leaves[0];
}

}  // namespace

TEST_CASE("scalar_ref matches the oracle across awkward lengths") {
    for (std::size_t n : {1ul, 2ul, 31ul, 1024ul, 1025ul, 3000ul}) {
        SplitMix64 rng(n);
        DenseVector x = make_vec(Precision::f64, n, rng);
        DenseVector y = make_vec(Precision::f64, n, rng);
        Expr e = constant(0.5, leaf(x)) * elem_sin(leaf(x) + leaf(y));
        DenseVector got(Precision::f64, n);
        evaluate(Backend::scalar_ref(), e, got);
        DenseVector want(Precision::f64, n);
        oracle_into(e, want);
        CHECK(bitwise_equal(got, want));
    }
}

TEST_CASE("destination may alias an input leaf") {
    SplitMix64 rng(5);
    DenseVector x = make_vec(Precision::f64, 777, rng);
    DenseVector y = make_vec(Precision::f64, 777, rng);
    Expr e = constant(0.5, leaf(y)) * elem_sin(leaf(x) + leaf(y));

    DenseVector want(Precision::f64, 777);
    oracle_into(e, want);  // reads y before it is overwritten

    evaluate(Backend::scalar_ref(), e, y);
    CHECK(bitwise_equal(y, want));
}

TEST_CASE("parallel is bitwise identical to scalar_ref") {
    std::vector<DenseVector> pool;
    SplitMix64 seed_rng(77);
    pool.push_back(make_vec(Precision::f64, 1025, seed_rng));
    pool.push_back(make_vec(Precision::f32, 1025, seed_rng));
    pool.push_back(make_vec(Precision::f64, 1025, seed_rng));
    TreeGen gen{&pool, false};
    SplitMix64 rng(78);
    for (int t = 0; t < 60; ++t) {
        Expr e = gen.gen(rng, 4);
        Precision prec = e.result_precision();
        DenseVector a(prec, 1025), b(prec, 1025), c(prec, 1025);
        evaluate(Backend::scalar_ref(), e, a);
        evaluate(Backend::parallel(128, 3), e, b);
        evaluate(Backend::parallel(1, 7), e, c);
        CAPTURE(pretty_string(e));
        CHECK(bitwise_equal(a, b));
        CHECK(bitwise_equal(a, c));
    }
}

TEST_CASE("parallel aliasing destination still matches") {
    SplitMix64 rng(6);
    DenseVector x = make_vec(Precision::f64, 2048, rng);
    DenseVector y0 = make_vec(Precision::f64, 2048, rng);
    DenseVector y1 = DenseVector::from(y0.f64(), Precision::f64);
    Expr e0 = constant(0.5, leaf(y0)) * elem_sin(leaf(x) + leaf(y0));
    Expr e1 = constant(0.5, leaf(y1)) * elem_sin(leaf(x) + leaf(y1));
    evaluate(Backend::scalar_ref(), e0, y0);
    evaluate(Backend::parallel(64, 4), e1, y1);
    CHECK(bitwise_equal(y0, y1));
}

TEST_CASE("backend accessors report their configuration") {
    Backend s = Backend::scalar_ref();
    CHECK(s.kind() == BackendKind::ScalarRef);
    Backend p = Backend::parallel(256, 4);
    CHECK(p.kind() == BackendKind::Parallel);
    CHECK(p.chunk_size() == 256);
    CHECK(p.workers() == 4);
    Backend c = Backend::codegen(Dialect::OpenCL);
    CHECK(c.kind() == BackendKind::Codegen);
    CHECK(c.dialect() == Dialect::OpenCL);
}

TEST_CASE("codegen backend refuses to evaluate") {
    DenseVector x(Precision::f64, 4);
    DenseVector out(Precision::f64, 4);
    CHECK_THROWS_AS(evaluate(Backend::codegen(Dialect::OpenCL), tag(0, leaf(x)), out), Error);
}

TEST_CASE("mixed precision promotes at each operation") {
    SplitMix64 rng(31);
    DenseVector xs = make_vec(Precision::f32, 64, rng);
    DenseVector yd = make_vec(Precision::f64, 64, rng);
    Expr e = elem_sqrt(leaf(xs)) + leaf(yd) * constant(0.1, leaf(xs));
    CHECK(e.result_precision() == Precision::f64);
    DenseVector got(Precision::f64, 64);
    evaluate(Backend::scalar_ref(), e, got);
    DenseVector want(Precision::f64, 64);
    oracle_into(e, want);
    CHECK(bitwise_equal(got, want));

    // Spot-check element 0 by hand: sqrt runs in f32, the product in f32,
    // the sum in f64.
    float x0 = xs.f32()[0];
    double y0 = yd.f64()[0];
    double by_hand = static_cast<double>(std::sqrt(x0)) +
                     static_cast<double>(y0 * static_cast<double>(0.1f));
    CHECK(got.at(0) == doctest::Approx(by_hand).epsilon(1e-12));
}

TEST_CASE("f32 constants are narrowed before use") {
    DenseVector ones(Precision::f32, 8);
    for (std::size_t i = 0; i < 8; ++i) ones.set(i, 1.0);
    Expr e = leaf(ones) * constant(0.1, leaf(ones));
    DenseVector out(Precision::f32, 8);
    evaluate(Backend::scalar_ref(), e, out);
    CHECK(out.f32()[0] == 0.1f);
    CHECK(static_cast<double>(out.f32()[0]) != 0.1);
}

TEST_CASE("storing a wide result into a narrow destination rounds once") {
    DenseVector x({0.2, 0.4, 0.8});
    DenseVector out(Precision::f32, 3);
    evaluate(Backend::scalar_ref(), elem_exp(leaf(x)), out);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(out.f32()[i] == static_cast<float>(std::exp(x.at(i))));
}

TEST_CASE("generated kernel has the documented shape") {
    DenseVector x(Precision::f32, 16);
    DenseVector y(Precision::f32, 16);
    Expr e = constant(0.5, leaf(x)) * elem_sin(tag(0, leaf(x)) + tag(1, leaf(y)));
    KernelSource k = generate_kernel(e, 1, Dialect::OpenCL);

    CHECK(k.name == "fused_vector_kernel");
    REQUIRE(k.params.size() == 2);
    CHECK(k.params[0].first == 1);  // destination first
    CHECK(k.params[1].first == 0);
    CHECK(k.params[0].second == Precision::f32);

    CHECK(k.text.find("kernel void fused_vector_kernel") == 0);
    CHECK(k.text.find("ulong n") != std::string::npos);
    CHECK(k.text.find("global float * prm_tag_1") != std::string::npos);
    CHECK(k.text.find("global float * prm_tag_0") != std::string::npos);
    CHECK(k.text.find("get_global_id(0)") != std::string::npos);
    CHECK(k.text.find("get_global_size(0)") != std::string::npos);
    CHECK(k.text.find("5.0000000000000000e-01f") != std::string::npos);
    CHECK(k.text.find("prm_tag_1[idx] = ") != std::string::npos);
    CHECK(k.text.find("sin( ( prm_tag_0[idx] + prm_tag_1[idx] ) )") != std::string::npos);

    // Exactly one loop and one assignment statement.
    std::size_t fors = 0, assigns = 0;
    for (std::size_t pos = 0; (pos = k.text.find("for", pos)) != std::string::npos; ++pos) ++fors;
    for (std::size_t pos = 0; (pos = k.text.find("] = ", pos)) != std::string::npos; ++pos)
        ++assigns;
    CHECK(fors == 1);
    CHECK(assigns == 1);
}

TEST_CASE("kernel parameters dedup repeated tags and keep appearance order") {
    DenseVector a(Precision::f64, 4);
    DenseVector b(Precision::f64, 4);
    Expr ta = tag(3, leaf(a));
    Expr tb = tag(5, leaf(b));
    Expr e = ta * tb + ta;  // tag 3 appears twice
    KernelSource k = generate_kernel(e, 9, Dialect::OpenCL);
    REQUIRE(k.params.size() == 3);
    CHECK(k.params[0].first == 9);  // dest not in tree: result precision
    CHECK(k.params[0].second == Precision::f64);
    CHECK(k.params[1].first == 3);
    CHECK(k.params[2].first == 5);
}

TEST_CASE("kernel generation requires tags and consistent bindings") {
    DenseVector x(Precision::f64, 4);
    DenseVector y(Precision::f64, 4);
    CHECK_THROWS_AS(generate_kernel(leaf(x) + tag(0, leaf(y)), 0, Dialect::OpenCL), UntaggedLeaf);
    CHECK_THROWS_AS(generate_kernel(tag(0, leaf(x)) + tag(0, leaf(y)), 0, Dialect::OpenCL),
                    TagConflict);
}

TEST_CASE("custom kernel names flow through") {
    DenseVector x(Precision::f64, 1);
    KernelSource k = generate_kernel(tag(0, leaf(x)), 1, Dialect::OpenCL, "saxpy_ish");
    CHECK(k.name == "saxpy_ish");
    CHECK(k.text.find("kernel void saxpy_ish") == 0);
}

TEST_CASE("interpret_kernel reproduces the evaluated expression") {
    std::vector<DenseVector> pool;
    SplitMix64 seed_rng(404);
    pool.push_back(make_vec(Precision::f64, 33, seed_rng));
    pool.push_back(make_vec(Precision::f32, 33, seed_rng));
    pool.push_back(make_vec(Precision::f64, 33, seed_rng));
    TreeGen gen{&pool, true};
    SplitMix64 rng(405);
    for (int t = 0; t < 100; ++t) {
        Expr e = gen.gen(rng, 4);
        const int dest_tag = 99;
        KernelSource k = generate_kernel(e, dest_tag, Dialect::OpenCL);

        std::map<int, const DenseVector*> inputs;
        DenseVector dest_seed(e.result_precision(), 33);
        for (const auto& [id, prec] : k.params) {
            if (id == dest_tag)
                inputs[id] = &dest_seed;
            else
                inputs[id] = &pool[static_cast<std::size_t>(id)];
        }
        DenseVector got = interpret_kernel(k, inputs);

        DenseVector want(e.result_precision(), 33);
        evaluate(Backend::scalar_ref(), e, want);
        CAPTURE(k.text);
        CHECK(bitwise_equal(got, want));
    }
}

TEST_CASE("interpret_kernel rejects malformed text") {
    DenseVector x(Precision::f64, 4);
    Expr e = elem_sin(tag(0, leaf(x)));
    KernelSource k = generate_kernel(e, 1, Dialect::OpenCL);
    std::map<int, const DenseVector*> inputs{{0, &x}, {1, &x}};

    KernelSource bad = k;
    bad.text = "void oops()";
    CHECK_THROWS_AS(interpret_kernel(bad, inputs), KernelParseError);

    bad = k;
    bad.text = k.text.substr(0, k.text.size() / 2);
    CHECK_THROWS_AS(interpret_kernel(bad, inputs), KernelParseError);

    bad = k;
    bad.text += "}";
    CHECK_THROWS_AS(interpret_kernel(bad, inputs), KernelParseError);

    bad = k;
    auto pos = bad.text.find("sin");
    bad.text.replace(pos, 3, "sni");
    CHECK_THROWS_AS(interpret_kernel(bad, inputs), KernelParseError);
}

TEST_CASE("interpret_kernel validates its input map") {
    DenseVector x(Precision::f64, 4);
    DenseVector y(Precision::f64, 5);
    Expr e = elem_cos(tag(0, leaf(x)));
    KernelSource k = generate_kernel(e, 1, Dialect::OpenCL);

    std::map<int, const DenseVector*> missing{{0, &x}};
    CHECK_THROWS_AS(interpret_kernel(k, missing), Error);

    std::map<int, const DenseVector*> ragged{{0, &x}, {1, &y}};
    CHECK_THROWS_AS(interpret_kernel(k, ragged), LengthMismatch);
}

TEST_CASE("compiled path agrees bitwise with the interpreter oracle") {
    // Lengths at and beyond the specialization threshold; the oracle follows
    // the same per-element operation order, so equality must be exact.
    std::vector<DenseVector> pool;
    SplitMix64 seed_rng(661);
    pool.push_back(make_vec(Precision::f64, 16384, seed_rng));
    pool.push_back(make_vec(Precision::f32, 16384, seed_rng));
    pool.push_back(make_vec(Precision::f64, 16384, seed_rng));
    TreeGen gen{&pool, false};
    SplitMix64 rng(662);
    for (int t = 0; t < 12; ++t) {
        Expr e = gen.gen(rng, 4);
        Precision prec = e.result_precision();
        DenseVector got(prec, 16384);
        evaluate(Backend::scalar_ref(), e, got);
        DenseVector par(prec, 16384);
        evaluate(Backend::parallel(4096, 3), e, par);
        DenseVector want(prec, 16384);
        oracle_into(e, want);
        CAPTURE(pretty_string(e));
        CHECK(bitwise_equal(got, want));
        CHECK(bitwise_equal(par, want));
    }
}

TEST_CASE("vector allocation counter stays flat across the compiled path") {
    SplitMix64 rng(662);
    DenseVector x = make_vec(Precision::f64, 16384, rng);
    DenseVector y = make_vec(Precision::f64, 16384, rng);
    DenseVector out(Precision::f64, 16384);
    Expr e = constant(0.5, leaf(x)) * elem_sin(leaf(x) + leaf(y));
    evaluate(Backend::scalar_ref(), e, out);  // warm: may compile a kernel
    std::uint64_t before = vector_alloc_count();
    evaluate(Backend::scalar_ref(), e, out);
    evaluate(Backend::parallel(0, 2), e, out);
    CHECK(vector_alloc_count() == before);
}
