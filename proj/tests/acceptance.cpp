// Acceptance gate. Each numbered criterion prints one [PASS]/[FAIL] line;
// the exit code is nonzero if any criterion fails. Run via ctest or directly.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fusevec/bench.hpp"
#include "fusevec/fluid.hpp"
#include "oracle.hpp"

using namespace fusevec;
using namespace testutil;

namespace {

int failures = 0;

void run(int id, const std::string& label, const std::function<std::string()>& fn) {
    try {
        std::string detail = fn();
        std::printf("[PASS] %d %s%s%s\n", id, label.c_str(), detail.empty() ? "" : ": ",
                    detail.c_str());
    } catch (const std::exception& e) {
        std::printf("[FAIL] %d %s: %s\n", id, label.c_str(), e.what());
        ++failures;
    }
    std::fflush(stdout);
}

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string format(const char* fmt, double a, double b = 0, double c = 0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), fmt, a, b, c);
    return buf;
}

// --------------------------------------------------------------------------
// 1. zero overhead
// --------------------------------------------------------------------------

std::string check_zero_overhead() {
    const double gate = 1.10;
    double ratio[2];
    Precision precs[2] = {Precision::f64, Precision::f32};
    for (int k = 0; k < 2; ++k) {
        BenchConfig cfg;
        cfg.suite = "micro";
        cfg.sizes = {1u << 20};
        cfg.reps = 0;  // auto, >= 200 ms of samples
        cfg.precision = precs[k];
        auto recs = run_micro(cfg);
        ratio[k] = recs.at(0).overhead_ratio;
    }
    if (ratio[0] > gate) fail(format("f64 overhead ratio %.4f exceeds %.2f", ratio[0], gate));
    if (ratio[1] > gate) fail(format("f32 overhead ratio %.4f exceeds %.2f", ratio[1], gate));
    return format("n=2^20 ratios f64 %.4f, f32 %.4f (gate %.2f)", ratio[0], ratio[1], gate);
}

// --------------------------------------------------------------------------
// 2. fusion: zero intermediate vector allocations
// --------------------------------------------------------------------------

struct ConservativeFields {
    DenseVector rho, mx, my, mz, rho_E;
};

ConservativeFields make_fields(std::size_t n) {
    ConservativeFields f{DenseVector(Precision::f64, n), DenseVector(Precision::f64, n),
                         DenseVector(Precision::f64, n), DenseVector(Precision::f64, n),
                         DenseVector(Precision::f64, n)};
    for (std::size_t i = 0; i < n; ++i) {
        double rho = 1.0 + 0.1 * std::sin(6.283185307179586 * double(i) / double(n));
        f.rho.set(i, rho);
        f.mx.set(i, rho * 0.1);
        f.my.set(i, rho * 0.2);
        f.mz.set(i, rho * 0.3);
        f.rho_E.set(i, 2.5 + 0.5 * rho * 0.14);
    }
    return f;
}

std::string check_fusion_allocs() {
    // Both evaluator paths: interpreted (4096) and compiled (16384).
    for (std::size_t n : {4096ul, 16384ul}) {
        SplitMix64 rng(n);
        DenseVector x = make_vec(Precision::f64, n, rng);
        DenseVector y = make_vec(Precision::f64, n, rng);
        Expr axpy_sin = constant(0.5, leaf(y)) * elem_sin(leaf(x) + leaf(y));

        ConservativeFields f = make_fields(n);
        StateSet u = state_conservative(EosSpec(), 3, f.rho, f.mx, f.my, f.mz, f.rho_E);
        Expr vmag2 = derived_v_mag2(u);
        DenseVector vdest(Precision::f64, n);

        StateSet prim = convert(u, Formulation::Primitive);
        std::vector<DenseVector> pdest;
        for (std::size_t i = 0; i < prim.field_count(); ++i)
            pdest.emplace_back(Precision::f64, n);

        BlockExpr flux = inviscid_flux(u);
        BlockVectorGrid fdest(5, 3, Precision::f64, n);

        Backend be = Backend::scalar_ref();
        evaluate(be, axpy_sin, y);  // warm-up compiles any kernels up front
        evaluate(be, vmag2, vdest);
        for (std::size_t i = 0; i < prim.field_count(); ++i)
            evaluate(be, prim.field(i), pdest[i]);
        evaluate_block(be, flux, fdest);

        std::uint64_t before = vector_alloc_count();
        evaluate(be, axpy_sin, y);  // (a) y = 0.5 sin(x+y), aliased
        evaluate(be, vmag2, vdest);  // (b)
        for (std::size_t i = 0; i < prim.field_count(); ++i)
            evaluate(be, prim.field(i), pdest[i]);  // (c)
        evaluate_block(be, flux, fdest);  // (d) every flux item
        std::uint64_t delta = vector_alloc_count() - before;
        if (delta != 0)
            fail(format("n=%.0f: %.0f intermediate vector allocations, expected 0", double(n),
                        double(delta)));
    }
    return "0 allocations across (a) axpy-sin (b) v_mag2 (c) conversion (d) flux items";
}

// --------------------------------------------------------------------------
// 3. codegen golden
// --------------------------------------------------------------------------

std::string check_codegen_golden() {
    DenseVector x(Precision::f32, 8), y(Precision::f32, 8);
    Expr e = 0.5 * elem_sin(tag(0, leaf(x)) + tag(1, leaf(y)));
    KernelSource k = generate_kernel(e, 1, Dialect::OpenCL);

    const std::string golden_path = std::string(FUSEVEC_TEST_DIR) + "/golden/axpy_sin_f32.cl";
    std::ifstream in(golden_path, std::ios::binary);
    if (!in) fail("cannot open golden file " + golden_path);
    std::ostringstream os;
    os << in.rdbuf();
    const std::string golden = os.str();

    if (k.text != golden) fail("generated kernel does not byte-match the golden file");

    auto count = [&](const std::string& needle) {
        std::size_t c = 0;
        for (std::size_t p = 0; (p = golden.find(needle, p)) != std::string::npos; ++p) ++c;
        return c;
    };
    if (count("for") != 1) fail("golden file must contain exactly one loop");
    if (count("] = ") != 1) fail("golden file must contain exactly one assignment");
    if (count("5.0000000000000000e-01f") != 1)
        fail("golden file must carry the f32 constant 5.0000000000000000e-01f");
    if (count("global float *") != 2) fail("golden file must declare two pointer parameters");
    return "byte-match; 1 loop, 1 assignment, f32 constant, 2 pointer params";
}

// --------------------------------------------------------------------------
// 4. backend equivalence on random trees
// --------------------------------------------------------------------------

std::string check_backend_equivalence() {
    const std::size_t lens[4] = {1, 2, 257, 1024};
    std::vector<std::vector<DenseVector>> pools(4);
    SplitMix64 seed_rng(0xACCE55);
    for (int k = 0; k < 4; ++k) {
        pools[k].push_back(make_vec(Precision::f64, lens[k], seed_rng));
        pools[k].push_back(make_vec(Precision::f32, lens[k], seed_rng));
        pools[k].push_back(make_vec(Precision::f64, lens[k], seed_rng));
    }

    Backend par = Backend::parallel(128, 3);
    SplitMix64 rng(0xE0E0);
    for (int t = 0; t < 1000; ++t) {
        int k = t % 4;
        std::size_t n = lens[k];
        TreeGen gen{&pools[k], true};
        Expr e = gen.gen(rng, 5);
        Precision prec = e.result_precision();

        DenseVector a(prec, n), b(prec, n);
        evaluate(Backend::scalar_ref(), e, a);
        evaluate(par, e, b);
        if (!bitwise_equal(a, b))
            fail("tree " + std::to_string(t) + ": parallel differs bitwise from scalar_ref\n" +
                 pretty_string(e));

        const int dest_tag = 99;
        KernelSource src = generate_kernel(e, dest_tag, Dialect::OpenCL);
        DenseVector dest_seed(prec, n);
        std::map<int, const DenseVector*> inputs;
        for (const auto& [id, p] : src.params) {
            (void)p;
            inputs[id] = id == dest_tag ? &dest_seed : &pools[k][std::size_t(id)];
        }
        DenseVector c = interpret_kernel(src, inputs);
        if (!vectors_close(c, a, 1e-6))
            fail("tree " + std::to_string(t) +
                 ": interpret_kernel deviates beyond 1e-6 relative\n" + pretty_string(e));
    }
    return "1000 trees: parallel bitwise-equal, kernel interpreter within 1e-6";
}

// --------------------------------------------------------------------------
// 5. thermodynamic round trip and identities
// --------------------------------------------------------------------------

struct RandomState {
    std::vector<DenseVector> fields;  // conservative: rho, m..., rhoE
};

RandomState random_state(std::size_t dim, std::size_t n, SplitMix64& rng) {
    RandomState st;
    st.fields.assign(dim + 2, DenseVector(Precision::f64, n));
    for (std::size_t i = 0; i < n; ++i) {
        double rho = rng.uniform(0.5, 2.0);
        double p = rng.uniform(0.5, 2.0);
        double vsq = 0;
        st.fields[0].set(i, rho);
        for (std::size_t j = 0; j < dim; ++j) {
            double v = rng.uniform(-1.0, 1.0);
            vsq += v * v;
            st.fields[1 + j].set(i, rho * v);
        }
        st.fields[dim + 1].set(i, p / 0.4 + 0.5 * rho * vsq);
    }
    return st;
}

std::vector<Expr> leaves_of(const std::vector<DenseVector>& vs) {
    std::vector<Expr> out;
    for (const auto& v : vs) out.push_back(leaf(v));
    return out;
}

DenseVector eval_f64(const Expr& e, std::size_t n) {
    DenseVector out(Precision::f64, n);
    evaluate(Backend::scalar_ref(), e, out);
    return out;
}

std::string check_thermodynamics() {
    const std::size_t n = 128;
    const double tol = 1e-12;
    IdealGasEos gas;
    SplitMix64 rng(0x7E6);
    for (std::size_t dim = 1; dim <= 3; ++dim) {
        for (int inst = 0; inst < 100; ++inst) {
            RandomState st = random_state(dim, n, rng);
            StateSet uc = state_conservative(gas.spec(), dim, leaves_of(st.fields));
            StateSet back = convert(convert(uc, Formulation::Primitive),
                                    Formulation::Conservative);
            for (std::size_t fidx = 0; fidx < dim + 2; ++fidx) {
                DenseVector got = eval_f64(back.field(fidx), n);
                for (std::size_t i = 0; i < n; ++i) {
                    double want = st.fields[fidx].at(i);
                    if (!scalar_close(got.at(i), want, tol))
                        fail(format("d=%.0f: round-trip field drifted: got %.17g want %.17g",
                                    double(dim), got.at(i), want));
                }
            }

            // p = rho R T and e = cv T, with T from the EOS interface.
            Expr rho = uc.field(VarKind::Density);
            Expr e_int = (uc.field(VarKind::TotalEnergy) -
                          constant(0.5, rho) * (rho * derived_v_mag2(uc))) /
                         rho;
            DenseVector p = eval_f64(derived_p(uc), n);
            DenseVector T = eval_f64(gas.T_rhoe(rho, e_int), n);
            DenseVector e_val = eval_f64(e_int, n);
            const double R = gas.spec().R_value();
            const double cv = gas.spec().cv().value();
            for (std::size_t i = 0; i < n; ++i) {
                if (!scalar_close(p.at(i), st.fields[0].at(i) * R * T.at(i), tol))
                    fail("p = rho R T identity drifted beyond 1e-12");
                if (!scalar_close(e_val.at(i), cv * T.at(i), tol))
                    fail("e = cv T identity drifted beyond 1e-12");
            }
        }
    }
    return "100 instances per d in {1,2,3}: round trip and p=rhoRT, e=cvT within 1e-12";
}

// --------------------------------------------------------------------------
// 6. flux oracle
// --------------------------------------------------------------------------

double flux_oracle_at(const RandomState& st, std::size_t dim, std::size_t r, std::size_t c,
                      std::size_t i) {
    double rho = st.fields[0].at(i);
    double m[3] = {0, 0, 0};
    for (std::size_t j = 0; j < dim; ++j) m[j] = st.fields[1 + j].at(i);
    double rho_E = st.fields[dim + 1].at(i);
    double msq = 0;
    for (std::size_t j = 0; j < dim; ++j) msq += m[j] * m[j];
    double p = 0.4 * (rho_E - 0.5 * (msq / rho));
    double v_c = m[c] / rho;
    if (r == 0) return m[c];
    if (r <= dim) return m[r - 1] * v_c + (r - 1 == c ? p : 0.0);
    return v_c * (rho_E + p);
}

std::string check_flux_oracle() {
    const std::size_t n = 64;
    const double tol = 1e-12;
    SplitMix64 rng(0xF1);
    for (std::size_t dim = 1; dim <= 3; ++dim) {
        for (int inst = 0; inst < 100; ++inst) {
            RandomState st = random_state(dim, n, rng);
            StateSet u = state_conservative(EosSpec(), dim, leaves_of(st.fields));
            BlockExpr flux = inviscid_flux(u);
            BlockVectorGrid dest(dim + 2, dim, Precision::f64, n);
            evaluate_block(Backend::scalar_ref(), flux, dest);
            for (std::size_t r = 0; r < dim + 2; ++r)
                for (std::size_t c = 0; c < dim; ++c)
                    for (std::size_t i = 0; i < n; ++i) {
                        double want = flux_oracle_at(st, dim, r, c, i);
                        if (!scalar_close(dest.item(r, c).at(i), want, tol))
                            fail(format("d=%.0f flux(%.0f,...) deviates beyond 1e-12",
                                        double(dim), double(r)));
                    }
        }
    }

    // Worked instance: rho=2, m=(2,4,4), rhoE=14 -> column 0 = [2,4,4,4,16].
    DenseVector rho({2.0}), mx({2.0}), my({4.0}), mz({4.0}), rhoE({14.0});
    StateSet u = state_conservative(EosSpec(), 3, rho, mx, my, mz, rhoE);
    BlockExpr flux = inviscid_flux(u);
    const double want[5] = {2, 4, 4, 4, 16};
    for (std::size_t r = 0; r < 5; ++r) {
        DenseVector got = eval_f64(flux.item(r, 0).expr(), 1);
        if (!scalar_close(got.at(0), want[r], tol))
            fail(format("worked instance row %.0f: got %.17g", double(r), got.at(0)));
    }
    return "oracle match for d in {1,2,3} x 100 instances; worked column [2,4,4,4,16]";
}

// --------------------------------------------------------------------------
// 7. block algebra
// --------------------------------------------------------------------------

std::string check_block_algebra() {
    const double tol = 1e-12;
    SplitMix64 rng(0xB10C);
    for (std::size_t br = 1; br <= 3; ++br)
        for (std::size_t bc = 1; bc <= 3; ++bc)
            for (std::size_t n = 1; n <= 8; ++n)
                for (std::size_t m = 1; m <= 8; ++m) {
                    std::vector<SparseMatrix> blocks;
                    for (std::size_t i = 0; i < br * bc; ++i) {
                        std::vector<Triplet> trips;
                        for (std::size_t r = 0; r < n; ++r)
                            for (std::size_t c = 0; c < m; ++c)
                                if (rng.uniform() < 0.5) trips.push_back({r, c, rng.uniform(-2.0, 2.0)});
                        blocks.emplace_back(n, m, trips);
                    }
                    BlockMatrix mat(br, bc, std::move(blocks));

                    std::vector<DenseVector> x;
                    std::vector<BlockItem> xi;
                    for (std::size_t c = 0; c < bc; ++c)
                        x.push_back(make_vec(Precision::f64, m, rng, -2.0, 2.0));
                    for (auto& v : x) xi.push_back(BlockItem(v));

                    std::vector<DenseVector> ydata;
                    for (std::size_t r = 0; r < br; ++r) ydata.emplace_back(Precision::f64, n);
                    BlockColVector y(std::move(ydata));
                    evaluate_block(Backend::scalar_ref(), block_matvec(mat, BlockExpr(bc, 1, std::move(xi))),
                                   y);

                    for (std::size_t r = 0; r < br; ++r)
                        for (std::size_t i = 0; i < n; ++i) {
                            double want = 0;
                            for (std::size_t c = 0; c < bc; ++c)
                                for (std::size_t j = 0; j < m; ++j)
                                    want += mat.item(r, c).at(i, j) * x[c].at(j);
                            if (!scalar_close(y.get(r).at(i), want, tol))
                                fail(format("matvec %.0fx%.0f blocks deviates beyond 1e-12",
                                            double(br), double(bc)));
                        }
                }

    // Identity blocks: y = [I I; I I] [sin(x0+x1); cos(x0-x1)] at x=0 is all ones.
    const std::size_t n = 8;
    std::vector<Triplet> diag;
    for (std::size_t i = 0; i < n; ++i) diag.push_back({i, i, 1.0});
    SparseMatrix ident(n, n, diag);
    BlockMatrixView mat(2, 2, {&ident, &ident, &ident, &ident});
    DenseVector x0(Precision::f64, n), x1(Precision::f64, n);
    BlockExpr rhs = make_block_expr(2, 1, elem_sin(leaf(x0) + leaf(x1)),
                                    elem_cos(leaf(x0) - leaf(x1)));
    BlockColVector y({DenseVector(Precision::f64, n), DenseVector(Precision::f64, n)});
    evaluate_block(Backend::scalar_ref(), block_matvec(mat, rhs), y);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t i = 0; i < n; ++i)
            if (y.get(r).at(i) != 1.0) fail("identity-blocks case is not all ones");

    return "exhaustive shapes <= 3x3, dims <= 8 match dense oracle; identity case all ones";
}

// --------------------------------------------------------------------------
// 8. CSV emitter stands in for absolute timing tables
// --------------------------------------------------------------------------

std::string check_csv_emitter() {
    BenchConfig cfg;
    cfg.suite = "micro";
    cfg.sizes = {1024};
    cfg.reps = 3;
    auto recs = run_micro(cfg);
    std::ostringstream os;
    write_csv(recs, os);
    const std::string text = os.str();
    if (text.find("suite,backend,precision,n,median_ns,mflops,bandwidth_mbs,overhead_ratio\n") ==
        std::string::npos)
        fail("CSV header missing");
    if (text.find("micro,scalar,f64,1024,") == std::string::npos) fail("CSV row missing");
    return "absolute timings are hardware-bound; CSV emitter covers the record shapes";
}

}  // namespace

int main() {
    run(1, "zero-overhead ratio", check_zero_overhead);
    run(2, "fusion: no intermediate allocations", check_fusion_allocs);
    run(3, "codegen golden file", check_codegen_golden);
    run(4, "backend equivalence", check_backend_equivalence);
    run(5, "thermodynamic identities", check_thermodynamics);
    run(6, "inviscid flux oracle", check_flux_oracle);
    run(7, "block matvec algebra", check_block_algebra);
    run(8, "benchmark CSV emitter", check_csv_emitter);

    if (failures) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
