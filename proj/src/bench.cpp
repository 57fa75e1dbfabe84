#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <thread>

#include "fusevec/bench.hpp"
#include "fusevec/fluid.hpp"

namespace fusevec {

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
double time_ns(F&& fn) {
    auto t0 = Clock::now();
    fn();
    auto t1 = Clock::now();
    return static_cast<double>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

const char* backend_label(BackendKind k) {
    return k == BackendKind::Parallel ? "parallel" : "scalar";
}

Backend pick_backend(const BenchConfig& cfg) {
    if (cfg.backend == BackendKind::Parallel) {
        unsigned w = cfg.workers ? cfg.workers : std::thread::hardware_concurrency();
        return Backend::parallel(0, w ? w : 1);
    }
    return Backend::scalar_ref();
}

int decide_reps(const BenchConfig& cfg, double pair_ns) {
    if (cfg.reps > 0) return cfg.reps;
    double want = 200e6;  // >= 200 ms per size
    double r = std::ceil(want / std::max(pair_ns, 1.0));
    return static_cast<int>(std::clamp(r, 3.0, 2e6));
}

// Smooth positive profile: rho = 1 + 0.1 sin(2 pi i / n), v = (0.1, 0.2, 0.3),
// p = 1, rhoE from the perfect-gas closure.
struct Profile {
    DenseVector rho, mx, my, mz, rho_E;
};

Profile make_profile(std::size_t n, Precision prec) {
    Profile f{DenseVector(prec, n), DenseVector(prec, n), DenseVector(prec, n),
              DenseVector(prec, n), DenseVector(prec, n)};
    const double vx = 0.1, vy = 0.2, vz = 0.3, p = 1.0;
    const double gm1 = 0.4;
    const double two_pi = 6.283185307179586;
    for (std::size_t i = 0; i < n; ++i) {
        double rho = 1.0 + 0.1 * std::sin(two_pi * static_cast<double>(i) /
                                          static_cast<double>(n));
        f.rho.set(i, rho);
        f.mx.set(i, rho * vx);
        f.my.set(i, rho * vy);
        f.mz.set(i, rho * vz);
        f.rho_E.set(i, p / gm1 + 0.5 * rho * (vx * vx + vy * vy + vz * vz));
    }
    return f;
}

void check_no_alloc(std::uint64_t before, const char* where) {
    if (vector_alloc_count() != before)
        throw Error(std::string("vector allocation inside the timed region of ") + where);
}

bool same_bits(const DenseVector& a, const DenseVector& b) {
    return a.precision() == b.precision() && a.size() == b.size() &&
           std::memcmp(a.raw(), b.raw(), a.byte_size()) == 0;
}

// Tree-derived accounting: one flop per op node, reads = distinct leaves.
std::size_t count_ops(const ExprNode& n) {
    std::size_t c = (n.kind == NodeKind::Unary || n.kind == NodeKind::Binary) ? 1 : 0;
    if (n.left) c += count_ops(*n.left);
    if (n.right) c += count_ops(*n.right);
    return c;
}

void collect_leaves(const ExprNode& n, std::set<const DenseVector*>& out) {
    if (n.kind == NodeKind::Leaf) out.insert(n.vec);
    if (n.left) collect_leaves(*n.left, out);
    if (n.right) collect_leaves(*n.right, out);
}

}  // namespace

std::vector<std::size_t> BenchConfig::default_sizes() {
    std::vector<std::size_t> s;
    for (std::size_t n = 1024; n <= 16777216; n *= 2) s.push_back(n);
    return s;
}

void BenchConfig::validate() const {
    if (suite != "micro" && suite != "miniapp")
        throw ConfigError("unknown suite '" + suite + "'");
    if (backend == BackendKind::Codegen)
        throw ConfigError("the codegen backend does not execute; pick scalar or parallel");
    if (sizes.empty()) throw ConfigError("no sizes given");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1]) throw ConfigError("sizes must be strictly increasing");
    if (reps != 0 && reps < 3) throw ConfigError("reps must be at least 3");
}

// ---------------------------------------------------------------------------
// micro: y = (mx^2 + my^2 + mz^2) / (rho^2)
// ---------------------------------------------------------------------------

namespace {

template <class T>
void hand_v_mag2(const Profile& f, DenseVector& y);

template <>
void hand_v_mag2<double>(const Profile& f, DenseVector& y) {
    const double* rho = f.rho.f64().data();
    const double* mx = f.mx.f64().data();
    const double* my = f.my.f64().data();
    const double* mz = f.mz.f64().data();
    double* out = y.f64().data();
    for (std::size_t i = 0, n = y.size(); i < n; ++i)
        out[i] = (mx[i] * mx[i] + my[i] * my[i] + mz[i] * mz[i]) / (rho[i] * rho[i]);
}

template <>
void hand_v_mag2<float>(const Profile& f, DenseVector& y) {
    const float* rho = f.rho.f32().data();
    const float* mx = f.mx.f32().data();
    const float* my = f.my.f32().data();
    const float* mz = f.mz.f32().data();
    float* out = y.f32().data();
    for (std::size_t i = 0, n = y.size(); i < n; ++i)
        out[i] = (mx[i] * mx[i] + my[i] * my[i] + mz[i] * mz[i]) / (rho[i] * rho[i]);
}

}  // namespace

std::vector<BenchRecord> run_micro(const BenchConfig& cfg) {
    cfg.validate();
    Backend be = pick_backend(cfg);
    std::vector<BenchRecord> out;

    for (std::size_t n : cfg.sizes) {
        Profile f = make_profile(n, cfg.precision);
        StateSet u = state_conservative(EosSpec(), 3, f.rho, f.mx, f.my, f.mz, f.rho_E);
        Expr expr = derived_v_mag2(u);
        DenseVector y(cfg.precision, n), y_hand(cfg.precision, n);

        auto generic = [&] { evaluate(be, expr, y); };
        auto hand = [&] {
            if (cfg.precision == Precision::f64)
                hand_v_mag2<double>(f, y_hand);
            else
                hand_v_mag2<float>(f, y_hand);
        };

        // warm-up, also the bitwise oracle check
        generic();
        hand();
        if (!same_bits(y, y_hand))
            throw OracleMismatch("micro: generic and hand-fused results differ at n=" +
                                 std::to_string(n));

        int reps = decide_reps(cfg, time_ns(generic) + time_ns(hand));
        std::vector<double> tg, th;
        tg.reserve(reps);
        th.reserve(reps);
        std::uint64_t alloc0 = vector_alloc_count();
        for (int k = 0; k < reps; ++k) {  // interleaved ABAB
            tg.push_back(time_ns(generic));
            th.push_back(time_ns(hand));
        }
        check_no_alloc(alloc0, "micro");

        double med_g = median(tg), med_h = median(th);
        BenchRecord r;
        r.suite = "micro";
        r.backend = backend_label(cfg.backend);
        r.precision = cfg.precision;
        r.n = n;
        r.median_ns = med_g;
        // 6 flops (3 mul + 2 add + 1 div) and 5 reads + 1 write per element
        r.mflops = 6.0 * static_cast<double>(n) / med_g * 1000.0;
        r.bandwidth_mbs = 6.0 * static_cast<double>(n * scalar_width(cfg.precision)) / med_g *
                          1000.0;
        r.overhead_ratio = med_g / med_h;
        r.reps = reps;
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// miniapp: full 5x3 inviscid flux
// ---------------------------------------------------------------------------

namespace {

template <class T>
void hand_flux(const Profile& f, BlockVectorGrid& dest);

// One fused loop per output component, mirroring what the generic evaluator
// does item by item (each item recomputes v and p inline).
template <class T>
void hand_flux_impl(const T* rho, const T* mx, const T* my, const T* mz, const T* rho_E,
                    BlockVectorGrid& dest, std::size_t n) {
    const T gm1 = static_cast<T>(0.4);
    const T half = static_cast<T>(0.5);
    const T* m[3] = {mx, my, mz};

    auto out = [&](std::size_t r, std::size_t c) {
        if constexpr (std::is_same_v<T, double>)
            return dest.item(r, c).f64().data();
        else
            return dest.item(r, c).f32().data();
    };

    for (std::size_t j = 0; j < 3; ++j) {
        T* o = out(0, j);
        const T* mj = m[j];
        for (std::size_t i = 0; i < n; ++i) o[i] = mj[i];
    }
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t j = 0; j < 3; ++j) {
            T* o = out(1 + r, j);
            const T* mr = m[r];
            const T* mj = m[j];
            if (r == j) {
                for (std::size_t i = 0; i < n; ++i) {
                    T msq = mx[i] * mx[i] + my[i] * my[i] + mz[i] * mz[i];
                    T kin = half * (msq / rho[i]);
                    T p = gm1 * (rho_E[i] - kin);
                    o[i] = mr[i] * (mj[i] / rho[i]) + p;
                }
            } else {
                for (std::size_t i = 0; i < n; ++i) o[i] = mr[i] * (mj[i] / rho[i]);
            }
        }
    }
    for (std::size_t j = 0; j < 3; ++j) {
        T* o = out(4, j);
        const T* mj = m[j];
        for (std::size_t i = 0; i < n; ++i) {
            T msq = mx[i] * mx[i] + my[i] * my[i] + mz[i] * mz[i];
            T kin = half * (msq / rho[i]);
            T p = gm1 * (rho_E[i] - kin);
            o[i] = (mj[i] / rho[i]) * (rho_E[i] + p);
        }
    }
}

template <>
void hand_flux<double>(const Profile& f, BlockVectorGrid& dest) {
    hand_flux_impl(f.rho.f64().data(), f.mx.f64().data(), f.my.f64().data(), f.mz.f64().data(),
                   f.rho_E.f64().data(), dest, f.rho.size());
}

template <>
void hand_flux<float>(const Profile& f, BlockVectorGrid& dest) {
    hand_flux_impl(f.rho.f32().data(), f.mx.f32().data(), f.my.f32().data(), f.mz.f32().data(),
                   f.rho_E.f32().data(), dest, f.rho.size());
}

// Element-wise flux oracle in plain double arithmetic.
double flux_oracle(const Profile& f, std::size_t r, std::size_t c, std::size_t i) {
    double rho = f.rho.at(i);
    double m[3] = {f.mx.at(i), f.my.at(i), f.mz.at(i)};
    double rho_E = f.rho_E.at(i);
    double msq = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
    double p = 0.4 * (rho_E - 0.5 * (msq / rho));
    double v_c = m[c] / rho;
    if (r == 0) return m[c];
    if (r <= 3) return m[r - 1] * v_c + (r - 1 == c ? p : 0.0);
    return v_c * (rho_E + p);
}

}  // namespace

std::vector<BenchRecord> run_miniapp(const BenchConfig& cfg) {
    cfg.validate();
    Backend be = pick_backend(cfg);
    std::vector<BenchRecord> out;

    for (std::size_t n : cfg.sizes) {
        Profile f = make_profile(n, cfg.precision);
        StateSet u = state_conservative(EosSpec(), 3, f.rho, f.mx, f.my, f.mz, f.rho_E);
        BlockExpr flux = inviscid_flux(u);
        BlockVectorGrid dest(5, 3, cfg.precision, n);
        BlockVectorGrid dest_hand(5, 3, cfg.precision, n);

        auto generic = [&] { evaluate_block(be, flux, dest); };
        auto hand = [&] {
            if (cfg.precision == Precision::f64)
                hand_flux<double>(f, dest_hand);
            else
                hand_flux<float>(f, dest_hand);
        };

        generic();
        hand();

        // oracle check once per size
        double tol = cfg.precision == Precision::f64 ? 1e-12 : 1e-6;
        for (std::size_t r = 0; r < 5; ++r) {
            for (std::size_t c = 0; c < 3; ++c) {
                for (std::size_t i = 0; i < n; i += (n > 256 ? n / 256 : 1)) {
                    double want = flux_oracle(f, r, c, i);
                    double got = dest.item(r, c).at(i);
                    double scale = std::max(1.0, std::fabs(want));
                    if (std::fabs(got - want) > tol * scale)
                        throw OracleMismatch("miniapp: flux(" + std::to_string(r) + "," +
                                             std::to_string(c) + ")[" + std::to_string(i) +
                                             "] = " + std::to_string(got) + ", oracle " +
                                             std::to_string(want));
                }
            }
        }

        // the two executing backends must agree bitwise
        {
            BlockVectorGrid dest_other(5, 3, cfg.precision, n);
            Backend other = cfg.backend == BackendKind::Parallel
                                ? Backend::scalar_ref()
                                : Backend::parallel(0, std::max(2u, std::thread::hardware_concurrency()));
            evaluate_block(other, flux, dest_other);
            for (std::size_t i = 0; i < 15; ++i)
                if (!same_bits(dest.get(i), dest_other.get(i)))
                    throw OracleMismatch("miniapp: scalar and parallel backends disagree at n=" +
                                         std::to_string(n));
        }

        // accounting from the trees themselves
        double flops_per_elem = 0;
        double bytes_per_elem = 0;
        for (std::size_t i = 0; i < 15; ++i) {
            const Expr e = flux.get(i).as_expr();
            flops_per_elem += static_cast<double>(count_ops(e.node()));
            std::set<const DenseVector*> leaves;
            collect_leaves(e.node(), leaves);
            bytes_per_elem += static_cast<double>((leaves.size() + 1) *
                                                  scalar_width(cfg.precision));
        }

        int reps = decide_reps(cfg, time_ns(generic) + time_ns(hand));
        std::vector<double> tg, th;
        tg.reserve(reps);
        th.reserve(reps);
        std::uint64_t alloc0 = vector_alloc_count();
        for (int k = 0; k < reps; ++k) {
            tg.push_back(time_ns(generic));
            th.push_back(time_ns(hand));
        }
        check_no_alloc(alloc0, "miniapp");

        double med_g = median(tg), med_h = median(th);
        BenchRecord r;
        r.suite = "miniapp";
        r.backend = backend_label(cfg.backend);
        r.precision = cfg.precision;
        r.n = n;
        r.median_ns = med_g;
        r.mflops = flops_per_elem * static_cast<double>(n) / med_g * 1000.0;
        r.bandwidth_mbs = bytes_per_elem * static_cast<double>(n) / med_g * 1000.0;
        r.overhead_ratio = med_g / med_h;
        r.reps = reps;
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// codegen
// ---------------------------------------------------------------------------

void run_codegen(const std::string& expr_name, const std::string& out_path) {
    KernelSource k;
    if (expr_name == "axpy-sin") {
        DenseVector x(Precision::f32, 8), y(Precision::f32, 8);
        Expr e = 0.5 * elem_sin(tag(0, leaf(x)) + tag(1, leaf(y)));
        k = generate_kernel(e, 1, Dialect::OpenCL);
    } else if (expr_name == "v-mag2") {
        DenseVector rho(Precision::f64, 8), mx(Precision::f64, 8), my(Precision::f64, 8),
            mz(Precision::f64, 8), rho_E(Precision::f64, 8);
        StateSet u = state_conservative(EosSpec(), 3, tag(0, leaf(rho)), tag(1, leaf(mx)),
                                        tag(2, leaf(my)), tag(3, leaf(mz)), tag(4, leaf(rho_E)));
        k = generate_kernel(derived_v_mag2(u), 5, Dialect::OpenCL);
    } else if (expr_name == "flux-col0") {
        DenseVector rho(Precision::f64, 8), mx(Precision::f64, 8), my(Precision::f64, 8),
            mz(Precision::f64, 8), rho_E(Precision::f64, 8);
        StateSet u = state_conservative(EosSpec(), 3, tag(0, leaf(rho)), tag(1, leaf(mx)),
                                        tag(2, leaf(my)), tag(3, leaf(mz)), tag(4, leaf(rho_E)));
        BlockExpr flux = inviscid_flux(u);
        k = generate_kernel(flux.item(4, 0).expr(), 5, Dialect::OpenCL);
    } else {
        throw UnknownExpression("no built-in expression named '" + expr_name + "'");
    }

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error("cannot open " + out_path + " for writing");
    out << k.text;
    if (!out) throw Error("write error on " + out_path);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_csv(const std::vector<BenchRecord>& records, std::ostream& os) {
    os << "# micro accounting: flops_per_element=6 (3 mul + 2 add + 1 div);"
          " bytes_per_element=(5 reads + 1 write) * scalar_width\n";
    os << "# miniapp accounting: tree-derived; one flop per op node,"
          " reads = distinct leaves per item, plus one write per item\n";
    os << "suite,backend,precision,n,median_ns,mflops,bandwidth_mbs,overhead_ratio\n";
    char buf[160];
    for (const BenchRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%.3f,%.3f,%.3f,%.4f", r.median_ns, r.mflops,
                      r.bandwidth_mbs, r.overhead_ratio);
        os << r.suite << ',' << r.backend << ',' << precision_name(r.precision) << ',' << r.n
           << ',' << buf << '\n';
    }
}

void write_csv(const std::vector<BenchRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_csv(records, out);
    if (!out) throw Error("write error on " + path);
}

}  // namespace fusevec
