#include <cstdio>
#include <numeric>

#include "fusevec/fluid.hpp"

namespace fusevec {

// ---------------------------------------------------------------------------
// Rational / EosSpec
// ---------------------------------------------------------------------------

Rational rational(long long num, long long den) {
    if (den == 0) throw ConfigError("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Rational{num, den};
}

std::string Rational::str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

Rational operator-(Rational a, Rational b) {
    return rational(a.num * b.den - b.num * a.den, a.den * b.den);
}

Rational operator/(Rational a, Rational b) {
    if (b.num == 0) throw ConfigError("rational division by zero");
    return rational(a.num * b.den, a.den * b.num);
}

bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }

EosSpec::EosSpec(Rational cp, Rational cv) : cp_(cp), cv_(cv) {
    if (cv_.num <= 0) throw ConfigError("cv must be positive");
    if ((cp_ - cv_).num <= 0) throw ConfigError("cp must exceed cv");
}

// ---------------------------------------------------------------------------
// Equation of state
// ---------------------------------------------------------------------------

namespace {

Rational gamma_minus_one(const EosSpec& eos) { return eos.R() / eos.cv(); }

}  // namespace

Expr eos_ideal_p(const Expr& rho, const Expr& e, const EosSpec& eos) {
    Expr rho_e = rho * e;
    return constant(gamma_minus_one(eos).value(), rho_e) * rho_e;
}

Expr eos_ideal_T(const Expr& rho, const Expr& e, const EosSpec& eos) {
    (void)rho;
    return e / constant(eos.cv().value(), e);
}

Expr IdealGasEos::p_rhoe(const Expr& rho, const Expr& e) const {
    return eos_ideal_p(rho, e, spec_);
}

Expr IdealGasEos::T_rhoe(const Expr& rho, const Expr& e) const {
    return eos_ideal_T(rho, e, spec_);
}

std::string IdealGasEos::describe() const {
    char gamma[32];
    std::snprintf(gamma, sizeof(gamma), "%g", spec_.gamma_value());
    return "IdealGas(cp=" + spec_.cp().str() + ", cv=" + spec_.cv().str() + ", gamma=" + gamma +
           ", R=" + spec_.R().str() + ")";
}

// ---------------------------------------------------------------------------
// Variable kinds and mapping
// ---------------------------------------------------------------------------

namespace {

VarKind momentum_axis(std::size_t i) {
    return static_cast<VarKind>(static_cast<int>(VarKind::MomentumX) + static_cast<int>(i));
}

VarKind velocity_axis(std::size_t i) {
    return static_cast<VarKind>(static_cast<int>(VarKind::VelocityX) + static_cast<int>(i));
}

void check_dim(std::size_t dim) {
    if (dim < 1 || dim > 3) throw ConfigError("dim must be 1, 2 or 3");
}

}  // namespace

std::vector<VarKind> formulation_vars(std::size_t dim, Formulation form) {
    check_dim(dim);
    std::vector<VarKind> vars;
    vars.reserve(dim + 2);
    vars.push_back(VarKind::Density);
    for (std::size_t i = 0; i < dim; ++i)
        vars.push_back(form == Formulation::Conservative ? momentum_axis(i) : velocity_axis(i));
    vars.push_back(form == Formulation::Conservative ? VarKind::TotalEnergy : VarKind::Pressure);
    return vars;
}

VarMap VarMap::standard() {
    VarMap vm;
    for (std::size_t dim = 1; dim <= 3; ++dim) {
        for (Formulation form : {Formulation::Conservative, Formulation::Primitive}) {
            std::size_t idx = 0;
            for (VarKind var : formulation_vars(dim, form)) vm.set(var, dim, form, idx++);
        }
    }
    return vm;
}

std::size_t VarMap::index(VarKind var, std::size_t dim, Formulation form) const {
    auto it = table_.find({var, dim, form});
    if (it == table_.end()) throw BadMap("variable map has no entry for this kind");
    return it->second;
}

void VarMap::set(VarKind var, std::size_t dim, Formulation form, std::size_t idx) {
    table_[{var, dim, form}] = idx;
}

void VarMap::check_bijective(std::size_t dim, Formulation form) const {
    std::vector<bool> seen(dim + 2, false);
    for (VarKind var : formulation_vars(dim, form)) {
        std::size_t idx = index(var, dim, form);
        if (idx >= dim + 2 || seen[idx])
            throw BadMap("variable map is not a bijection onto the argument positions");
        seen[idx] = true;
    }
}

const Expr& map_variable(const VarMap& vm, VarKind var, std::size_t dim, Formulation form,
                         const std::vector<Expr>& args) {
    std::size_t idx = vm.index(var, dim, form);
    if (idx >= args.size()) throw BadMap("variable map index exceeds the argument count");
    return args[idx];
}

// ---------------------------------------------------------------------------
// StateSet
// ---------------------------------------------------------------------------

StateSet::StateSet(EosSpec eos, std::size_t dim, Formulation form,
                   std::vector<Expr> canonical_fields)
    : eos_(eos), dim_(dim), form_(form), fields_(std::move(canonical_fields)) {
    check_dim(dim_);
    if (fields_.size() != dim_ + 2)
        throw ArityMismatch("a " + std::to_string(dim_) + "D state set needs " +
                            std::to_string(dim_ + 2) + " fields, got " +
                            std::to_string(fields_.size()));
    for (const Expr& f : fields_)
        if (!f.valid()) throw ArityMismatch("state field is empty");
}

const Expr& StateSet::field(std::size_t i) const {
    if (i >= fields_.size()) throw IndexOutOfRange("field index " + std::to_string(i));
    return fields_[i];
}

const Expr& StateSet::field(VarKind var) const {
    std::vector<VarKind> vars = formulation_vars(dim_, form_);
    for (std::size_t i = 0; i < vars.size(); ++i)
        if (vars[i] == var) return fields_[i];
    throw BadMap("variable kind is not part of this formulation");
}

BlockExpr StateSet::block() const {
    std::vector<BlockItem> items;
    items.reserve(fields_.size());
    for (const Expr& f : fields_) items.push_back(BlockItem(f));
    return BlockExpr(fields_.size(), 1, std::move(items));
}

namespace {

StateSet make_state(const EosSpec& eos, std::size_t dim, Formulation form,
                    std::vector<Expr> fields, const VarMap& vm) {
    check_dim(dim);
    if (fields.size() != dim + 2)
        throw ArityMismatch("a " + std::to_string(dim) + "D state needs " +
                            std::to_string(dim + 2) + " fields, got " +
                            std::to_string(fields.size()));
    vm.check_bijective(dim, form);
    std::vector<Expr> canonical;
    canonical.reserve(dim + 2);
    for (VarKind var : formulation_vars(dim, form))
        canonical.push_back(map_variable(vm, var, dim, form, fields));
    return StateSet(eos, dim, form, std::move(canonical));
}

}  // namespace

StateSet state_conservative(const EosSpec& eos, std::size_t dim, std::vector<Expr> fields,
                            const VarMap& vm) {
    return make_state(eos, dim, Formulation::Conservative, std::move(fields), vm);
}

StateSet state_primitive(const EosSpec& eos, std::size_t dim, std::vector<Expr> fields,
                         const VarMap& vm) {
    return make_state(eos, dim, Formulation::Primitive, std::move(fields), vm);
}

// ---------------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------------

namespace {

// sum of squares of the d momentum (or velocity) fields, left-associated
Expr sum_of_squares(const StateSet& u, VarKind first) {
    Expr acc;
    for (std::size_t i = 0; i < u.dim(); ++i) {
        VarKind var = static_cast<VarKind>(static_cast<int>(first) + static_cast<int>(i));
        Expr sq = u.field(var) * u.field(var);
        acc = acc.valid() ? acc + sq : sq;
    }
    return acc;
}

}  // namespace

Expr derived_p(const StateSet& u) {
    if (u.formulation() == Formulation::Primitive) return u.field(VarKind::Pressure);
    const Expr& rho = u.field(VarKind::Density);
    const Expr& rho_E = u.field(VarKind::TotalEnergy);
    Expr msq = sum_of_squares(u, VarKind::MomentumX);
    Expr kin = constant(0.5, msq) * (msq / rho);
    return constant(gamma_minus_one(u.eos()).value(), kin) * (rho_E - kin);
}

Expr derived_v_mag2(const StateSet& u) {
    if (u.formulation() == Formulation::Primitive) return sum_of_squares(u, VarKind::VelocityX);
    const Expr& rho = u.field(VarKind::Density);
    return sum_of_squares(u, VarKind::MomentumX) / (rho * rho);
}

StateSet convert(const StateSet& u, Formulation target) {
    if (u.formulation() == target) return u;

    const Expr& rho = u.field(VarKind::Density);
    std::vector<Expr> fields;
    fields.reserve(u.dim() + 2);
    fields.push_back(rho);  // pass-through, same expression

    if (target == Formulation::Primitive) {
        for (std::size_t i = 0; i < u.dim(); ++i)
            fields.push_back(u.field(momentum_axis(i)) / rho);
        fields.push_back(derived_p(u));
    } else {
        for (std::size_t i = 0; i < u.dim(); ++i)
            fields.push_back(rho * u.field(velocity_axis(i)));
        const Expr& p = u.field(VarKind::Pressure);
        Expr vsq = sum_of_squares(u, VarKind::VelocityX);
        Expr rho_E = p / constant(gamma_minus_one(u.eos()).value(), p) +
                     constant(0.5, vsq) * (rho * vsq);
        fields.push_back(rho_E);
    }
    return StateSet(u.eos(), u.dim(), target, std::move(fields));
}

BlockExpr inviscid_flux(const StateSet& u) {
    const std::size_t d = u.dim();
    const Expr& rho = u.field(VarKind::Density);

    std::vector<Expr> v(d), rho_v(d);
    Expr p, rho_E;
    if (u.formulation() == Formulation::Conservative) {
        for (std::size_t j = 0; j < d; ++j) {
            rho_v[j] = u.field(momentum_axis(j));  // row 0 reuses the fields themselves
            v[j] = rho_v[j] / rho;
        }
        p = derived_p(u);
        rho_E = u.field(VarKind::TotalEnergy);
    } else {
        for (std::size_t j = 0; j < d; ++j) {
            v[j] = u.field(velocity_axis(j));
            rho_v[j] = rho * v[j];
        }
        p = u.field(VarKind::Pressure);
        Expr vsq = sum_of_squares(u, VarKind::VelocityX);
        rho_E = p / constant(gamma_minus_one(u.eos()).value(), p) +
                constant(0.5, vsq) * (rho * vsq);
    }

    std::vector<BlockItem> items;
    items.reserve((d + 2) * d);
    for (std::size_t j = 0; j < d; ++j) items.push_back(BlockItem(rho_v[j]));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            Expr f = rho_v[i] * v[j];
            if (i == j) f = f + p;
            items.push_back(BlockItem(f));
        }
    }
    for (std::size_t j = 0; j < d; ++j) items.push_back(BlockItem(v[j] * (rho_E + p)));

    return BlockExpr(d + 2, d, std::move(items));
}

}  // namespace fusevec
