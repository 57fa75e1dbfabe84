#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "fusevec/block.hpp"
#include "fusevec/expr.hpp"

namespace fusevec {

/// Exact fraction, for heat capacities given as ratios.
struct Rational {
    long long num = 0;
    long long den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;
};

Rational rational(long long num, long long den = 1);
Rational operator-(Rational a, Rational b);
Rational operator/(Rational a, Rational b);
bool operator==(Rational a, Rational b);

/// Ideal-gas heat capacities; gamma and R are derived exactly. Defaults to
/// the diatomic perfect gas cp=7/2, cv=5/2 (gamma=1.4, R=1).
class EosSpec {
  public:
    EosSpec() : EosSpec(rational(7, 2), rational(5, 2)) {}
    EosSpec(Rational cp, Rational cv);

    Rational cp() const { return cp_; }
    Rational cv() const { return cv_; }
    Rational gamma() const { return cp_ / cv_; }
    Rational R() const { return cp_ - cv_; }

    double gamma_value() const { return gamma().value(); }
    double R_value() const { return R().value(); }

  private:
    Rational cp_, cv_;
};

/// p = (gamma - 1) * rho * e, lazily; e is the specific internal energy.
Expr eos_ideal_p(const Expr& rho, const Expr& e, const EosSpec& eos);
/// T = e / cv, lazily. The p/(rho R) form is an identity tested elsewhere;
/// this form never divides by rho.
Expr eos_ideal_T(const Expr& rho, const Expr& e, const EosSpec& eos);

class EosInterface {
  public:
    virtual ~EosInterface() = default;
    virtual Expr p_rhoe(const Expr& rho, const Expr& e) const = 0;
    virtual Expr T_rhoe(const Expr& rho, const Expr& e) const = 0;
    virtual std::string describe() const = 0;
};

class IdealGasEos : public EosInterface {
  public:
    explicit IdealGasEos(EosSpec spec = EosSpec()) : spec_(spec) {}

    const EosSpec& spec() const { return spec_; }
    Expr p_rhoe(const Expr& rho, const Expr& e) const override;
    Expr T_rhoe(const Expr& rho, const Expr& e) const override;
    std::string describe() const override;

  private:
    EosSpec spec_;
};

enum class Formulation : std::uint8_t { Conservative, Primitive };

enum class VarKind : std::uint8_t {
    Density,
    MomentumX,
    MomentumY,
    MomentumZ,
    TotalEnergy,
    VelocityX,
    VelocityY,
    VelocityZ,
    Pressure,
};

/// The d+2 variable kinds of a formulation, in canonical field order.
std::vector<VarKind> formulation_vars(std::size_t dim, Formulation form);

/// Runtime table mapping (variable kind, dim, formulation) to an argument
/// index. The standard map is positional; users may rebind it.
class VarMap {
  public:
    static VarMap standard();

    std::size_t index(VarKind var, std::size_t dim, Formulation form) const;
    void set(VarKind var, std::size_t dim, Formulation form, std::size_t idx);

    /// Indices for (dim, form) must be a bijection onto 0..d+1.
    void check_bijective(std::size_t dim, Formulation form) const;

  private:
    std::map<std::tuple<VarKind, std::size_t, Formulation>, std::size_t> table_;
};

/// Selects the argument a variable kind is bound to, without copying.
const Expr& map_variable(const VarMap& vm, VarKind var, std::size_t dim, Formulation form,
                         const std::vector<Expr>& args);

/// A set of state fields for one formulation: (d+2) lazy fields kept in
/// canonical order [rho, momenta..., rhoE] or [rho, velocities..., p].
class StateSet {
  public:
    StateSet(EosSpec eos, std::size_t dim, Formulation form, std::vector<Expr> canonical_fields);

    const EosSpec& eos() const { return eos_; }
    std::size_t dim() const { return dim_; }
    Formulation formulation() const { return form_; }
    std::size_t field_count() const { return fields_.size(); }

    const Expr& field(std::size_t i) const;
    const Expr& field(VarKind var) const;

    /// The fields as a (d+2) x 1 block expression.
    BlockExpr block() const;

  private:
    EosSpec eos_;
    std::size_t dim_;
    Formulation form_;
    std::vector<Expr> fields_;
};

StateSet state_conservative(const EosSpec& eos, std::size_t dim, std::vector<Expr> fields,
                            const VarMap& vm = VarMap::standard());
StateSet state_primitive(const EosSpec& eos, std::size_t dim, std::vector<Expr> fields,
                         const VarMap& vm = VarMap::standard());

namespace detail {
inline const Expr& to_field(const Expr& e) { return e; }
inline Expr to_field(const DenseVector& v) { return leaf(v); }
}  // namespace detail

template <class... Fs>
StateSet state_conservative(const EosSpec& eos, std::size_t dim, const Fs&... fs) {
    return state_conservative(eos, dim, std::vector<Expr>{detail::to_field(fs)...});
}

template <class... Fs>
StateSet state_primitive(const EosSpec& eos, std::size_t dim, const Fs&... fs) {
    return state_primitive(eos, dim, std::vector<Expr>{detail::to_field(fs)...});
}

/// Pressure as a lazy expression. Conservative input expands the perfect-gas
/// closure p = (gamma-1)(rhoE - |m|^2/(2 rho)); primitive input returns the
/// stored field.
Expr derived_p(const StateSet& u);

/// Squared velocity magnitude: (sum m_i^2)/rho^2 conservative, sum v_i^2
/// primitive, each as one fused expression.
Expr derived_v_mag2(const StateSet& u);

/// Change of formulation, lazily. The density field passes through as the
/// same expression, so an aliased assignment moves no memory for it.
StateSet convert(const StateSet& u, Formulation target);

/// The (d+2) x d tensor of inviscid fluxes F(U) = [rho v; rho v (x) v + I p;
/// v (rhoE + p)], column j the flux in direction j. Lazy; row 0 of a
/// conservative state is its momentum fields unchanged.
BlockExpr inviscid_flux(const StateSet& u);

}  // namespace fusevec
