#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "histodyn/expr.hpp"
#include "histodyn/forms.hpp"

namespace histodyn {

class Poly;

enum class AtomKind { Field, Star, Func, Param, Exact };

// A factor of a canonical monomial. Atoms of horizontal grade 0 commute and are kept
// in the scalar part of a monomial; the rest are wedge factors.
struct Atom {
    AtomKind kind = AtomKind::Field;
    Field field = Field::C;
    int index = 0;        // mu for Pi / X
    int slot = -1;        // >= 0: the variation delta_slot of the field
    bool d = false;       // exterior derivative applied
    std::string name;     // Func / Param
    int order = 0;        // Func derivative order
    double expo = 0.0;    // exponent of the built-in pow
    std::shared_ptr<const Poly> inner;  // Star / Exact inner monomial, Func argument
    int grade = 0;
    std::string key;
};

using AtomPtr = std::shared_ptr<const Atom>;

struct Monomial {
    std::vector<AtomPtr> scalars;  // sorted by key
    std::vector<AtomPtr> forms;    // wedge order, canonically sorted with graded sign
    Mask dx = 0;                   // trailing coordinate differential dx^I

    int grade() const;
    std::string key() const;
    bool constant() const { return scalars.empty() && forms.empty(); }
};

struct Term {
    double coef = 0.0;
    Monomial mono;
};

// Canonical sum of wedge monomials. Zero is the empty sum.
class Poly {
public:
    Poly() = default;
    explicit Poly(int n) : n_(n) {}

    static Poly constant(int n, double c);
    static Poly atom(int n, AtomPtr a, double coef = 1.0);
    static Poly coord(int n, Mask dx, double coef = 1.0);

    int n() const { return n_; }
    bool empty() const { return terms_.empty(); }
    const std::map<std::string, Term>& terms() const { return terms_; }
    std::string key() const;

    void add_term(double coef, Monomial m);  // normalizes m
    Poly& operator+=(const Poly& o);
    Poly operator+(const Poly& o) const;
    Poly operator-(const Poly& o) const;
    Poly operator*(double s) const;
    // Wedge product.
    Poly operator*(const Poly& o) const;
    bool operator==(const Poly& o) const { return key() == o.key(); }

    // Slots of variations that appear anywhere.
    int max_slot() const;
    bool depends_on(Field f, bool d_flag = false) const;

private:
    int n_ = 1;
    std::map<std::string, Term> terms_;
};

// Canonical H-map with its grade signature.
struct HMap {
    Poly poly;
    GradeSignature grade;
    bool is_zero() const { return poly.empty(); }
};

// --- symbolic operations ------------------------------------------------------------

HMap lower(const Expr& e, const HMapContext& ctx);

Poly star(const Poly& p, const HMapContext& ctx);
Poly exterior_d(const Poly& p, const HMapContext& ctx);
// Linearization along the variation delta_slot (product and chain rule).
Poly linearize(const Poly& p, int slot, const HMapContext& ctx);
Poly relabel_slots(const Poly& p, const std::function<int(int)>& map, const HMapContext& ctx);
// Replaces the formal velocity dC by the given poly.
Poly substitute_velocity(const Poly& p, const Poly& replacement, const HMapContext& ctx);

HMap vertical_derivative(const HMap& f, const HMapContext& ctx);
HMap vertical_wedge(const HMap& a, const HMap& b, const HMapContext& ctx);
HMap hodge(const HMap& f, const HMapContext& ctx);
HMap exterior(const HMap& f, const HMapContext& ctx);

enum class Side {
    left,  // delta F = dF/dX ^ delta X
    right  // delta F = delta X ^ dF/dX
};

// Coefficient of the variation of a field in the linearization of f (vertical grade 0).
// With d_flag the variable is the formal velocity dC of a Lagrangian.
HMap partial(const HMap& f, Field x, const HMapContext& ctx, Side side = Side::left, bool d_flag = false, int index = 0);
HMap partial_wrt_C(const HMap& f, const HMapContext& ctx);
HMap partial_wrt_P(const HMap& f, const HMapContext& ctx);

// --- numerical evaluation -----------------------------------------------------------

struct FieldValues {
    std::optional<Form> C, P, dC;
    std::vector<Form> Pi;  // Pi_mu, optional
};

struct Binding {
    GridPtr grid;
    FieldValues fields;
    std::vector<FieldValues> variations;  // per slot
    const HMapContext* ctx = nullptr;
};

Form evaluate(const HMap& f, const Binding& b);
Form evaluate(const Poly& p, int grade, const Binding& b);

// Value of a scalar function (or one of its derivatives) at a point.
double eval_function(const HMapContext& ctx, const std::string& name, int order, double x);

// Value of a coordinate expression (initial data) at the point x; only scalar nodes allowed.
double evaluate_scalar(const Expr& e, const std::vector<double>& x, const HMapContext& ctx);

// Pointwise evaluation on co-located component values (mask-indexed, 2^n entries).
using PointValue = std::vector<double>;
struct PointInputs {
    PointValue C, P;
};
PointValue evaluate_point(const Poly& p, const PointInputs& in, const HMapContext& ctx);

// --- rendering ------------------------------------------------------------------------

struct RenderOptions {
    std::string field_name = "C";
    std::string momentum_name = "P";
    bool unicode = true;
    bool vol_as_dt = false;  // n = 1: print vol as dt
};

std::string render(const Poly& p, const HMapContext& ctx, const RenderOptions& opt = {});
std::string render(const HMap& f, const HMapContext& ctx, const RenderOptions& opt = {});

// --- variation oracle -------------------------------------------------------------------

struct HamiltonianHistory {
    Form C;
    Form P;
    std::vector<Form> Pi;  // Pi_mu; empty means identically zero
    std::optional<Form> dC;  // override for the formal velocity (Lagrangian evaluation)

    // Pi = sum_mu dx^mu ^ Pi_mu as a top form.
    Form pi_form() const;
    FieldValues values() const;
};

Form variation_oracle(const HMap& e, const HamiltonianHistory& y, const Form& dC, const Form& dP, double h,
                      const HMapContext& ctx);
// Sum of evaluate(dF/dX) ^ delta X over C and P: the symbolic side of the same pairing.
Form symbolic_variation(const HMap& e, const HamiltonianHistory& y, const Form& dC, const Form& dP,
                        const HMapContext& ctx);

}  // namespace histodyn
