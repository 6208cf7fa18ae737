// Numerical evaluation of canonical H-maps on grids and at single points.

#include <algorithm>
#include <cmath>
#include <mutex>

#include "histodyn/hmaps.hpp"

namespace histodyn {

namespace {

struct FnKey {
    const ExprNode* body;
    int order;
    bool operator<(const FnKey& o) const { return body != o.body ? body < o.body : order < o.order; }
};

struct FnEntry {
    Expr keep;
    Poly poly;
};

std::mutex fn_mutex;
std::map<FnKey, FnEntry>& fn_cache() {
    static std::map<FnKey, FnEntry> cache;
    return cache;
}

// The order-th derivative of a user function body as a poly in the Arg field.
const Poly& function_poly(const HMapContext& ctx, const std::string& name, int order) {
    auto it = ctx.functions.find(name);
    if (it == ctx.functions.end()) throw HMapError("unknown function '" + name + "'");
    const Expr& body = it->second.body;
    std::lock_guard<std::mutex> lock(fn_mutex);
    auto& cache = fn_cache();
    FnKey key{body.get(), order};
    auto found = cache.find(key);
    if (found != cache.end()) return found->second.poly;
    HMapContext c = ctx;
    c.allow_d = false;
    HMap h = lower(body, c);
    if (!(h.grade == GradeSignature{0, 0})) throw HMapError("function '" + name + "' must have a scalar body");
    for (int k = 0; k < order; ++k) h = partial(h, Field::Arg, c);
    auto res = cache.emplace(key, FnEntry{body, h.poly});
    return res.first->second.poly;
}

double eval_scalar(const Poly& p, double x, const HMapContext& ctx);

double eval_scalar_atom(const Atom& a, double x, const HMapContext& ctx) {
    switch (a.kind) {
        case AtomKind::Param: {
            auto it = ctx.params.find(a.name);
            if (it == ctx.params.end()) throw HMapError("unknown parameter '" + a.name + "'");
            return it->second;
        }
        case AtomKind::Field:
            if (a.field == Field::Arg && a.slot < 0 && !a.d) return x;
            break;
        case AtomKind::Func: {
            double v = eval_scalar(*a.inner, x, ctx);
            if (a.name == "pow") return std::pow(v, a.expo);
            return eval_function(ctx, a.name, a.order, v);
        }
        default:
            break;
    }
    throw HMapError("function bodies may only use their argument, parameters and scalar functions");
}

double eval_scalar(const Poly& p, double x, const HMapContext& ctx) {
    double total = 0.0;
    for (auto& [k, t] : p.terms()) {
        if (!t.mono.forms.empty() || t.mono.dx) throw HMapError("function body is not a scalar");
        double v = t.coef;
        for (auto& a : t.mono.scalars) v *= eval_scalar_atom(*a, x, ctx);
        total += v;
    }
    return total;
}

const FieldValues& values_for(const Atom& a, const Binding& b) {
    if (a.slot < 0) return b.fields;
    if (a.slot >= static_cast<int>(b.variations.size()))
        throw HMapError("no variation bound for slot " + std::to_string(a.slot));
    return b.variations[a.slot];
}

Form eval_atom(const Atom& a, const Binding& b);

// The first atom fixes the layout of the product; constants never force a resample.
Form eval_mono(const Term& t, const Binding& b) {
    std::optional<Form> acc;
    for (auto& a : t.mono.scalars) {
        Form v = eval_atom(*a, b);
        acc = acc ? wedge(*acc, v) : std::move(v);
    }
    for (auto& a : t.mono.forms) {
        Form v = eval_atom(*a, b);
        acc = acc ? wedge(*acc, v) : std::move(v);
    }
    if (!acc) acc = Form::constant(b.grid, 1.0);
    if (t.coef != 1.0) *acc *= t.coef;
    if (t.mono.dx) acc = wedge(*acc, Form::basis(b.grid, t.mono.dx));
    return *acc;
}

Form eval_field(const Atom& a, const Binding& b) {
    const HMapContext& ctx = *b.ctx;
    const FieldValues& fv = values_for(a, b);
    auto need = [&](const std::optional<Form>& f, const char* what) -> const Form& {
        if (!f) throw HMapError(std::string("history has no value for ") + what);
        return *f;
    };
    switch (a.field) {
        case Field::C:
            if (!a.d) return need(fv.C, "C");
            if (fv.dC) return *fv.dC;
            return exterior_derivative(need(fv.C, "C"));
        case Field::P:
            return a.d ? exterior_derivative(need(fv.P, "P")) : need(fv.P, "P");
        case Field::Pi: {
            Form v = a.index < static_cast<int>(fv.Pi.size()) ? fv.Pi[a.index]
                                                             : Form(b.grid, ctx.field_grade(Field::Pi));
            return a.d ? exterior_derivative(v) : v;
        }
        case Field::X: {
            Form v = a.slot < 0 ? Form::coordinate_function(b.grid, a.index) : Form(b.grid, 0);
            return a.d ? exterior_derivative(v) : v;
        }
        case Field::Arg:
            break;
    }
    throw HMapError("a function argument cannot be evaluated on a grid");
}

Form eval_atom(const Atom& a, const Binding& b) {
    const HMapContext& ctx = *b.ctx;
    switch (a.kind) {
        case AtomKind::Field:
            return eval_field(a, b);
        case AtomKind::Param: {
            auto it = ctx.params.find(a.name);
            if (it == ctx.params.end()) throw HMapError("unknown parameter '" + a.name + "'");
            return Form::constant(b.grid, it->second);
        }
        case AtomKind::Star: {
            int g = a.inner->terms().begin()->second.mono.grade();
            Form s = hodge_star(evaluate(*a.inner, g, b));
            return a.d ? exterior_derivative(s) : s;
        }
        case AtomKind::Exact: {
            int g = a.inner->terms().begin()->second.mono.grade();
            return exterior_derivative(evaluate(*a.inner, g, b));
        }
        case AtomKind::Func: {
            Form v = evaluate(*a.inner, 0, b);
            auto out = v.component(0);
            if (a.name == "pow") {
                for (double& x : out) x = std::pow(x, a.expo);
            } else if (is_builtin_function(a.name)) {
                for (double& x : out) x = eval_function(ctx, a.name, 0, x);
            } else {
                const Poly& fp = function_poly(ctx, a.name, a.order);
                for (double& x : out) x = eval_scalar(fp, x, ctx);
            }
            return v;
        }
    }
    throw HMapError("unsupported atom");
}

}  // namespace

double eval_function(const HMapContext& ctx, const std::string& name, int order, double x) {
    if (name == "cos" && order == 0) return std::cos(x);
    if (name == "sin" && order == 0) return std::sin(x);
    if (name == "exp" && order == 0) return std::exp(x);
    return eval_scalar(function_poly(ctx, name, order), x, ctx);
}

double evaluate_scalar(const Expr& e, const std::vector<double>& x, const HMapContext& ctx) {
    switch (e->op) {
        case Op::Const: return e->value;
        case Op::Param: {
            auto it = ctx.params.find(e->name);
            if (it == ctx.params.end()) throw HMapError("unknown parameter '" + e->name + "'");
            return it->second;
        }
        case Op::FieldX:
            if (e->index < 0 || e->index >= static_cast<int>(x.size()))
                throw HMapError("coordinate X^" + std::to_string(e->index) + " out of range");
            return x[e->index];
        case Op::Sum: {
            double s = 0.0;
            for (auto& k : e->kids) s += evaluate_scalar(k, x, ctx);
            return s;
        }
        case Op::Neg: return -evaluate_scalar(e->kids[0], x, ctx);
        case Op::Wedge: return evaluate_scalar(e->kids[0], x, ctx) * evaluate_scalar(e->kids[1], x, ctx);
        case Op::Pow: return std::pow(evaluate_scalar(e->kids[0], x, ctx), e->value);
        case Op::ScalarFun: return eval_function(ctx, e->name, e->index, evaluate_scalar(e->kids[0], x, ctx));
        default: break;
    }
    throw HMapError("not a scalar coordinate expression: " + describe(e));
}

Form evaluate(const Poly& p, int grade, const Binding& b) {
    if (!b.ctx) throw HMapError("binding without context");
    if (grade < 0 || grade > b.ctx->n) throw HMapError("cannot evaluate an H-map of grade " + std::to_string(grade));
    Form out(b.grid, grade);
    // each component takes the layout of the first term that reaches it
    std::vector<bool> touched(out.num_components(), false);
    for (auto& [k, t] : p.terms()) {
        Form v = eval_mono(t, b);
        if (v.grade() != grade) throw HMapError("term grade does not match the H-map grade");
        if (v.staggered()) out.set_staggered(true);
        for (std::size_t c = 0; c < out.num_components(); ++c) {
            auto src = v.component(c);
            if (!touched[c]) {
                if (std::all_of(src.begin(), src.end(), [](double x) { return x == 0.0; })) continue;
                std::copy(src.begin(), src.end(), out.component(c).begin());
                if (v.stagger(c) != 0) out.set_stagger(c, v.stagger(c));
                touched[c] = true;
                continue;
            }
            std::vector<double> tmp;
            if (v.stagger(c) != out.stagger(c)) {
                tmp = resample(*b.grid, src, v.stagger(c), out.stagger(c));
                src = tmp;
            }
            auto dst = out.component(c);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
        out.flag_axes(v.flagged_axes());
    }
    return out;
}

Form evaluate(const HMap& f, const Binding& b) {
    if (f.grade.k != 0) throw HMapError("only vertical grade 0 H-maps evaluate to forms");
    return evaluate(f.poly, f.grade.R, b);
}

// --- pointwise ------------------------------------------------------------------------------

namespace {

PointValue pt_wedge(const PointValue& a, const PointValue& b) {
    PointValue out(a.size(), 0.0);
    for (Mask i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (Mask j = 0; j < b.size(); ++j) {
            if (b[j] == 0.0) continue;
            int s = merge_sign(i, j);
            if (s) out[i | j] += s * a[i] * b[j];
        }
    }
    return out;
}

PointValue pt_star(const PointValue& a, const HMapContext& ctx) {
    Mask full = static_cast<Mask>(a.size() - 1);
    const auto& sig = ctx.sig();
    PointValue out(a.size(), 0.0);
    for (Mask i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        Mask j = full & ~i;
        double f = merge_sign(i, j);
        for (int mu : mask_axes(i)) f *= sig[mu];
        out[j] += f * a[i];
    }
    return out;
}

PointValue pt_eval(const Poly& p, const PointInputs& in, const HMapContext& ctx);

PointValue pt_atom(const Atom& a, const PointInputs& in, const HMapContext& ctx) {
    std::size_t size = std::size_t{1} << ctx.n;
    switch (a.kind) {
        case AtomKind::Field:
            if (a.slot < 0 && !a.d) {
                if (a.field == Field::C) return in.C;
                if (a.field == Field::P) return in.P;
            }
            break;
        case AtomKind::Param: {
            PointValue v(size, 0.0);
            v[0] = ctx.params.at(a.name);
            return v;
        }
        case AtomKind::Func: {
            PointValue v = pt_eval(*a.inner, in, ctx);
            double x = v[0];
            std::fill(v.begin(), v.end(), 0.0);
            v[0] = a.name == "pow" ? std::pow(x, a.expo) : eval_function(ctx, a.name, a.order, x);
            return v;
        }
        case AtomKind::Star:
            if (!a.d) return pt_star(pt_eval(*a.inner, in, ctx), ctx);
            break;
        case AtomKind::Exact:
            break;
    }
    throw HMapError("pointwise evaluation needs an expression without derivatives or coordinates");
}

PointValue pt_eval(const Poly& p, const PointInputs& in, const HMapContext& ctx) {
    std::size_t size = std::size_t{1} << ctx.n;
    PointValue out(size, 0.0);
    for (auto& [k, t] : p.terms()) {
        PointValue acc(size, 0.0);
        acc[0] = t.coef;
        for (auto& a : t.mono.scalars) {
            double s = pt_atom(*a, in, ctx)[0];
            for (double& x : acc) x *= s;
        }
        for (auto& a : t.mono.forms) acc = pt_wedge(acc, pt_atom(*a, in, ctx));
        if (t.mono.dx) {
            PointValue b(size, 0.0);
            b[t.mono.dx] = 1.0;
            acc = pt_wedge(acc, b);
        }
        for (std::size_t i = 0; i < size; ++i) out[i] += acc[i];
    }
    return out;
}

}  // namespace

PointValue evaluate_point(const Poly& p, const PointInputs& in, const HMapContext& ctx) {
    std::size_t size = std::size_t{1} << ctx.n;
    if (in.C.size() != size || in.P.size() != size) throw HMapError("point inputs need 2^n entries");
    return pt_eval(p, in, ctx);
}

// --- variation oracle ---------------------------------------------------------------------

Form HamiltonianHistory::pi_form() const {
    const GridPtr& g = C.grid_ptr();
    Form out(g, g->dim);
    for (std::size_t mu = 0; mu < Pi.size(); ++mu)
        out += wedge(Form::coordinate_differential(g, static_cast<int>(mu)), Pi[mu]);
    return out;
}

FieldValues HamiltonianHistory::values() const {
    FieldValues v;
    v.C = C;
    v.P = P;
    v.dC = dC;
    v.Pi = Pi;
    return v;
}

Form variation_oracle(const HMap& e, const HamiltonianHistory& y, const Form& dC, const Form& dP, double h,
                      const HMapContext& ctx) {
    auto shifted = [&](double s) {
        HamiltonianHistory z = y;
        z.C = y.C + (s * h) * dC;
        z.P = y.P + (s * h) * dP;
        if (y.dC) z.dC = *y.dC + (s * h) * exterior_derivative(dC);
        Binding b{y.C.grid_ptr(), z.values(), {}, &ctx};
        return evaluate(e, b);
    };
    Form diff = shifted(1.0) - shifted(-1.0);
    return (1.0 / (2.0 * h)) * diff;
}

Form symbolic_variation(const HMap& e, const HamiltonianHistory& y, const Form& dC, const Form& dP,
                        const HMapContext& ctx) {
    Binding b{y.C.grid_ptr(), y.values(), {}, &ctx};
    Form out(y.C.grid_ptr(), e.grade.R);
    if (e.poly.depends_on(Field::C)) out += wedge(evaluate(partial(e, Field::C, ctx), b), dC);
    if (e.poly.depends_on(Field::P)) out += wedge(evaluate(partial(e, Field::P, ctx), b), dP);
    if (e.poly.depends_on(Field::C, true))
        out += wedge(evaluate(partial(e, Field::C, ctx, Side::left, true), b), exterior_derivative(dC));
    return out;
}

}  // namespace histodyn
