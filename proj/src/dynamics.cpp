#include "histodyn/dynamics.hpp"

#include <cmath>

namespace histodyn {

RenderOptions ModelSpec::render_options() const {
    RenderOptions o;
    o.field_name = field_name;
    o.momentum_name = momentum_name;
    o.vol_as_dt = ctx.n == 1;
    return o;
}

namespace {

double rel(double gap, double scale) { return scale > 0 ? gap / scale : gap; }

HMapContext lagrangian_context(const HMapContext& ctx) {
    HMapContext c = ctx;
    c.allow_d = true;
    return c;
}

// Coefficient f of f vol when every term is a scalar times the volume form.
std::optional<Poly> top_coefficient(const Poly& p, int n) {
    Mask full = (Mask{1} << n) - 1;
    Poly out(n);
    for (auto& [k, t] : p.terms()) {
        if (!t.mono.forms.empty() || t.mono.dx != full) return std::nullopt;
        Monomial m = t.mono;
        m.dx = 0;
        out.add_term(t.coef, m);
    }
    return out;
}

}  // namespace

HMap historical_momentum(const HMap& L, const HMapContext& ctx) {
    if (!(L.grade == GradeSignature{0, ctx.n}))
        throw DynamicsError("a Lagrangian must have grade [0;n], got " + L.grade.str());
    if (!L.poly.depends_on(Field::C, true))
        throw ConstraintError("the Lagrangian does not depend on dC: momentum vanishes (fully constrained)");
    return partial(L, Field::C, ctx, Side::right, true);
}

LegendreMap legendre_transform(const HMap& L, const HMapContext& ctx0) {
    HMapContext ctx = lagrangian_context(ctx0);
    int n = ctx.n, r = ctx.r;
    LegendreMap out;
    out.momentum = historical_momentum(L, ctx);
    if (out.momentum.is_zero()) throw ConstraintError("primary constraint P = 0: Legendre map not invertible");
    Poly dC = lower(ex::d(ex::C()), ctx).poly;
    Poly sdC = star(dC, ctx);
    const auto& pt = out.momentum.poly.terms();
    const auto& qt = sdC.terms();
    if (pt.size() != 1 || qt.size() != 1 || pt.begin()->first != qt.begin()->first)
        throw ConstraintError("momentum is not proportional to *dC; only quadratic kinetic terms are inverted");
    out.a = pt.begin()->second.coef / qt.begin()->second.coef;
    Poly kinetic = (dC * sdC) * (0.5 * out.a);
    if ((L.poly - kinetic).depends_on(Field::C, true))
        throw ConstraintError("the Lagrangian mixes dC with other fields; Legendre map not inverted");
    double sigma = ctx.metric_sign() * (((r + 1) * (n - r - 1)) % 2 ? -1.0 : 1.0);
    Poly P = lower(ex::P(), ctx).poly;
    out.velocity = star(P, ctx) * (sigma / out.a);
    Poly h = dC * P - L.poly;
    out.H0 = {substitute_velocity(h, out.velocity, ctx), {0, n}};
    return out;
}

HMap euler_lagrange(const HMap& L, const HMapContext& ctx0) {
    HMapContext ctx = lagrangian_context(ctx0);
    HMap dLdC = partial(L, Field::C, ctx, Side::right);
    HMap mom = L.poly.depends_on(Field::C, true) ? partial(L, Field::C, ctx, Side::right, true)
                                                  : HMap{Poly(ctx.n), {0, ctx.n - ctx.r - 1}};
    Poly el = dLdC.poly - exterior(mom, ctx).poly * ((ctx.r % 2) ? -1.0 : 1.0);
    return {el, {0, ctx.n - ctx.r}};
}

FieldEquations hamilton_equations(const HMap& H0, const HMapContext& ctx) {
    if (!(H0.grade == GradeSignature{0, ctx.n}))
        throw DynamicsError("a Hamiltonian must have grade [0;n], got " + H0.grade.str());
    if (H0.poly.depends_on(Field::C, true)) throw DynamicsError("the Hamiltonian must not contain dC");
    FieldEquations eq;
    eq.rhs_dC = partial(H0, Field::P, ctx);
    HMap dHdC = partial(H0, Field::C, ctx);
    eq.rhs_dP = {dHdC.poly * -1.0, dHdC.grade};
    eq.identities = {"dX^μ = dx^μ", "dΠ_μ = 0"};
    return eq;
}

HMap model_hamiltonian(const ModelSpec& m) {
    if (m.hamiltonian) {
        HMapContext c = m.ctx;
        c.allow_d = false;
        return lower(m.hamiltonian, c);
    }
    if (m.lagrangian) return legendre_transform(lower(m.lagrangian, lagrangian_context(m.ctx)), m.ctx).H0;
    throw DynamicsError("model has neither a Hamiltonian nor a Lagrangian");
}

std::optional<HMap> model_lagrangian(const ModelSpec& m) {
    if (!m.lagrangian) return std::nullopt;
    return lower(m.lagrangian, lagrangian_context(m.ctx));
}

FieldEquations model_equations(const ModelSpec& m) { return hamilton_equations(model_hamiltonian(m), m.ctx); }

Residuals onshell_residual(const HamiltonianHistory& y, const FieldEquations& eqs, const HMapContext& ctx) {
    require_same_grid(y.C, y.P);
    Binding b{y.C.grid_ptr(), y.values(), {}, &ctx};
    b.fields.dC.reset();
    Residuals r;
    r.res_C = interior_rms(exterior_derivative(y.C) - evaluate(eqs.rhs_dC, b));
    r.res_P = interior_rms(exterior_derivative(y.P) - evaluate(eqs.rhs_dP, b));
    return r;
}

HMap bracket(const HMap& f, const HMap& g, const HMapContext& ctx) {
    try {
        HMap fc = partial(f, Field::C, ctx), fp = partial(f, Field::P, ctx);
        HMap gc = partial(g, Field::C, ctx), gp = partial(g, Field::P, ctx);
        Poly out = gc.poly * fp.poly - fc.poly * gp.poly;
        return {out, {0, f.grade.R + g.grade.R + 1 - ctx.n}};
    } catch (const HMapError& e) {
        throw DynamicsError("bracket undefined for grades " + f.grade.str() + " and " + g.grade.str() + ": " +
                            e.what());
    }
}

RoundTrip legendre_round_trip(const HMap& L, const Form& C, const HMapContext& ctx0) {
    HMapContext ctx = lagrangian_context(ctx0);
    LegendreMap lm = legendre_transform(L, ctx);
    const GridPtr& g = C.grid_ptr();
    Binding bl{g, {C, Form(g, ctx.n - ctx.r - 1), std::nullopt, {}}, {}, &ctx};
    Form el = evaluate(euler_lagrange(L, ctx), bl);
    Form P = evaluate(lm.momentum, bl);
    Binding bh{g, {C, P, std::nullopt, {}}, {}, &ctx};
    FieldEquations eq = hamilton_equations(lm.H0, ctx);
    Form rh = exterior_derivative(P) - evaluate(eq.rhs_dP, bh);
    double s = (ctx.r % 2) ? -1.0 : 1.0;
    RoundTrip rt;
    rt.rel_gap = rel((el + s * rh).max_abs(), std::max(el.max_abs(), rh.max_abs()));
    Form dC = exterior_derivative(C);
    rt.velocity_gap = rel((dC - evaluate(eq.rhs_dC, bh)).max_abs(), dC.max_abs());
    return rt;
}

double action_variation(const HMap& L, const Form& C, const Form& deltaC, const HMapContext& ctx0, double h) {
    HMapContext ctx = lagrangian_context(ctx0);
    const GridPtr& g = C.grid_ptr();
    auto action = [&](double s) {
        Binding b{g, {C + (s * h) * deltaC, Form(g, ctx.n - ctx.r - 1), std::nullopt, {}}, {}, &ctx};
        return integrate_region(evaluate(L, b), RegionSpec::full_domain());
    };
    return (action(1.0) - action(-1.0)) / (2.0 * h);
}

std::vector<std::string> render_equations(const ModelSpec& m, const FieldEquations& eqs) {
    const HMapContext& ctx = m.ctx;
    RenderOptions o = m.render_options();
    const std::string& A = m.field_name;
    const std::string& P = m.momentum_name;
    std::vector<std::string> lines;
    lines.push_back("d" + A + " = " + render(eqs.rhs_dC, ctx, o));
    lines.push_back("d" + P + " = " + render(eqs.rhs_dP, ctx, o));
    for (auto& s : eqs.identities) lines.push_back(s);
    int n = ctx.n, r = ctx.r;
    auto cdc = top_coefficient(eqs.rhs_dC.poly, n);
    auto cdp = top_coefficient(eqs.rhs_dP.poly, n);
    if (n == 1 && r == 0) {
        // d/dt written with a combining dot
        lines.push_back(A + "̇ = ∂h/∂" + P + "; " + P + "̇ = -∂h/∂" + A);
        if (cdc) lines.push_back(A + "̇ = " + render(*cdc, ctx, o));
        if (cdp) lines.push_back(P + "̇ = " + render(*cdp, ctx, o));
        return lines;
    }
    Poly sp = star(lower(ex::P(), ctx).poly, ctx);
    bool star_like = eqs.rhs_dC.poly.terms().size() == 1 && sp.terms().size() == 1 &&
                     eqs.rhs_dC.poly.terms().begin()->first == sp.terms().begin()->first;
    if (r == 0) {
        std::string first = star_like ? A + ",μ = " + P + "^μ" : A + ",μ = ∂h/∂" + P + "^μ";
        lines.push_back(first + "; (" + P + "^α),α = -∂h/∂" + A);
        lines.push_back(first);
        if (cdp) lines.push_back("(" + P + "^α),α = " + render(*cdp, ctx, o));
    } else if (star_like && eqs.rhs_dP.is_zero()) {
        lines.push_back("d" + A + " = ⋆" + P + ", d" + P + " = 0");
        lines.push_back("d⋆d" + A + " = 0");
    }
    return lines;
}

}  // namespace histodyn
