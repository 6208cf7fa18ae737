// Canonical polynomial calculus of H-maps: normal form, star, d, linearization,
// the vertical derivative D and the partial derivatives.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "histodyn/hmaps.hpp"

namespace histodyn {

namespace {

std::string num_key(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

char field_char(Field f) {
    switch (f) {
        case Field::C: return 'C';
        case Field::P: return 'P';
        case Field::Pi: return 'Q';
        case Field::X: return 'X';
        case Field::Arg: return 'A';
    }
    return '?';
}

AtomPtr finish(Atom a) {
    std::string k;
    switch (a.kind) {
        case AtomKind::Field:
            k = std::string("F") + field_char(a.field);
            if (a.field == Field::Pi || a.field == Field::X) k += std::to_string(a.index);
            if (a.d) k += "'d";
            if (a.slot >= 0) k += "@" + std::to_string(a.slot);
            break;
        case AtomKind::Star:
            k = "S{" + a.inner->key() + "}" + (a.d ? "'d" : "");
            break;
        case AtomKind::Func:
            k = "G" + a.name + "#" + std::to_string(a.order) + "^" + num_key(a.expo) + "(" + a.inner->key() + ")";
            break;
        case AtomKind::Param:
            k = "K" + a.name;
            break;
        case AtomKind::Exact:
            k = "E{" + a.inner->key() + "}";
            break;
    }
    a.key = std::move(k);
    return std::make_shared<const Atom>(std::move(a));
}

AtomPtr field_atom(const HMapContext& ctx, Field f, int index = 0, int slot = -1, bool d = false) {
    Atom a;
    a.kind = AtomKind::Field;
    a.field = f;
    a.index = index;
    a.slot = slot;
    a.d = d;
    a.grade = ctx.field_grade(f) + (d ? 1 : 0);
    return finish(std::move(a));
}

AtomPtr param_atom(const std::string& name) {
    Atom a;
    a.kind = AtomKind::Param;
    a.name = name;
    a.grade = 0;
    return finish(std::move(a));
}

AtomPtr func_atom(const std::string& name, int order, double expo, Poly arg) {
    Atom a;
    a.kind = AtomKind::Func;
    a.name = name;
    a.order = order;
    a.expo = expo;
    a.inner = std::make_shared<const Poly>(std::move(arg));
    a.grade = 0;
    return finish(std::move(a));
}

// inner must be a single-term poly with coefficient 1
AtomPtr star_atom(const Poly& inner, int inner_grade, int n, bool d = false) {
    Atom a;
    a.kind = AtomKind::Star;
    a.inner = std::make_shared<const Poly>(inner);
    a.d = d;
    a.grade = n - inner_grade + (d ? 1 : 0);
    return finish(std::move(a));
}

AtomPtr exact_atom(const Poly& inner, int inner_grade) {
    Atom a;
    a.kind = AtomKind::Exact;
    a.inner = std::make_shared<const Poly>(inner);
    a.grade = inner_grade + 1;
    return finish(std::move(a));
}

AtomPtr with_d(const AtomPtr& x) {
    Atom a = *x;
    a.d = true;
    a.grade += 1;
    return finish(std::move(a));
}

const Term& only_term(const Poly& p) { return p.terms().begin()->second; }

Mask full_mask(int n) { return n >= 32 ? ~Mask{0} : ((Mask{1} << n) - 1); }

}  // namespace

// --- monomials and polys ---------------------------------------------------------------

int Monomial::grade() const {
    int g = popcount(dx);
    for (auto& a : forms) g += a->grade;
    return g;
}

std::string Monomial::key() const {
    std::string k;
    for (auto& a : scalars) k += a->key + ".";
    k += "|";
    for (auto& a : forms) k += a->key + "^";
    k += "|" + std::to_string(dx);
    return k;
}

Poly Poly::constant(int n, double c) {
    Poly p(n);
    if (c != 0.0) p.add_term(c, Monomial{});
    return p;
}

Poly Poly::atom(int n, AtomPtr a, double coef) {
    Poly p(n);
    Monomial m;
    if (a->grade == 0)
        m.scalars.push_back(std::move(a));
    else
        m.forms.push_back(std::move(a));
    p.add_term(coef, std::move(m));
    return p;
}

Poly Poly::coord(int n, Mask dx, double coef) {
    Poly p(n);
    Monomial m;
    m.dx = dx;
    p.add_term(coef, std::move(m));
    return p;
}

std::string Poly::key() const {
    std::string k;
    for (auto& [mk, t] : terms_) k += num_key(t.coef) + "*" + mk + ";";
    return k;
}

void Poly::add_term(double coef, Monomial m) {
    if (coef == 0.0) return;
    // grade-0 wedge factors commute with everything
    for (auto it = m.forms.begin(); it != m.forms.end();) {
        if ((*it)->grade == 0) {
            m.scalars.push_back(*it);
            it = m.forms.erase(it);
        } else {
            ++it;
        }
    }
    std::sort(m.scalars.begin(), m.scalars.end(), [](const AtomPtr& a, const AtomPtr& b) { return a->key < b->key; });
    auto& f = m.forms;
    for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t j = 0; j + 1 < f.size() - i; ++j)
            if (f[j + 1]->key < f[j]->key) {
                if ((f[j]->grade * f[j + 1]->grade) & 1) coef = -coef;
                std::swap(f[j], f[j + 1]);
            }
    for (std::size_t j = 0; j + 1 < f.size(); ++j)
        if (f[j]->key == f[j + 1]->key && (f[j]->grade & 1)) return;
    if (m.grade() > n_) return;
    std::string k = m.key();
    auto it = terms_.find(k);
    if (it == terms_.end()) {
        terms_.emplace(std::move(k), Term{coef, std::move(m)});
    } else {
        it->second.coef += coef;
        if (it->second.coef == 0.0) terms_.erase(it);
    }
}

Poly& Poly::operator+=(const Poly& o) {
    for (auto& [k, t] : o.terms_) add_term(t.coef, t.mono);
    return *this;
}

Poly Poly::operator+(const Poly& o) const {
    Poly r = *this;
    r += o;
    return r;
}

Poly Poly::operator-(const Poly& o) const { return *this + o * -1.0; }

Poly Poly::operator*(double s) const {
    Poly r(n_);
    if (s == 0.0) return r;
    for (auto& [k, t] : terms_) r.add_term(t.coef * s, t.mono);
    return r;
}

Poly Poly::operator*(const Poly& o) const {
    Poly r(n_);
    for (auto& [ka, a] : terms_)
        for (auto& [kb, b] : o.terms_) {
            Monomial m;
            m.scalars = a.mono.scalars;
            m.scalars.insert(m.scalars.end(), b.mono.scalars.begin(), b.mono.scalars.end());
            m.forms = a.mono.forms;
            m.forms.insert(m.forms.end(), b.mono.forms.begin(), b.mono.forms.end());
            int bforms = 0;
            for (auto& x : b.mono.forms) bforms += x->grade;
            double coef = a.coef * b.coef;
            if ((popcount(a.mono.dx) * bforms) & 1) coef = -coef;
            int s = merge_sign(a.mono.dx, b.mono.dx);
            if (s == 0) continue;
            m.dx = a.mono.dx | b.mono.dx;
            r.add_term(coef * s, std::move(m));
        }
    return r;
}

namespace {

int atom_max_slot(const Atom& a);

int poly_max_slot(const Poly& p) {
    int s = -1;
    for (auto& [k, t] : p.terms()) {
        for (auto& a : t.mono.scalars) s = std::max(s, atom_max_slot(*a));
        for (auto& a : t.mono.forms) s = std::max(s, atom_max_slot(*a));
    }
    return s;
}

int atom_max_slot(const Atom& a) {
    if (a.kind == AtomKind::Field) return a.slot;
    if (a.inner) return poly_max_slot(*a.inner);
    return -1;
}

bool atom_depends(const Atom& a, Field f, bool d_flag) {
    if (a.kind == AtomKind::Field) return a.field == f && a.d == d_flag;
    if (!a.inner) return false;
    return a.inner->depends_on(f, d_flag);
}

}  // namespace

int Poly::max_slot() const { return poly_max_slot(*this); }

bool Poly::depends_on(Field f, bool d_flag) const {
    for (auto& [k, t] : terms_) {
        for (auto& a : t.mono.scalars)
            if (atom_depends(*a, f, d_flag)) return true;
        for (auto& a : t.mono.forms)
            if (atom_depends(*a, f, d_flag)) return true;
    }
    return false;
}

// --- star and d -------------------------------------------------------------------------

Poly star(const Poly& p, const HMapContext& ctx) {
    int n = ctx.n;
    const auto& sig = ctx.sig();
    Poly out(n);
    for (auto& [k, t] : p.terms()) {
        const Monomial& m = t.mono;
        Monomial scal;
        scal.scalars = m.scalars;
        if (m.forms.empty()) {
            Mask J = full_mask(n) & ~m.dx;
            double f = merge_sign(m.dx, J);
            for (int mu : mask_axes(m.dx)) f *= sig[mu];
            scal.dx = J;
            out.add_term(t.coef * f, std::move(scal));
            continue;
        }
        if (m.forms.size() == 1 && m.dx == 0 && m.forms[0]->kind == AtomKind::Star && !m.forms[0]->d) {
            const Poly& inner = *m.forms[0]->inner;
            int g = only_term(inner).mono.grade();
            double f = ctx.metric_sign() * (((g * (n - g)) & 1) ? -1.0 : 1.0);
            Poly rest(n);
            rest.add_term(t.coef * f, std::move(scal));
            out += rest * inner;
            continue;
        }
        Monomial im;
        im.forms = m.forms;
        im.dx = m.dx;
        Poly inner(n);
        inner.add_term(1.0, im);
        Poly rest(n);
        rest.add_term(t.coef, std::move(scal));
        out += rest * Poly::atom(n, star_atom(inner, im.grade(), n));
    }
    return out;
}

Poly exterior_d(const Poly& p, const HMapContext& ctx) {
    int n = ctx.n;
    Poly out(n);
    for (auto& [k, t] : p.terms()) {
        const Monomial& m = t.mono;
        Monomial consts, rest;
        for (auto& a : m.scalars) (a->kind == AtomKind::Param ? consts : rest).scalars.push_back(a);
        rest.forms = m.forms;
        std::size_t count = rest.scalars.size() + rest.forms.size();
        if (count == 0) continue;
        AtomPtr da;
        if (count == 1) {
            const AtomPtr& a = rest.scalars.empty() ? rest.forms[0] : rest.scalars[0];
            if (a->d || a->kind == AtomKind::Exact) continue;
            if (a->kind == AtomKind::Field || a->kind == AtomKind::Star) da = with_d(a);
        }
        if (!da) {
            Poly inner(n);
            inner.add_term(1.0, rest);
            if (inner.empty()) continue;
            int g = rest.grade();
            if (g + 1 > n) continue;
            da = exact_atom(inner, g);
        }
        Poly term(n);
        term.add_term(t.coef, std::move(consts));
        out += term * Poly::atom(n, da) * Poly::coord(n, m.dx);
    }
    return out;
}

// --- linearization --------------------------------------------------------------------

namespace {

Poly func_derivative(const Atom& a, const HMapContext& ctx) {
    int n = ctx.n;
    const Poly& arg = *a.inner;
    if (a.name == "cos") return Poly::atom(n, func_atom("sin", 0, 0.0, arg), -1.0);
    if (a.name == "sin") return Poly::atom(n, func_atom("cos", 0, 0.0, arg));
    if (a.name == "exp") return Poly::atom(n, func_atom("exp", 0, 0.0, arg));
    if (a.name == "pow") {
        if (a.expo - 1.0 == 0.0) return Poly::constant(n, a.expo);
        return Poly::atom(n, func_atom("pow", 0, a.expo - 1.0, arg), a.expo);
    }
    return Poly::atom(n, func_atom(a.name, a.order + 1, 0.0, arg));
}

Poly lin_atom(const AtomPtr& a, int slot, const HMapContext& ctx) {
    int n = ctx.n;
    switch (a->kind) {
        case AtomKind::Param:
            return Poly(n);
        case AtomKind::Field:
            if (a->slot >= 0) return Poly(n);
            return Poly::atom(n, field_atom(ctx, a->field, a->index, slot, a->d));
        case AtomKind::Star: {
            Poly s = star(linearize(*a->inner, slot, ctx), ctx);
            return a->d ? exterior_d(s, ctx) : s;
        }
        case AtomKind::Func:
            return func_derivative(*a, ctx) * linearize(*a->inner, slot, ctx);
        case AtomKind::Exact:
            return exterior_d(linearize(*a->inner, slot, ctx), ctx);
    }
    return Poly(n);
}

// Rebuilds every monomial with each atom replaced through fn (atoms keep their order).
Poly map_atoms(const Poly& p, const std::function<Poly(const AtomPtr&)>& fn) {
    int n = p.n();
    Poly out(n);
    for (auto& [k, t] : p.terms()) {
        Poly acc = Poly::constant(n, t.coef);
        for (auto& a : t.mono.scalars) acc = acc * fn(a);
        for (auto& a : t.mono.forms) acc = acc * fn(a);
        acc = acc * Poly::coord(n, t.mono.dx);
        out += acc;
    }
    return out;
}

}  // namespace

Poly linearize(const Poly& p, int slot, const HMapContext& ctx) {
    int n = ctx.n;
    Poly out(n);
    for (auto& [k, t] : p.terms()) {
        const Monomial& m = t.mono;
        std::vector<AtomPtr> all = m.scalars;
        all.insert(all.end(), m.forms.begin(), m.forms.end());
        for (std::size_t i = 0; i < all.size(); ++i) {
            Poly li = lin_atom(all[i], slot, ctx);
            if (li.empty()) continue;
            Poly acc = Poly::constant(n, t.coef);
            for (std::size_t j = 0; j < all.size(); ++j) acc = acc * (j == i ? li : Poly::atom(n, all[j]));
            out += acc * Poly::coord(n, m.dx);
        }
    }
    return out;
}

Poly relabel_slots(const Poly& p, const std::function<int(int)>& map, const HMapContext& ctx) {
    int n = ctx.n;
    std::function<Poly(const AtomPtr&)> fn = [&](const AtomPtr& a) -> Poly {
        switch (a->kind) {
            case AtomKind::Field:
                if (a->slot < 0) return Poly::atom(n, a);
                return Poly::atom(n, field_atom(ctx, a->field, a->index, map(a->slot), a->d));
            case AtomKind::Param:
                return Poly::atom(n, a);
            case AtomKind::Star: {
                Poly s = star(relabel_slots(*a->inner, map, ctx), ctx);
                return a->d ? exterior_d(s, ctx) : s;
            }
            case AtomKind::Func:
                return Poly::atom(n, func_atom(a->name, a->order, a->expo, relabel_slots(*a->inner, map, ctx)));
            case AtomKind::Exact:
                return exterior_d(relabel_slots(*a->inner, map, ctx), ctx);
        }
        return Poly(n);
    };
    return map_atoms(p, fn);
}

Poly substitute_velocity(const Poly& p, const Poly& replacement, const HMapContext& ctx) {
    int n = ctx.n;
    std::function<Poly(const AtomPtr&)> fn = [&](const AtomPtr& a) -> Poly {
        switch (a->kind) {
            case AtomKind::Field:
                if (a->field == Field::C && a->d && a->slot < 0) return replacement;
                return Poly::atom(n, a);
            case AtomKind::Param:
                return Poly::atom(n, a);
            case AtomKind::Star: {
                Poly s = star(substitute_velocity(*a->inner, replacement, ctx), ctx);
                return a->d ? exterior_d(s, ctx) : s;
            }
            case AtomKind::Func:
                return Poly::atom(n, func_atom(a->name, a->order, a->expo, substitute_velocity(*a->inner, replacement, ctx)));
            case AtomKind::Exact:
                return exterior_d(substitute_velocity(*a->inner, replacement, ctx), ctx);
        }
        return Poly(n);
    };
    return map_atoms(p, fn);
}

// --- H-map level operations ---------------------------------------------------------------

HMap vertical_derivative(const HMap& f, const HMapContext& ctx) {
    int k = f.grade.k;
    Poly out(ctx.n);
    for (int j = 0; j <= k; ++j) {
        Poly shifted = relabel_slots(f.poly, [j](int i) { return i < j ? i : i + 1; }, ctx);
        Poly l = linearize(shifted, j, ctx);
        out += (j & 1) ? l * -1.0 : l;
    }
    return {out, {k + 1, f.grade.R}};
}

HMap vertical_wedge(const HMap& a, const HMap& b, const HMapContext& ctx) {
    int k = a.grade.k, l = b.grade.k, total = k + l;
    GradeSignature g{total, a.grade.R + b.grade.R};
    if (k == 0 && l == 0) return {a.poly * b.poly, g};
    Poly out(ctx.n);
    for (Mask s = 0; s < (Mask{1} << total); ++s) {
        if (popcount(s) != k) continue;
        Mask comp = ((Mask{1} << total) - 1) & ~s;
        std::vector<int> sa = mask_axes(s), sb = mask_axes(comp);
        double sign = merge_sign(s, comp);
        Poly pa = relabel_slots(a.poly, [&](int i) { return sa.at(i); }, ctx);
        Poly pb = relabel_slots(b.poly, [&](int i) { return sb.at(i); }, ctx);
        out += (pa * pb) * sign;
    }
    return {out, g};
}

HMap hodge(const HMap& f, const HMapContext& ctx) { return {star(f.poly, ctx), {f.grade.k, ctx.n - f.grade.R}}; }

HMap exterior(const HMap& f, const HMapContext& ctx) {
    return {exterior_d(f.poly, ctx), {f.grade.k, f.grade.R + 1}};
}

// --- lowering ------------------------------------------------------------------------------

namespace {

HMap lower_rec(const Expr& e, const HMapContext& ctx) {
    int n = ctx.n;
    auto g0 = GradeSignature{0, 0};
    switch (e->op) {
        case Op::Const:
            return {Poly::constant(n, e->value), g0};
        case Op::Param:
            return {Poly::atom(n, param_atom(e->name)), g0};
        case Op::FieldC:
            return {Poly::atom(n, field_atom(ctx, Field::C)), {0, ctx.field_grade(Field::C)}};
        case Op::FieldP:
            return {Poly::atom(n, field_atom(ctx, Field::P)), {0, ctx.field_grade(Field::P)}};
        case Op::FieldPi:
            return {Poly::atom(n, field_atom(ctx, Field::Pi, e->index)), {0, ctx.field_grade(Field::Pi)}};
        case Op::FieldX:
            return {Poly::atom(n, field_atom(ctx, Field::X, e->index)), g0};
        case Op::Arg:
            return {Poly::atom(n, field_atom(ctx, Field::Arg)), g0};
        case Op::CoordDiff:
            return {Poly::coord(n, Mask{1} << e->index), {0, 1}};
        case Op::VolSlot: {
            Mask cur = full_mask(n);
            double sign = 1.0;
            for (int mu : mask_axes(e->mask)) {
                if (position_in(cur, mu) & 1) sign = -sign;
                cur &= ~(Mask{1} << mu);
            }
            return {Poly::coord(n, cur, sign), {0, popcount(cur)}};
        }
        case Op::Star:
            return hodge(lower_rec(e->kids[0], ctx), ctx);
        case Op::Wedge:
            return vertical_wedge(lower_rec(e->kids[0], ctx), lower_rec(e->kids[1], ctx), ctx);
        case Op::Sum: {
            if (e->kids.empty()) return {Poly(n), g0};
            HMap acc = lower_rec(e->kids[0], ctx);
            for (std::size_t i = 1; i < e->kids.size(); ++i) acc.poly += lower_rec(e->kids[i], ctx).poly;
            return acc;
        }
        case Op::Neg: {
            HMap a = lower_rec(e->kids[0], ctx);
            a.poly = a.poly * -1.0;
            return a;
        }
        case Op::Pow: {
            HMap base = lower_rec(e->kids[0], ctx);
            double ex = e->value;
            if (ex >= 0 && ex == std::floor(ex) && ex <= 64) {
                HMap acc{Poly::constant(n, 1.0), g0};
                for (int i = 0; i < static_cast<int>(ex); ++i) acc = vertical_wedge(acc, base, ctx);
                return acc;
            }
            return {Poly::atom(n, func_atom("pow", 0, ex, base.poly)), g0};
        }
        case Op::ScalarFun: {
            HMap a = lower_rec(e->kids[0], ctx);
            return {Poly::atom(n, func_atom(e->name, is_builtin_function(e->name) ? 0 : e->index, 0.0, a.poly)), g0};
        }
        case Op::ExtD:
            return exterior(lower_rec(e->kids[0], ctx), ctx);
        case Op::VertD:
            return vertical_derivative(lower_rec(e->kids[0], ctx), ctx);
        case Op::VertBasis:
            return {Poly::atom(n, field_atom(ctx, e->field, e->index, 0)), {1, ctx.field_grade(e->field)}};
    }
    throw HMapError("unsupported expression node");
}

}  // namespace

HMap lower(const Expr& e, const HMapContext& ctx) {
    GradeSignature g = infer_grade(e, ctx);
    HMap h = lower_rec(e, ctx);
    h.grade = g;
    return h;
}

// --- partial derivatives -------------------------------------------------------------------

namespace {

struct Target {
    Field field;
    bool d;
    int index;
    bool matches(const Atom& a) const {
        return a.kind == AtomKind::Field && a.slot == 0 && a.field == field && a.d == d &&
               ((field != Field::Pi && field != Field::X) || a.index == index);
    }
};

bool contains_var(const Atom& a) {
    if (a.kind == AtomKind::Field) return a.slot >= 0;
    return a.inner && a.inner->max_slot() >= 0;
}

const Atom* find_var(const Atom& a) {
    if (a.kind == AtomKind::Field) return a.slot >= 0 ? &a : nullptr;
    if (!a.inner) return nullptr;
    for (auto& [k, t] : a.inner->terms()) {
        for (auto& x : t.mono.scalars)
            if (auto v = find_var(*x)) return v;
        for (auto& x : t.mono.forms)
            if (auto v = find_var(*x)) return v;
    }
    return nullptr;
}

struct SplitFailure {
    std::string why;
};

// Writes coef * m as B ^ delta X and returns B.
Poly split(double coef, const Monomial& m, const Target& x, int gx, const HMapContext& ctx) {
    int n = ctx.n;
    // variation as a commuting scalar
    for (std::size_t i = 0; i < m.scalars.size(); ++i) {
        const Atom& a = *m.scalars[i];
        if (!contains_var(a)) continue;
        Monomial rest = m;
        rest.scalars.erase(rest.scalars.begin() + static_cast<long>(i));
        Poly A(n);
        A.add_term(coef, rest);
        if (a.kind == AtomKind::Field) return A;
        if (a.kind == AtomKind::Star && !a.d) {
            const Term& it = only_term(*a.inner);
            Poly Bin = split(it.coef, it.mono, x, gx, ctx);
            int p = rest.grade(), m_in = it.mono.grade();
            if (m_in == p) {
                double s = ((gx * (n - p)) & 1) ? -1.0 : 1.0;
                return Bin * star(A, ctx) * s;
            }
            throw SplitFailure{"variation under a top-grade star multiplied by a form of grade " + std::to_string(p)};
        }
        throw SplitFailure{"variation inside a non-linear scalar factor"};
    }
    for (std::size_t i = 0; i < m.forms.size(); ++i) {
        const Atom& a = *m.forms[i];
        if (!contains_var(a)) continue;
        int after = popcount(m.dx);
        for (std::size_t j = i + 1; j < m.forms.size(); ++j) after += m.forms[j]->grade;
        Monomial rest = m;
        rest.forms.erase(rest.forms.begin() + static_cast<long>(i));
        double c = ((a.grade * after) & 1) ? -coef : coef;
        Poly A(n);
        A.add_term(c, rest);
        if (a.kind == AtomKind::Field) return A;
        if (a.kind == AtomKind::Star && !a.d) {
            const Term& it = only_term(*a.inner);
            Poly Bin = split(it.coef, it.mono, x, gx, ctx);
            int p = rest.grade(), m_in = it.mono.grade();
            if (m_in == p) {
                double s = ((gx * (n - p)) & 1) ? -1.0 : 1.0;
                return Bin * star(A, ctx) * s;
            }
            throw SplitFailure{"variation under a star whose grade " + std::to_string(n - m_in) +
                               " cannot be paired with the remaining grade " + std::to_string(p)};
        }
        throw SplitFailure{"variation under an exterior derivative"};
    }
    throw SplitFailure{"no variation found"};
}

}  // namespace

HMap partial(const HMap& f, Field xf, const HMapContext& ctx, Side side, bool d_flag, int index) {
    if (f.grade.k != 0) throw HMapError("partial derivatives need vertical grade 0, got " + f.grade.str());
    int gx = ctx.field_grade(xf) + (d_flag ? 1 : 0);
    int R = f.grade.R;
    Target x{xf, d_flag, index};
    Poly lin = linearize(f.poly, 0, ctx);
    Poly out(ctx.n);
    bool depends = false;
    for (auto& [k, t] : lin.terms()) {
        const Atom* v = nullptr;
        for (auto& a : t.mono.scalars)
            if (!v) v = find_var(*a);
        for (auto& a : t.mono.forms)
            if (!v) v = find_var(*a);
        if (!v || !x.matches(*v)) continue;
        depends = true;
        if (R < gx)
            throw HMapError("derivative undefined: expression of grade " + f.grade.str() +
                            " depends on a field of grade " + std::to_string(gx));
        try {
            out += split(t.coef, t.mono, x, gx, ctx);
        } catch (const SplitFailure& s) {
            throw HMapError("partial derivative not representable: " + s.why);
        }
    }
    (void)depends;
    if (side == Side::right && ((gx * (R - gx)) & 1)) out = out * -1.0;
    return {out, {0, R - gx}};
}

HMap partial_wrt_C(const HMap& f, const HMapContext& ctx) { return partial(f, Field::C, ctx); }
HMap partial_wrt_P(const HMap& f, const HMapContext& ctx) { return partial(f, Field::P, ctx); }

}  // namespace histodyn
