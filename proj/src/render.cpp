#include <cmath>

#include "histodyn/hmaps.hpp"
#include "histodyn/numfmt.hpp"

namespace histodyn {

namespace {

struct Glyphs {
    const char* wedge;
    const char* star;
    const char* delta;
    const char* pi;
};

Glyphs glyphs(const RenderOptions& o) {
    if (o.unicode) return {" ∧ ", "⋆", "δ", "Π"};
    return {" ^ ", "*", "delta", "Pi"};
}

std::string render_poly(const Poly& p, const HMapContext& ctx, const RenderOptions& o, bool wrap);

std::string render_atom(const Atom& a, const HMapContext& ctx, const RenderOptions& o) {
    Glyphs g = glyphs(o);
    std::string s;
    switch (a.kind) {
        case AtomKind::Field: {
            std::string base;
            switch (a.field) {
                case Field::C: base = o.field_name; break;
                case Field::P: base = o.momentum_name; break;
                case Field::Pi: base = std::string(g.pi) + "_" + std::to_string(a.index); break;
                case Field::X: base = "x^" + std::to_string(a.index); break;
                case Field::Arg: base = "u"; break;
            }
            if (a.slot >= 0) base = std::string(g.delta) + (a.slot > 0 ? std::to_string(a.slot) : "") + base;
            return a.d ? "d" + base : base;
        }
        case AtomKind::Param:
            return a.name;
        case AtomKind::Star: {
            const Term& t = a.inner->terms().begin()->second;
            bool single = t.coef == 1.0 && t.mono.scalars.size() + t.mono.forms.size() + (t.mono.dx ? 1 : 0) == 1;
            std::string in = render_poly(*a.inner, ctx, o, false);
            s = std::string(g.star) + (single ? in : "(" + in + ")");
            return a.d ? "d" + s : s;
        }
        case AtomKind::Func: {
            std::string arg = render_poly(*a.inner, ctx, o, false);
            if (a.name == "pow") return "(" + arg + ")^" + format_double(a.expo);
            return a.name + std::string(a.order, '\'') + "(" + arg + ")";
        }
        case AtomKind::Exact:
            return "d(" + render_poly(*a.inner, ctx, o, false) + ")";
    }
    return "?";
}

std::string render_dx(Mask dx, const HMapContext& ctx, const RenderOptions& o) {
    Mask full = ctx.n >= 32 ? ~Mask{0} : ((Mask{1} << ctx.n) - 1);
    if (dx == full) return (o.vol_as_dt && ctx.n == 1) ? "dt" : "vol";
    std::string s;
    for (int mu : mask_axes(dx)) {
        if (!s.empty()) s += glyphs(o).wedge;
        s += "dx^" + std::to_string(mu);
    }
    return s;
}

std::string render_poly(const Poly& p, const HMapContext& ctx, const RenderOptions& o, bool wrap) {
    if (p.empty()) return "0";
    std::string out;
    bool first = true;
    for (auto& [k, t] : p.terms()) {
        double c = t.coef;
        if (!first) out += c < 0 ? " - " : " + ";
        else if (c < 0) out += "-";
        first = false;
        double mag = std::fabs(c);
        std::vector<std::string> parts;
        for (auto& a : t.mono.scalars) parts.push_back(render_atom(*a, ctx, o));
        for (auto& a : t.mono.forms) parts.push_back(render_atom(*a, ctx, o));
        if (t.mono.dx) parts.push_back(render_dx(t.mono.dx, ctx, o));
        std::string body;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i) {
                bool scalar_gap = i <= t.mono.scalars.size();
                body += scalar_gap ? " " : glyphs(o).wedge;
            }
            body += parts[i];
        }
        if (body.empty())
            out += format_double(mag);
        else if (mag != 1.0)
            out += format_double(mag) + " " + body;
        else
            out += body;
    }
    if (wrap && p.terms().size() > 1) return "(" + out + ")";
    return out;
}

}  // namespace

std::string render(const Poly& p, const HMapContext& ctx, const RenderOptions& opt) {
    return render_poly(p, ctx, opt, false);
}

std::string render(const HMap& f, const HMapContext& ctx, const RenderOptions& opt) { return render(f.poly, ctx, opt); }

}  // namespace histodyn
