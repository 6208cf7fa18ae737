#include "histodyn/expr.hpp"

#include <sstream>

namespace histodyn {

namespace {

Expr node(Op op, std::vector<Expr> kids = {}) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->kids = std::move(kids);
    return n;
}

}  // namespace

namespace ex {
Expr constant(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = v;
    return n;
}
Expr param(const std::string& name) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Param;
    n->name = name;
    return n;
}
Expr C() { return node(Op::FieldC); }
Expr P() { return node(Op::FieldP); }
Expr Pi(int mu) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::FieldPi;
    n->index = mu;
    return n;
}
Expr X(int mu) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::FieldX;
    n->index = mu;
    return n;
}
Expr arg() { return node(Op::Arg); }
Expr dx(int mu) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::CoordDiff;
    n->index = mu;
    return n;
}
Expr vol(Mask slots) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::VolSlot;
    n->mask = slots;
    return n;
}
Expr star(Expr a) { return node(Op::Star, {std::move(a)}); }
Expr wedge(Expr a, Expr b) { return node(Op::Wedge, {std::move(a), std::move(b)}); }
Expr sum(std::vector<Expr> terms) { return node(Op::Sum, std::move(terms)); }
Expr add(Expr a, Expr b) { return sum({std::move(a), std::move(b)}); }
Expr sub(Expr a, Expr b) { return sum({std::move(a), neg(std::move(b))}); }
Expr neg(Expr a) { return node(Op::Neg, {std::move(a)}); }
Expr pow(Expr a, double e) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Pow;
    n->value = e;
    n->kids = {std::move(a)};
    return n;
}
Expr fun(const std::string& name, Expr a, int order) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::ScalarFun;
    n->name = name;
    n->index = order;
    n->kids = {std::move(a)};
    return n;
}
Expr d(Expr a) { return node(Op::ExtD, {std::move(a)}); }
Expr D(Expr a) { return node(Op::VertD, {std::move(a)}); }
Expr basis(Field f, int mu) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::VertBasis;
    n->field = f;
    n->index = mu;
    return n;
}
}  // namespace ex

int HMapContext::metric_sign() const {
    int s = 1;
    for (int v : sig()) s *= v;
    return s;
}

const std::vector<int>& HMapContext::sig() const {
    if (static_cast<int>(signature.size()) == n) return signature;
    static thread_local std::vector<int> fallback;
    fallback.assign(n, -1);
    fallback[0] = 1;
    return fallback;
}

int HMapContext::field_grade(Field f) const {
    switch (f) {
        case Field::C: return r;
        case Field::P: return n - r - 1;
        case Field::Pi: return n - 1;
        case Field::X: return 0;
        case Field::Arg: return 0;
    }
    return 0;
}

bool is_builtin_function(const std::string& name) {
    return name == "cos" || name == "sin" || name == "exp";
}

namespace {

[[noreturn]] void fail(const Expr& e, const std::string& msg) {
    std::ostringstream os;
    os << msg << " (node: " << describe(e) << ")";
    std::string bare = os.str();
    if (e && e->line > 0) os << " at line " << e->line << ", column " << e->column;
    throw HMapError(os.str(), bare, e ? e->line : 0, e ? e->column : 0);
}

GradeSignature check(const Expr& e, const HMapContext& ctx) {
    GradeSignature g;
    switch (e->op) {
        case Op::Const:
        case Op::Arg:
            return {0, 0};
        case Op::Param:
            if (!ctx.params.count(e->name)) fail(e, "unknown identifier '" + e->name + "'");
            return {0, 0};
        case Op::FieldC:
            return {0, ctx.field_grade(Field::C)};
        case Op::FieldP:
            return {0, ctx.field_grade(Field::P)};
        case Op::FieldPi:
        case Op::FieldX:
            if (e->index < 0 || e->index >= ctx.n) fail(e, "index out of range");
            return {0, ctx.field_grade(e->op == Op::FieldPi ? Field::Pi : Field::X)};
        case Op::CoordDiff:
            if (e->index < 0 || e->index >= ctx.n) fail(e, "dx index out of range");
            return {0, 1};
        case Op::VolSlot:
            if (e->mask >> ctx.n) fail(e, "Vol slot outside the domain dimension");
            return {0, ctx.n - popcount(e->mask)};
        case Op::Star: {
            auto a = check(e->kids.at(0), ctx);
            return {a.k, ctx.n - a.R};
        }
        case Op::Wedge: {
            auto a = check(e->kids.at(0), ctx), b = check(e->kids.at(1), ctx);
            g = {a.k + b.k, a.R + b.R};
            break;
        }
        case Op::Sum: {
            if (e->kids.empty()) return {0, 0};
            g = check(e->kids[0], ctx);
            for (std::size_t i = 1; i < e->kids.size(); ++i) {
                auto t = check(e->kids[i], ctx);
                if (!(t == g)) fail(e->kids[i], "grade mismatch in sum: " + g.str() + " vs " + t.str());
            }
            break;
        }
        case Op::Neg:
            return check(e->kids.at(0), ctx);
        case Op::Pow: {
            auto a = check(e->kids.at(0), ctx);
            bool integral = e->value >= 0 && e->value == static_cast<double>(static_cast<long>(e->value));
            if (!(a == GradeSignature{0, 0}) && !integral)
                fail(e, "non-integer power of a form of grade " + a.str());
            g = {a.k * static_cast<int>(e->value), a.R * static_cast<int>(e->value)};
            if (!integral) g = {0, 0};
            break;
        }
        case Op::ScalarFun: {
            if (!is_builtin_function(e->name) && !ctx.functions.count(e->name))
                fail(e, "unknown function '" + e->name + "'");
            auto a = check(e->kids.at(0), ctx);
            if (!(a == GradeSignature{0, 0})) fail(e, "function argument must be a [0;0] scalar, got " + a.str());
            return {0, 0};
        }
        case Op::ExtD: {
            if (!ctx.allow_d) fail(e, "d(.) is only allowed in Lagrangians");
            auto a = check(e->kids.at(0), ctx);
            g = {a.k, a.R + 1};
            break;
        }
        case Op::VertD: {
            auto a = check(e->kids.at(0), ctx);
            g = {a.k + 1, a.R};
            break;
        }
        case Op::VertBasis:
            if ((e->field == Field::Pi || e->field == Field::X) && (e->index < 0 || e->index >= ctx.n))
                fail(e, "index out of range");
            return {1, ctx.field_grade(e->field)};
    }
    if (g.R > ctx.n) fail(e, "grade overflow: " + g.str() + " exceeds n = " + std::to_string(ctx.n));
    return g;
}

}  // namespace

GradeSignature infer_grade(const Expr& e, const HMapContext& ctx) {
    if (!e) throw HMapError("empty expression");
    return check(e, ctx);
}

bool mentions_coordinates(const Expr& e) {
    if (!e) return false;
    if (e->op == Op::FieldX) return true;
    if (e->op == Op::VertBasis && e->field == Field::X) return true;
    for (auto& k : e->kids)
        if (mentions_coordinates(k)) return true;
    return false;
}

std::string describe(const Expr& e) {
    if (!e) return "<null>";
    std::ostringstream os;
    auto kids = [&](const char* sep) {
        for (std::size_t i = 0; i < e->kids.size(); ++i) {
            if (i) os << sep;
            os << describe(e->kids[i]);
        }
    };
    switch (e->op) {
        case Op::Const: os << e->value; break;
        case Op::Param: os << e->name; break;
        case Op::FieldC: os << "C"; break;
        case Op::FieldP: os << "P"; break;
        case Op::FieldPi: os << "Pi" << e->index; break;
        case Op::FieldX: os << "X" << e->index; break;
        case Op::Arg: os << "arg"; break;
        case Op::CoordDiff: os << "dx" << e->index; break;
        case Op::VolSlot: os << "vol"; break;
        case Op::Star: os << "star("; kids(","); os << ")"; break;
        case Op::Wedge: os << "wedge("; kids(","); os << ")"; break;
        case Op::Sum: os << "("; kids(" + "); os << ")"; break;
        case Op::Neg: os << "-"; kids(""); break;
        case Op::Pow: os << "pow("; kids(","); os << "," << e->value << ")"; break;
        case Op::ScalarFun: os << e->name << std::string(e->index, '\'') << "("; kids(","); os << ")"; break;
        case Op::ExtD: os << "d("; kids(","); os << ")"; break;
        case Op::VertD: os << "D("; kids(","); os << ")"; break;
        case Op::VertBasis: os << "D" << static_cast<int>(e->field); break;
    }
    return os.str();
}

}  // namespace histodyn
