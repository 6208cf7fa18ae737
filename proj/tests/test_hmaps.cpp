#include <doctest.h>

#include <random>

#include "histodyn/hmaps.hpp"
#include "random_models.hpp"

using namespace histodyn;
using randmodel::context;

namespace {

HMapContext with_potential(HMapContext ctx) {
    ctx.params["m"] = 1.3;
    ctx.functions["U"] = {"u", ex::wedge(ex::constant(0.5), ex::wedge(ex::pow(ex::param("m"), 2), ex::pow(ex::arg(), 2)))};
    return ctx;
}

Expr half(Expr e) { return ex::wedge(ex::constant(0.5), std::move(e)); }

Expr kinetic() { return half(ex::wedge(ex::star(ex::P()), ex::P())); }

}  // namespace

TEST_CASE("grade inference follows the table of differentials") {
    auto ctx = context(4, 1);
    auto DP = ex::D(ex::P());  // [1;2]
    auto DC = ex::D(ex::C());  // [1;1]
    CHECK(infer_grade(DP, ctx) == GradeSignature{1, 2});
    CHECK(infer_grade(ex::wedge(DP, DC), ctx) == GradeSignature{2, 3});
    CHECK(infer_grade(ex::d(ex::C()), ctx) == GradeSignature{0, 2});
    CHECK(infer_grade(ex::D(ex::vol()), ctx) == GradeSignature{1, 4});
    CHECK_THROWS_AS(infer_grade(ex::wedge(ex::vol(), ex::vol()), ctx), HMapError);
    CHECK_THROWS_AS(infer_grade(ex::add(ex::C(), ex::P()), ctx), HMapError);
    CHECK_THROWS_AS(infer_grade(ex::param("k"), ctx), HMapError);
    CHECK_THROWS_AS(infer_grade(ex::fun("V", ex::C()), ctx), HMapError);
}

TEST_CASE("canonical form absorbs wedge signs") {
    auto ctx = context(3, 1);
    HMap a = lower(ex::wedge(ex::C(), ex::P()), ctx);
    HMap b = lower(ex::wedge(ex::P(), ex::C()), ctx);
    CHECK(a.poly == b.poly * -1.0);
    CHECK(lower(ex::wedge(ex::C(), ex::C()), ctx).is_zero());
    HMap s = lower(ex::star(ex::star(ex::C())), ctx);
    // n = 3, one time axis: s = +1, r(n-r) = 2
    CHECK(s.poly == lower(ex::C(), ctx).poly);
    HMap v = lower(ex::star(ex::constant(1.0)), ctx);
    CHECK(v.poly == lower(ex::vol(), ctx).poly);
}

TEST_CASE("partials of the standard scalar Hamiltonian") {
    auto ctx = with_potential(context(2, 0));
    HMap pot = lower(ex::wedge(ex::fun("U", ex::C()), ex::vol()), ctx);
    HMap dU = partial_wrt_C(pot, ctx);
    CHECK(dU.poly == lower(ex::wedge(ex::fun("U", ex::C(), 1), ex::vol()), ctx).poly);
    CHECK(dU.grade == GradeSignature{0, 2});
    CHECK(partial_wrt_P(pot, ctx).is_zero());

    HMap kin = lower(kinetic(), ctx);
    HMap dP = partial_wrt_P(kin, ctx);
    CHECK(dP.poly == lower(ex::star(ex::P()), ctx).poly);
    CHECK(dP.grade == GradeSignature{0, 1});
    CHECK(partial_wrt_C(kin, ctx).is_zero());

    HMap mass = lower(half(ex::wedge(ex::pow(ex::param("m"), 2), ex::wedge(ex::pow(ex::C(), 2), ex::vol()))), ctx);
    auto g = randmodel::grid(2, 4);
    Form zero(g, 0);
    Binding b{g, {zero, Form(g, 1), std::nullopt, {}}, {}, &ctx};
    CHECK(evaluate(partial_wrt_C(mass, ctx), b).max_abs() == 0.0);
}

TEST_CASE("one-dimensional momentum partial is P dt") {
    auto ctx = context(1, 0);
    HMap dP = partial_wrt_P(lower(kinetic(), ctx), ctx);
    RenderOptions o;
    o.vol_as_dt = true;
    CHECK(render(dP, ctx, o) == "P dt");
}

TEST_CASE("derivative of a form below the field grade is reported") {
    auto ctx = context(3, 2);
    // grade of C is 2; a 1-form depending on C has no partial
    HMap g = lower(ex::star(ex::C()), ctx);
    CHECK_THROWS_AS(partial_wrt_C(g, ctx), HMapError);
    // no dependence: zero, not an error
    CHECK(partial_wrt_C(lower(ex::dx(0), ctx), ctx).is_zero());
}

TEST_CASE("vertical derivative is nilpotent and expands into partials") {
    std::mt19937_64 rng(11);
    for (auto [n, r] : {std::pair{2, 0}, {3, 1}, {4, 1}, {1, 0}}) {
        auto ctx = context(n, r);
        for (int i = 0; i < 10; ++i) {
            HMap h = lower(randmodel::nonlinear(ctx, rng), ctx);
            HMap dh = vertical_derivative(h, ctx);
            CHECK(dh.grade == GradeSignature{1, n});
            CHECK(vertical_derivative(dh, ctx).is_zero());
            HMap expect = vertical_wedge(partial_wrt_C(h, ctx), lower(ex::D(ex::C()), ctx), ctx);
            expect.poly += vertical_wedge(partial_wrt_P(h, ctx), lower(ex::D(ex::P()), ctx), ctx).poly;
            // equal as maps; canonical forms may differ by a*b = b*a under the star
            auto g = randmodel::grid(n, 3);
            auto y = randmodel::random_history(g, ctx, rng);
            FieldValues var{oracle::random_form(g, r, rng), oracle::random_form(g, n - r - 1, rng), std::nullopt, {}};
            Binding b{g, y.values(), {var}, &ctx};
            CHECK(randmodel::rel_gap(evaluate(dh.poly, n, b), evaluate(expect.poly, n, b)) < 1e-13);
        }
    }
    auto ctx = context(2, 0);
    // Pi term: D(dx^mu ^ Pi_mu) = dx^mu ^ D Pi_mu
    Expr pi = ex::add(ex::wedge(ex::dx(0), ex::Pi(0)), ex::wedge(ex::dx(1), ex::Pi(1)));
    HMap dpi = vertical_derivative(lower(pi, ctx), ctx);
    Expr expect = ex::add(ex::wedge(ex::dx(0), ex::basis(Field::Pi, 0)), ex::wedge(ex::dx(1), ex::basis(Field::Pi, 1)));
    CHECK(dpi.poly == lower(expect, ctx).poly);
    HMap omega = lower(ex::wedge(ex::D(ex::P()), ex::D(ex::C())), ctx);
    CHECK(omega.grade == GradeSignature{2, 1});
    CHECK(vertical_derivative(omega, ctx).is_zero());
    CHECK(lower(ex::wedge(ex::D(ex::C()), ex::D(ex::C())), ctx).is_zero());
}

TEST_CASE("symbolic partials agree with the variation oracle") {
    std::mt19937_64 rng(5);
    for (auto [n, r] : {std::pair{1, 0}, {2, 0}, {3, 1}, {3, 0}}) {
        auto ctx = context(n, r);
        auto g = randmodel::grid(n, n == 1 ? 16 : 4);
        for (int i = 0; i < 8; ++i) {
            HMap q = lower(randmodel::quadratic(ctx, rng), ctx);
            auto y = randmodel::random_history(g, ctx, rng);
            Form dC = oracle::random_form(g, r, rng), dP = oracle::random_form(g, n - r - 1, rng);
            for (double h : {1e-1, 1e-3}) {
                Form o = variation_oracle(q, y, dC, dP, h, ctx);
                CHECK(randmodel::rel_gap(o, symbolic_variation(q, y, dC, dP, ctx)) < 1e-12);
            }
            HMap f = lower(randmodel::nonlinear(ctx, rng), ctx);
            Form o = variation_oracle(f, y, dC, dP, 1e-5, ctx);
            CHECK(randmodel::rel_gap(o, symbolic_variation(f, y, dC, dP, ctx)) < 1e-6);
        }
        auto y = randmodel::random_history(g, ctx, rng);
        HMap f = lower(randmodel::nonlinear(ctx, rng), ctx);
        Form zc(g, r), zp(g, n - r - 1);
        CHECK(variation_oracle(f, y, zc, zp, 1e-3, ctx).max_abs() == 0.0);
    }
}

TEST_CASE("exterior and vertical derivatives commute") {
    std::mt19937_64 rng(3);
    auto ctx = context(3, 0);
    auto g = randmodel::grid(3, 5);
    for (int i = 0; i < 5; ++i) {
        // grade-1 H-maps built from the fields
        Expr e = ex::add(ex::wedge(ex::fun("sin", ex::C()), ex::star(ex::P())),
                         ex::wedge(ex::pow(ex::C(), 2), ex::dx(static_cast<int>(rng() % 3))));
        HMap h = lower(e, ctx);
        HMap a = exterior(vertical_derivative(h, ctx), ctx);
        HMap b = vertical_derivative(exterior(h, ctx), ctx);
        CHECK(a.poly == b.poly);
        auto y = randmodel::random_history(g, ctx, rng);
        FieldValues var{oracle::random_form(g, 0, rng), oracle::random_form(g, 2, rng), std::nullopt, {}};
        Binding bind{g, y.values(), {var}, &ctx};
        Form ea = evaluate(a.poly, 2, bind), eb = evaluate(b.poly, 2, bind);
        CHECK((ea - eb).max_abs() < 1e-12);
        // evaluation commutes with d
        Binding base{g, y.values(), {}, &ctx};
        Form lhs = evaluate(exterior(h, ctx), base);
        Form rhs = exterior_derivative(evaluate(h, base));
        CHECK((lhs - rhs).max_abs() < 1e-9);
    }
}

TEST_CASE("evaluation of the standard Hamiltonian density") {
    auto ctx = with_potential(context(2, 0));
    auto g = randmodel::grid(2, 4);
    std::mt19937_64 rng(1);
    auto y = randmodel::random_history(g, ctx, rng);
    HMap H = lower(ex::add(kinetic(), ex::wedge(ex::fun("U", ex::C()), ex::vol())), ctx);
    Binding b{g, y.values(), {}, &ctx};
    Form v = evaluate(H, b);
    REQUIRE(v.grade() == 2);
    double m = 1.3;
    for (std::size_t c = 0; c < g->cell_count(); ++c) {
        // P = a dx^0 + b dx^1 = P^0 dx^1 - P^1 dx^0; *P ^ P = (b^2 - a^2) vol
        double p0 = y.P[Mask{1}][c], p1 = y.P[Mask{2}][c], C = y.C.component(0)[c];
        double expect = 0.5 * (p1 * p1 - p0 * p0) + 0.5 * m * m * C * C;
        CHECK(v.component(0)[c] == doctest::Approx(expect).epsilon(1e-14));
    }
    Form vol = evaluate(lower(ex::vol(), ctx), b);
    CHECK(vol.component(0)[0] == 1.0);
    CHECK((evaluate(lower(ex::C(), ctx), b) - y.C).max_abs() == 0.0);
}

TEST_CASE("point evaluation matches grid evaluation") {
    std::mt19937_64 rng(9);
    auto ctx = context(2, 0);
    auto g = randmodel::grid(2, 3);
    HMap h = lower(randmodel::nonlinear(ctx, rng), ctx);
    auto y = randmodel::random_history(g, ctx, rng);
    Binding b{g, y.values(), {}, &ctx};
    Form v = evaluate(h, b);
    for (std::size_t c = 0; c < g->cell_count(); ++c) {
        PointInputs in{PointValue(4, 0.0), PointValue(4, 0.0)};
        in.C[0] = y.C.component(0)[c];
        in.P[1] = y.P[Mask{1}][c];
        in.P[2] = y.P[Mask{2}][c];
        auto pv = evaluate_point(h.poly, in, ctx);
        CHECK(pv[3] == doctest::Approx(v.component(0)[c]).epsilon(1e-13));
    }
}
