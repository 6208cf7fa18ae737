#include <doctest.h>

#include <cmath>
#include <random>

#include "histodyn/diagnostics.hpp"
#include "model_builders.hpp"
#include "oracle.hpp"

using namespace histodyn;

namespace {

SimConfig config(double dt, int steps, Scheme s = Scheme::leapfrog) {
    SimConfig c;
    c.dt = dt;
    c.steps = steps;
    c.scheme = s;
    return c;
}

Expr mode(double k) { return ex::fun("cos", ex::wedge(ex::constant(k), ex::X(1))); }

HamiltonianHistory kg_history(int cells, double mass = 0.5, const std::string& potential = "quadratic") {
    auto m = builders::klein_gordon(cells, mass, 1, potential);
    auto c = config(0.5 * 2 * M_PI / cells, static_cast<int>(std::lround(2.0 / (0.5 * 2 * M_PI / cells))));
    return assemble_history(m, run_simulation(m, c).trajectory, c.dt);
}

}  // namespace

TEST_CASE("pairing is antisymmetric and bilinear") {
    auto g = DomainGrid::make({16}, {2 * M_PI}, Boundary::periodic);
    std::mt19937_64 rng(5);
    auto random_solution = [&] {
        LinearizedSolution s;
        s.steps = {0, 1};
        for (int k = 0; k < 2; ++k) {
            s.dC.push_back(oracle::random_form(g, 0, rng));
            s.dP.push_back(oracle::random_form(g, 1, rng));
        }
        return s;
    };
    auto a = random_solution(), b = random_solution(), c = random_solution();
    for (std::size_t k = 0; k < 2; ++k) {
        double ab = symplectic_pairing(a, b, k), ba = symplectic_pairing(b, a, k);
        CHECK(ab == doctest::Approx(-ba).epsilon(1e-14));
        CHECK(symplectic_pairing(a, a, k) == doctest::Approx(0.0).scale(1.0));
        LinearizedSolution mix = a;
        mix.dC[k] = 2.0 * a.dC[k] - 3.0 * c.dC[k];
        mix.dP[k] = 2.0 * a.dP[k] - 3.0 * c.dP[k];
        double expect = 2.0 * symplectic_pairing(a, b, k) - 3.0 * symplectic_pairing(c, b, k);
        CHECK(symplectic_pairing(mix, b, k) == doctest::Approx(expect).epsilon(1e-12));
    }
    LinearizedSolution p;
    p.steps = {0};
    p.dq = {2.0};
    p.dp = {3.0};
    CHECK_THROWS_AS(symplectic_pairing(a, p, 0), DiagnosticsError);
    CHECK_THROWS_AS(symplectic_pairing(a, b, 2), DiagnosticsError);
}

TEST_CASE("oscillator pairing of the position and momentum kicks is -1 on every slice") {
    auto m = builders::oscillator();
    auto c = config(1e-2, 700);
    c.tangents = {{{"q", ex::constant(1.0)}}, {{"p", ex::constant(1.0)}}};
    auto r = run_simulation(m, c);
    auto ind = hypersurface_independence(tangent_series(r.trajectory, 0), tangent_series(r.trajectory, 1),
                                         {0, 1, 100, 350, 700});
    for (double v : ind.values) CHECK(v == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(ind.max_rel_spread < 1e-12);
    CHECK_THROWS_AS(tangent_series(r.trajectory, 2), DiagnosticsError);
    CHECK_THROWS_AS(hypersurface_independence(tangent_series(r.trajectory, 0), tangent_series(r.trajectory, 1), {}),
                    DiagnosticsError);

    // one slice repeated has no spread
    auto same = hypersurface_independence(tangent_series(r.trajectory, 0), tangent_series(r.trajectory, 1), {5, 5, 5});
    CHECK(same.max_rel_spread == 0.0);
}

TEST_CASE("the discrete tangent map is symplectic for nonlinear potentials") {
    auto pend = builders::oscillator(1.0, "cosine", 2.0, 0.0);
    auto c = config(0.05, 400);
    c.tangents = {{{"q", ex::constant(1.0)}, {"p", ex::constant(0.3)}}, {{"p", ex::constant(1.0)}}};
    auto r = run_simulation(pend, c);
    std::vector<std::size_t> all(r.trajectory.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    auto ind = hypersurface_independence(tangent_series(r.trajectory, 0), tangent_series(r.trajectory, 1), all);
    CHECK(ind.max_rel_spread < 1e-10);

    auto kg = builders::klein_gordon(64, 1.0, 1, "quartic");
    auto kc = config(0.04, 100);
    kc.tangents = {{{"C", mode(1.0)}}, {{"C_t", mode(1.0)}}};
    auto kr = run_simulation(kg, kc);
    std::vector<std::size_t> ks(kr.trajectory.size());
    for (std::size_t i = 0; i < ks.size(); ++i) ks[i] = i;
    auto kind = hypersurface_independence(tangent_series(kr.trajectory, 0), tangent_series(kr.trajectory, 1), ks);
    CHECK(std::abs(kind.values[0]) > 1.0);
    CHECK(kind.max_rel_spread < 1e-10);
}

TEST_CASE("distinct Fourier modes of the free field pair to zero") {
    auto kg = builders::klein_gordon(64, 1.0, 1);
    auto c = config(0.04, 50);
    c.tangents = {{{"C", mode(1.0)}}, {{"C_t", mode(2.0)}}};
    auto r = run_simulation(kg, c);
    auto a = tangent_series(r.trajectory, 0), b = tangent_series(r.trajectory, 1);
    for (std::size_t k : {0, 25, 50}) CHECK(std::abs(symplectic_pairing(a, b, k)) < 1e-12);
}

TEST_CASE("oscillator energy is the time-translation charge") {
    auto m = builders::oscillator();
    auto c = config(1e-3, 3000);
    auto r = run_simulation(m, c);
    auto y = assemble_history(m, r.trajectory, c.dt);
    auto on = noether_current(m, {Symmetry::Kind::translation, 0, 1.0}, y);
    // interior slices only: the ends use one-sided time stencils
    for (std::size_t k = 2; k + 2 < on.charge.size(); k += 500) CHECK(on.charge[k] == doctest::Approx(0.5).epsilon(1e-5));
    auto off = noether_current(m, {Symmetry::Kind::translation, 0, 1.0}, offshell_variant(y, 0.1));
    CHECK(on.dj_norm <= 1e-3 * off.dj_norm);
    CHECK_THROWS_AS(noether_current(m, {Symmetry::Kind::translation, 1, 1.0}, y), DiagnosticsError);
}

TEST_CASE("Klein-Gordon Noether currents converge at second order") {
    auto m = builders::klein_gordon(64, 0.5, 1);
    double prev[2] = {0, 0};
    for (int cells : {64, 128, 256}) {
        auto y = kg_history(cells);
        for (int axis : {0, 1}) {
            double dj = noether_current(m, {Symmetry::Kind::translation, axis, 1.0}, y).dj_norm;
            if (prev[axis] > 0) CHECK(prev[axis] / dj == doctest::Approx(4.0).epsilon(0.125));
            prev[axis] = dj;
        }
    }
    // off-shell stays O(1) under refinement
    auto y = kg_history(128);
    double off = noether_current(m, {Symmetry::Kind::translation, 1, 1.0}, offshell_variant(y, 0.1)).dj_norm;
    CHECK(off > 0.05);
}

TEST_CASE("field shift of the massless field") {
    auto m = builders::klein_gordon(64, 0.0, 1, "none");
    auto y = kg_history(64, 0.0, "none");
    auto nr = noether_current(m, {Symmetry::Kind::field_shift, 0, 2.0}, y);
    CHECK((nr.j - 2.0 * y.P).max_abs() < 1e-14);
    CHECK(nr.dj_norm < 1e-12);
    // the total momentum is the charge
    for (std::size_t k = 2; k + 2 < nr.charge.size(); k += 17) CHECK(nr.charge[k] == doctest::Approx(nr.charge[2]).epsilon(1e-12));

    auto massive = builders::klein_gordon(64, 0.5, 1);
    CHECK_THROWS_AS(noether_current(massive, {Symmetry::Kind::field_shift, 0, 1.0}, kg_history(64)), DiagnosticsError);
    CHECK_THROWS_AS(noether_current(builders::maxwell(8), {Symmetry::Kind::field_shift, 0, 1.0}, y), DiagnosticsError);
}

TEST_CASE("bracket relations on and off shell") {
    auto m = builders::oscillator();
    auto c = config(1e-3, 2000);
    auto y = assemble_history(m, run_simulation(m, c).trajectory, c.dt);
    auto on = bracket_onshell_check(m, y, 1e-6);
    CHECK(on.PC == 1.0);
    CHECK(on.gap_C < 1e-6);
    CHECK(on.gap_P < 1e-6);
    CHECK(on.pass);
    auto off = bracket_onshell_check(m, offshell_variant(y, 0.1), 1e-6);
    CHECK(off.PC == 1.0);
    CHECK(off.gap_C > 1e-3);
    CHECK(!off.pass);

    auto kg = builders::klein_gordon(64, 0.5, 1);
    auto ky = kg_history(64);
    auto kb = bracket_onshell_check(kg, ky, 1e-6);
    CHECK(kb.pass);
    CHECK(!bracket_onshell_check(kg, offshell_variant(ky, 0.1), 1e-6).pass);
}

TEST_CASE("diagnose: oscillator report") {
    auto rep = diagnose(builders::oscillator(), config(1e-3, 2000));
    CHECK(rep.steps.size() == 2001);
    CHECK(rep.energy.size() == 2001);
    CHECK(rep.energy_drift < 1e-6);
    CHECK(rep.pairing_spread < 1e-10);
    REQUIRE(rep.noether.size() == 1);
    CHECK(rep.noether[0].symmetry == "time_translation");
    REQUIRE(rep.convergence.size() == 2);
    CHECK(rep.convergence[1].ratio == doctest::Approx(4.0).epsilon(0.125));
    for (auto key : {"residual", "pairing", "bracket", "convergence", "noether_time_translation"}) {
        REQUIRE(rep.pass.count(key) == 1);
        CHECK(rep.pass.at(key));
    }
    CHECK(rep.all_pass());
    CHECK(rep.tolerances.at("noether_factor") == 1e-3);
}

TEST_CASE("diagnose: symplectic Euler is judged at first order") {
    auto rep = diagnose(builders::oscillator(), config(1e-3, 1000, Scheme::symplectic_euler));
    CHECK(rep.convergence[1].ratio == doctest::Approx(2.0).epsilon(0.125));
    CHECK(rep.pass.at("convergence"));
    CHECK(rep.tolerances.at("order_low") == 1.5);
}

TEST_CASE("diagnose: free scalar field lists both translations and the shift") {
    auto kg = builders::klein_gordon(32, 0.0, 1, "none");
    auto rep = diagnose(kg, config(0.5 * 2 * M_PI / 32, 64));
    std::vector<std::string> names;
    for (auto& c : rep.noether) names.push_back(c.symmetry);
    CHECK(names == std::vector<std::string>{"time_translation", "translation_x1", "field_shift"});
    CHECK(rep.pass.at("noether_field_shift"));
    CHECK(rep.pass.at("residual"));
    CHECK(rep.pass.at("pairing"));
}
