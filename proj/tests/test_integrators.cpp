#include <doctest.h>

#include <cmath>

#include "histodyn/integrators.hpp"
#include "histodyn/parallel.hpp"
#include "model_builders.hpp"

using namespace histodyn;

namespace {

SimConfig config(double dt, int steps, Scheme s = Scheme::leapfrog) {
    SimConfig c;
    c.dt = dt;
    c.steps = steps;
    c.scheme = s;
    return c;
}

double oscillator_error(double dt) {
    auto m = builders::oscillator();
    int steps = static_cast<int>(std::lround(2 * M_PI / dt));
    double T = steps * dt;
    auto r = run_simulation(m, config(dt, steps));
    auto& s = r.trajectory.back();
    return std::hypot(s.q - std::cos(T), s.p + std::sin(T));
}

// Max nodal error of a KG plane wave after one period; dt = h / 2.
double plane_wave_error(int cells, double mass, int mode) {
    double L = 2 * M_PI;
    auto m = builders::klein_gordon(cells, mass, mode);
    double h = L / cells, k = 2 * M_PI * mode / L, w = std::sqrt(k * k + mass * mass);
    double T = 2 * M_PI / w;
    int steps = static_cast<int>(std::ceil(T / (0.5 * h)));
    auto r = run_simulation(m, config(T / steps, steps));
    auto C = r.trajectory.back().C.component(0);
    double e = 0;
    for (int j = 0; j < cells; ++j) e = std::max(e, std::abs(C[j] - std::cos(k * j * h - w * T)));
    return e;
}

}  // namespace

TEST_CASE("oscillator leapfrog") {
    auto m = builders::oscillator();
    int steps = static_cast<int>(std::lround(2 * M_PI / 1e-3));
    auto r = run_simulation(m, config(1e-3, steps));
    auto& s = r.trajectory.back();
    CHECK(r.trajectory.size() == static_cast<std::size_t>(steps + 1));
    CHECK(std::hypot(s.q - std::cos(s.t), s.p + std::sin(s.t)) < 1e-3);
    CHECK(std::hypot(s.q - 1.0, s.p) < 1e-3);
    CHECK(r.report.max_energy_drift < 1e-6);
    CHECK(r.report.energy.front() == doctest::Approx(0.5));
    // the integrator's own history satisfies the staggered equations to rounding
    REQUIRE(r.report.residual);
    CHECK(r.report.residual->res_C < 1e-12);
    CHECK(r.report.residual->res_P < 1e-12);

    double e1 = oscillator_error(1e-2), e2 = oscillator_error(5e-3), e3 = oscillator_error(2.5e-3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("leapfrog energy error is bounded by C dt^2") {
    // C fitted once at dt = 1e-2 (measured 0.125 for q0 = 1, m = 1)
    const double C = 0.15;
    auto m = builders::oscillator();
    for (double dt : {2e-2, 1e-2}) {
        auto r = run_simulation(m, config(dt, 100000 / (dt > 1.5e-2 ? 2 : 1)));
        CHECK(r.report.max_energy_drift <= C * dt * dt);
        // no secular growth: second half of the run is no worse than the first
        auto& E = r.report.energy;
        double first = 0, second = 0;
        for (std::size_t i = 0; i < E.size(); ++i) {
            double& slot = i < E.size() / 2 ? first : second;
            slot = std::max(slot, std::abs(E[i] - E[0]));
        }
        CHECK(second <= first * 1.01 + 1e-15);
    }
}

TEST_CASE("symplectic Euler is exact for free motion") {
    auto m = builders::oscillator(1.0, "none", 0.3, 1.7);
    auto r = run_simulation(m, config(0.01, 500, Scheme::symplectic_euler));
    for (auto& s : r.trajectory) {
        CHECK(s.p == 1.7);
        CHECK(s.q == doctest::Approx(0.3 + s.step * 0.01 * 1.7).epsilon(1e-13));
    }
    // first order for the oscillator
    auto osc = builders::oscillator();
    auto err = [&](double dt) {
        int steps = static_cast<int>(std::lround(1.0 / dt));
        auto s = run_simulation(osc, config(dt, steps, Scheme::symplectic_euler)).trajectory.back();
        return std::hypot(s.q - std::cos(s.t), s.p + std::sin(s.t));
    };
    CHECK(err(1e-2) / err(5e-3) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("zero data stays zero") {
    auto osc = builders::oscillator(1.0, "quadratic", 0.0, 0.0);
    for (auto& s : run_simulation(osc, config(0.1, 50)).trajectory) {
        CHECK(s.q == 0.0);
        CHECK(s.p == 0.0);
    }
    auto kg = builders::klein_gordon(16, 1.0, 1, "quartic", 0.0);
    for (auto& s : run_simulation(kg, config(0.1, 20)).trajectory) {
        CHECK(s.C.is_zero());
        CHECK(s.P_half.is_zero());
    }
    auto em = builders::maxwell(8);
    em.initial.clear();
    for (auto& s : run_simulation(em, config(0.1, 20, Scheme::yee)).trajectory) CHECK(s.C.is_zero());
}

TEST_CASE("Klein-Gordon plane wave converges at second order") {
    double e1 = plane_wave_error(64, 0.5, 2), e2 = plane_wave_error(128, 0.5, 2), e3 = plane_wave_error(256, 0.5, 2);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.125));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.125));
    CHECK(e3 < 1e-3);

    auto m = builders::klein_gordon(64, 0.5, 2);
    auto r = run_simulation(m, config(0.02, 200));
    REQUIRE(r.report.residual);
    CHECK(r.report.residual->res_C < 1e-12);
    CHECK(r.report.residual->res_P < 1e-12);
    CHECK(r.report.max_energy_drift < 1e-3 * std::abs(r.report.energy.front()));
}

TEST_CASE("staggered layouts") {
    auto kg = builders::klein_gordon(16);
    Stepper s(kg, model_equations(kg), config(0.1, 1));
    CHECK(s.layout_C() == std::vector<Mask>{0});
    CHECK(s.layout_P() == std::vector<Mask>{0});
    CHECK(s.layout_Pt() == std::vector<Mask>{1});
    auto em = builders::maxwell(8);
    Stepper y(em, model_equations(em), config(0.1, 1, Scheme::yee));
    // A_1 on x-edges, A_2 on y-edges, the magnetic component on faces
    CHECK(y.layout_C() == std::vector<Mask>{1, 2});
    CHECK(y.layout_P() == std::vector<Mask>{2, 1});
    CHECK(y.layout_Pt() == std::vector<Mask>{3});
}

TEST_CASE("Yee update preserves Gauss law") {
    auto em = builders::maxwell(32);
    auto r = run_simulation(em, config(0.5 * 2 * M_PI / 32, 400, Scheme::yee));
    double first = exterior_derivative(r.trajectory.front().P_half).max_abs();
    for (auto& s : r.trajectory) CHECK(exterior_derivative(s.P_half).max_abs() < 1e-12);
    CHECK(first < 1e-12);
    REQUIRE(r.report.residual);
    CHECK(r.report.residual->res_C < 1e-12);
    CHECK(r.report.residual->res_P < 1e-12);
    CHECK(r.report.max_energy_drift < 0.05 * std::abs(r.report.energy.front()));
}

TEST_CASE("integrator errors") {
    auto kg = builders::klein_gordon(16);
    double h = 2 * M_PI / 16;
    CHECK_THROWS_AS(run_simulation(kg, config(1.5 * h, 2)), CflError);
    auto c = config(1.5 * h, 2);
    c.allow_cfl_violation = true;
    auto r = run_simulation(kg, c);
    CHECK(r.warnings.size() == 1);
    CHECK_THROWS_AS(run_simulation(kg, config(0.1, 2, Scheme::yee)), SchemeError);
    CHECK_THROWS_AS(run_simulation(builders::maxwell(8), config(0.1, 2, Scheme::leapfrog)), SchemeError);
    CHECK_THROWS_AS(run_simulation(builders::oscillator(), config(0.1, 2, Scheme::yee)), SchemeError);
    CHECK_THROWS_AS(run_simulation(builders::oscillator(), config(-0.1, 2)), SimulationError);
    CHECK_THROWS_AS(parse_scheme("rk4"), SchemeError);

    auto bad = builders::oscillator();
    bad.initial["v"] = ex::constant(1.0);
    CHECK_THROWS_AS(run_simulation(bad, config(0.1, 2)), SimulationError);

    // H = 1/2 C^2 P^2 dt couples C and P
    auto coupled = builders::oscillator();
    coupled.lagrangian = nullptr;
    coupled.hamiltonian = builders::half(ex::wedge(ex::wedge(ex::pow(ex::C(), 2), ex::pow(ex::P(), 2)), ex::vol()));
    CHECK_THROWS_AS(run_simulation(coupled, config(0.1, 2)), SchemeError);

    // runaway quartic overflows; the step index is reported
    auto runaway = builders::oscillator(1.0, "quartic", 1e100, 0.0);
    runaway.ctx.params["lambda"] = 1e10;
    try {
        run_simulation(runaway, config(0.1, 10));
        FAIL("expected a non-finite state");
    } catch (const NonFiniteError& e) {
        CHECK(e.step >= 0);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("tangent integration of a linear model equals the model itself") {
    auto m = builders::oscillator();
    auto c = config(0.01, 300);
    c.tangents.push_back({{"q", ex::constant(1.0)}, {"p", ex::constant(0.0)}});
    auto r = run_simulation(m, c);
    for (auto& s : r.trajectory) {
        CHECK(s.tangents[0].dq == doctest::Approx(s.q).epsilon(1e-14));
        CHECK(s.tangents[0].dp_half == doctest::Approx(s.p_half).epsilon(1e-14));
    }
    auto kg = builders::klein_gordon(32, 1.0, 1);
    auto kc = config(0.05, 40);
    kc.tangents.push_back(kg.initial);
    auto kr = run_simulation(kg, kc);
    auto& s = kr.trajectory.back();
    CHECK((s.tangents[0].dC - s.C).max_abs() < 1e-14);
    CHECK((s.tangents[0].dP_half - s.P_half).max_abs() < 1e-14);
}

TEST_CASE("runs are deterministic across thread counts") {
    auto kg = builders::klein_gordon(4096, 0.7, 3, "cosine");
    auto c = config(1e-3, 20);
    unsigned old = thread_cap();
    set_thread_cap(1);
    auto a = run_simulation(kg, c);
    set_thread_cap(4);
    auto b = run_simulation(kg, c);
    set_thread_cap(old);
    auto x = a.trajectory.back().C.component(0), y = b.trajectory.back().C.component(0);
    CHECK(std::equal(x.begin(), x.end(), y.begin()));
    CHECK(a.report.energy == b.report.energy);
}

TEST_CASE("initial arrays override expressions") {
    auto kg = builders::klein_gordon(8);
    auto c = config(0.1, 1);
    c.initial_arrays["C"] = std::vector<double>(8, 0.25);
    c.initial_arrays["C_t"] = std::vector<double>(8, 0.0);
    auto r = run_simulation(kg, c);
    CHECK(r.trajectory.front().C.component(0)[3] == 0.25);
    c.initial_arrays["C"] = std::vector<double>(7, 0.25);
    CHECK_THROWS_AS(run_simulation(kg, c), SimulationError);
}
