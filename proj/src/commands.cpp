#include "histodyn/commands.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "histodyn/identities.hpp"
#include "histodyn/model_file.hpp"
#include "histodyn/numfmt.hpp"

namespace histodyn {

namespace {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Json = nlohmann::ordered_json;

// Round-trip tolerance of the derive verdict.
constexpr double kRoundTripTolerance = 1e-10;
constexpr int kRoundTripHistories = 20;
constexpr double kIdentityTolerance = 1e-12;

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    f.close();
    if (!f) throw IoError("failed writing '" + path + "'");
}

// Sends text to --out or the stream.
void emit(const std::string& text, const CommandOptions& o, std::ostream& out, CommandResult& res) {
    if (o.out) {
        write_file(*o.out, text);
        res.artifacts.push_back(*o.out);
    } else {
        out << text;
    }
}

double l2(const Form& f) {
    if (f.num_components() == 0) return 0.0;
    const auto& g = f.grid();
    double cell = 1.0;
    for (int a = 0; a < g.dim; ++a) cell *= g.spacing(a);
    double s = 0.0;
    for (std::size_t c = 0; c < f.num_components(); ++c)
        for (double v : f.component(c)) s += v * v;
    return std::sqrt(s * cell);
}

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string derive_text(const ModelSpec& m, std::uint64_t seed, bool& pass) {
    std::ostringstream o;
    RenderOptions ro = m.render_options();
    o << "model " << (m.name.empty() ? "(unnamed)" : m.name) << ": n = " << m.n() << ", r = " << m.r() << "\n";
    HMap H = model_hamiltonian(m);
    o << "H0 = " << render(H, m.ctx, ro) << "    " << H.grade.str() << "\n";
    auto L = model_lagrangian(m);
    if (L) o << "L = " << render(*L, m.ctx, ro) << "    " << L->grade.str() << "\n";
    o << "\nHamilton equations:\n";
    for (auto& line : render_equations(m, model_equations(m))) o << "  " << line << "\n";
    pass = true;
    if (L) {
        HMapContext lc = m.ctx;
        lc.allow_d = true;
        o << "\nEuler-Lagrange derivative: " << render(euler_lagrange(*L, lc), lc, ro) << "\n";
        auto rt = random_round_trips(m, kRoundTripHistories, seed);
        pass = rt.max_rel_gap < kRoundTripTolerance && rt.max_velocity_gap < kRoundTripTolerance;
        o << "Legendre round trip: " << rt.histories << " random histories (seed " << seed << "), max relative gap "
          << format_double(rt.max_rel_gap) << ", max velocity gap " << format_double(rt.max_velocity_gap) << ", tolerance "
          << format_double(kRoundTripTolerance) << ": " << (pass ? "ok" : "FAILED") << "\n";
    }
    return o.str();
}

}  // namespace

SimConfig resolve_config(const ModelSpec& m, const CommandOptions& o) {
    SimConfig c = SimConfig::from_model(m);
    if (o.dt) c.dt = *o.dt;
    if (o.steps) c.steps = *o.steps;
    if (o.scheme) {
        try {
            c.scheme = parse_scheme(*o.scheme);
        } catch (const SchemeError& e) {
            throw std::invalid_argument(e.what());
        }
    }
    if (c.record_every > c.steps) c.record_every = c.steps;
    return c;
}

RoundTripSummary random_round_trips(const ModelSpec& m, int histories, std::uint64_t seed) {
    auto L = model_lagrangian(m);
    if (!L) throw DynamicsError("the model has no Lagrangian");
    HMapContext lc = m.ctx;
    lc.allow_d = true;
    int n = m.n();
    int cells = n == 1 ? 32 : n == 2 ? 12 : n == 3 ? 6 : 4;
    auto g = DomainGrid::make(std::vector<int>(n, cells), std::vector<double>(n, 1.0), Boundary::periodic, lc.sig());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RoundTripSummary s;
    for (int i = 0; i < histories; ++i) {
        Form C(g, m.r());
        for (std::size_t c = 0; c < C.num_components(); ++c)
            for (auto& x : C.component(c)) x = u(rng);
        auto rt = legendre_round_trip(*L, C, lc);
        s.max_rel_gap = std::max(s.max_rel_gap, rt.rel_gap);
        s.max_velocity_gap = std::max(s.max_velocity_gap, rt.velocity_gap);
        ++s.histories;
    }
    return s;
}

std::string simulation_csv(const ModelSpec& m, const SimResult& r) {
    std::ostringstream o;
    bool particle = model_family(m) == Family::particle;
    if (particle)
        o << "step,t,q,p,energy\n";
    else
        o << "step,t," << m.field_name << "_l2," << m.momentum_name << "_l2,energy\n";
    for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
        const auto& s = r.trajectory[i];
        o << s.step << ',' << format_double(s.t) << ',';
        if (particle)
            o << format_double(s.q) << ',' << format_double(s.p);
        else
            o << format_double(l2(s.C)) << ',' << format_double(l2(s.P_sync));
        o << ',' << format_double(r.report.energy[i]) << '\n';
    }
    return o.str();
}

std::string report_json(const ModelSpec& m, const SimConfig& cfg, const DiagnoseOptions& opt, const ConservationReport& r) {
    Json j;
    j["model"] = {{"name", m.name}, {"dimension", m.n()}, {"rank", m.r()}, {"family", model_family(m) == Family::particle ? "particle" : model_family(m) == Family::scalar_field ? "scalar_field" : "gauge_field"}};
    if (m.grid) {
        Json cells = Json::array();
        for (int a = 1; a < m.grid->dim; ++a) cells.push_back(m.grid->sizes[a]);
        j["model"]["cells"] = cells;
    }
    Json tol = Json::object();
    for (auto& [k, v] : r.tolerances) tol[k] = num(v);
    j["config"] = {{"dt", num(cfg.dt)},
                   {"steps", cfg.steps},
                   {"scheme", scheme_name(cfg.scheme)},
                   {"tolerance", num(opt.tolerance)},
                   {"seed", m.sim.seed},
                   {"convergence_levels", opt.convergence_levels},
                   {"tolerances", tol}};
    j["residuals"] = {{"res_C", num(r.residual.res_C)},
                      {"res_P", num(r.residual.res_P)},
                      {"bracket_gap_C", num(r.bracket.gap_C)},
                      {"bracket_gap_P", num(r.bracket.gap_P)},
                      {"bracket_PC", num(r.bracket.PC)},
                      {"energy_first", num(r.energy.empty() ? 0.0 : r.energy.front())},
                      {"energy_drift", num(r.energy_drift)}};
    Json pv = Json::array();
    for (double v : r.pairing) pv.push_back(num(v));
    j["pairing"] = {{"hypersurface_spread", num(r.pairing_spread)}, {"values", pv}};
    Json nj = Json::array();
    for (auto& c : r.noether) {
        double ratio = c.dj_offshell > 0 ? c.dj_onshell / c.dj_offshell : 0.0;
        nj.push_back({{"symmetry", c.symmetry},
                      {"dj_onshell", num(c.dj_onshell)},
                      {"dj_offshell", num(c.dj_offshell)},
                      {"ratio", num(ratio)},
                      {"charge_first", num(c.charge.size() > 2 ? c.charge[2] : 0.0)},
                      {"charge_last", num(c.charge.size() > 2 ? c.charge[c.charge.size() - 3] : 0.0)}});
    }
    j["noether"] = nj;
    Json cj = Json::array();
    for (auto& row : r.convergence) cj.push_back({{"dt", num(row.dt)}, {"error", num(row.error)}, {"ratio", num(row.ratio)}});
    j["convergence"] = cj;
    Json pj = Json::object();
    for (auto& [k, v] : r.pass) pj[k] = v;
    pj["all"] = r.all_pass();
    j["pass"] = pj;
    return j.dump(2) + "\n";
}

CommandResult execute(const std::string& command, const ModelSpec& m, const CommandOptions& o, std::ostream& out) {
    CommandResult res;
    std::uint64_t seed = o.seed.value_or(m.sim.seed);
    if (command == "derive") {
        bool pass = true;
        std::string text = derive_text(m, seed, pass);
        emit(text, o, out, res);
        res.exit_code = pass ? exit_ok : exit_checks_failed;
        res.summary = pass ? "derived" : "Legendre round trip above tolerance";
    } else if (command == "simulate") {
        SimConfig cfg = resolve_config(m, o);
        SimResult r = run_simulation(m, cfg);
        emit(simulation_csv(m, r), o, out, res);
        std::ostringstream s;
        s << "simulated " << cfg.steps << " steps of dt " << format_double(cfg.dt) << " (" << scheme_name(cfg.scheme)
          << "), energy drift " << format_double(r.report.max_energy_drift);
        for (auto& w : r.warnings) s << "\nwarning: " << w;
        res.summary = s.str();
    } else if (command == "diagnose") {
        SimConfig cfg = resolve_config(m, o);
        DiagnoseOptions opt;
        opt.tolerance = o.tolerance.value_or(m.sim.tolerance);
        ModelSpec mm = m;
        mm.sim.seed = seed;
        auto rep = diagnose(mm, cfg, opt);
        emit(report_json(mm, cfg, opt, rep), o, out, res);
        res.exit_code = rep.all_pass() ? exit_ok : exit_checks_failed;
        std::ostringstream s;
        s << "diagnose: " << (rep.all_pass() ? "all checks pass" : "failed:");
        for (auto& [k, v] : rep.pass)
            if (!v) s << ' ' << k;
        res.summary = s.str();
    } else if (command == "check-identities") {
        double tol = o.tolerance.value_or(kIdentityTolerance);
        auto suites = run_identity_suites(seed, 100, tol);
        std::ostringstream t;
        bool all = true;
        t << "suite,samples,max_gap,tolerance,pass\n";
        for (auto& s : suites) {
            t << s.name << ',' << s.samples << ',' << format_double(s.max_gap) << ',' << format_double(s.tolerance) << ','
              << (s.pass() ? "PASS" : "FAIL") << '\n';
            all = all && s.pass();
        }
        emit(t.str(), o, out, res);
        res.exit_code = all ? exit_ok : exit_checks_failed;
        res.summary = all ? "identities hold" : "identity gap above tolerance";
    } else {
        throw std::invalid_argument("unknown command '" + command + "'");
    }
    return res;
}

CommandResult run_command(const std::string& command, const std::string& model_path, const CommandOptions& o,
                          std::ostream& out, std::ostream& err) {
    CommandResult res;
    auto fail = [&](int code, const std::string& what) {
        res.exit_code = code;
        res.summary = what;
        err << "error: " << what << "\n";
        return res;
    };
    try {
        ModelSpec m = load_model(model_path);
        res = execute(command, m, o, out);
        if (!res.summary.empty()) err << res.summary << "\n";
        return res;
    } catch (const ModelFileError& e) {
        return fail(exit_model_file, e.what());
    } catch (const CflError& e) {
        return fail(exit_cfl, e.what());
    } catch (const NonFiniteError& e) {
        return fail(exit_non_finite, e.what());
    } catch (const SimulationError& e) {
        return fail(exit_simulation, e.what());
    } catch (const DiagnosticsError& e) {
        return fail(exit_diagnostics, e.what());
    } catch (const DynamicsError& e) {
        return fail(exit_derivation, e.what());
    } catch (const HMapError& e) {
        return fail(exit_derivation, e.what());
    } catch (const IoError& e) {
        return fail(exit_io, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(exit_usage, e.what());
    } catch (const std::exception& e) {
        return fail(exit_internal, e.what());
    }
}

}  // namespace histodyn
