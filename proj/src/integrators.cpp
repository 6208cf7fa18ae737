#include "histodyn/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "histodyn/parallel.hpp"

namespace histodyn {

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::symplectic_euler: return "symplectic_euler";
        case Scheme::leapfrog: return "leapfrog";
        case Scheme::yee: return "yee";
    }
    return "?";
}

Scheme parse_scheme(const std::string& s) {
    if (s == "symplectic_euler") return Scheme::symplectic_euler;
    if (s == "leapfrog") return Scheme::leapfrog;
    if (s == "yee") return Scheme::yee;
    throw SchemeError("unknown scheme '" + s + "' (symplectic_euler, leapfrog, yee)");
}

Family model_family(const ModelSpec& m) {
    int n = m.n(), r = m.r();
    if (n == 1 && r == 0) return Family::particle;
    if (n >= 2 && r == 0) return Family::scalar_field;
    if (n >= 3 && r == 1) return Family::gauge_field;
    throw SchemeError("no integrator for fields of rank " + std::to_string(r) + " in n = " + std::to_string(n));
}

Scheme default_scheme(Family f) {
    switch (f) {
        case Family::particle:
        case Family::scalar_field: return Scheme::leapfrog;
        case Family::gauge_field: return Scheme::yee;
    }
    return Scheme::leapfrog;
}

SimConfig SimConfig::from_model(const ModelSpec& m) {
    SimConfig c;
    c.dt = m.sim.dt;
    c.steps = m.sim.steps;
    c.record_every = m.sim.record_every;
    c.scheme = m.sim.scheme.empty() ? default_scheme(model_family(m)) : parse_scheme(m.sim.scheme);
    c.allow_cfl_violation = m.sim.allow_cfl_violation;
    c.initial_arrays = m.initial_arrays;
    return c;
}

namespace {

constexpr std::size_t kChunk = 64;

bool all_finite(const Form& f) {
    if (f.num_components() == 0) return true;
    for (std::size_t c = 0; c < f.num_components(); ++c)
        for (double v : f.component(c))
            if (!std::isfinite(v)) return false;
    return true;
}

std::size_t index_of(const std::vector<Mask>& v, Mask m) {
    auto it = std::find(v.begin(), v.end(), m);
    if (it == v.end()) throw SchemeError("internal: component not found");
    return static_cast<std::size_t>(it - v.begin());
}

PointValue point_wedge(const PointValue& a, const PointValue& b) {
    PointValue out(a.size(), 0.0);
    for (Mask A = 0; A < a.size(); ++A) {
        if (a[A] == 0.0) continue;
        for (Mask B = 0; B < b.size(); ++B)
            if (!(A & B) && b[B] != 0.0) out[A | B] += merge_sign(A, B) * a[A] * b[B];
    }
    return out;
}

// interior product with the time direction; dx^0 always comes first
PointValue point_iota0(const PointValue& a) {
    PointValue out(a.size(), 0.0);
    for (Mask M = 0; M < a.size(); ++M)
        if (M & 1u) out[M & ~1u] = a[M];
    return out;
}

std::vector<Mask> masks_or_empty(int n, int r) {
    if (r < 0 || r > n) return {};
    return grade_masks(n, r);
}

}  // namespace

Stepper::Stepper(const ModelSpec& m, const FieldEquations& eqs, const SimConfig& cfg)
    : model_(m), ctx_(m.ctx), eqs_(eqs), cfg_(cfg), family_(model_family(m)), n_(m.n()), r_(m.r()) {
    ctx_.allow_d = false;
    H0_ = model_hamiltonian(m);
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw SimulationError("dt must be positive");
    if (cfg.steps < 0) throw SimulationError("steps must be non-negative");
    if (cfg.record_every < 1) throw SimulationError("record_every must be at least 1");
    switch (family_) {
        case Family::particle:
            if (cfg.scheme == Scheme::yee) throw SchemeError("yee needs a gauge field; use leapfrog or symplectic_euler");
            break;
        case Family::scalar_field:
            if (cfg.scheme != Scheme::leapfrog) throw SchemeError("scalar fields use the staggered leapfrog");
            break;
        case Family::gauge_field:
            if (cfg.scheme != Scheme::yee) throw SchemeError("gauge fields use the yee scheme");
            break;
    }
    if (eqs.rhs_dC.poly.depends_on(Field::C) || eqs.rhs_dP.poly.depends_on(Field::P))
        throw SchemeError("explicit schemes need a separable Hamiltonian: dH/dP free of C and dH/dC free of P");
    // fields: dH/dP is probed below as a linear map instead
    jac_C_ = family_ == Family::particle ? partial(eqs.rhs_dC, Field::P, ctx_).poly : Poly(n_);
    if (!eqs.rhs_dP.is_zero()) {
        if (r_ != 0) throw SchemeError("gauge fields with sources are not integrated");
        jac_P_ = partial(eqs.rhs_dP, Field::C, ctx_).poly;
    } else {
        jac_P_ = Poly(n_);
    }
    if (family_ == Family::particle) {
        check_keys(m.initial);
        for (auto& t : cfg.tangents) check_keys(t);
        return;
    }

    if (!m.grid || m.grid->dim != n_) throw SimulationError("field models need a grid of dimension n");
    if (m.grid->boundary != Boundary::periodic) throw SimulationError("field models are integrated on periodic grids");
    const auto& G = *m.grid;
    std::vector<int> sizes(G.sizes.begin() + 1, G.sizes.end());
    std::vector<double> ext(G.extents.begin() + 1, G.extents.end());
    std::vector<int> sig(G.signature.begin() + 1, G.signature.end());
    sgrid_ = DomainGrid::make(sizes, ext, Boundary::periodic, sig);
    int ns = n_ - 1;

    // probe the evaluated dH/dP: it must send each momentum component to one velocity component
    const auto& cm = grade_masks(ns, r_);
    const auto& pm = grade_masks(ns, n_ - r_ - 1);
    auto tm = masks_or_empty(ns, n_ - r_ - 2);
    auto km = masks_or_empty(ns, r_ + 1);
    std::size_t N = std::size_t{1} << n_;
    auto probe = [&](Mask M, double v) {
        PointInputs in{PointValue(N, 0.0), PointValue(N, 0.0)};
        in.P[M] = v;
        return evaluate_point(eqs.rhs_dC.poly, in, ctx_);
    };
    auto single = [&](Mask M, bool want_time) -> std::pair<Mask, double> {
        auto out = probe(M, 1.0);
        auto out2 = probe(M, 2.0);
        Mask hit = 0;
        int count = 0;
        for (Mask K = 0; K < N; ++K)
            if (out[K] != 0.0) {
                hit = K;
                ++count;
            }
        if (count != 1 || ((hit & 1u) != 0) != want_time || std::abs(out2[hit] - 2.0 * out[hit]) > 1e-12 * std::abs(out[hit]))
            throw SchemeError("dH/dP is not a component-wise linear map of P; the staggered scheme needs a quadratic kinetic term");
        return {hit, out[hit]};
    };
    std::set<std::size_t> used;
    for (Mask s : pm) {
        auto [K, a] = single(s << 1, true);
        std::size_t i = index_of(cm, K >> 1);
        if (!used.insert(i).second) throw SchemeError("dH/dP is not invertible on the momentum components");
        kin_.push_back({i, a});
        lay_P_.push_back(cm[i]);
    }
    used.clear();
    for (Mask s : tm) {
        auto [K, g] = single((s << 1) | 1u, false);
        std::size_t k = index_of(km, K >> 1);
        if (!used.insert(k).second) throw SchemeError("dH/dP is not invertible on the slaved components");
        slave_.push_back({k, g});
        lay_Pt_.push_back(km[k]);
    }
    lay_C_ = cm;
    {
        PointInputs in{PointValue(N, 0.0), PointValue(N, 1.0)};
        auto all = evaluate_point(eqs.rhs_dC.poly, in, ctx_);
        PointValue sum(N, 0.0);
        for (Mask M = 0; M < N; ++M) {
            auto one = probe(M, 1.0);
            for (Mask K = 0; K < N; ++K) sum[K] += one[K];
        }
        for (Mask K = 0; K < N; ++K)
            if (std::abs(all[K] - sum[K]) > 1e-12 * (1.0 + std::abs(sum[K])))
                throw SchemeError("dH/dP is not linear in P");
    }
    // d_s of the slaved part has to land on the momentum layout
    if (!tm.empty()) {
        Form dpt = exterior_derivative(layout_form(n_ - r_ - 2, lay_Pt_));
        for (std::size_t j = 0; j < pm.size(); ++j)
            if (dpt.stagger(j) != lay_P_[j]) throw SchemeError("internal: inconsistent staggering");
    }

    double hmin = sgrid_->spacing(0);
    for (int a = 1; a < ns; ++a) hmin = std::min(hmin, sgrid_->spacing(a));
    double bound = hmin / std::sqrt(static_cast<double>(ns));
    if (cfg.dt > bound) {
        std::string msg = "CFL violated: dt = " + std::to_string(cfg.dt) + " > h/sqrt(d) = " + std::to_string(bound);
        if (!cfg.allow_cfl_violation) throw CflError(msg);
        warnings_.push_back(msg);
    }
    check_keys(m.initial);
    for (auto& t : cfg.tangents) check_keys(t);
    for (auto& [k, v] : cfg.initial_arrays) {
        if (v.size() != sgrid_->cell_count())
            throw SimulationError("initial array '" + k + "' has " + std::to_string(v.size()) + " values, grid has " +
                                  std::to_string(sgrid_->cell_count()));
    }
}

std::string Stepper::comp_key(std::size_t i) const {
    if (r_ == 0) return model_.field_name;
    std::string k = model_.field_name;
    for (int a : mask_axes(lay_C_[i] << 1)) k += std::to_string(a);
    return k;
}

void Stepper::check_keys(const InitialData& init) const {
    std::set<std::string> ok;
    if (family_ == Family::particle) {
        ok = {"q", "p", model_.field_name, model_.momentum_name};
    } else {
        for (std::size_t i = 0; i < lay_C_.size(); ++i) {
            ok.insert(comp_key(i));
            ok.insert(comp_key(i) + "_t");
        }
    }
    for (auto& [k, e] : init)
        if (!ok.count(k)) throw SimulationError("unknown initial-data key '" + k + "'");
}

Form Stepper::layout_form(int grade, const std::vector<Mask>& layout) const {
    Form f(sgrid_, grade);
    for (std::size_t c = 0; c < layout.size(); ++c) f.set_stagger(c, layout[c]);
    f.set_staggered(true);
    return f;
}

std::vector<double> Stepper::load(const InitialData& init, const std::string& key, Mask layout, bool base) const {
    std::size_t cells = sgrid_->cell_count();
    if (base) {
        auto it = cfg_.initial_arrays.find(key);
        if (it != cfg_.initial_arrays.end()) return it->second;
    }
    std::vector<double> v(cells, 0.0);
    auto it = init.find(key);
    if (it == init.end()) return v;
    const Expr& e = it->second;
    const auto& g = *sgrid_;
    for (std::size_t c = 0; c < cells; ++c) {
        std::vector<double> x(n_, 0.0);
        for (int a = 0; a < g.dim; ++a) {
            int idx = static_cast<int>((c / g.stride(a)) % static_cast<std::size_t>(g.sizes[a]));
            x[a + 1] = (idx + ((layout >> a) & 1u ? 0.5 : 0.0)) * g.spacing(a);
        }
        v[c] = evaluate_scalar(e, x, ctx_);
    }
    return v;
}

double Stepper::point_rhs(const Poly& p, double q, double pv, Mask out) const {
    std::size_t N = std::size_t{1} << n_;
    PointInputs in{PointValue(N, 0.0), PointValue(N, 0.0)};
    in.C[0] = q;
    in.P[0] = pv;
    return evaluate_point(p, in, ctx_)[out];
}

void Stepper::slave_Pt(const Form& C, Form& Pt) const {
    if (slave_.empty()) return;
    Form dC = exterior_derivative(C);
    for (std::size_t l = 0; l < slave_.size(); ++l) {
        auto src = dC.component(slave_[l].to);
        auto dst = Pt.component(l);
        double inv = 1.0 / slave_[l].coef;
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = inv * src[c];
    }
}

void Stepper::apply_kin(const Form& P, double dt, Form& C) const {
    for (std::size_t j = 0; j < kin_.size(); ++j) {
        auto src = P.component(j);
        auto dst = C.component(kin_[j].to);
        double f = dt * kin_[j].coef;
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += f * src[c];
    }
}

// (dP/dt) on the evolved components: the time part of dH/dC plus d_s of the slaved part.
Form Stepper::force(const Form& C) const {
    Form F = layout_form(n_ - r_ - 1, lay_P_);
    if (eqs_.rhs_dP.is_zero()) return F;
    Mask full = (Mask{1} << n_) - 1;
    auto src = C.component(0);
    auto dst = F.component(0);
    parallel_for(
        dst.size(),
        [&](std::size_t lo, std::size_t hi) {
            for (std::size_t c = lo; c < hi; ++c) dst[c] = point_rhs(eqs_.rhs_dP.poly, src[c], 0.0, full);
        },
        kChunk);
    return F;
}

Form Stepper::tangent_force(const Form& C, const Form& dC) const {
    Form F = layout_form(n_ - r_ - 1, lay_P_);
    if (jac_P_.empty()) return F;
    Mask full = (Mask{1} << n_) - 1;
    auto src = C.component(0);
    auto dsrc = dC.component(0);
    auto dst = F.component(0);
    parallel_for(
        dst.size(),
        [&](std::size_t lo, std::size_t hi) {
            for (std::size_t c = lo; c < hi; ++c) dst[c] = point_rhs(jac_P_, src[c], 0.0, full) * dsrc[c];
        },
        kChunk);
    return F;
}

SimState Stepper::initial_state() const {
    SimState s;
    s.scheme = cfg_.scheme;
    double dt = cfg_.dt;
    double kick = cfg_.scheme == Scheme::symplectic_euler ? 0.0 : 0.5;
    if (family_ == Family::particle) {
        auto value = [&](const InitialData& init, const std::string& a, const std::string& b) {
            auto it = init.find(a);
            if (it == init.end()) it = init.find(b);
            return it == init.end() ? 0.0 : evaluate_scalar(it->second, {0.0}, ctx_);
        };
        s.q = value(model_.initial, "q", model_.field_name);
        s.p = value(model_.initial, "p", model_.momentum_name);
        s.p_half = s.p + kick * dt * point_rhs(eqs_.rhs_dP.poly, s.q, s.p, 1);
        for (auto& init : cfg_.tangents) {
            TangentSlice t;
            t.dq = value(init, "q", model_.field_name);
            double dp = value(init, "p", model_.momentum_name);
            t.dp_half = dp + kick * dt * point_rhs(jac_P_, s.q, s.p, 1) * t.dq;
            s.tangents.push_back(t);
        }
        check_finite(s);
        return s;
    }

    auto fill = [&](const InitialData& init, bool base, Form& C, Form& P0, Form& Pt) {
        C = layout_form(r_, lay_C_);
        P0 = layout_form(n_ - r_ - 1, lay_P_);
        Pt = layout_form(std::max(n_ - r_ - 2, 0), lay_Pt_);
        for (std::size_t i = 0; i < lay_C_.size(); ++i) {
            auto v = load(init, comp_key(i), lay_C_[i], base);
            std::copy(v.begin(), v.end(), C.component(i).begin());
        }
        for (std::size_t j = 0; j < kin_.size(); ++j) {
            std::size_t i = kin_[j].to;
            auto v = load(init, comp_key(i) + "_t", lay_C_[i], base);
            auto dst = P0.component(j);
            for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = v[c] / kin_[j].coef;
        }
        slave_Pt(C, Pt);
    };
    fill(model_.initial, true, s.C, s.P_sync, s.P_t);
    Form F = force(s.C);
    if (!slave_.empty()) F += exterior_derivative(s.P_t);
    s.P_half = s.P_sync + (kick * dt) * F;
    for (auto& init : cfg_.tangents) {
        TangentSlice t;
        Form dP0;
        fill(init, false, t.dC, dP0, t.dP_t);
        Form dF = tangent_force(s.C, t.dC);
        if (!slave_.empty()) dF += exterior_derivative(t.dP_t);
        t.dP_half = dP0 + (kick * dt) * dF;
        s.tangents.push_back(std::move(t));
    }
    check_finite(s);
    return s;
}

void Stepper::advance(SimState& s) const {
    double dt = cfg_.dt;
    bool lf = cfg_.scheme != Scheme::symplectic_euler;
    if (family_ == Family::particle) {
        double a = point_rhs(jac_C_, s.q, s.p_half, 1);
        s.q += dt * point_rhs(eqs_.rhs_dC.poly, s.q, s.p_half, 1);
        double F = point_rhs(eqs_.rhs_dP.poly, s.q, s.p_half, 1);
        double b = point_rhs(jac_P_, s.q, s.p_half, 1);
        s.p = lf ? s.p_half + 0.5 * dt * F : s.p_half + dt * F;
        s.p_half += dt * F;
        for (auto& t : s.tangents) {
            t.dq += dt * a * t.dp_half;
            t.dp_half += dt * b * t.dq;
        }
    } else {
        apply_kin(s.P_half, dt, s.C);
        slave_Pt(s.C, s.P_t);
        Form F = force(s.C);
        if (!slave_.empty()) F += exterior_derivative(s.P_t);
        s.P_sync = s.P_half + (0.5 * dt) * F;
        s.P_half += dt * F;
        for (auto& t : s.tangents) {
            apply_kin(t.dP_half, dt, t.dC);
            slave_Pt(t.dC, t.dP_t);
            Form dF = tangent_force(s.C, t.dC);
            if (!slave_.empty()) dF += exterior_derivative(t.dP_t);
            t.dP_half += dt * dF;
        }
    }
    s.step += 1;
    s.t = s.step * dt;
    check_finite(s);
}

void Stepper::check_finite(const SimState& s) const {
    bool ok = std::isfinite(s.q) && std::isfinite(s.p) && std::isfinite(s.p_half);
    if (family_ != Family::particle) ok = ok && all_finite(s.C) && all_finite(s.P_half);
    if (!ok) throw NonFiniteError("non-finite state at step " + std::to_string(s.step), s.step);
}

// Charge of the time-translation current j = (i_0 dC) ^ P - i_0 L with L = dC ^ P - H0 and
// dC = dH/dP, read off on the constant-time slice.
double Stepper::energy_density(const PointInputs& in) const {
    PointValue dC = evaluate_point(eqs_.rhs_dC.poly, in, ctx_);
    PointValue H = evaluate_point(H0_.poly, in, ctx_);
    PointValue L = point_wedge(dC, in.P);
    for (std::size_t M = 0; M < L.size(); ++M) L[M] -= H[M];
    PointValue j = point_wedge(point_iota0(dC), in.P);
    PointValue iL = point_iota0(L);
    Mask slice = ((Mask{1} << n_) - 1) & ~1u;
    return j[slice] - iL[slice];
}

double Stepper::energy(const SimState& s) const {
    std::size_t N = std::size_t{1} << n_;
    if (family_ == Family::particle) {
        PointInputs in{PointValue(N, 0.0), PointValue(N, 0.0)};
        in.C[0] = s.q;
        in.P[0] = s.p;
        return energy_density(in);
    }
    // everything resampled to the nodes
    auto nodes = [](const Form& f) { return restagger(f, std::vector<Mask>(f.num_components(), 0)); };
    Form C = nodes(s.C), Ps = nodes(s.P_sync), Pt = slave_.empty() ? Form() : nodes(s.P_t);
    std::size_t cells = sgrid_->cell_count();
    std::vector<double> dens(cells);
    parallel_for(
        cells,
        [&](std::size_t lo, std::size_t hi) {
            PointInputs in{PointValue(N, 0.0), PointValue(N, 0.0)};
            for (std::size_t c = lo; c < hi; ++c) {
                for (std::size_t i = 0; i < C.num_components(); ++i) in.C[C.mask(i) << 1] = C.component(i)[c];
                for (std::size_t j = 0; j < Ps.num_components(); ++j) in.P[Ps.mask(j) << 1] = Ps.component(j)[c];
                if (!slave_.empty())
                    for (std::size_t l = 0; l < Pt.num_components(); ++l)
                        in.P[(Pt.mask(l) << 1) | 1u] = Pt.component(l)[c];
                dens[c] = energy_density(in);
            }
        },
        kChunk);
    double vol = 1.0;
    for (int a = 0; a < sgrid_->dim; ++a) vol *= sgrid_->spacing(a);
    double e = 0.0;
    for (double d : dens) e += d;
    return e * vol;
}

SimState advance_step(const ModelSpec& m, const FieldEquations& eqs, const SimState& s, const SimConfig& cfg) {
    Stepper st(m, eqs, cfg);
    SimState out = s;
    st.advance(out);
    return out;
}

SimResult run_simulation(const ModelSpec& m, const SimConfig& cfg) {
    Stepper st(m, model_equations(m), cfg);
    SimResult res;
    res.warnings = st.warnings();
    SimState s = st.initial_state();
    res.trajectory.push_back(s);
    for (int k = 1; k <= cfg.steps; ++k) {
        st.advance(s);
        if (k % cfg.record_every == 0) res.trajectory.push_back(s);
    }
    for (auto& x : res.trajectory) res.report.energy.push_back(st.energy(x));
    for (double e : res.report.energy)
        res.report.max_energy_drift = std::max(res.report.max_energy_drift, std::abs(e - res.report.energy.front()));
    std::size_t cells = st.family() == Family::particle ? 1 : st.spatial_grid()->cell_count();
    if (cfg.record_every == 1 && res.trajectory.size() >= 3 && cells * res.trajectory.size() <= 4'000'000) {
        auto y = assemble_history(m, res.trajectory, cfg.dt);
        res.report.residual = onshell_residual(y, model_equations(m), m.ctx);
    }
    return res;
}

namespace {

struct SliceView {
    const Form* C;
    const Form* P_half;
    const Form* P_t;
    double q, p_half;
};

HamiltonianHistory assemble(const ModelSpec& m, const std::vector<SliceView>& sl, double dt) {
    if (sl.size() < 2) throw SimulationError("a history needs at least two recorded slices");
    int n = m.n(), r = m.r();
    int K = static_cast<int>(sl.size()) - 1;
    std::vector<int> sizes{K + 1};
    std::vector<double> ext{dt * K};
    std::size_t S = 1;
    if (n > 1) {
        const auto& sg = sl[0].C->grid();
        for (int a = 0; a < sg.dim; ++a) {
            sizes.push_back(sg.sizes[a]);
            ext.push_back(sg.spacing(a) * sg.sizes[a]);
        }
        S = sg.cell_count();
    }
    std::vector<Boundary> bnd(sizes.size(), Boundary::periodic);
    bnd[0] = Boundary::fixed;
    auto g = DomainGrid::make(sizes, ext, bnd, m.ctx.sig());
    HamiltonianHistory y{Form(g, r), Form(g, n - r - 1), {}, std::nullopt};
    y.C.set_staggered(true);
    y.P.set_staggered(true);
    if (n == 1) {
        y.P.set_stagger(0, 1u);
        for (int k = 0; k <= K; ++k) {
            y.C.component(0)[k] = sl[k].q;
            y.P.component(0)[k] = sl[k].p_half;
        }
        return y;
    }
    int ns = n - 1;
    auto fill = [&](Form& dst, std::size_t c, auto pick, std::size_t sc) {
        for (int k = 0; k <= K; ++k) {
            auto src = pick(sl[k]).component(sc);
            std::copy(src.begin(), src.end(), dst.component(c).begin() + static_cast<std::ptrdiff_t>(k * S));
        }
    };
    for (std::size_t c = 0; c < y.C.num_components(); ++c) {
        Mask M = y.C.mask(c);
        if (M & 1u) {
            y.C.set_stagger(c, 1u);
            continue;
        }
        std::size_t i = component_index(ns, M >> 1);
        y.C.set_stagger(c, sl[0].C->stagger(i) << 1);
        fill(y.C, c, [](const SliceView& v) -> const Form& { return *v.C; }, i);
    }
    for (std::size_t c = 0; c < y.P.num_components(); ++c) {
        Mask M = y.P.mask(c);
        std::size_t i = component_index(ns, M >> 1);
        if (M & 1u) {
            y.P.set_stagger(c, sl[0].P_t->stagger(i) << 1);
            fill(y.P, c, [](const SliceView& v) -> const Form& { return *v.P_t; }, i);
        } else {
            y.P.set_stagger(c, (sl[0].P_half->stagger(i) << 1) | 1u);
            fill(y.P, c, [](const SliceView& v) -> const Form& { return *v.P_half; }, i);
        }
    }
    return y;
}

}  // namespace

HamiltonianHistory assemble_history(const ModelSpec& m, const std::vector<SimState>& traj, double dt) {
    std::vector<SliceView> v;
    for (auto& s : traj) v.push_back({&s.C, &s.P_half, &s.P_t, s.q, s.p_half});
    return assemble(m, v, dt);
}

HamiltonianHistory assemble_tangent(const ModelSpec& m, const std::vector<SimState>& traj, double dt,
                                    std::size_t which) {
    std::vector<SliceView> v;
    for (auto& s : traj) {
        if (which >= s.tangents.size()) throw SimulationError("no tangent " + std::to_string(which));
        auto& t = s.tangents[which];
        v.push_back({&t.dC, &t.dP_half, &t.dP_t, t.dq, t.dp_half});
    }
    return assemble(m, v, dt);
}

}  // namespace histodyn
