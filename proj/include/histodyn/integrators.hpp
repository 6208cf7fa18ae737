#pragma once

#include <map>
#include <string>
#include <vector>

#include "histodyn/dynamics.hpp"

namespace histodyn {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemeError : public SimulationError {
public:
    using SimulationError::SimulationError;
};

class CflError : public SimulationError {
public:
    using SimulationError::SimulationError;
};

// Non-finite state; step is the index of the step that produced it.
class NonFiniteError : public SimulationError {
public:
    NonFiniteError(const std::string& what, int step) : SimulationError(what), step(step) {}
    int step;
};

enum class Scheme { symplectic_euler, leapfrog, yee };
std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& s);

enum class Family {
    particle,      // n = 1, r = 0
    scalar_field,  // n >= 2, r = 0
    gauge_field    // n >= 3, r = 1
};
Family model_family(const ModelSpec& m);
Scheme default_scheme(Family f);

using InitialData = std::map<std::string, Expr>;

struct SimConfig {
    double dt = 1e-3;
    int steps = 1000;
    int record_every = 1;
    Scheme scheme = Scheme::leapfrog;
    bool allow_cfl_violation = false;
    // Per-key arrays on the spatial grid, taking precedence over the model's expressions.
    std::map<std::string, std::vector<double>> initial_arrays;
    // Initial data of linearized solutions integrated alongside the base.
    std::vector<InitialData> tangents;

    static SimConfig from_model(const ModelSpec& m);
};

// Linearized solution on the current slice, same layout as the base.
struct TangentSlice {
    double dq = 0.0, dp_half = 0.0;
    Form dC, dP_half, dP_t;
};

// One time slice. Fields live on the spatial grid: C carries the components without dx^0
// (temporal gauge for r = 1), P_half the evolved momentum components (no dx^0) at t + dt/2,
// P_t the slaved components with dx^0 at t, stored as the spatial form after dx^0.
struct SimState {
    int step = 0;
    double t = 0.0;
    Scheme scheme = Scheme::leapfrog;
    double q = 0.0, p = 0.0, p_half = 0.0;
    Form C, P_half, P_sync, P_t;
    std::vector<TangentSlice> tangents;
};

// Compiled update for one model: probes the evaluated right-hand sides once and keeps
// the staggered layout.
class Stepper {
public:
    Stepper(const ModelSpec& m, const FieldEquations& eqs, const SimConfig& cfg);

    SimState initial_state() const;
    void advance(SimState& s) const;

    Family family() const { return family_; }
    const GridPtr& spatial_grid() const { return sgrid_; }
    // Time-translation charge on the slice (the energy).
    double energy(const SimState& s) const;
    double energy_density(const PointInputs& in) const;
    const std::vector<std::string>& warnings() const { return warnings_; }

    // Layout tags (spatial masks) of C, P_half and P_t components.
    const std::vector<Mask>& layout_C() const { return lay_C_; }
    const std::vector<Mask>& layout_P() const { return lay_P_; }
    const std::vector<Mask>& layout_Pt() const { return lay_Pt_; }

private:
    struct Link {
        std::size_t to;
        double coef;
    };

    double point_rhs(const Poly& p, double q, double pv, Mask out) const;
    std::vector<double> load(const InitialData& init, const std::string& key, Mask layout, bool base) const;
    void check_keys(const InitialData& init) const;
    std::string comp_key(std::size_t i) const;
    Form layout_form(int grade, const std::vector<Mask>& layout) const;
    void apply_kin(const Form& P, double dt, Form& C) const;
    void slave_Pt(const Form& C, Form& Pt) const;
    Form force(const Form& C) const;
    Form tangent_force(const Form& C, const Form& dC) const;
    void check_finite(const SimState& s) const;

    ModelSpec model_;
    HMapContext ctx_;
    FieldEquations eqs_;
    HMap H0_;
    SimConfig cfg_;
    Family family_;
    int n_ = 1, r_ = 0;
    GridPtr sgrid_;
    Poly jac_C_, jac_P_;  // d(rhs_dC)/dP and d(rhs_dP)/dC
    std::vector<Link> kin_;    // P_half component -> C component and coefficient
    std::vector<Link> slave_;  // P_t component <- d_s C component and coefficient
    std::vector<Mask> lay_C_, lay_P_, lay_Pt_;
    std::vector<std::string> warnings_;
};

// One step through a freshly compiled stepper (convenience; loops should keep a Stepper).
SimState advance_step(const ModelSpec& m, const FieldEquations& eqs, const SimState& s, const SimConfig& cfg);

struct RunReport {
    std::vector<double> energy;  // per recorded slice
    double max_energy_drift = 0.0;
    std::optional<Residuals> residual;  // on the assembled history when it fits in memory
};

struct SimResult {
    std::vector<SimState> trajectory;
    RunReport report;
    std::vector<std::string> warnings;
};

SimResult run_simulation(const ModelSpec& m, const SimConfig& cfg);

// Full-domain history (axis 0 = time with fixed ends, space periodic) of a consecutive trajectory.
HamiltonianHistory assemble_history(const ModelSpec& m, const std::vector<SimState>& traj, double dt);
// Same for the tangent with the given index.
HamiltonianHistory assemble_tangent(const ModelSpec& m, const std::vector<SimState>& traj, double dt, std::size_t which);

}  // namespace histodyn
