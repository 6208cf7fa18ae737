#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "histodyn/hmaps.hpp"

namespace histodyn {

class DynamicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Degenerate Legendre map: P does not determine dC.
class ConstraintError : public DynamicsError {
public:
    using DynamicsError::DynamicsError;
};

struct SimulationDefaults {
    double dt = 1e-3;
    int steps = 1000;
    int record_every = 1;
    std::string scheme;  // empty: model family default
    double tolerance = 1e-6;
    std::uint64_t seed = 1;
    bool allow_cfl_violation = false;
};

struct ModelSpec {
    std::string name;
    GridPtr grid;  // the evolution domain; axis 0 is time
    std::string field_name = "C";
    std::string momentum_name = "P";
    HMapContext ctx;
    Expr lagrangian;   // may be null
    Expr hamiltonian;  // H0, may be null
    SimulationDefaults sim;
    // Initial data as expressions in the coordinates X^mu; keys name a component and
    // its time derivative ("C", "C_t", "A1", "A1_t", "q", "p").
    std::map<std::string, Expr> initial;
    std::map<std::string, std::vector<double>> initial_arrays;  // nodal values, override `initial`

    int n() const { return ctx.n; }
    int r() const { return ctx.r; }
    RenderOptions render_options() const;
};

struct FieldEquations {
    HMap rhs_dC;  // dH0/dP, grade [0; r+1]
    HMap rhs_dP;  // -dH0/dC, grade [0; n-r]
    std::vector<std::string> identities;  // dX^mu = dx^mu, dPi_mu = 0
};

struct LegendreMap {
    HMap momentum;   // P as a map of (C, dC)
    double a = 1.0;  // P = a * star(dC)
    Poly velocity;   // dC as a poly in P
    HMap H0;
};

// P = dL/d(dC) (right convention).
HMap historical_momentum(const HMap& L, const HMapContext& ctx);
LegendreMap legendre_transform(const HMap& L, const HMapContext& ctx);
// dL/dC - (-1)^r d(dL/d(dC)).
HMap euler_lagrange(const HMap& L, const HMapContext& ctx);
FieldEquations hamilton_equations(const HMap& H0, const HMapContext& ctx);

// H0 of a model, through the Legendre transform when only L is given.
HMap model_hamiltonian(const ModelSpec& m);
std::optional<HMap> model_lagrangian(const ModelSpec& m);
FieldEquations model_equations(const ModelSpec& m);

struct Residuals {
    double res_C = 0.0;
    double res_P = 0.0;
};

// Root-mean-square of dC - rhs_dC and dP - rhs_dP over interior cells.
Residuals onshell_residual(const HamiltonianHistory& y, const FieldEquations& eqs, const HMapContext& ctx);

// {f,g} = dg/dC ^ df/dP - df/dC ^ dg/dP (left partials); grade [0; S+R+1-n].
HMap bracket(const HMap& f, const HMap& g, const HMapContext& ctx);

struct RoundTrip {
    double rel_gap = 0.0;      // |EL + (-1)^r (dP + dH/dC)| / scale
    double velocity_gap = 0.0; // |dC - dH/dP| / scale at P = Legendre(C, dC)
};
// Hamiltonian and Lagrangian residuals on the history C (with dC = d C).
RoundTrip legendre_round_trip(const HMap& L, const Form& C, const HMapContext& ctx);

// Central difference of the discrete action along delta C.
double action_variation(const HMap& L, const Form& C, const Form& deltaC, const HMapContext& ctx, double h = 1e-4);

// Component-form lines for derive.
std::vector<std::string> render_equations(const ModelSpec& m, const FieldEquations& eqs);

}  // namespace histodyn
