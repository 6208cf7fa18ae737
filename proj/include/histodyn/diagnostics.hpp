#pragma once

#include <map>
#include <string>
#include <vector>

#include "histodyn/integrators.hpp"

namespace histodyn {

class DiagnosticsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Variation of a solution along a base trajectory: particle scalars or spatial forms per
// recorded slice, momentum at the staggered slot of the scheme.
struct LinearizedSolution {
    std::vector<int> steps;
    std::vector<double> dq, dp;
    std::vector<Form> dC, dP;

    std::size_t size() const { return steps.size(); }
    bool particle() const { return dC.empty(); }
};

LinearizedSolution tangent_series(const std::vector<SimState>& traj, std::size_t which);

// Integral over the constant-time slice of d1P ^ d2C - d2P ^ d1C.
double symplectic_pairing(const LinearizedSolution& a, const LinearizedSolution& b, std::size_t slice);

struct Independence {
    std::vector<double> values;
    double max_rel_spread = 0.0;  // (max - min) / max |value|, 0 when all vanish
};
Independence hypersurface_independence(const LinearizedSolution& a, const LinearizedSolution& b,
                                       const std::vector<std::size_t>& slices);

struct Symmetry {
    enum class Kind { translation, field_shift } kind = Kind::translation;
    int axis = 0;        // translation direction
    double shift = 1.0;  // constant delta C of the field shift
    std::string describe() const;
};

struct NoetherResult {
    Form j;
    std::vector<double> charge;  // per time slice
    double dj_norm = 0.0;        // rms of dj, two time layers trimmed at each end
};

// j = delta C ^ P - X with X = zeta _| L for translations and X = 0 for the shift.
// Uses the model Lagrangian when given, otherwise dC ^ P - H0 on the history.
NoetherResult noether_current(const ModelSpec& m, const Symmetry& s, const HamiltonianHistory& y);

// Smooth non-solution next to y for contrast checks.
HamiltonianHistory offshell_variant(const HamiltonianHistory& y, double amplitude);

struct BracketCheck {
    double gap_C = 0.0;  // rms of {H,C} - dC
    double gap_P = 0.0;  // rms of {H,P} - dP
    double PC = 0.0;     // {P,C}, exact constant
    bool pass = false;
};
BracketCheck bracket_onshell_check(const ModelSpec& m, const HamiltonianHistory& y, double tolerance);

struct ConvergenceRow {
    double dt = 0.0;
    double error = 0.0;  // |y(dt) - y(dt/2)| at the final time
    double ratio = 0.0;  // error of the previous row over this one
};

struct DiagnoseOptions {
    double tolerance = 1e-6;
    double pairing_tolerance = 1e-10;
    double noether_factor = 1e-3;  // on-shell dj over off-shell dj
    int convergence_levels = 3;
    double order_low = 3.5, order_high = 4.5;  // second-order ratio band
};

struct ConservationReport {
    std::vector<int> steps;
    std::vector<double> times;
    std::vector<double> energy;
    double energy_drift = 0.0;
    Residuals residual;
    std::vector<double> pairing;
    double pairing_spread = 0.0;
    struct Current {
        std::string symmetry;
        std::vector<double> charge;
        double dj_onshell = 0.0;
        double dj_offshell = 0.0;
    };
    std::vector<Current> noether;
    BracketCheck bracket;
    std::vector<ConvergenceRow> convergence;
    std::map<std::string, bool> pass;
    std::map<std::string, double> tolerances;

    bool all_pass() const;
};

// Runs the model (record_every = 1), its tangents and the refinement ladder.
ConservationReport diagnose(const ModelSpec& m, const SimConfig& cfg, const DiagnoseOptions& opt = {});

}  // namespace histodyn
