#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "histodyn/diagnostics.hpp"

namespace histodyn {

// Process exit codes of the CLI.
enum ExitCode : int {
    exit_ok = 0,
    exit_checks_failed = 1,  // a check ran but missed its tolerance
    exit_usage = 2,
    exit_model_file = 3,     // syntax, unknown identifier, grade mismatch
    exit_derivation = 4,     // symbolic layer: degenerate Legendre map, unsupported H
    exit_simulation = 5,     // scheme/model mismatch, bad initial data
    exit_cfl = 6,
    exit_non_finite = 7,
    exit_io = 8,
    exit_diagnostics = 9,
    exit_internal = 10
};

struct CommandOptions {
    std::optional<double> dt;
    std::optional<int> steps;
    std::optional<std::string> out;
    std::optional<double> tolerance;
    std::optional<std::string> scheme;
    std::optional<std::uint64_t> seed;
};

struct CommandResult {
    int exit_code = exit_ok;
    std::vector<std::string> artifacts;  // files written
    std::string summary;
};

// Flags over model-file defaults over built-in defaults.
SimConfig resolve_config(const ModelSpec& m, const CommandOptions& o);

// Legendre round trip on seeded random histories of a small periodic grid.
struct RoundTripSummary {
    int histories = 0;
    double max_rel_gap = 0.0;
    double max_velocity_gap = 0.0;
};
RoundTripSummary random_round_trips(const ModelSpec& m, int histories, std::uint64_t seed);

std::string simulation_csv(const ModelSpec& m, const SimResult& r);
std::string report_json(const ModelSpec& m, const SimConfig& cfg, const DiagnoseOptions& opt, const ConservationReport& r);

// Primary output goes to `out` unless --out names a file. Exceptions propagate.
CommandResult execute(const std::string& command, const ModelSpec& m, const CommandOptions& o, std::ostream& out);

// Loads the model, runs the command and maps failures to exit codes; messages go to `err`.
CommandResult run_command(const std::string& command, const std::string& model_path, const CommandOptions& o,
                          std::ostream& out, std::ostream& err);

}  // namespace histodyn
