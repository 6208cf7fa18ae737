#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "histodyn/dynamics.hpp"

namespace histodyn {

class ModelFileError : public std::runtime_error {
public:
    ModelFileError(const std::string& msg, int line = 0, int column = 0);
    int line, column;
};

// INI-like model description:
//   [model] name   [field] name, momentum, rank   [domain] dimension, cells, length, signature, boundary
//   [params] k = v   [potential] U(u) = "expr"   [equations] lagrangian, hamiltonian
//   [simulation] dt, steps, record_every, scheme, tolerance, seed, allow_cfl_violation
//   [initial] key = "expr" | [v0, v1, ...]
ModelSpec parse_model(const std::string& text);
ModelSpec load_model(const std::filesystem::path& path);

// Canonical text; parse_model(print_model(m)) reproduces m.
std::string print_model(const ModelSpec& m);

// Expression in file syntax. `arg` names Op::Arg.
std::string expr_source(const Expr& e, const ModelSpec& m, const std::string& arg = "u");

}  // namespace histodyn
