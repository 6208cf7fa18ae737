#include <iostream>

#include <CLI11.hpp>

#include "histodyn/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"histodyn: Hamiltonian histories of differential forms"};
    app.require_subcommand(1);

    histodyn::CommandOptions opt;
    std::string model_path;
    double dt = 0, tol = 0;
    int steps = 0;
    std::string out, scheme;
    std::uint64_t seed = 0;

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {{"derive", "print H0, L and the field equations; check the Legendre round trip"},
                        {"simulate", "integrate and write the trajectory as CSV"},
                        {"diagnose", "run every conservation check and write a JSON report"},
                        {"check-identities", "random exterior-calculus and tetrad identity suites"}};
    std::vector<CLI::App*> cmds;
    for (auto& s : subs) {
        auto* c = app.add_subcommand(s.name, s.help);
        c->add_option("model", model_path, "model file")->required()->check(CLI::ExistingFile);
        c->add_option("--dt", dt, "time step")->check(CLI::PositiveNumber);
        c->add_option("--steps", steps, "number of steps")->check(CLI::PositiveNumber);
        c->add_option("--out", out, "output file (default stdout)");
        c->add_option("--tolerance", tol, "check tolerance")->check(CLI::PositiveNumber);
        c->add_option("--scheme", scheme, "symplectic_euler, leapfrog or yee");
        c->add_option("--seed", seed, "random seed");
        cmds.push_back(c);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : histodyn::exit_usage;
    }

    CLI::App* used = nullptr;
    for (auto* c : cmds)
        if (c->parsed()) used = c;
    auto given = [&](const char* flag) { return used->count(flag) > 0; };
    if (given("--dt")) opt.dt = dt;
    if (given("--steps")) opt.steps = steps;
    if (given("--out")) opt.out = out;
    if (given("--tolerance")) opt.tolerance = tol;
    if (given("--scheme")) opt.scheme = scheme;
    if (given("--seed")) opt.seed = seed;

    auto res = histodyn::run_command(used->get_name(), model_path, opt, std::cout, std::cerr);
    return res.exit_code;
}
