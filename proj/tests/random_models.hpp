#pragma once
// Random Hamiltonians of grade [0;n] and random histories for property tests.

#include <random>
#include <vector>

#include "histodyn/expr.hpp"
#include "histodyn/hmaps.hpp"
#include "oracle.hpp"

namespace randmodel {

using namespace histodyn;

inline HMapContext context(int n, int r) {
    HMapContext ctx;
    ctx.n = n;
    ctx.r = r;
    ctx.signature.assign(n, -1);
    ctx.signature[0] = 1;
    return ctx;
}

// Top-grade building blocks quadratic in the fields.
inline std::vector<Expr> top_blocks(const HMapContext& ctx) {
    int gC = ctx.r, gP = ctx.n - ctx.r - 1;
    std::vector<Expr> out;
    out.push_back(ex::wedge(ex::star(ex::P()), ex::P()));
    out.push_back(ex::wedge(ex::star(ex::C()), ex::C()));
    if (gC == gP) out.push_back(ex::wedge(ex::C(), ex::star(ex::P())));
    for (int mu = 0; mu < ctx.n; ++mu) out.push_back(ex::wedge(ex::wedge(ex::C(), ex::P()), ex::dx(mu)));
    return out;
}

inline double pick(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Sum of quadratic blocks with constant coefficients.
inline Expr quadratic(const HMapContext& ctx, std::mt19937_64& rng) {
    auto blocks = top_blocks(ctx);
    std::vector<Expr> terms;
    for (auto& b : blocks) terms.push_back(ex::wedge(ex::constant(pick(rng, -2, 2)), b));
    return ex::sum(terms);
}

inline Expr random_scalar(const HMapContext& ctx, std::mt19937_64& rng) {
    auto blocks = top_blocks(ctx);
    std::uniform_int_distribution<std::size_t> which(0, blocks.size() - 1);
    Expr s = ctx.r == 0 && rng() % 2 ? ex::C() : ex::star(blocks[which(rng)]);
    switch (rng() % 5) {
        case 0: return ex::pow(s, 2);
        case 1: return ex::fun("cos", ex::wedge(ex::constant(pick(rng, -1, 1)), s));
        case 2: return ex::fun("sin", ex::wedge(ex::constant(pick(rng, -1, 1)), s));
        case 3: return ex::fun("exp", ex::wedge(ex::constant(pick(rng, -0.5, 0.5)), s));
        default: return s;
    }
}

// Random polynomial-and-transcendental Hamiltonian.
inline Expr nonlinear(const HMapContext& ctx, std::mt19937_64& rng) {
    auto blocks = top_blocks(ctx);
    blocks.push_back(ex::vol());
    std::vector<Expr> terms;
    int count = 2 + static_cast<int>(rng() % 3);
    for (int i = 0; i < count; ++i) {
        Expr t = blocks[rng() % blocks.size()];
        t = ex::wedge(ex::wedge(ex::constant(pick(rng, -1, 1)), random_scalar(ctx, rng)), t);
        terms.push_back(t);
    }
    return ex::sum(terms);
}

inline HamiltonianHistory random_history(const GridPtr& g, const HMapContext& ctx, std::mt19937_64& rng,
                                         double scale = 1.0) {
    return HamiltonianHistory{oracle::random_form(g, ctx.r, rng, scale),
                              oracle::random_form(g, ctx.n - ctx.r - 1, rng, scale), {}, std::nullopt};
}

inline GridPtr grid(int n, int cells) {
    std::vector<int> sizes(n, cells);
    std::vector<double> ext(n, 1.0);
    return DomainGrid::make(sizes, ext, Boundary::periodic);
}

inline double rel_gap(const Form& a, const Form& b) {
    double scale = std::max(a.max_abs(), b.max_abs());
    double g = (a - b).max_abs();
    return scale > 0 ? g / scale : g;
}

}  // namespace randmodel
