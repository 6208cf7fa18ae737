#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace histodyn {

// Randomized property suite of the form calculus: one row per law.
struct IdentitySuite {
    std::string name;
    int samples = 0;
    double max_gap = 0.0;
    double tolerance = 0.0;
    bool pass() const { return max_gap < tolerance; }
};

// d∘d, graded commutativity, ⋆⋆ sign law and the interior anti-derivation on
// n ∈ {1, 2, 4}; the two tetrad identities on a 4^4 grid. `samples` forms per law and n.
std::vector<IdentitySuite> run_identity_suites(std::uint64_t seed, int samples = 100, double tolerance = 1e-12);

}  // namespace histodyn
