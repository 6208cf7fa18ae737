#include "histodyn/identities.hpp"

#include <algorithm>
#include <random>

#include "histodyn/forms.hpp"

namespace histodyn {

namespace {

Form random_form(const GridPtr& g, int r, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Form f(g, r);
    for (std::size_t c = 0; c < f.num_components(); ++c)
        for (auto& x : f.component(c)) x = u(rng);
    return f;
}

double gap(const Form& a, const Form& b) { return (a - b).max_abs(); }

GridPtr unit_grid(int n, int cells, bool lorentz) {
    std::vector<int> sig(n, lorentz ? -1 : 1);
    sig[0] = 1;
    return DomainGrid::make(std::vector<int>(n, cells), std::vector<double>(n, 1.0), Boundary::periodic, sig);
}

}  // namespace

std::vector<IdentitySuite> run_identity_suites(std::uint64_t seed, int samples, double tolerance) {
    std::mt19937_64 rng(seed);
    IdentitySuite dd{"d_of_d", 0, 0.0, tolerance}, comm{"graded_commutativity", 0, 0.0, tolerance},
        ss{"double_star", 0, 0.0, tolerance}, ip{"interior_antiderivation", 0, 0.0, tolerance};
    for (int n : {1, 2, 4}) {
        auto g = unit_grid(n, n == 4 ? 3 : 5, true);
        int s = g->metric_sign();
        for (int i = 0; i < samples; ++i) {
            int r = i % (n + 1);
            Form a = random_form(g, r, rng);
            dd.max_gap = std::max(dd.max_gap, exterior_derivative(exterior_derivative(a)).max_abs());
            ++dd.samples;

            double f = s * (((r * (n - r)) & 1) ? -1.0 : 1.0);
            ss.max_gap = std::max(ss.max_gap, gap(hodge_star(hodge_star(a)), f * a));
            ++ss.samples;

            int rb = (i / (n + 1)) % (n - r + 1);
            Form b = random_form(g, rb, rng);
            double sg = ((r * rb) & 1) ? -1.0 : 1.0;
            comm.max_gap = std::max(comm.max_gap, gap(wedge(a, b), sg * wedge(b, a)));
            ++comm.samples;

            if (r + rb > 0) {
                int mu = i % n;
                Form rhs(g, r + rb - 1);
                if (r > 0) rhs += wedge(interior_product(mu, a), b);
                if (rb > 0) rhs += ((r & 1) ? -1.0 : 1.0) * wedge(a, interior_product(mu, b));
                ip.max_gap = std::max(ip.max_gap, gap(interior_product(mu, wedge(a, b)), rhs));
                ++ip.samples;
            }
        }
    }
    IdentitySuite t_pair{"tetrad_pair", 0, 0.0, tolerance}, t_scalar{"tetrad_scalar", 0, 0.0, tolerance};
    auto g4 = unit_grid(4, 4, true);
    for (int i = 0; i < samples; ++i) {
        std::vector<Form> e;
        for (int k = 0; k < 4; ++k) e.push_back(random_form(g4, 1, rng));
        std::map<std::pair<int, int>, Form> up;
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) up.emplace(std::make_pair(a, b), random_form(g4, 1, rng));
        auto rep = verify_tetrad_identities(IndexedFormSet::vectors(e), IndexedFormSet::antisymmetric(up));
        t_pair.max_gap = std::max(t_pair.max_gap, rep.gap_pair);
        t_scalar.max_gap = std::max(t_scalar.max_gap, rep.gap_scalar);
        ++t_pair.samples;
        ++t_scalar.samples;
    }
    return {dd, comm, ss, ip, t_pair, t_scalar};
}

}  // namespace histodyn
