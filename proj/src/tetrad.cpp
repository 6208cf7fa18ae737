#include <algorithm>
#include <array>
#include <optional>

#include "histodyn/forms.hpp"

namespace histodyn {

IndexedFormSet IndexedFormSet::vectors(std::vector<Form> members) {
    if (members.size() != internal_dim) throw FormError("a vector set needs exactly 4 members");
    IndexedFormSet s;
    s.rank_ = 1;
    s.grid_ = members[0].grid_ptr();
    s.grade_ = members[0].grade();
    for (int i = 0; i < internal_dim; ++i) {
        require_same_grid(members[0], members[i]);
        if (members[i].grade() != s.grade_) throw FormError("members of a set must share their grade");
    }
    for (int i = 0; i < internal_dim; ++i) s.members_.emplace(std::vector<int>{i}, std::move(members[i]));
    return s;
}

IndexedFormSet IndexedFormSet::antisymmetric(const std::map<std::pair<int, int>, Form>& upper) {
    IndexedFormSet s;
    s.rank_ = 2;
    s.antisym_ = true;
    for (int i = 0; i < internal_dim; ++i)
        for (int j = i + 1; j < internal_dim; ++j) {
            auto it = upper.find({i, j});
            if (it == upper.end()) throw FormError("antisymmetric set is missing a slot I<J");
            if (!s.grid_) {
                s.grid_ = it->second.grid_ptr();
                s.grade_ = it->second.grade();
            }
            if (it->second.grade() != s.grade_) throw FormError("members of a set must share their grade");
            s.members_.emplace(std::vector<int>{i, j}, it->second);
        }
    if (upper.size() != 6) throw FormError("antisymmetric set expects exactly the 6 slots I<J");
    return s;
}

IndexedFormSet IndexedFormSet::keyed(std::map<std::vector<int>, Form> members) {
    IndexedFormSet s;
    if (!members.empty()) {
        s.grid_ = members.begin()->second.grid_ptr();
        s.grade_ = members.begin()->second.grade();
        s.rank_ = static_cast<int>(members.begin()->first.size());
    }
    s.members_ = std::move(members);
    return s;
}

Form IndexedFormSet::get(int i) const {
    auto it = members_.find({i});
    if (it == members_.end()) throw FormError("index outside the set");
    return it->second;
}

Form IndexedFormSet::get(int i, int j) const {
    if (antisym_) {
        if (i == j) return Form(grid_, grade_);
        if (i > j) return -get(j, i);
    }
    auto it = members_.find({i, j});
    if (it == members_.end()) throw FormError("index pair outside the set");
    return it->second;
}

namespace {

int eps4(int a, int b, int c, int d) { return epsilon_sign({a, b, c, d}); }

void accumulate(std::optional<Form>& acc, double c, const Form& f) {
    if (c == 0.0) return;
    if (!acc)
        acc = c * f;
    else
        *acc += c * f;
}

Form or_zero(const std::optional<Form>& f, const GridPtr& g, int grade) { return f ? *f : Form(g, grade); }

}  // namespace

TetradIdentityReport verify_tetrad_identities(const IndexedFormSet& e, const IndexedFormSet& w,
                                              TetradReading reading) {
    constexpr int N = IndexedFormSet::internal_dim;
    const auto& eta = IndexedFormSet::eta;
    if (e.rank() != 1 || e.members().size() != N) throw FormError("e must be a set of four forms e^I");
    if (w.rank() != 2 || w.members().size() != 6) throw FormError("w must be an antisymmetric set w^{IJ}");
    if (e.grade() != 1 || w.grade() != 1) throw FormError("e^I and w^{IJ} must be 1-forms");
    if (!(*e.grid() == *w.grid())) throw FormError("e and w live on different grids");
    const GridPtr& g = e.grid();

    std::array<Form, N> ev;
    for (int i = 0; i < N; ++i) ev[i] = e.get(i);
    std::array<std::array<Form, N>, N> eij, up, low;  // e^{IJ}, w^{KL}, w^K_L
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            eij[i][j] = wedge(ev[i], ev[j]);
            up[i][j] = w.get(i, j);
            low[i][j] = eta[j] * up[i][j];
        }

    std::map<std::vector<int>, Form> l_pair, r_pair;
    double gap_pair = 0.0;
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            std::optional<Form> lhs, rhs;
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j)
                    for (int k = 0; k < N; ++k) {
                        int s = eps4(j, k, a, b);
                        if (!s) continue;
                        const Form& ee = reading == TetradReading::corrected ? eij[i][j] : eij[j][i];
                        accumulate(lhs, s, wedge(ee, low[k][i]));
                    }
            for (int j = 0; j < N; ++j)
                for (int m = 0; m < N; ++m)
                    for (int nn = 0; nn < N; ++nn) {
                        if (int s = eps4(j, a, m, nn)) accumulate(rhs, -0.5 * s, wedge(eij[m][nn], low[j][b]));
                        if (int s = eps4(j, b, m, nn)) accumulate(rhs, 0.5 * s, wedge(eij[m][nn], low[j][a]));
                    }
            Form L = or_zero(lhs, g, 3), R = or_zero(rhs, g, 3);
            gap_pair = std::max(gap_pair, (L - R).max_abs());
            l_pair.emplace(std::vector<int>{a, b}, std::move(L));
            r_pair.emplace(std::vector<int>{a, b}, std::move(R));
        }

    std::optional<Form> lhs_scalar, rhs_scalar;
    double rsign = reading == TetradReading::corrected ? 1.0 : -1.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k)
                for (int l = 0; l < N; ++l) {
                    int s = eps4(i, j, k, l);
                    if (!s) continue;
                    for (int a = 0; a < N; ++a) accumulate(lhs_scalar, s, wedge(wedge(eij[i][j], low[k][a]), up[a][l]));
                }
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k)
                for (int m = 0; m < N; ++m)
                    for (int nn = 0; nn < N; ++nn) {
                        int s = eps4(j, k, m, nn);
                        if (!s) continue;
                        accumulate(rhs_scalar, rsign * s, wedge(wedge(eij[i][j], low[k][i]), up[m][nn]));
                    }
    Form L_scalar = or_zero(lhs_scalar, g, 4), R_scalar = or_zero(rhs_scalar, g, 4);
    double gap_scalar = (L_scalar - R_scalar).max_abs();

    TetradIdentityReport rep;
    rep.lhs_pair = IndexedFormSet::keyed(std::move(l_pair));
    rep.rhs_pair = IndexedFormSet::keyed(std::move(r_pair));
    rep.lhs_scalar = IndexedFormSet::keyed({{std::vector<int>{}, L_scalar}});
    rep.rhs_scalar = IndexedFormSet::keyed({{std::vector<int>{}, R_scalar}});
    rep.gap_pair = gap_pair;
    rep.gap_scalar = gap_scalar;
    rep.max_abs_gap = std::max(gap_pair, gap_scalar);
    return rep;
}

}  // namespace histodyn
