#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace histodyn {

class FormError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Boundary { periodic, fixed };

struct DomainGrid {
    int dim = 1;
    std::vector<int> sizes;
    std::vector<double> extents;
    std::vector<int> signature;  // +1 / -1 per axis
    Boundary boundary = Boundary::periodic;  // fixed as soon as one axis is fixed
    std::vector<Boundary> axis_boundary;

    // Throws FormError when the invariants do not hold.
    static std::shared_ptr<const DomainGrid> make(std::vector<int> sizes, std::vector<double> extents,
                                                  Boundary boundary, std::vector<int> signature = {});
    static std::shared_ptr<const DomainGrid> make(std::vector<int> sizes, std::vector<double> extents,
                                                  std::vector<Boundary> boundaries, std::vector<int> signature = {});

    bool periodic(int axis) const { return axis_boundary.at(axis) == Boundary::periodic; }

    double spacing(int axis) const;
    std::size_t cell_count() const;
    std::size_t stride(int axis) const;
    int metric_sign() const;  // product of the signature entries
    double coordinate(int axis, int index) const { return spacing(axis) * index; }

    bool operator==(const DomainGrid& o) const;
};

using GridPtr = std::shared_ptr<const DomainGrid>;

// Canonical multi-indices are bit masks; bit mu set means dx^mu is present.
using Mask = std::uint32_t;

int popcount(Mask m);
std::vector<int> mask_axes(Mask m);
Mask axes_mask(const std::vector<int>& axes);
// Sign of dx^a ^ dx^b relative to dx^(a|b); 0 when a and b overlap.
int merge_sign(Mask a, Mask b);
// Position of axis mu inside the ascending list of m.
int position_in(Mask m, int mu);

// Components of grade r in lexicographic order of ascending multi-indices.
const std::vector<Mask>& grade_masks(int n, int r);
std::size_t component_index(int n, Mask m);
std::size_t binomial(int n, int r);

struct MultiIndex {
    std::vector<int> axes;  // strictly increasing
    int sign = 1;           // 0 when the raw sequence repeated an axis

    static MultiIndex from_raw(const std::vector<int>& raw);
    Mask mask() const { return axes_mask(axes); }
    bool null() const { return sign == 0; }
};

// Permutation parity of (0..n-1); 0 for anything that is not a permutation.
int epsilon_sign(const std::vector<int>& perm);

class Form {
public:
    Form() = default;
    Form(GridPtr grid, int grade);

    static Form constant(GridPtr grid, double value);  // 0-form
    static Form volume(GridPtr grid, double coefficient = 1.0);
    static Form coordinate_differential(GridPtr grid, int axis);
    static Form coordinate_function(GridPtr grid, int axis);  // the 0-form x^axis
    static Form basis(GridPtr grid, Mask m, double coefficient = 1.0);

    int grade() const { return grade_; }
    const DomainGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t num_components() const { return masks_.size(); }
    Mask mask(std::size_t c) const { return masks_[c]; }
    std::span<double> component(std::size_t c) { return data_[c]; }
    std::span<const double> component(std::size_t c) const { return data_[c]; }
    // Component by multi-index; throws when the grade does not match.
    std::span<double> operator[](Mask m);
    std::span<const double> operator[](Mask m) const;

    // Half-cell offsets, bit mu for axis mu, one word per component.
    Mask stagger(std::size_t c) const { return stagger_[c]; }
    void set_stagger(std::size_t c, Mask s) {
        stagger_[c] = s;
        staggered_ = true;
    }
    bool colocated() const;
    // Staggered forms use the half-cell calculus: d toggles the layout bit of each
    // differentiated axis. Co-located forms keep plain forward differences.
    bool staggered() const { return staggered_; }
    void set_staggered(bool on) { staggered_ = on; }
    // Axes on which a one-sided boundary stencil was used.
    Mask flagged_axes() const { return flagged_; }
    void flag_axes(Mask m) { flagged_ |= m; }

    Form& operator+=(const Form& o);
    Form& operator-=(const Form& o);
    Form& operator*=(double s);
    Form operator+(const Form& o) const;
    Form operator-(const Form& o) const;
    Form operator-() const;
    friend Form operator*(double s, const Form& f);

    double max_abs() const;
    bool is_zero() const;

private:
    GridPtr grid_;
    int grade_ = 0;
    std::vector<Mask> masks_;
    std::vector<std::vector<double>> data_;
    std::vector<Mask> stagger_;
    Mask flagged_ = 0;
    bool staggered_ = false;
};

void require_same_grid(const Form& a, const Form& b);

// Resample one component array from layout `from` to layout `to` by two-point averaging.
std::vector<double> resample(const DomainGrid& g, std::span<const double> v, Mask from, Mask to);
Form restagger(const Form& a, const std::vector<Mask>& layout);

Form wedge(const Form& a, const Form& b);
Form exterior_derivative(const Form& a);
Form hodge_star(const Form& a);
Form interior_product(int axis, const Form& a);
// Cellwise product of a 0-form with any form.
Form scale_by(const Form& f0, const Form& a);

struct RegionSpec {
    enum class Kind { full, slice, boundary } kind = Kind::full;
    int axis = 0;
    int index = 0;

    static RegionSpec full_domain() { return {}; }
    static RegionSpec hypersurface(int axis, int index) { return {Kind::slice, axis, index}; }
    static RegionSpec domain_boundary() { return {Kind::boundary, 0, 0}; }
};

double integrate_region(const Form& a, const RegionSpec& region);

// Root-mean-square over cells, skipping `margin` outer layers of fixed axes.
double interior_rms(const Form& a, int margin = 1);
double interior_max_abs(const Form& a, int margin = 1);

// --- internal Lorentz-indexed sets -------------------------------------------------

class IndexedFormSet {
public:
    static constexpr int internal_dim = 4;
    static constexpr std::array<double, 4> eta{1.0, -1.0, -1.0, -1.0};

    // rank 1: e^I; rank 2: antisymmetric w^{IJ} stored for I < J only.
    static IndexedFormSet vectors(std::vector<Form> members);
    static IndexedFormSet antisymmetric(const std::map<std::pair<int, int>, Form>& upper);
    // Generic keyed set (used for the free-index results of the identities).
    static IndexedFormSet keyed(std::map<std::vector<int>, Form> members);

    int rank() const { return rank_; }
    int grade() const { return grade_; }
    // Component with upper indices; antisymmetric sets give -w^{JI} for I > J and 0 on the diagonal.
    Form get(int i) const;
    Form get(int i, int j) const;
    const std::map<std::vector<int>, Form>& members() const { return members_; }
    const GridPtr& grid() const { return grid_; }

private:
    int rank_ = 0;
    int grade_ = 0;
    bool antisym_ = false;
    GridPtr grid_;
    std::map<std::vector<int>, Form> members_;
};

enum class TetradReading {
    corrected,  // orderings under which both identities hold
    printed     // the index orderings exactly as displayed
};

struct TetradIdentityReport {
    IndexedFormSet lhs_pair, rhs_pair, lhs_scalar, rhs_scalar;
    double gap_pair = 0.0;
    double gap_scalar = 0.0;
    double max_abs_gap = 0.0;
};

TetradIdentityReport verify_tetrad_identities(const IndexedFormSet& e, const IndexedFormSet& w,
                                              TetradReading reading = TetradReading::corrected);

}  // namespace histodyn
