#include "histodyn/forms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>

#include "histodyn/parallel.hpp"

namespace histodyn {

// --- grid ---------------------------------------------------------------------------

std::shared_ptr<const DomainGrid> DomainGrid::make(std::vector<int> sizes, std::vector<double> extents,
                                                   Boundary boundary, std::vector<int> signature) {
    std::vector<Boundary> b(sizes.size(), boundary);
    return make(std::move(sizes), std::move(extents), std::move(b), std::move(signature));
}

std::shared_ptr<const DomainGrid> DomainGrid::make(std::vector<int> sizes, std::vector<double> extents,
                                                   std::vector<Boundary> boundaries, std::vector<int> signature) {
    auto g = std::make_shared<DomainGrid>();
    if (sizes.empty()) throw FormError("grid needs at least one axis");
    if (sizes.size() > 16) throw FormError("grid dimension above 16 is not supported");
    if (extents.size() != sizes.size()) throw FormError("extents and sizes differ in length");
    for (int s : sizes)
        if (s < 2) throw FormError("every axis needs at least 2 cells");
    for (double e : extents)
        if (!(e > 0.0)) throw FormError("every extent must be positive");
    if (signature.empty()) {
        signature.assign(sizes.size(), -1);
        signature[0] = 1;
    }
    if (signature.size() != sizes.size()) throw FormError("signature length differs from dimension");
    for (int s : signature)
        if (s != 1 && s != -1) throw FormError("signature entries must be +1 or -1");
    g->dim = static_cast<int>(sizes.size());
    g->sizes = std::move(sizes);
    g->extents = std::move(extents);
    g->signature = std::move(signature);
    if (boundaries.size() != g->sizes.size()) throw FormError("one boundary per axis expected");
    g->boundary = std::all_of(boundaries.begin(), boundaries.end(), [](Boundary b) { return b == Boundary::periodic; })
                      ? Boundary::periodic
                      : Boundary::fixed;
    g->axis_boundary = std::move(boundaries);
    return g;
}

double DomainGrid::spacing(int axis) const {
    int n = sizes.at(axis);
    return periodic(axis) ? extents[axis] / n : extents[axis] / (n - 1);
}

std::size_t DomainGrid::cell_count() const {
    std::size_t c = 1;
    for (int s : sizes) c *= static_cast<std::size_t>(s);
    return c;
}

std::size_t DomainGrid::stride(int axis) const {
    std::size_t s = 1;
    for (int a = dim - 1; a > axis; --a) s *= static_cast<std::size_t>(sizes[a]);
    return s;
}

int DomainGrid::metric_sign() const {
    int s = 1;
    for (int v : signature) s *= v;
    return s;
}

bool DomainGrid::operator==(const DomainGrid& o) const {
    return dim == o.dim && sizes == o.sizes && extents == o.extents && signature == o.signature &&
           axis_boundary == o.axis_boundary;
}

// --- multi-index bookkeeping --------------------------------------------------------

int popcount(Mask m) { return std::popcount(m); }

std::vector<int> mask_axes(Mask m) {
    std::vector<int> out;
    for (int a = 0; m; ++a, m >>= 1)
        if (m & 1u) out.push_back(a);
    return out;
}

Mask axes_mask(const std::vector<int>& axes) {
    Mask m = 0;
    for (int a : axes) m |= Mask{1} << a;
    return m;
}

int merge_sign(Mask a, Mask b) {
    if (a & b) return 0;
    // Each axis of b must hop over the axes of a that are larger than it.
    int swaps = 0;
    for (Mask bb = b; bb; bb &= bb - 1) {
        int mu = std::countr_zero(bb);
        swaps += std::popcount(a >> (mu + 1));
    }
    return (swaps & 1) ? -1 : 1;
}

int position_in(Mask m, int mu) { return std::popcount(m & ((Mask{1} << mu) - 1)); }

const std::vector<Mask>& grade_masks(int n, int r) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::vector<Mask>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(n, r);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<std::vector<int>> tuples;
    if (r >= 0 && r <= n) {
        std::vector<int> cur;
        auto rec = [&](auto&& self, int start) -> void {
            if (static_cast<int>(cur.size()) == r) {
                tuples.push_back(cur);
                return;
            }
            for (int a = start; a < n; ++a) {
                cur.push_back(a);
                self(self, a + 1);
                cur.pop_back();
            }
        };
        rec(rec, 0);
    }
    std::vector<Mask> masks;
    for (auto& t : tuples) masks.push_back(axes_mask(t));
    return cache.emplace(key, std::move(masks)).first->second;
}

std::size_t component_index(int n, Mask m) {
    const auto& ms = grade_masks(n, popcount(m));
    auto it = std::find(ms.begin(), ms.end(), m);
    if (it == ms.end()) throw FormError("multi-index outside the domain dimension");
    return static_cast<std::size_t>(it - ms.begin());
}

std::size_t binomial(int n, int r) {
    if (r < 0 || r > n) return 0;
    std::size_t c = 1;
    for (int i = 1; i <= r; ++i) c = c * static_cast<std::size_t>(n - r + i) / static_cast<std::size_t>(i);
    return c;
}

MultiIndex MultiIndex::from_raw(const std::vector<int>& raw) {
    MultiIndex mi;
    std::vector<int> v = raw;
    int sign = 1;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j + 1 < v.size() - i; ++j)
            if (v[j] > v[j + 1]) {
                std::swap(v[j], v[j + 1]);
                sign = -sign;
            }
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] == v[i - 1]) sign = 0;
    mi.axes = std::move(v);
    mi.sign = sign;
    return mi;
}

int epsilon_sign(const std::vector<int>& perm) {
    int n = static_cast<int>(perm.size());
    std::vector<char> seen(n, 0);
    for (int p : perm) {
        if (p < 0 || p >= n || seen[p]) return 0;
        seen[p] = 1;
    }
    return MultiIndex::from_raw(perm).sign;
}

// --- Form ---------------------------------------------------------------------------

Form::Form(GridPtr grid, int grade) : grid_(std::move(grid)), grade_(grade) {
    if (!grid_) throw FormError("form without a grid");
    if (grade < 0) throw FormError("negative grade");
    masks_ = grade_masks(grid_->dim, grade);
    data_.assign(masks_.size(), std::vector<double>(grid_->cell_count(), 0.0));
    stagger_.assign(masks_.size(), 0);
}

Form Form::constant(GridPtr grid, double value) {
    Form f(std::move(grid), 0);
    std::fill(f.data_[0].begin(), f.data_[0].end(), value);
    return f;
}

Form Form::volume(GridPtr grid, double coefficient) {
    int n = grid->dim;
    Form f(std::move(grid), n);
    std::fill(f.data_[0].begin(), f.data_[0].end(), coefficient);
    return f;
}

Form Form::coordinate_differential(GridPtr grid, int axis) {
    if (axis < 0 || axis >= grid->dim) throw FormError("axis out of range");
    return basis(std::move(grid), Mask{1} << axis);
}

Form Form::coordinate_function(GridPtr grid, int axis) {
    if (axis < 0 || axis >= grid->dim) throw FormError("axis out of range");
    Form f(grid, 0);
    std::size_t st = grid->stride(axis);
    int n = grid->sizes[axis];
    double h = grid->spacing(axis);
    auto& v = f.data_[0];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = h * static_cast<double>((i / st) % n);
    return f;
}

Form Form::basis(GridPtr grid, Mask m, double coefficient) {
    Form f(grid, popcount(m));
    auto c = component_index(grid->dim, m);
    std::fill(f.data_[c].begin(), f.data_[c].end(), coefficient);
    return f;
}

std::span<double> Form::operator[](Mask m) {
    if (popcount(m) != grade_) throw FormError("multi-index grade does not match the form");
    return data_[component_index(grid_->dim, m)];
}

std::span<const double> Form::operator[](Mask m) const {
    if (popcount(m) != grade_) throw FormError("multi-index grade does not match the form");
    return data_[component_index(grid_->dim, m)];
}

bool Form::colocated() const {
    return std::all_of(stagger_.begin(), stagger_.end(), [](Mask s) { return s == 0; });
}

void require_same_grid(const Form& a, const Form& b) {
    if (a.grid_ptr() != b.grid_ptr() && !(a.grid() == b.grid()))
        throw FormError("forms live on different grids");
}

Form& Form::operator+=(const Form& o) {
    require_same_grid(*this, o);
    if (o.grade_ != grade_) throw FormError("adding forms of different grade");
    for (std::size_t c = 0; c < data_.size(); ++c) {
        auto src = o.stagger_[c] == stagger_[c] ? o.data_[c]
                                                : resample(*grid_, o.data_[c], o.stagger_[c], stagger_[c]);
        auto& dst = data_[c];
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    flagged_ |= o.flagged_;
    staggered_ = staggered_ || o.staggered_;
    return *this;
}

Form& Form::operator-=(const Form& o) {
    Form neg = -o;
    return *this += neg;
}

Form& Form::operator*=(double s) {
    for (auto& d : data_)
        for (auto& x : d) x *= s;
    return *this;
}

Form Form::operator+(const Form& o) const {
    Form r = *this;
    r += o;
    return r;
}

Form Form::operator-(const Form& o) const {
    Form r = *this;
    r -= o;
    return r;
}

Form Form::operator-() const {
    Form r = *this;
    r *= -1.0;
    return r;
}

Form operator*(double s, const Form& f) {
    Form r = f;
    r *= s;
    return r;
}

double Form::max_abs() const {
    double m = 0.0;
    for (auto& d : data_)
        for (double x : d) m = std::max(m, std::abs(x));
    return m;
}

bool Form::is_zero() const { return max_abs() == 0.0; }

// --- staggering ---------------------------------------------------------------------

std::vector<double> resample(const DomainGrid& g, std::span<const double> v, Mask from, Mask to) {
    std::vector<double> cur(v.begin(), v.end());
    Mask diff = from ^ to;
    for (int mu = 0; mu < g.dim; ++mu) {
        if (!(diff >> mu & 1u)) continue;
        bool up = (to >> mu) & 1u;  // 0 -> 1 averages with the next node, 1 -> 0 with the previous
        std::size_t st = g.stride(mu);
        int n = g.sizes[mu];
        bool periodic = g.periodic(mu);
        std::vector<double> out(cur.size());
        for (std::size_t i = 0; i < cur.size(); ++i) {
            int k = static_cast<int>((i / st) % n);
            std::size_t j;
            if (up) {
                if (k + 1 < n)
                    j = i + st;
                else
                    j = periodic ? i - static_cast<std::size_t>(n - 1) * st : i;
            } else {
                if (k > 0)
                    j = i - st;
                else
                    j = periodic ? i + static_cast<std::size_t>(n - 1) * st : i;
            }
            out[i] = 0.5 * (cur[i] + cur[j]);
        }
        cur.swap(out);
    }
    return cur;
}

Form restagger(const Form& a, const std::vector<Mask>& layout) {
    if (layout.size() != a.num_components()) throw FormError("layout size mismatch");
    Form r = a;
    for (std::size_t c = 0; c < a.num_components(); ++c) {
        if (a.stagger(c) == layout[c]) continue;
        auto v = resample(a.grid(), a.component(c), a.stagger(c), layout[c]);
        std::copy(v.begin(), v.end(), r.component(c).begin());
        r.set_stagger(c, layout[c]);
    }
    return r;
}

namespace {

// Accumulates sign * values into a component, adopting the layout of the first contribution.
struct Accumulator {
    const DomainGrid& g;
    std::vector<double>& dst;
    Mask& layout;
    bool seen = false;

    void add(double sign, const std::vector<double>& src, Mask src_layout) {
        if (!seen) {
            layout = src_layout;
            seen = true;
        }
        const std::vector<double>* p = &src;
        std::vector<double> tmp;
        if (src_layout != layout) {
            tmp = resample(g, src, src_layout, layout);
            p = &tmp;
        }
        const auto& s = *p;
        parallel_for(dst.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) dst[i] += sign * s[i];
        });
    }
};

}  // namespace

Form wedge(const Form& a, const Form& b) {
    require_same_grid(a, b);
    const auto& g = a.grid_ptr();
    int n = g->dim;
    Form r(g, a.grade() + b.grade());
    if (a.grade() + b.grade() > n) return r;
    for (std::size_t k = 0; k < r.num_components(); ++k) {
        Mask km = r.mask(k);
        std::vector<double> acc(g->cell_count(), 0.0);
        Mask layout = 0;
        Accumulator accu{*g, acc, layout};
        for (std::size_t i = 0; i < a.num_components(); ++i) {
            Mask im = a.mask(i);
            if ((im & km) != im) continue;
            Mask jm = km & ~im;
            if (popcount(jm) != b.grade()) continue;
            std::size_t j = b.grade() == 0 ? 0 : component_index(n, jm);
            int s = merge_sign(im, jm);
            auto av = a.component(i);
            std::vector<double> bv(b.component(j).begin(), b.component(j).end());
            if (b.stagger(j) != a.stagger(i)) bv = resample(*g, bv, b.stagger(j), a.stagger(i));
            std::vector<double> prod(bv.size());
            parallel_for(prod.size(), [&](std::size_t lo, std::size_t hi) {
                for (std::size_t c = lo; c < hi; ++c) prod[c] = av[c] * bv[c];
            });
            accu.add(s, prod, a.stagger(i));
        }
        std::copy(acc.begin(), acc.end(), r.component(k).begin());
        r.set_stagger(k, layout);
    }
    r.flag_axes(a.flagged_axes() | b.flagged_axes());
    r.set_staggered(a.staggered() || b.staggered());
    return r;
}

namespace {

// Difference along mu of a component with layout s; returns the toggled layout.
std::vector<double> axis_difference(const DomainGrid& g, std::span<const double> v, int mu, Mask s,
                                    bool toggle, Mask& out_layout, bool& flagged) {
    std::size_t st = g.stride(mu);
    int n = g.sizes[mu];
    double h = g.spacing(mu);
    bool periodic = g.periodic(mu);
    bool forward = !((s >> mu) & 1u);
    out_layout = toggle ? s ^ (Mask{1} << mu) : s;
    if (!periodic) flagged = true;
    std::vector<double> out(v.size());
    parallel_for(v.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            int k = static_cast<int>((i / st) % n);
            double lo, hi;
            if (forward) {
                if (k + 1 < n) {
                    lo = v[i];
                    hi = v[i + st];
                } else if (periodic) {
                    lo = v[i];
                    hi = v[i - static_cast<std::size_t>(n - 1) * st];
                } else {
                    lo = v[i - st];
                    hi = v[i];
                }
            } else {
                if (k > 0) {
                    lo = v[i - st];
                    hi = v[i];
                } else if (periodic) {
                    lo = v[i + static_cast<std::size_t>(n - 1) * st];
                    hi = v[i];
                } else {
                    lo = v[i];
                    hi = v[i + st];
                }
            }
            out[i] = (hi - lo) / h;
        }
    });
    return out;
}

}  // namespace

Form exterior_derivative(const Form& a) {
    const auto& g = a.grid_ptr();
    int n = g->dim;
    if (a.grade() >= n) {
        Form z(g, a.grade());
        z.flag_axes(a.flagged_axes());
        return z;
    }
    Form r(g, a.grade() + 1);
    Mask flagged = a.flagged_axes();
    for (std::size_t k = 0; k < r.num_components(); ++k) {
        Mask km = r.mask(k);
        std::vector<double> acc(g->cell_count(), 0.0);
        Mask layout = 0;
        Accumulator accu{*g, acc, layout};
        for (int mu : mask_axes(km)) {
            Mask im = km & ~(Mask{1} << mu);
            std::size_t i = a.grade() == 0 ? 0 : component_index(n, im);
            Mask out_layout;
            bool fl = false;
            auto diff = axis_difference(*g, a.component(i), mu, a.stagger(i), a.staggered(), out_layout, fl);
            if (fl) flagged |= Mask{1} << mu;
            accu.add((position_in(km, mu) & 1) ? -1.0 : 1.0, diff, out_layout);
        }
        std::copy(acc.begin(), acc.end(), r.component(k).begin());
        r.set_stagger(k, layout);
    }
    r.flag_axes(flagged);
    r.set_staggered(a.staggered());
    return r;
}

Form hodge_star(const Form& a) {
    const auto& g = a.grid_ptr();
    int n = g->dim;
    if (a.grade() > n) return Form(g, a.grade());
    Mask full = (n >= 32) ? ~Mask{0} : ((Mask{1} << n) - 1);
    Form r(g, n - a.grade());
    for (std::size_t i = 0; i < a.num_components(); ++i) {
        Mask im = a.mask(i);
        Mask jm = full & ~im;
        double metric = 1.0;
        for (int mu : mask_axes(im)) metric *= g->signature[mu];
        double s = metric * merge_sign(im, jm);
        std::size_t j = component_index(n, jm);
        auto src = a.component(i);
        auto dst = r.component(j);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = s * src[c];
        r.set_stagger(j, a.stagger(i));
    }
    r.flag_axes(a.flagged_axes());
    r.set_staggered(a.staggered());
    return r;
}

Form interior_product(int axis, const Form& a) {
    const auto& g = a.grid_ptr();
    int n = g->dim;
    if (axis < 0 || axis >= n) throw FormError("interior product axis out of range");
    if (a.grade() == 0) return Form(g, 0);
    Form r(g, a.grade() - 1);
    Mask bit = Mask{1} << axis;
    for (std::size_t i = 0; i < a.num_components(); ++i) {
        Mask im = a.mask(i);
        if (!(im & bit)) continue;
        double s = (position_in(im, axis) & 1) ? -1.0 : 1.0;
        std::size_t j = r.grade() == 0 ? 0 : component_index(n, im & ~bit);
        auto src = a.component(i);
        auto dst = r.component(j);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = s * src[c];
        r.set_stagger(j, a.stagger(i));
    }
    r.flag_axes(a.flagged_axes());
    r.set_staggered(a.staggered());
    return r;
}

Form scale_by(const Form& f0, const Form& a) {
    if (f0.grade() != 0) throw FormError("scale_by expects a 0-form");
    return wedge(f0, a);
}

// --- integration --------------------------------------------------------------------

namespace {

int cell_limit(const DomainGrid& g, int axis) {
    return g.periodic(axis) ? g.sizes[axis] : g.sizes[axis] - 1;
}

double slice_integral(const Form& a, int axis, int index) {
    const auto& g = a.grid();
    int n = g.dim;
    if (a.grade() != n - 1) throw FormError("hypersurface integral needs an (n-1)-form");
    if (axis < 0 || axis >= n) throw FormError("slice axis out of range");
    if (index < 0 || index >= g.sizes[axis]) throw FormError("slice index out of range");
    Mask full = (Mask{1} << n) - 1;
    Mask comp = full & ~(Mask{1} << axis);
    // Vol_mu = (-1)^mu dx^(complement of mu)
    double sign = (axis & 1) ? -1.0 : 1.0;
    auto v = a[comp];
    double measure = 1.0;
    for (int mu = 0; mu < n; ++mu)
        if (mu != axis) measure *= g.spacing(mu);
    double sum = 0.0;
    std::size_t total = g.cell_count();
    for (std::size_t i = 0; i < total; ++i) {
        bool inside = true;
        for (int mu = 0; mu < n && inside; ++mu) {
            int k = static_cast<int>((i / g.stride(mu)) % g.sizes[mu]);
            if (mu == axis)
                inside = k == index;
            else
                inside = k < cell_limit(g, mu);
        }
        if (inside) sum += v[i];
    }
    return sign * sum * measure;
}

}  // namespace

double integrate_region(const Form& a, const RegionSpec& region) {
    const auto& g = a.grid();
    int n = g.dim;
    switch (region.kind) {
        case RegionSpec::Kind::full: {
            if (a.grade() != n) throw FormError("full-domain integral needs an n-form");
            double measure = 1.0;
            for (int mu = 0; mu < n; ++mu) measure *= g.spacing(mu);
            auto v = a.component(0);
            double sum = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                bool inside = true;
                for (int mu = 0; mu < n && inside; ++mu)
                    inside = static_cast<int>((i / g.stride(mu)) % g.sizes[mu]) < cell_limit(g, mu);
                if (inside) sum += v[i];
            }
            return sum * measure;
        }
        case RegionSpec::Kind::slice:
            return slice_integral(a, region.axis, region.index);
        case RegionSpec::Kind::boundary: {
            if (a.grade() != n - 1) throw FormError("boundary integral needs an (n-1)-form");
            double sum = 0.0;
            for (int mu = 0; mu < n; ++mu)
                if (!g.periodic(mu))
                    sum += slice_integral(a, mu, g.sizes[mu] - 1) - slice_integral(a, mu, 0);
            return sum;
        }
    }
    return 0.0;
}

namespace {

template <class F>
void for_interior(const Form& a, int margin, F&& f) {
    const auto& g = a.grid();
    int n = g.dim;
    for (std::size_t c = 0; c < a.num_components(); ++c) {
        auto v = a.component(c);
        for (std::size_t i = 0; i < v.size(); ++i) {
            bool inside = true;
            for (int mu = 0; mu < n && inside; ++mu) {
                if (g.periodic(mu)) continue;
                int k = static_cast<int>((i / g.stride(mu)) % g.sizes[mu]);
                inside = k >= margin && k + margin < g.sizes[mu];
            }
            if (inside) f(v[i]);
        }
    }
}

}  // namespace

double interior_rms(const Form& a, int margin) {
    double s = 0.0;
    std::size_t count = 0;
    for_interior(a, margin, [&](double x) {
        s += x * x;
        ++count;
    });
    return count ? std::sqrt(s / static_cast<double>(count)) : 0.0;
}

double interior_max_abs(const Form& a, int margin) {
    double m = 0.0;
    for_interior(a, margin, [&](double x) { m = std::max(m, std::abs(x)); });
    return m;
}

}  // namespace histodyn
