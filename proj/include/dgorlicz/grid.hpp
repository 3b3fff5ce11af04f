#pragma once

// Lattice discretisation of a weighted domain: nodes with weight v and
// dual-cell quadrature weights, a symmetric non-negative matrix field Q,
// and the P1 elements used for gradients.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dgorlicz/error.hpp"

namespace dgorlicz {

using Vec2 = std::array<double, 2>;

/// Symmetric 2x2 matrix; 1D grids use a11 only.
struct SymMatrix2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a22 = 0.0;

    static SymMatrix2 identity() { return {1.0, 0.0, 1.0}; }
    static SymMatrix2 diag(double d1, double d2) { return {d1, 0.0, d2}; }

    std::pair<double, double> eigenvalues() const {
        const double m = 0.5 * (a11 + a22);
        const double d = std::hypot(0.5 * (a11 - a22), a12);
        return {m - d, m + d};
    }
    /// ||Q||_op; equals the largest eigenvalue for non-negative definite Q.
    double op_norm() const {
        auto [lo, hi] = eigenvalues();
        return std::max(std::abs(lo), std::abs(hi));
    }
    bool nonneg_definite(double tol = 1e-14) const {
        return eigenvalues().first >= -tol * std::max(1.0, op_norm());
    }
    Vec2 apply(const Vec2& g) const { return {a11 * g[0] + a12 * g[1], a12 * g[0] + a22 * g[1]}; }
    /// g . Q g = |sqrt(Q) g|^2
    double form(const Vec2& g) const { return a11 * g[0] * g[0] + 2.0 * a12 * g[0] * g[1] + a22 * g[1] * g[1]; }

    friend bool operator==(const SymMatrix2&, const SymMatrix2&) = default;
};

/// P1 element. The constant gradient is
///   ((u[xp] - u[xm]) / h, (u[yp] - u[ym]) / h);
/// 1D elements have no y component (ym == yp == npos).
struct Element {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t xm = 0, xp = 0, ym = npos, yp = npos;
    double measure = 0.0;
    SymMatrix2 q;
};

/// Distinct nodes of an element (2 in 1D, 3 in 2D).
inline std::vector<std::size_t> element_nodes(const Element& e) {
    std::vector<std::size_t> c{e.xm, e.xp};
    for (auto k : {e.ym, e.yp})
        if (k != Element::npos && std::find(c.begin(), c.end(), k) == c.end()) c.push_back(k);
    return c;
}

class WeightedGrid {
public:
    using WeightFn = std::function<double(const Vec2&)>;
    using MatrixFn = std::function<SymMatrix2(const Vec2&)>;

    /// Uniform lattice on [a, b] with n intervals; Q is sampled at nodes and
    /// at cell midpoints (the latter drive the elements).
    static WeightedGrid interval(double a, double b, std::size_t n, const WeightFn& v, const MatrixFn& q) {
        return build(1, a, b, n, v, q);
    }

    /// Uniform lattice on [a, b]^2 with n intervals per axis, two triangles per cell.
    static WeightedGrid square(double a, double b, std::size_t n, const WeightFn& v, const MatrixFn& q) {
        return build(2, a, b, n, v, q);
    }

    /// Unit interval, v = 1, Q = 1.
    static WeightedGrid unit_interval(std::size_t n) {
        return interval(0.0, 1.0, n, [](const Vec2&) { return 1.0; },
                        [](const Vec2&) { return SymMatrix2::identity(); });
    }

    /// (0,1)^2 with Q = diag(1, x1^2) and v = max(omega^{p/2}, v_min).
    static WeightedGrid degenerate_square(std::size_t n, double p, double v_min = 1e-8) {
        const auto q = [](const Vec2& x) { return SymMatrix2::diag(1.0, x[0] * x[0]); };
        return square(0.0, 1.0, n,
                      [=](const Vec2& x) { return std::max(std::pow(q(x).op_norm(), 0.5 * p), v_min); }, q);
    }

    /// Rebuild from nodal data (CSV input). Element matrices are the mean of
    /// the corner nodal matrices.
    static WeightedGrid from_nodal(int dim, double a, double b, std::size_t n, std::vector<double> weight,
                                   std::vector<SymMatrix2> node_q) {
        WeightedGrid g = build(dim, a, b, n, [](const Vec2&) { return 1.0; },
                               [](const Vec2&) { return SymMatrix2::identity(); });
        if (weight.size() != g.size() || node_q.size() != g.size())
            throw InvalidArgument("WeightedGrid::from_nodal: node count mismatch");
        g.weight_ = std::move(weight);
        g.node_q_ = std::move(node_q);
        for (auto& e : g.elements_) {
            const auto corners = element_nodes(e);
            SymMatrix2 acc;
            for (auto c : corners) {
                acc.a11 += g.node_q_[c].a11;
                acc.a12 += g.node_q_[c].a12;
                acc.a22 += g.node_q_[c].a22;
            }
            const double k = 1.0 / static_cast<double>(corners.size());
            e.q = {acc.a11 * k, acc.a12 * k, acc.a22 * k};
        }
        g.validate();
        return g;
    }

    int dim() const { return dim_; }
    std::size_t intervals() const { return n_; }
    double h() const { return h_; }
    double lower() const { return a_; }
    double upper() const { return b_; }
    std::size_t size() const { return nodes_.size(); }
    std::size_t per_axis() const { return n_ + 1; }

    std::span<const Vec2> nodes() const { return nodes_; }
    std::span<const double> weight() const { return weight_; }
    std::span<const double> quad() const { return quad_; }
    std::span<const SymMatrix2> node_q() const { return node_q_; }
    std::span<const Element> elements() const { return elements_; }
    bool on_boundary(std::size_t i) const { return boundary_[i] != 0; }

    /// v(i) * quad(i): the measure carried by node i.
    double mass(std::size_t i) const { return weight_[i] * quad_[i]; }

    /// v(Omega)
    double measure() const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) m += mass(i);
        return m;
    }

    double measure_of(std::span<const std::uint8_t> indicator) const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            if (indicator[i]) m += mass(i);
        return m;
    }

    /// Largest C with v >= C omega^{p/2} at every node where omega > 0.
    double weight_constant(double p) const {
        double c = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < size(); ++i) {
            const double w = node_q_[i].op_norm();
            if (w > 0.0) c = std::min(c, weight_[i] / std::pow(w, 0.5 * p));
        }
        return c;
    }

private:
    static WeightedGrid build(int dim, double a, double b, std::size_t n, const WeightFn& v,
                              const MatrixFn& q) {
        if (n < 2) throw InvalidArgument("WeightedGrid: need at least 2 intervals per axis");
        if (!(b > a)) throw InvalidArgument("WeightedGrid: empty domain");
        WeightedGrid g;
        g.dim_ = dim;
        g.n_ = n;
        g.a_ = a;
        g.b_ = b;
        g.h_ = (b - a) / static_cast<double>(n);
        const std::size_t m = n + 1;
        const double h = g.h_;
        auto coord = [&](std::size_t i) { return i == n ? b : a + h * static_cast<double>(i); };
        if (dim == 1) {
            // Only the a11 entry is meaningful in 1D.
            auto q1 = [&](const Vec2& x) { return SymMatrix2{q(x).a11, 0.0, 0.0}; };
            for (std::size_t i = 0; i < m; ++i) {
                const Vec2 x{coord(i), 0.0};
                g.nodes_.push_back(x);
                g.weight_.push_back(v(x));
                g.quad_.push_back((i == 0 || i == n) ? 0.5 * h : h);
                g.node_q_.push_back(q1(x));
                g.boundary_.push_back(i == 0 || i == n);
            }
            for (std::size_t i = 0; i < n; ++i) {
                Element e;
                e.xm = i;
                e.xp = i + 1;
                e.measure = h;
                e.q = q1({a + h * (static_cast<double>(i) + 0.5), 0.0});
                g.elements_.push_back(e);
            }
        } else if (dim == 2) {
            for (std::size_t j = 0; j < m; ++j) {
                for (std::size_t i = 0; i < m; ++i) {
                    const Vec2 x{coord(i), coord(j)};
                    g.nodes_.push_back(x);
                    g.weight_.push_back(v(x));
                    const double wx = (i == 0 || i == n) ? 0.5 * h : h;
                    const double wy = (j == 0 || j == n) ? 0.5 * h : h;
                    g.quad_.push_back(wx * wy);
                    g.node_q_.push_back(q(x));
                    g.boundary_.push_back(i == 0 || i == n || j == 0 || j == n);
                }
            }
            auto id = [m](std::size_t i, std::size_t j) { return i + j * m; };
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < n; ++i) {
                    const SymMatrix2 qc = q({a + h * (static_cast<double>(i) + 0.5),
                                             a + h * (static_cast<double>(j) + 0.5)});
                    Element lower{id(i, j), id(i + 1, j), id(i, j), id(i, j + 1), 0.5 * h * h, qc};
                    Element upper{id(i, j + 1), id(i + 1, j + 1), id(i + 1, j), id(i + 1, j + 1), 0.5 * h * h, qc};
                    g.elements_.push_back(lower);
                    g.elements_.push_back(upper);
                }
            }
        } else {
            throw InvalidArgument("WeightedGrid: dimension must be 1 or 2");
        }
        g.validate();
        return g;
    }

    void validate() const {
        for (std::size_t i = 0; i < size(); ++i) {
            if (!(weight_[i] >= 0.0) || !std::isfinite(weight_[i]))
                throw InvalidArgument("WeightedGrid: weight must be finite and non-negative at node " + std::to_string(i));
            if (!node_q_[i].nonneg_definite())
                throw InvalidArgument("WeightedGrid: Q is not non-negative definite at node " + std::to_string(i));
            if (dim_ == 1 && (node_q_[i].a12 != 0.0 || node_q_[i].a22 != 0.0))
                throw InvalidArgument("WeightedGrid: 1D grids carry a scalar Q (a11 only)");
        }
        for (const auto& e : elements_)
            if (!e.q.nonneg_definite()) throw InvalidArgument("WeightedGrid: element Q is not non-negative definite");
        if (!(measure() > 0.0)) throw InvalidArgument("WeightedGrid: v(Omega) must be positive");
    }

    int dim_ = 1;
    std::size_t n_ = 0;
    double a_ = 0.0, b_ = 1.0, h_ = 0.0;
    std::vector<Vec2> nodes_;
    std::vector<double> weight_, quad_;
    std::vector<SymMatrix2> node_q_;
    std::vector<std::uint8_t> boundary_;
    std::vector<Element> elements_;
};

/// Nodal values on a WeightedGrid, with an optional formal gradient.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(std::vector<double> values) : values_(std::move(values)) {
        for (double x : values_)
            if (!std::isfinite(x)) throw InvalidArgument("GridFunction: values must be finite");
    }

    template <class F>
    static GridFunction sample(const WeightedGrid& g, F&& fn) {
        std::vector<double> v;
        v.reserve(g.size());
        for (const auto& x : g.nodes()) v.push_back(fn(x));
        return GridFunction(std::move(v));
    }

    static GridFunction constant(const WeightedGrid& g, double c) {
        return GridFunction(std::vector<double>(g.size(), c));
    }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }

    const std::optional<std::vector<Vec2>>& gradient() const { return gradient_; }
    void set_gradient(std::vector<Vec2> g) { gradient_ = std::move(g); }

private:
    std::vector<double> values_;
    std::optional<std::vector<Vec2>> gradient_;
};

inline Vec2 element_gradient(const Element& e, std::span<const double> u, double h) {
    Vec2 g{(u[e.xp] - u[e.xm]) / h, 0.0};
    if (e.ym != Element::npos) g[1] = (u[e.yp] - u[e.ym]) / h;
    return g;
}

/// Nodal gradient: measure-weighted mean of the incident element gradients.
inline std::vector<Vec2> nodal_gradient(const WeightedGrid& g, std::span<const double> u) {
    std::vector<Vec2> acc(g.size(), Vec2{0.0, 0.0});
    std::vector<double> mass(g.size(), 0.0);
    for (const auto& e : g.elements()) {
        const Vec2 gr = element_gradient(e, u, g.h());
        for (auto c : element_nodes(e)) {
            acc[c][0] += e.measure * gr[0];
            acc[c][1] += e.measure * gr[1];
            mass[c] += e.measure;
        }
    }
    for (std::size_t i = 0; i < g.size(); ++i)
        if (mass[i] > 0.0) acc[i] = {acc[i][0] / mass[i], acc[i][1] / mass[i]};
    return acc;
}

/// ( sum_elements |sqrt(Q) grad u|^p |K| )^{1/p}, Lebesgue measure.
inline double gradient_lp_norm(const WeightedGrid& g, std::span<const double> u, double p) {
    double acc = 0.0;
    for (const auto& e : g.elements()) {
        const double f = e.q.form(element_gradient(e, u, g.h()));
        if (f > 0.0) acc += e.measure * std::pow(f, 0.5 * p);
    }
    return std::pow(acc, 1.0 / p);
}

}  // namespace dgorlicz
