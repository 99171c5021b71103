#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "phibvp/errors.hpp"

namespace phibvp {

namespace detail {

/// Gauss-Legendre nodes and weights on (-1, 1), computed by Newton iteration
/// on the Legendre polynomial. All nodes are strictly interior.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(n - 1 - i)] = z;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
    }
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace detail

/// Partition of [a, b] into strictly increasing nodes. Points where the
/// weight k vanishes are tracked and are always nodes, so quadrature with
/// strictly interior sample points never touches a pole of 1/k.
class Mesh {
public:
    Mesh(std::vector<double> nodes, std::vector<double> singular = {})
        : nodes_(std::move(nodes)), singular_(std::move(singular)) {
        if (nodes_.size() < 2) throw ConfigError("mesh needs at least 2 nodes");
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            if (!(nodes_[i] < nodes_[i + 1]))
                throw ConfigError("mesh nodes not strictly increasing at index " + std::to_string(i));
        }
        std::sort(singular_.begin(), singular_.end());
        singular_.erase(std::unique(singular_.begin(), singular_.end()), singular_.end());
        for (double s : singular_) {
            if (!std::binary_search(nodes_.begin(), nodes_.end(), s))
                throw ConfigError("singular point " + detail::fmt(s) + " is not a mesh node");
        }
    }

    double a() const { return nodes_.front(); }
    double b() const { return nodes_.back(); }
    double length() const { return b() - a(); }
    std::size_t n_nodes() const { return nodes_.size(); }
    std::size_t n_cells() const { return nodes_.size() - 1; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& singular_points() const { return singular_; }

    double width(std::size_t cell) const { return nodes_[cell + 1] - nodes_[cell]; }
    double midpoint(std::size_t cell) const { return 0.5 * (nodes_[cell] + nodes_[cell + 1]); }

    /// Index of the cell containing t; t is clamped to [a, b].
    std::size_t cell_containing(double t) const {
        if (t <= a()) return 0;
        if (t >= b()) return n_cells() - 1;
        const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
        return static_cast<std::size_t>(it - nodes_.begin()) - 1;
    }

    bool point_is_singular(double t) const {
        return std::binary_search(singular_.begin(), singular_.end(), t);
    }
    bool node_is_singular(std::size_t i) const { return point_is_singular(nodes_[i]); }
    bool cell_touches_singular(std::size_t cell) const {
        return node_is_singular(cell) || node_is_singular(cell + 1);
    }

    bool same_nodes(const Mesh& other) const { return nodes_ == other.nodes_; }

private:
    std::vector<double> nodes_;
    std::vector<double> singular_; // sorted, each equal to some node
};

namespace detail {

// Cell widths for one segment with `m` cells, geometrically refined toward
// the left end with ratio r > 1. The geometric zone is capped so the
// smallest width keeps nodes and interior quadrature samples representable;
// remaining cells continue at the largest graded width.
inline std::vector<double> graded_widths(double len, std::size_t m, double r, double scale) {
    std::vector<double> w(m, len / static_cast<double>(m));
    if (r <= 1.0 || m < 2) return w;
    const double floor_width =
        1024.0 * std::numeric_limits<double>::epsilon() * std::max(scale, len);
    std::size_t cap =
        std::min(m - 1, static_cast<std::size_t>(std::floor(std::log(1e13) / std::log(r))));
    double w0 = 0.0;
    for (;;) {
        // len = w0 * [(r^{cap+1}-1)/(r-1) + (m-1-cap) * r^cap]
        const double rc = std::pow(r, static_cast<double>(cap));
        const double geom = (rc * r - 1.0) / (r - 1.0);
        w0 = len / (geom + static_cast<double>(m - 1 - cap) * rc);
        if (w0 >= floor_width || cap == 0) break;
        --cap;
    }
    double cur = w0;
    for (std::size_t j = 0; j < m; ++j) {
        w[j] = cur;
        if (j < cap) cur *= r;
    }
    return w;
}

inline void append_segment(std::vector<double>& nodes, double p, double q, std::size_t m,
                           bool refine_left, bool refine_right, double r) {
    const double len = q - p;
    const double scale = std::max(std::abs(p), std::abs(q));
    std::vector<double> widths;
    if (refine_left && refine_right) {
        const std::size_t ml = std::max<std::size_t>(1, m / 2);
        const std::size_t mr = std::max<std::size_t>(1, m - ml);
        widths = graded_widths(0.5 * len, ml, r, scale);
        std::vector<double> right = graded_widths(0.5 * len, mr, r, scale);
        widths.insert(widths.end(), right.rbegin(), right.rend());
    } else if (refine_left) {
        widths = graded_widths(len, m, r, scale);
    } else if (refine_right) {
        widths = graded_widths(len, m, r, scale);
        std::reverse(widths.begin(), widths.end());
    } else {
        widths.assign(m, len / static_cast<double>(m));
    }
    double t = p;
    for (std::size_t j = 0; j + 1 < widths.size(); ++j) {
        t += widths[j];
        nodes.push_back(t);
    }
    nodes.push_back(q); // exact endpoint, no accumulation drift
}

} // namespace detail

/// Build a mesh on [a, b] with at least `cells` cells, geometrically refined
/// toward each singular point with cell-width ratio `grading`. Every singular
/// point and every anchor becomes a node; anchors get no refinement.
inline Mesh make_graded_mesh(double a, double b, std::size_t cells,
                             const std::vector<double>& singular, double grading,
                             const std::vector<double>& anchors = {}) {
    if (!(a < b)) throw ConfigError("make_graded_mesh: requires a < b");
    if (cells < 2) throw ConfigError("make_graded_mesh: requires at least 2 cells");
    if (!(grading >= 1.0)) throw ConfigError("make_graded_mesh: grading must be >= 1");
    for (double s : singular) {
        if (s < a || s > b)
            throw DomainError("singular point " + detail::fmt(s) + " outside [" +
                              detail::fmt(a) + ", " + detail::fmt(b) + "]");
    }
    for (double t : anchors) {
        if (t < a || t > b)
            throw DomainError("anchor " + detail::fmt(t) + " outside the interval");
    }

    std::vector<double> breaks{a, b};
    breaks.insert(breaks.end(), singular.begin(), singular.end());
    breaks.insert(breaks.end(), anchors.begin(), anchors.end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    auto is_singular = [&](double t) {
        return std::find(singular.begin(), singular.end(), t) != singular.end();
    };

    std::vector<double> nodes{a};
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        const double p = breaks[s], q = breaks[s + 1];
        const double frac = (q - p) / (b - a);
        const std::size_t m = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(static_cast<double>(cells) * frac - 1e-9)));
        detail::append_segment(nodes, p, q, m, is_singular(p), is_singular(q), grading);
    }

    std::vector<double> sing(singular);
    return Mesh(std::move(nodes), std::move(sing));
}

/// Continuous piecewise-linear function: nodal values plus one slope per
/// cell. The pair stays coherent: values[i+1] - values[i] = slopes[i] * h_i
/// up to an absolute tolerance 1e-12 * (1 + |values[i]|).
class GridFunction {
public:
    GridFunction(Mesh mesh, std::vector<double> values, std::vector<double> slopes)
        : mesh_(std::move(mesh)), values_(std::move(values)), slopes_(std::move(slopes)) {
        if (values_.size() != mesh_.n_nodes())
            throw ConfigError("grid function: values/nodes size mismatch");
        if (slopes_.size() != mesh_.n_cells())
            throw ConfigError("grid function: slopes/cells size mismatch");
        for (double v : values_)
            if (!std::isfinite(v)) throw ConfigError("grid function: non-finite value");
        for (double s : slopes_)
            if (!std::isfinite(s)) throw ConfigError("grid function: non-finite slope");
        for (std::size_t i = 0; i < slopes_.size(); ++i) {
            const double gap = values_[i + 1] - values_[i] - slopes_[i] * mesh_.width(i);
            if (std::abs(gap) > 1e-12 * (1.0 + std::abs(values_[i])))
                throw ConfigError("grid function: slope/value consistency violated at cell " +
                                  std::to_string(i));
        }
    }

    static GridFunction constant(const Mesh& mesh, double c) {
        return GridFunction(mesh, std::vector<double>(mesh.n_nodes(), c),
                            std::vector<double>(mesh.n_cells(), 0.0));
    }

    /// Interpolate nodal values; slopes from divided differences.
    static GridFunction from_values(Mesh mesh, std::vector<double> values) {
        if (values.size() != mesh.n_nodes())
            throw ConfigError("grid function: values/nodes size mismatch");
        std::vector<double> slopes(mesh.n_cells());
        for (std::size_t i = 0; i < slopes.size(); ++i)
            slopes[i] = (values[i + 1] - values[i]) / mesh.width(i);
        return GridFunction(std::move(mesh), std::move(values), std::move(slopes));
    }

    const Mesh& mesh() const { return mesh_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& slopes() const { return slopes_; }
    double value(std::size_t i) const { return values_[i]; }
    double slope(std::size_t cell) const { return slopes_[cell]; }

    double eval(double t) const {
        if (t < mesh_.a() - 1e-12 * (1.0 + std::abs(mesh_.a())) ||
            t > mesh_.b() + 1e-12 * (1.0 + std::abs(mesh_.b())))
            throw DomainError("evaluation point " + detail::fmt(t) + " outside [a, b]");
        if (t >= mesh_.b()) return values_.back();
        const std::size_t c = mesh_.cell_containing(t);
        return values_[c] + slopes_[c] * (t - mesh_.nodes()[c]);
    }

    double slope_at(double t) const { return slopes_[mesh_.cell_containing(t)]; }

private:
    Mesh mesh_;
    std::vector<double> values_;
    std::vector<double> slopes_;
};

/// Exact integral of the cellwise field g: values[0] = start,
/// values[i+1] = values[i] + g[i] * h_i, slopes = g.
inline GridFunction antiderivative(const Mesh& mesh, const std::vector<double>& g, double start) {
    if (g.size() != mesh.n_cells())
        throw ConfigError("antiderivative: cell field size mismatch");
    std::vector<double> values(mesh.n_nodes());
    values[0] = start;
    for (std::size_t i = 0; i < g.size(); ++i)
        values[i + 1] = values[i] + g[i] * mesh.width(i);
    return GridFunction(mesh, std::move(values), g);
}

enum class NormKind { L1, Linf, Lq, W11 };

namespace detail {

/// Exact integral of |v| over one cell with endpoint values v0, v1.
inline double cell_l1(double v0, double v1, double h) {
    if (v0 * v1 >= 0.0) return 0.5 * h * (std::abs(v0) + std::abs(v1));
    const double s = std::abs(v0) + std::abs(v1);
    return 0.5 * h * (v0 * v0 + v1 * v1) / s;
}

/// Integral of |linear|^q over [0, h], endpoint values v0, v1, via
/// Gauss points on each sign-constant piece.
inline double cell_lq(double v0, double v1, double h, double q, const std::vector<double>& gx,
                      const std::vector<double>& gw) {
    auto piece = [&](double w0, double w1, double len) {
        double acc = 0.0;
        for (std::size_t j = 0; j < gx.size(); ++j) {
            const double u = 0.5 * (gx[j] + 1.0); // in (0,1)
            const double v = w0 + (w1 - w0) * u;
            acc += gw[j] * std::pow(std::abs(v), q);
        }
        return acc * 0.5 * len;
    };
    if (v0 * v1 >= 0.0) return piece(v0, v1, h);
    const double theta = std::abs(v0) / (std::abs(v0) + std::abs(v1));
    return piece(v0, 0.0, theta * h) + piece(0.0, v1, (1.0 - theta) * h);
}

} // namespace detail

inline double norm(const GridFunction& x, NormKind kind, double q = 2.0) {
    const Mesh& m = x.mesh();
    switch (kind) {
        case NormKind::Linf: {
            double mx = 0.0;
            for (double v : x.values()) mx = std::max(mx, std::abs(v));
            return mx; // piecewise linear: the max sits at a node
        }
        case NormKind::L1: {
            double acc = 0.0;
            for (std::size_t i = 0; i < m.n_cells(); ++i)
                acc += detail::cell_l1(x.value(i), x.value(i + 1), m.width(i));
            return acc;
        }
        case NormKind::Lq: {
            if (!(q > 1.0) || !std::isfinite(q))
                throw ConfigError("Lq norm requires 1 < q < inf");
            std::vector<double> gx, gw;
            detail::gauss_legendre(12, gx, gw);
            double acc = 0.0;
            for (std::size_t i = 0; i < m.n_cells(); ++i)
                acc += detail::cell_lq(x.value(i), x.value(i + 1), m.width(i), q, gx, gw);
            return std::pow(acc, 1.0 / q);
        }
        case NormKind::W11: {
            double acc = norm(x, NormKind::L1);
            for (std::size_t i = 0; i < m.n_cells(); ++i)
                acc += std::abs(x.slope(i)) * m.width(i);
            return acc;
        }
    }
    throw ConfigError("unknown norm kind");
}

/// Integral of w over the mesh by per-cell open Gauss-Legendre quadrature
/// (sample points strictly interior, so marked singular nodes are never
/// evaluated) plus one Richardson refinement step.
inline double integrate_singular(const std::function<double(double)>& w, const Mesh& mesh,
                                 int points = 8) {
    if (points < 1) throw ConfigError("integrate_singular: needs at least one point");
    std::vector<double> gx, gw;
    detail::gauss_legendre(points, gx, gw);
    auto rule = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
        const double in_lo = std::nextafter(lo, hi), in_hi = std::nextafter(hi, lo);
        double acc = 0.0;
        for (std::size_t j = 0; j < gx.size(); ++j) {
            // Keep samples strictly interior even when rounding would land
            // them on a (possibly singular) node.
            const double t = std::min(std::max(c + r * gx[j], in_lo), in_hi);
            const double v = w(t);
            if (!std::isfinite(v))
                throw DomainError("non-finite integrand sample at t = " + detail::fmt(t));
            acc += gw[j] * v;
        }
        return acc * r;
    };
    double coarse = 0.0, fine = 0.0;
    for (std::size_t i = 0; i < mesh.n_cells(); ++i) {
        const double lo = mesh.nodes()[i], hi = mesh.nodes()[i + 1];
        coarse += rule(lo, hi);
        const double mid = 0.5 * (lo + hi);
        fine += rule(lo, mid) + rule(mid, hi);
    }
    const double denom = std::pow(2.0, 2.0 * points) - 1.0;
    return fine + (fine - coarse) / denom;
}

/// Union of two node sets over the same interval; singular markers merged.
inline Mesh mesh_union(const Mesh& m1, const Mesh& m2) {
    if (m1.a() != m2.a() || m1.b() != m2.b())
        throw ConfigError("mesh_union: intervals differ");
    std::vector<double> nodes;
    nodes.reserve(m1.n_nodes() + m2.n_nodes());
    std::merge(m1.nodes().begin(), m1.nodes().end(), m2.nodes().begin(), m2.nodes().end(),
               std::back_inserter(nodes));
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    std::vector<double> sing;
    std::merge(m1.singular_points().begin(), m1.singular_points().end(),
               m2.singular_points().begin(), m2.singular_points().end(),
               std::back_inserter(sing));
    sing.erase(std::unique(sing.begin(), sing.end()), sing.end());
    return Mesh(std::move(nodes), std::move(sing));
}

/// Re-express x on `target`. Exact whenever target contains x's nodes;
/// otherwise the piecewise-linear interpolant through the target nodes.
inline GridFunction resample(const GridFunction& x, const Mesh& target) {
    std::vector<double> values(target.n_nodes());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = x.eval(target.nodes()[i]);
    std::vector<double> slopes(target.n_cells());
    for (std::size_t i = 0; i < slopes.size(); ++i)
        slopes[i] = x.slope_at(target.midpoint(i));
    // Fall back to divided differences where an interpolated node broke
    // exactness (target node strictly inside a cell of x).
    for (std::size_t i = 0; i < slopes.size(); ++i) {
        const double gap = values[i + 1] - values[i] - slopes[i] * target.width(i);
        if (std::abs(gap) > 1e-13 * (1.0 + std::abs(values[i])))
            slopes[i] = (values[i + 1] - values[i]) / target.width(i);
    }
    return GridFunction(target, std::move(values), std::move(slopes));
}

namespace detail {

inline void require_same_mesh(const GridFunction& x, const GridFunction& y, const char* op) {
    if (!x.mesh().same_nodes(y.mesh()))
        throw ConfigError(std::string(op) + ": operands live on different meshes");
}

} // namespace detail

inline GridFunction lin_comb(double cx, const GridFunction& x, double cy, const GridFunction& y) {
    detail::require_same_mesh(x, y, "lin_comb");
    std::vector<double> values(x.values().size());
    std::vector<double> slopes(x.slopes().size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = cx * x.value(i) + cy * y.value(i);
    for (std::size_t i = 0; i < slopes.size(); ++i)
        slopes[i] = cx * x.slope(i) + cy * y.slope(i);
    return GridFunction(x.mesh(), std::move(values), std::move(slopes));
}

inline GridFunction operator+(const GridFunction& x, const GridFunction& y) {
    return lin_comb(1.0, x, 1.0, y);
}
inline GridFunction operator-(const GridFunction& x, const GridFunction& y) {
    return lin_comb(1.0, x, -1.0, y);
}
inline GridFunction operator*(double c, const GridFunction& x) {
    return lin_comb(c, x, 0.0, x);
}

/// W11 distance of two functions that may live on different refinements.
inline double w11_distance(const GridFunction& x, const GridFunction& y) {
    if (x.mesh().same_nodes(y.mesh())) return norm(x - y, NormKind::W11);
    const Mesh u = mesh_union(x.mesh(), y.mesh());
    return norm(resample(x, u) - resample(y, u), NormKind::W11);
}

} // namespace phibvp
