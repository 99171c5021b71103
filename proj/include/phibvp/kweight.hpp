#pragma once

#include <cmath>
#include <vector>

#include "phibvp/errors.hpp"
#include "phibvp/expr.hpp"
#include "phibvp/mesh.hpp"

namespace phibvp {

/// The weight of the differential operator: a nonnegative bounded scalar
/// map of t whose zeros (if any) are listed explicitly and pinned to mesh
/// nodes, keeping 1/k evaluations away from poles.
struct KWeight {
    Expr expr;                    // in t
    std::vector<double> singular; // zeros of k inside [a, b]

    double eval(double t) const { return expr.eval(Bindings{}.set('t', t)); }
};

namespace detail {

inline double eval_k_checked(const Expr& k, double t) {
    const double v = k.eval(Bindings{}.set('t', t));
    if (!(v > 0.0))
        throw DomainError("weight k is not positive at sampled interior point t = " + fmt(t));
    return v;
}

/// Open Gauss quadrature of f over [lo, hi] with one Richardson step,
/// samples kept strictly interior.
template <typename F>
double integrate_cell(F&& f, double lo, double hi, const std::vector<double>& gx,
                      const std::vector<double>& gw) {
    auto rule = [&](double l, double h) {
        const double c = 0.5 * (l + h), r = 0.5 * (h - l);
        const double in_lo = std::nextafter(l, h), in_hi = std::nextafter(h, l);
        double acc = 0.0;
        for (std::size_t j = 0; j < gx.size(); ++j) {
            const double t = std::min(std::max(c + r * gx[j], in_lo), in_hi);
            acc += gw[j] * f(t);
        }
        return acc * r;
    };
    const double mid = 0.5 * (lo + hi);
    const double coarse = rule(lo, hi);
    const double fine = rule(lo, mid) + rule(mid, hi);
    const double denom = std::pow(2.0, 2.0 * static_cast<double>(gx.size())) - 1.0;
    return fine + (fine - coarse) / denom;
}

/// Quadrature over a cell whose integrand may blow up (integrably) at one
/// or both endpoints: geometric bisection toward the marked ends confines
/// the badly-resolved sliver to a vanishing share of the integral.
template <typename F>
double integrate_cell_refined(F&& f, double lo, double hi, bool sing_lo, bool sing_hi,
                              const std::vector<double>& gx, const std::vector<double>& gw) {
    if (sing_lo && sing_hi) {
        const double mid = 0.5 * (lo + hi);
        return integrate_cell_refined(f, lo, mid, true, false, gx, gw) +
               integrate_cell_refined(f, mid, hi, false, true, gx, gw);
    }
    if (!sing_lo && !sing_hi) return integrate_cell(f, lo, hi, gx, gw);
    const double floor_width =
        16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) + 1e-300;
    double acc = 0.0;
    if (sing_lo) {
        double right = hi;
        for (int level = 0; level < 48 && right - lo > floor_width; ++level) {
            const double left = lo + 0.5 * (right - lo);
            acc += integrate_cell(f, left, right, gx, gw);
            right = left;
        }
        acc += integrate_cell(f, lo, right, gx, gw);
    } else {
        double left = lo;
        for (int level = 0; level < 48 && hi - left > floor_width; ++level) {
            const double right = hi - 0.5 * (hi - left);
            acc += integrate_cell(f, left, right, gx, gw);
            left = right;
        }
        acc += integrate_cell(f, left, hi, gx, gw);
    }
    return acc;
}

/// Canonical quadrature-point enumeration for one mesh cell: the plain open
/// rule with its Richardson companion away from singular nodes, geometric
/// bisection toward them. Everything that must agree bit-stably on ratios of
/// cell integrals (solver slopes, k representatives, centroids) walks points
/// through this one function, in this one order.
template <typename Emit>
void enumerate_cell_quad(const Mesh& mesh, std::size_t cell, const std::vector<double>& gx,
                         const std::vector<double>& gw, Emit&& emit) {
    const int points = static_cast<int>(gx.size());
    const double denom = std::pow(2.0, 2.0 * points) - 1.0;

    auto add_interval = [&](double lo, double hi) {
        const double in_lo = std::nextafter(lo, hi), in_hi = std::nextafter(hi, lo);
        auto add = [&](double l, double h, double scale) {
            const double c = 0.5 * (l + h), r = 0.5 * (h - l);
            for (int j = 0; j < points; ++j) {
                const std::size_t ju = static_cast<std::size_t>(j);
                emit(std::min(std::max(c + r * gx[ju], in_lo), in_hi), scale * r * gw[ju]);
            }
        };
        add(lo, hi, -1.0 / denom); // coarse, negative Richardson weight
        const double mid = 0.5 * (lo + hi);
        add(lo, mid, 1.0 + 1.0 / denom);
        add(mid, hi, 1.0 + 1.0 / denom);
    };

    auto add_graded = [&](double lo, double hi, bool sing_lo) {
        const double floor_width = 16.0 * std::numeric_limits<double>::epsilon() *
                                   std::max(std::abs(lo), std::abs(hi)) + 1e-300;
        if (sing_lo) {
            double right = hi;
            for (int level = 0; level < 48 && right - lo > floor_width; ++level) {
                const double left = lo + 0.5 * (right - lo);
                add_interval(left, right);
                right = left;
            }
            add_interval(lo, right);
        } else {
            double left = lo;
            for (int level = 0; level < 48 && hi - left > floor_width; ++level) {
                const double right = hi - 0.5 * (hi - left);
                add_interval(left, right);
                left = right;
            }
            add_interval(left, hi);
        }
    };

    const double lo = mesh.nodes()[cell], hi = mesh.nodes()[cell + 1];
    const bool slo = mesh.node_is_singular(cell), shi = mesh.node_is_singular(cell + 1);
    if (slo && shi) {
        const double mid = 0.5 * (lo + hi);
        add_graded(lo, mid, true);
        add_graded(mid, hi, false);
    } else if (slo || shi) {
        add_graded(lo, hi, slo);
    } else {
        add_interval(lo, hi);
    }
}

} // namespace detail

/// Per-cell statistics of the 1/k density: the harmonic representative
/// k_rep = h / Int(1/k) and the weighted centroid Int(t/k) / Int(1/k).
struct KCellStats {
    std::vector<double> k_rep;
    std::vector<double> centroid;
};

inline KCellStats k_cell_stats(const Expr& k, const Mesh& mesh) {
    std::vector<double> gx, gw;
    detail::gauss_legendre(8, gx, gw);
    KCellStats out;
    out.k_rep.resize(mesh.n_cells());
    out.centroid.resize(mesh.n_cells());
    for (std::size_t i = 0; i < mesh.n_cells(); ++i) {
        double den = 0.0, num = 0.0;
        detail::enumerate_cell_quad(mesh, i, gx, gw, [&](double t, double w) {
            const double invk = w / detail::eval_k_checked(k, t);
            den += invk;
            num += invk * t;
        });
        out.k_rep[i] = mesh.width(i) / den;
        out.centroid[i] = num / den;
        if (!std::isfinite(out.k_rep[i]) || !(out.k_rep[i] > 0.0))
            throw DomainError("harmonic k average is degenerate on cell " + std::to_string(i));
    }
    return out;
}

/// Per-cell average of 1/k: the midpoint value away from singular nodes and
/// the open-quadrature cell average next to them, where k varies by an O(1)
/// factor inside the cell no matter how small it is.
inline std::vector<double> cell_inv_k(const Expr& k, const Mesh& mesh) {
    std::vector<double> gx, gw;
    detail::gauss_legendre(8, gx, gw);
    std::vector<double> out(mesh.n_cells());
    for (std::size_t i = 0; i < mesh.n_cells(); ++i) {
        if (mesh.cell_touches_singular(i)) {
            const double integral = detail::integrate_cell_refined(
                [&](double t) { return 1.0 / detail::eval_k_checked(k, t); }, mesh.nodes()[i],
                mesh.nodes()[i + 1], mesh.node_is_singular(i), mesh.node_is_singular(i + 1), gx,
                gw);
            out[i] = integral / mesh.width(i);
        } else {
            out[i] = 1.0 / detail::eval_k_checked(k, mesh.midpoint(i));
        }
        if (!std::isfinite(out[i]))
            throw DomainError("1/k average is not finite on cell " + std::to_string(i));
    }
    return out;
}

/// Per-cell representative value of k, used wherever k x' must be
/// reconstructed from a cell slope: the harmonic mean h / Int_cell (1/k).
/// Slopes produced by the solver are cell averages of (1/k) Phi^{-1}(...),
/// so this representative turns them back into the weighted mean of
/// Phi^{-1}(...) itself, uniformly in the cell size; on smooth cells it
/// agrees with the midpoint value to second order.
inline std::vector<double> cell_k_rep(const Expr& k, const Mesh& mesh) {
    return k_cell_stats(k, mesh).k_rep;
}

/// Sampled sup-norm of k over cell interiors.
inline double k_sup_norm(const Expr& k, const Mesh& mesh) {
    std::vector<double> gx, gw;
    detail::gauss_legendre(4, gx, gw);
    double sup = 0.0;
    for (std::size_t i = 0; i < mesh.n_cells(); ++i) {
        const double c = mesh.midpoint(i), r = 0.5 * mesh.width(i);
        sup = std::max(sup, std::abs(k.eval(Bindings{}.set('t', c))));
        for (double g : gx)
            sup = std::max(sup, std::abs(k.eval(Bindings{}.set('t', c + r * g))));
    }
    return sup;
}

} // namespace phibvp
