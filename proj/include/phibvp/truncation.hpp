#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "phibvp/errors.hpp"
#include "phibvp/mesh.hpp"

namespace phibvp {

namespace detail {

struct CellLine {
    double t0, v0, s; // value v0 at t0, slope s
    double at(double t) const { return v0 + s * (t - t0); }
};

// Strict sign-change root of a linear difference with the given endpoint
// values; returns false when the crossing rounds onto an endpoint or the
// difference does not change sign. Endpoint differences come from stored
// nodal values so contact nodes never produce spurious cuts.
inline bool crossing(double d0, double d1, double t0, double t1, double& out) {
    if (!(d0 * d1 < 0.0)) return false;
    const double t = t0 + (t1 - t0) * (d0 / (d0 - d1));
    if (!(t > t0 && t < t1)) return false;
    out = t;
    return true;
}

} // namespace detail

/// Clamp x between the envelopes lower <= upper (all on one mesh):
/// values become max(lower, min(x, upper)); cells where the active function
/// changes are split at the exact crossing abscissa, so the result is again
/// a coherent piecewise-linear function. Where x ties with an envelope the
/// slope of x wins.
inline GridFunction clamp_fn(const GridFunction& x, const GridFunction& lower,
                             const GridFunction& upper) {
    const Mesh& m = x.mesh();
    if (!m.same_nodes(lower.mesh()) || !m.same_nodes(upper.mesh()))
        throw ConfigError("clamp_fn: x and envelopes live on different meshes");
    for (std::size_t i = 0; i < m.n_nodes(); ++i)
        if (lower.value(i) > upper.value(i))
            throw ConfigError("clamp_fn: envelope ordering violated at node " + std::to_string(i));

    std::vector<double> nodes;
    std::vector<double> values;
    std::vector<double> slopes;
    nodes.reserve(m.n_nodes());
    values.reserve(m.n_nodes());
    slopes.reserve(m.n_cells());

    auto clamp_at = [&](const detail::CellLine& fx, const detail::CellLine& flo,
                        const detail::CellLine& fhi, double t) {
        return std::max(flo.at(t), std::min(fx.at(t), fhi.at(t)));
    };

    nodes.push_back(m.nodes()[0]);
    values.push_back(std::max(lower.value(0), std::min(x.value(0), upper.value(0))));

    for (std::size_t i = 0; i < m.n_cells(); ++i) {
        const double t0 = m.nodes()[i], t1 = m.nodes()[i + 1];
        const detail::CellLine fx{t0, x.value(i), x.slope(i)};
        const detail::CellLine flo{t0, lower.value(i), lower.slope(i)};
        const detail::CellLine fhi{t0, upper.value(i), upper.slope(i)};

        double cut[2];
        std::size_t n_cuts = 0;
        double c;
        if (detail::crossing(x.value(i) - lower.value(i), x.value(i + 1) - lower.value(i + 1),
                             t0, t1, c))
            cut[n_cuts++] = c;
        if (detail::crossing(x.value(i) - upper.value(i), x.value(i + 1) - upper.value(i + 1),
                             t0, t1, c))
            cut[n_cuts++] = c;
        if (n_cuts == 2) {
            if (cut[0] > cut[1]) std::swap(cut[0], cut[1]);
            if (cut[0] == cut[1]) n_cuts = 1;
        }

        double left = t0;
        for (std::size_t piece = 0; piece <= n_cuts; ++piece) {
            const bool at_node = piece == n_cuts;
            const double right = at_node ? t1 : cut[piece];
            const double mid = 0.5 * (left + right);
            double slope;
            if (fx.at(mid) < flo.at(mid))
                slope = flo.s;
            else if (fx.at(mid) > fhi.at(mid))
                slope = fhi.s;
            else
                slope = fx.s;
            nodes.push_back(right);
            // Original nodes keep the stored values bit-for-bit; only
            // inserted crossings go through the linear formula.
            values.push_back(at_node ? std::max(lower.value(i + 1),
                                                std::min(x.value(i + 1), upper.value(i + 1)))
                                     : clamp_at(fx, flo, fhi, right));
            slopes.push_back(slope);
            left = right;
        }
    }

    // Crossing abscissae are rounded, so for extreme slope contrasts the
    // active-function slope and the stored endpoint values can disagree
    // beyond the coherence tolerance; reconcile those pieces by divided
    // differences (the function itself changes only within rounding).
    for (std::size_t j = 0; j < slopes.size(); ++j) {
        const double dt = nodes[j + 1] - nodes[j];
        const double gap = values[j + 1] - values[j] - slopes[j] * dt;
        if (std::abs(gap) > 5e-13 * (1.0 + std::abs(values[j])))
            slopes[j] = (values[j + 1] - values[j]) / dt;
    }

    Mesh refined(std::move(nodes), m.singular_points());
    return GridFunction(std::move(refined), std::move(values), std::move(slopes));
}

/// Clamp a slope field into the band [-gamma_i, gamma_i] per cell. Returns
/// the clamped field only; it feeds the right-hand side assembly and is
/// never rebuilt into a grid function.
inline std::vector<double> clamp_derivative(const GridFunction& x,
                                            const std::vector<double>& gamma) {
    if (gamma.size() != x.mesh().n_cells())
        throw ConfigError("clamp_derivative: gamma is not a cellwise field of x's mesh");
    std::vector<double> out(gamma.size());
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        if (gamma[i] < 0.0)
            throw ConfigError("clamp_derivative: negative band at cell " + std::to_string(i));
        out[i] = std::clamp(x.slope(i), -gamma[i], gamma[i]);
    }
    return out;
}

} // namespace phibvp
