#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "phibvp/errors.hpp"
#include "phibvp/expr.hpp"
#include "phibvp/kweight.hpp"
#include "phibvp/mesh.hpp"
#include "phibvp/phi.hpp"

namespace phibvp {

/// Growth-condition data: |f(t,z) rho(t,y)| <= psi(|Phi(k y)|) (l + mu |y|^{(q-1)/q})
/// for |k y| >= H and |z| <= R, with divergent integral of 1/psi. The fields
/// are the instance at the working radius R = eta_M.
struct NagumoData {
    double H = 1.0;
    Expr psi; // in s
    Expr l;   // in t
    Expr mu;  // in t
    double q = 2.0;
    bool q_infinite = false;

    void validate() const {
        if (!(H > 0.0)) throw ConfigError("Nagumo data requires H > 0");
        if (!q_infinite && !(q > 1.0)) throw ConfigError("Nagumo data requires q > 1");
        if (psi.empty() || l.empty() || mu.empty())
            throw ConfigError("Nagumo data requires psi, l and mu expressions");
    }

    double holder_exponent() const { return q_infinite ? 1.0 : (q - 1.0) / q; }
};

/// The solve's a-priori quantities.
struct ProblemConstants {
    double M = 0.0;
    double eta_M = 0.0;
    double N = 0.0;
    double L_M = 0.0;
    std::vector<double> gamma_L; // cellwise
    double rhs = 0.0;            // right side of the psi-integral threshold
    double k_sup = 0.0;
    std::string m_active; // which of the four candidate bounds set M
};

/// Joint sup-norm bound of the ordered envelopes, no slack added.
inline double compute_M(const GridFunction& alpha, const GridFunction& beta) {
    if (!alpha.mesh().same_nodes(beta.mesh()))
        throw ConfigError("compute_M: envelopes live on different meshes");
    for (std::size_t i = 0; i < alpha.mesh().n_nodes(); ++i)
        if (alpha.value(i) > beta.value(i))
            throw ConfigError("envelopes are not well-ordered at node " + std::to_string(i));
    return std::max(norm(alpha, NormKind::Linf), norm(beta, NormKind::Linf));
}

/// N = margin * max{H, 2 M ||k||_inf / (b-a)}, with the sign conditions
/// Phi(N) > 0 > Phi(-N) asserted (automatic for the odd built-ins).
inline double choose_N(const PhiOperator& phi, double H_M, double M, double k_sup,
                       double interval_length, double margin) {
    if (!(margin > 1.0)) throw ConfigError("choose_N requires margin > 1");
    const double N = margin * std::max(H_M, 2.0 * M * k_sup / interval_length);
    if (!(phi.apply(N) > 0.0) || !(phi.apply(-N) < 0.0))
        throw NumericError("sign conditions Phi(N) > 0 > Phi(-N) fail for N = " +
                           std::to_string(N));
    return N;
}

namespace detail {

inline double inv_psi_at(const Expr& psi, double s) {
    double v;
    try {
        v = psi.eval(Bindings{}.set('s', s));
    } catch (const DomainError& e) {
        throw NumericError(std::string("psi evaluation failed: ") + e.what());
    }
    if (!(v > 0.0)) throw NumericError("nonpositive psi sample at s = " + fmt(s));
    return 1.0 / v;
}

inline double simpson_inv_psi(const Expr& psi, double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    return (hi - lo) / 6.0 *
           (inv_psi_at(psi, lo) + 4.0 * inv_psi_at(psi, mid) + inv_psi_at(psi, hi));
}

} // namespace detail

/// March s upward from s0 accumulating the integral of 1/psi until it
/// strictly exceeds `target`; the crossing is then bisected inside the last
/// step. Errors out when s runs past max(1, s0) * 1e12 with the integral
/// still below target, i.e. the divergence requirement on 1/psi fails
/// numerically.
inline double march_psi_until(const Expr& psi, double s0, double target) {
    if (target <= 0.0) return s0;
    const double cap = std::max(1.0, s0) * 1e12;
    double s = s0;
    double acc = 0.0;
    while (true) {
        if (s > cap)
            throw NumericError("divergence test failed: integral of 1/psi reached only " +
                               detail::fmt(acc) + " < " + detail::fmt(target) + " at s = " +
                               detail::fmt(s));
        const double psival = 1.0 / detail::inv_psi_at(psi, s);
        double delta = psival * std::max(target, 1e-6) / 256.0;
        delta = std::clamp(delta, 1e-9 * (1.0 + std::abs(s)), 0.05 * (1.0 + std::abs(s)));
        const double inc = detail::simpson_inv_psi(psi, s, s + delta);
        if (acc + inc > target) {
            double lo = s, hi = s + delta;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi) break;
                if (acc + detail::simpson_inv_psi(psi, s, mid) > target)
                    hi = mid;
                else
                    lo = mid;
            }
            return hi;
        }
        acc += inc;
        s += delta;
    }
}

struct LMResult {
    double L_M = 0.0;
    double rhs = 0.0;
    double s_stop_pos = 0.0;
    double s_stop_neg = 0.0;
};

/// Derivative-bound constant: the smallest marched L with both branch
/// integrals of 1/psi (from Phi(N) to Phi(L), and the mirrored branch)
/// strictly above ||l||_L1 + ||mu||_Lq (2M)^{(q-1)/q}, stretched by
/// `margin`.
inline LMResult compute_LM(const PhiOperator& phi, const NagumoData& nagumo, double N, double M,
                           const Mesh& mesh, double margin = 1.05) {
    if (!(margin > 1.0)) throw ConfigError("compute_LM requires margin > 1");
    nagumo.validate();

    const double l_norm = integrate_singular(
        [&](double t) { return std::abs(nagumo.l.eval(Bindings{}.set('t', t))); }, mesh);
    double mu_norm;
    if (nagumo.q_infinite) {
        std::vector<double> gx, gw;
        detail::gauss_legendre(4, gx, gw);
        mu_norm = 0.0;
        for (std::size_t i = 0; i < mesh.n_cells(); ++i) {
            const double c = mesh.midpoint(i), r = 0.5 * mesh.width(i);
            mu_norm = std::max(mu_norm, std::abs(nagumo.mu.eval(Bindings{}.set('t', c))));
            for (double g : gx)
                mu_norm =
                    std::max(mu_norm, std::abs(nagumo.mu.eval(Bindings{}.set('t', c + r * g))));
        }
    } else {
        mu_norm = std::pow(
            integrate_singular(
                [&](double t) {
                    return std::pow(std::abs(nagumo.mu.eval(Bindings{}.set('t', t))), nagumo.q);
                },
                mesh),
            1.0 / nagumo.q);
    }

    LMResult out;
    out.rhs = l_norm + mu_norm * std::pow(2.0 * M, nagumo.holder_exponent());

    const double s_pos0 = phi.apply(N);
    const double s_neg0 = -phi.apply(-N);
    out.s_stop_pos = march_psi_until(nagumo.psi, s_pos0, out.rhs);
    out.s_stop_neg = march_psi_until(nagumo.psi, s_neg0, out.rhs);

    const double L_pos = phi.invert(out.s_stop_pos);
    const double L_neg = -phi.invert(-out.s_stop_neg);
    out.L_M = margin * std::max(L_pos, L_neg);
    return out;
}

/// gamma_L(t) = L_M / k(t) + |alpha'(t)| + |beta'(t)| as a cellwise field;
/// 1/k is the midpoint value except on cells adjacent to singular nodes,
/// which use the open-quadrature cell average.
inline std::vector<double> gamma_L_field(double L_M, const Expr& k, const GridFunction& alpha,
                                         const GridFunction& beta, const Mesh& mesh) {
    if (!alpha.mesh().same_nodes(mesh) || !beta.mesh().same_nodes(mesh))
        throw ConfigError("gamma_L_field: envelopes do not live on the given mesh");
    std::vector<double> gamma = cell_inv_k(k, mesh);
    for (std::size_t i = 0; i < gamma.size(); ++i)
        gamma[i] = L_M * gamma[i] + std::abs(alpha.slope(i)) + std::abs(beta.slope(i));
    return gamma;
}

} // namespace phibvp
