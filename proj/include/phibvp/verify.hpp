#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "phibvp/constants.hpp"
#include "phibvp/problem.hpp"
#include "phibvp/truncation.hpp"

namespace phibvp {

/// A numerically checked inequality: pass iff worst_violation <= tolerance,
/// with the worst location reported.
struct Certificate {
    std::string name;
    bool pass = false;
    double worst_violation = 0.0;
    double location = 0.0; // abscissa or parameter of the worst violation
    double tolerance = 0.0;
    std::string note;
};

namespace detail {

inline Certificate make_cert(std::string name, double worst, double tol, double loc,
                             std::string note = {}) {
    Certificate c;
    c.name = std::move(name);
    c.worst_violation = worst;
    c.tolerance = tol;
    c.location = loc;
    c.pass = worst <= tol;
    c.note = std::move(note);
    return c;
}

/// Pointwise samples of the differential expression
///   (Phi(k x'))' + f(t, G_x(t)) rho(t, x')
/// at interior nodes: divided differences of v_i = Phi(k_rep_i slope_i)
/// between neighboring cell midpoints plus the nonlinearity with the
/// averaged adjacent slope.
struct OdeSamples {
    std::vector<double> residual; // one per interior node, index 1..n-1
    std::vector<double> frho;     // f rho term at the same nodes
};

inline OdeSamples ode_samples(const GridFunction& x, const ProblemSpec& spec) {
    const Mesh& m = x.mesh();
    const std::vector<double> krep = cell_k_rep(spec.k.expr, m);
    const GridFunction gx = spec.G.apply(x);

    std::vector<double> v(m.n_cells());
    for (std::size_t i = 0; i < m.n_cells(); ++i) v[i] = spec.phi.apply(krep[i] * x.slope(i));

    OdeSamples out;
    out.residual.assign(m.n_nodes(), 0.0);
    out.frho.assign(m.n_nodes(), 0.0);
    for (std::size_t i = 1; i + 1 < m.n_nodes(); ++i) {
        const double t = m.nodes()[i];
        const double dmid = m.midpoint(i) - m.midpoint(i - 1);
        const double quotient = (v[i] - v[i - 1]) / dmid;
        const double savg = 0.5 * (x.slope(i - 1) + x.slope(i));
        const double fr = spec.eval_f(t, gx.value(i)) * spec.eval_rho(t, savg);
        out.frho[i] = fr;
        out.residual[i] = quotient + fr;
    }
    return out;
}

} // namespace detail

/// Cellwise ODE residual of a candidate solution; interior-node samples
/// mapped to cells (the first cell copies its right neighbor).
inline std::vector<double> residual_ode(const GridFunction& x, const ProblemSpec& spec) {
    const detail::OdeSamples s = detail::ode_samples(x, spec);
    const std::size_t n = x.mesh().n_cells();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) out[i] = s.residual[i];
    if (n > 1) out[0] = s.residual[1];
    return out;
}

inline double residual_l1_norm(const GridFunction& x, const ProblemSpec& spec) {
    const std::vector<double> r = residual_ode(x, spec);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += std::abs(r[i]) * x.mesh().width(i);
    return acc;
}

enum class EnvelopeSide { Lower, Upper };

/// Certificate for the lower/upper-solution differential inequality plus its
/// boundary clauses.
inline Certificate check_lower_upper(const GridFunction& x, const ProblemSpec& spec,
                                     EnvelopeSide side, const VerifyOptions& opts = {}) {
    const detail::OdeSamples s = detail::ode_samples(x, spec);
    const Mesh& m = x.mesh();
    const double sign = (side == EnvelopeSide::Lower) ? 1.0 : -1.0;

    double worst = 0.0;
    double loc = m.a();
    for (std::size_t i = 1; i + 1 < m.n_nodes(); ++i) {
        // lower: residual >= -tol a.e.; upper: residual <= tol.
        const double viol = -sign * s.residual[i];
        if (viol > worst) {
            worst = viol;
            loc = m.nodes()[i];
        }
    }

    const double ha = spec.Ha.apply(x);
    const double hb = spec.Hb.apply(x);
    const double va = sign * (x.value(0) - ha);
    const double vb = sign * (x.value(m.n_cells()) - hb);
    if (va > worst) {
        worst = va;
        loc = m.a();
    }
    if (vb > worst) {
        worst = vb;
        loc = m.b();
    }

    return detail::make_cert(side == EnvelopeSide::Lower ? "lower_solution" : "upper_solution",
                             worst, opts.lower_upper_tol, loc);
}

/// The solution certificate set: ODE residual, boundary equalities, band,
/// sup bound, weighted-derivative bound and the continuity of Phi(k x')
/// across cells.
inline std::vector<Certificate> check_solution(const GridFunction& x, const ProblemSpec& spec,
                                               const ProblemConstants& c,
                                               const VerifyOptions& opts = {}) {
    std::vector<Certificate> certs;
    const Mesh& m = x.mesh();
    const detail::OdeSamples s = detail::ode_samples(x, spec);

    {
        double l1 = 0.0, scale = 0.0, worst = 0.0, loc = m.a();
        for (std::size_t i = 1; i + 1 < m.n_nodes(); ++i) {
            const double w = m.width(i);
            l1 += std::abs(s.residual[i]) * w;
            scale += std::abs(s.frho[i]) * w;
            if (std::abs(s.residual[i]) * w > worst) {
                worst = std::abs(s.residual[i]) * w;
                loc = m.nodes()[i];
            }
        }
        if (m.n_cells() > 1) l1 += std::abs(s.residual[1]) * m.width(0);
        certs.push_back(detail::make_cert("ode_residual_l1", l1,
                                          opts.residual_l1_tol * (1.0 + scale), loc,
                                          "scale = " + detail::fmt(scale)));
    }

    certs.push_back(detail::make_cert("boundary_a", std::abs(x.value(0) - spec.Ha.apply(x)),
                                      opts.boundary_tol, m.a()));
    certs.push_back(detail::make_cert("boundary_b",
                                      std::abs(x.value(m.n_cells()) - spec.Hb.apply(x)),
                                      opts.boundary_tol, m.b()));

    {
        double worst = 0.0, loc = m.a();
        for (std::size_t i = 0; i < m.n_nodes(); ++i) {
            const double t = m.nodes()[i];
            const double below = spec.alpha.eval(t) - x.value(i);
            const double above = x.value(i) - spec.beta.eval(t);
            if (below > worst) { worst = below; loc = t; }
            if (above > worst) { worst = above; loc = t; }
        }
        certs.push_back(
            detail::make_cert("band", worst, opts.band_tol * (1.0 + c.M), loc));
    }

    {
        double sup = 0.0, loc = m.a();
        for (std::size_t i = 0; i < m.n_nodes(); ++i)
            if (std::abs(x.value(i)) > sup) { sup = std::abs(x.value(i)); loc = m.nodes()[i]; }
        certs.push_back(detail::make_cert("sup_bound", sup - c.M,
                                          opts.sup_rel_slack * (c.M + 1e-12), loc,
                                          "||x||_inf = " + detail::fmt(sup)));
    }

    {
        const std::vector<double> krep = cell_k_rep(spec.k.expr, m);
        double sup = 0.0, loc = m.a();
        for (std::size_t i = 0; i < m.n_cells(); ++i) {
            const double kv = std::abs(krep[i] * x.slope(i));
            if (kv > sup) { sup = kv; loc = m.midpoint(i); }
        }
        certs.push_back(detail::make_cert("weighted_derivative_bound", sup - c.L_M,
                                          opts.deriv_rel_slack * (c.L_M + 1e-12), loc,
                                          "||k x'||_inf = " + detail::fmt(sup)));
    }

    {
        const std::vector<double> krep = cell_k_rep(spec.k.expr, m);
        double fr_sup = 0.0;
        for (std::size_t i = 1; i + 1 < m.n_nodes(); ++i)
            fr_sup = std::max(fr_sup, std::abs(s.frho[i]));
        double worst = 0.0, loc = m.a();
        double prev = spec.phi.apply(krep[0] * x.slope(0));
        for (std::size_t i = 1; i < m.n_cells(); ++i) {
            const double cur = spec.phi.apply(krep[i] * x.slope(i));
            const double allowance =
                opts.jump_scale * (m.midpoint(i) - m.midpoint(i - 1)) * (1.0 + fr_sup) + 1e-9;
            const double ratio = std::abs(cur - prev) / allowance;
            if (ratio > worst) { worst = ratio; loc = m.nodes()[i]; }
            prev = cur;
        }
        certs.push_back(detail::make_cert("phi_k_continuity", worst, 1.0, loc,
                                          "normalized max jump of Phi(k x')"));
    }

    return certs;
}

namespace detail {

inline GridFunction random_grid_fn(const Mesh& m, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> unif(lo, hi);
    std::vector<double> v(m.n_nodes());
    for (double& x : v) x = unif(rng);
    return GridFunction::from_values(m, std::move(v));
}

inline double psi_at_or_inf(const Expr& psi, double s) {
    if (!std::isfinite(s)) return std::numeric_limits<double>::infinity();
    try {
        return psi.eval(Bindings{}.set('s', s));
    } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
    }
}

} // namespace detail

/// Numeric audits of the structural hypotheses: weight positivity and
/// 1/k integrability, functional bound/monotonicity, boundary monotonicity,
/// envelope ordering and differential inequalities, the growth domination
/// with R = eta_M and gamma = gamma_L, the divergence of the 1/psi integral
/// and the pointwise growth inequality, and the sign of rho.
inline std::vector<Certificate> audit_hypotheses(const ProblemSpec& spec,
                                                 const ProblemConstants& c,
                                                 const VerifyOptions& opts = {}) {
    std::vector<Certificate> certs;
    const Mesh& m = spec.mesh();
    std::mt19937_64 rng(opts.seed);
    const std::size_t stride = std::max<std::size_t>(1, m.n_cells() / opts.sample_points);

    { // k >= 0 at sampled interior points
        double worst = 0.0, loc = m.a();
        for (std::size_t i = 0; i < m.n_cells(); ++i) {
            const double t = m.midpoint(i);
            const double kv = spec.k.eval(t);
            if (-kv > worst) { worst = -kv; loc = t; }
        }
        certs.push_back(detail::make_cert("h1_weight_nonneg", worst, opts.hyp_tol, loc));
    }

    { // 1/k integrable
        double value = std::numeric_limits<double>::infinity();
        std::string note;
        try {
            value = integrate_singular([&](double t) { return 1.0 / spec.k.eval(t); }, m);
            note = "integral of 1/k = " + detail::fmt(value);
        } catch (const Error& e) {
            note = e.what();
        }
        certs.push_back(detail::make_cert("h1_inv_weight_integrable",
                                          std::isfinite(value) ? 0.0 : 1.0, 0.5, m.a(), note));
    }

    { // functional bound and monotonicity, f monotone in the coupled sense
        double worst_bound = 0.0, worst_mono = 0.0, worst_f = 0.0;
        double loc_bound = m.a(), loc_mono = m.a(), loc_f = m.a();
        const double r = c.M;
        for (int trial = 0; trial < 40; ++trial) {
            const GridFunction x = detail::random_grid_fn(m, rng, -r, r);
            std::uniform_real_distribution<double> bump(0.0, 0.5 * (1.0 + r));
            std::vector<double> yv(x.values());
            for (double& v : yv) v = std::min(v + bump(rng), r);
            const GridFunction y = GridFunction::from_values(m, std::move(yv));

            const GridFunction gx = spec.G.apply(x);
            const GridFunction gy = spec.G.apply(y);
            const double eta = spec.G.eta_bound(r, m.length());
            for (std::size_t i = 0; i < m.n_nodes(); i += stride) {
                const double t = m.nodes()[i];
                if (std::abs(gx.value(i)) - eta > worst_bound) {
                    worst_bound = std::abs(gx.value(i)) - eta;
                    loc_bound = t;
                }
                if (gx.value(i) - gy.value(i) > worst_mono) {
                    worst_mono = gx.value(i) - gy.value(i);
                    loc_mono = t;
                }
                const double df = spec.eval_f(t, gx.value(i)) - spec.eval_f(t, gy.value(i));
                if (df > worst_f) { worst_f = df; loc_f = t; }
            }
        }
        certs.push_back(detail::make_cert("h2_functional_bounded", worst_bound,
                                          opts.hyp_tol * (1.0 + c.eta_M), loc_bound));
        certs.push_back(detail::make_cert("h3_functional_monotone", worst_mono,
                                          opts.hyp_tol * (1.0 + c.eta_M), loc_mono));
        certs.push_back(detail::make_cert("h3_coupling_monotone", worst_f,
                                          opts.hyp_tol * (1.0 + c.eta_M), loc_f,
                                          "f nondecreasing in z along G"));
    }

    { // boundary functional monotonicity
        double worst = 0.0, loc = 0.0;
        for (int trial = 0; trial < 40; ++trial) {
            const GridFunction x = detail::random_grid_fn(m, rng, -c.M, c.M);
            std::uniform_real_distribution<double> bump(0.0, 0.5 * (1.0 + c.M));
            std::vector<double> yv(x.values());
            for (double& v : yv) v += bump(rng);
            const GridFunction y = GridFunction::from_values(m, std::move(yv));
            const double da = spec.Ha.apply(x) - spec.Ha.apply(y);
            const double db = spec.Hb.apply(x) - spec.Hb.apply(y);
            if (da > worst) { worst = da; loc = m.a(); }
            if (db > worst) { worst = db; loc = m.b(); }
        }
        certs.push_back(detail::make_cert("h4_boundary_monotone", worst,
                                          opts.hyp_tol * (1.0 + c.M), loc));
    }

    { // envelope ordering
        double worst = 0.0, loc = m.a();
        for (std::size_t i = 0; i < m.n_nodes(); ++i) {
            const double d = spec.alpha.value(i) - spec.beta.value(i);
            if (d > worst) { worst = d; loc = m.nodes()[i]; }
        }
        certs.push_back(detail::make_cert("h5_ordered", worst, opts.hyp_tol, loc));
    }
    certs.push_back(check_lower_upper(spec.alpha, spec, EnvelopeSide::Lower, opts));
    certs.back().name = "h5_lower_solution";
    certs.push_back(check_lower_upper(spec.beta, spec, EnvelopeSide::Upper, opts));
    certs.back().name = "h5_upper_solution";

    { // growth domination with R = eta_M, gamma = gamma_L
        const double R = c.eta_M;
        const double expo = spec.nagumo.holder_exponent();
        std::uniform_real_distribution<double> uz(-R, R);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        double worst = 0.0, loc = m.a();
        for (std::size_t i = 0; i < m.n_cells(); i += stride) {
            const double t = m.midpoint(i);
            const double g = c.gamma_L[i];
            const double kv = spec.k.eval(t);
            const double env =
                detail::psi_at_or_inf(spec.nagumo.psi, std::abs(spec.phi.apply(kv * g))) *
                (spec.nagumo.l.eval(Bindings{}.set('t', t)) +
                 spec.nagumo.mu.eval(Bindings{}.set('t', t)) * std::pow(g, expo));
            const double zs[] = {-R, R, 0.0, uz(rng), uz(rng), uz(rng)};
            const double ys[] = {0.0,      g,           -g,          0.5 * g,
                                 -0.5 * g, g * u01(rng), -g * u01(rng)};
            for (double z : zs)
                for (double y : ys) {
                    const double lhs = std::abs(spec.eval_f(t, z) * spec.eval_rho(t, y));
                    const double excess = lhs - env - opts.hyp_tol * (1.0 + std::abs(env));
                    if (excess > worst) { worst = excess; loc = t; }
                }
        }
        certs.push_back(detail::make_cert("h6_growth_domination", worst, opts.hyp_tol, loc,
                                          "R = " + detail::fmt(R)));
    }

    { // divergence of the 1/psi integral, probed at the threshold the
      // constant selection actually needs
        const double s0 = std::max({spec.phi.apply(c.N), -spec.phi.apply(-c.N), 1.0});
        std::string note;
        double worst = 0.0;
        try {
            const double target = std::max(c.rhs * (1.0 + 1e-6), 1.0);
            const double s_stop = march_psi_until(spec.nagumo.psi, s0, target);
            note = "reached target " + detail::fmt(target) + " at s = " + detail::fmt(s_stop);
        } catch (const NumericError& e) {
            worst = 1.0;
            note = e.what();
        }
        certs.push_back(detail::make_cert("h7_psi_divergent", worst, 0.5, s0, note));
    }

    { // pointwise growth inequality for |k y| >= H
        const double R = c.eta_M;
        const double expo = spec.nagumo.holder_exponent();
        double worst = 0.0, loc = m.a();
        std::uniform_real_distribution<double> uz(-R, R);
        for (std::size_t i = 0; i < m.n_cells(); i += stride) {
            const double t = m.midpoint(i);
            const double kv = spec.k.eval(t);
            if (!(kv > 0.0)) continue;
            for (double mult : {1.0, 2.0, 10.0, 100.0}) {
                for (double sign : {1.0, -1.0}) {
                    const double y = sign * mult * spec.nagumo.H / kv;
                    const double rhs =
                        detail::psi_at_or_inf(spec.nagumo.psi,
                                              std::abs(spec.phi.apply(kv * y))) *
                        (spec.nagumo.l.eval(Bindings{}.set('t', t)) +
                         spec.nagumo.mu.eval(Bindings{}.set('t', t)) *
                             std::pow(std::abs(y), expo));
                    for (double z : {-R, R, 0.0, uz(rng)}) {
                        const double lhs = std::abs(spec.eval_f(t, z) * spec.eval_rho(t, y));
                        const double excess =
                            (lhs - rhs) / (1.0 + std::abs(rhs));
                        if (excess > worst) { worst = excess; loc = t; }
                    }
                }
            }
        }
        certs.push_back(detail::make_cert("h7_nagumo_pointwise", worst, opts.hyp_tol, loc));
    }

    { // rho >= 0 sampled, and its trace at y = 0 recorded
        double worst = 0.0, loc = m.a();
        double at_zero = 0.0;
        std::uniform_real_distribution<double> uy(-100.0, 100.0);
        for (std::size_t i = 0; i < m.n_cells(); i += stride) {
            const double t = m.midpoint(i);
            at_zero = std::max(at_zero, std::abs(spec.eval_rho(t, 0.0)));
            for (double y : {0.0, 0.3, -0.3, 2.0, -2.0, 25.0, -25.0, uy(rng), uy(rng)}) {
                const double r = spec.eval_rho(t, y);
                if (-r > worst) { worst = -r; loc = t; }
            }
        }
        certs.push_back(detail::make_cert("rho_nonneg", worst, opts.hyp_tol, loc));
        certs.push_back(detail::make_cert("rho_at_zero_sup", 0.0, 1.0, m.a(),
                                          "sup |rho(t, 0)| = " + detail::fmt(at_zero)));
    }

    return certs;
}

} // namespace phibvp
