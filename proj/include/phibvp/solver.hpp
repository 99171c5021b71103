#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "phibvp/constants.hpp"
#include "phibvp/errors.hpp"
#include "phibvp/problem.hpp"
#include "phibvp/truncation.hpp"
#include "phibvp/verify.hpp"

namespace phibvp {

/// Everything a solve produces: the solution, the continuous representative
/// of k x' per cell, iteration history, residuals, certificate outcomes and
/// the derived constants.
struct SolveReport {
    GridFunction solution;
    ProblemConstants constants;
    std::vector<double> K_field; // cellwise k x'
    std::vector<double> z_history;
    std::vector<double> step_norms;
    std::vector<double> residual_norms; // W11 norm of A(x) - x per iteration
    double residual_l1 = 0.0;           // ODE residual of the final solution
    double penalty_linf = 0.0;          // sup of the arctan penalty term
    std::vector<Certificate> certificates;
    bool step_converged = false; // iteration met the fixed-point tolerance
    bool converged = false;      // step_converged and solution certificates pass
    std::size_t iterations = 0;

    SolveReport(GridFunction sol, ProblemConstants c)
        : solution(std::move(sol)), constants(std::move(c)) {}
};

namespace detail {

/// Per-cell open quadrature with one Richardson step, flattened into point
/// lists with combined weights; 1/k is evaluated once per point.
struct QuadCache {
    std::vector<std::size_t> ofs; // n_cells + 1
    std::vector<double> t;
    std::vector<double> w;
    std::vector<double> invk;

    QuadCache(const KWeight& k, const Mesh& mesh, int points = 8) {
        std::vector<double> gx, gw;
        gauss_legendre(points, gx, gw);
        const double denom = std::pow(2.0, 2.0 * points) - 1.0;
        const std::size_t per_cell = 3 * static_cast<std::size_t>(points);
        ofs.reserve(mesh.n_cells() + 1);
        t.reserve(per_cell * mesh.n_cells());
        w.reserve(per_cell * mesh.n_cells());
        ofs.push_back(0);

        auto add_interval = [&](double lo, double hi) {
            const double in_lo = std::nextafter(lo, hi), in_hi = std::nextafter(hi, lo);
            auto add = [&](double l, double h, double scale) {
                const double c = 0.5 * (l + h), r = 0.5 * (h - l);
                for (int j = 0; j < points; ++j) {
                    const std::size_t ju = static_cast<std::size_t>(j);
                    t.push_back(std::min(std::max(c + r * gx[ju], in_lo), in_hi));
                    w.push_back(scale * r * gw[ju]);
                }
            };
            add(lo, hi, -1.0 / denom); // coarse, negative Richardson weight
            const double mid = 0.5 * (lo + hi);
            add(lo, mid, 1.0 + 1.0 / denom);
            add(mid, hi, 1.0 + 1.0 / denom);
        };

        // Cells touching a singular node get geometric bisection toward it,
        // confining the unresolved 1/k sliver to a vanishing share.
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

        for (std::size_t i = 0; i < mesh.n_cells(); ++i) {
            const double lo = mesh.nodes()[i], hi = mesh.nodes()[i + 1];
            const bool slo = mesh.node_is_singular(i), shi = mesh.node_is_singular(i + 1);
            if (slo && shi) {
                const double mid = 0.5 * (lo + hi);
                add_graded(lo, mid, true);
                add_graded(mid, hi, false);
            } else if (slo || shi) {
                add_graded(lo, hi, slo);
            } else {
                add_interval(lo, hi);
            }
            ofs.push_back(t.size());
        }
        invk.resize(t.size());
        for (std::size_t j = 0; j < t.size(); ++j)
            invk[j] = 1.0 / eval_k_checked(k.expr, t[j]);
    }
};

/// Classic Brent-Dekker root bracketing refinement for increasing f with
/// f(a) <= 0 <= f(b); stops when |f| <= ftol or the bracket collapses.
template <typename F>
double brent_root(F&& f, double a, double b, double fa, double fb, double ftol) {
    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int iter = 0; iter < 400; ++iter) {
        if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
            c = a; fc = fa; d = b - a; e = d;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 1e-300;
        const double xm = 0.5 * (c - b);
        if (std::abs(fb) <= ftol || std::abs(xm) <= tol1 || fb == 0.0) return b;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            const double s = fb / fa;
            double p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
    }
    return b;
}

inline double gf_dot(const GridFunction& u, const GridFunction& v) {
    const Mesh& m = u.mesh();
    double acc = 0.0;
    for (std::size_t i = 0; i < m.n_cells(); ++i) {
        const double h = m.width(i);
        acc += 0.5 * h * (u.value(i) * v.value(i) + u.value(i + 1) * v.value(i + 1));
        acc += h * u.slope(i) * v.slope(i);
    }
    return acc;
}

/// Gaussian elimination with partial pivoting for the small Anderson system.
inline bool solve_dense(std::vector<std::vector<double>>& A, std::vector<double>& b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        if (std::abs(A[piv][col]) < 1e-300) return false;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double fac = A[r][col] / A[col][col];
            for (std::size_t cc = col; cc < n; ++cc) A[r][cc] -= fac * A[col][cc];
            b[r] -= fac * b[col];
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        for (std::size_t cc = col + 1; cc < n; ++cc) b[col] -= A[col][cc] * b[cc];
        b[col] /= A[col][col];
    }
    return true;
}

struct Assembled {
    std::vector<double> F;
    GridFunction Tx;
    double penalty_linf = 0.0;
};

inline Assembled assemble_truncated_rhs(const GridFunction& x, const ProblemSpec& spec,
                                        const ProblemConstants& c) {
    const Mesh& m = spec.mesh();
    if (!x.mesh().same_nodes(m))
        throw ConfigError("assemble: iterate does not live on the problem mesh");
    Assembled out{std::vector<double>(m.n_cells()), clamp_fn(x, spec.alpha, spec.beta), 0.0};
    const GridFunction g_of_tx = spec.G.apply(out.Tx);
    for (std::size_t i = 0; i < m.n_cells(); ++i) {
        const double tm = m.midpoint(i);
        const double xm = x.value(i) + x.slope(i) * (tm - m.nodes()[i]);
        const double txm = out.Tx.eval(tm);
        const double gm = g_of_tx.eval(tm);
        const double dm = std::clamp(out.Tx.slope_at(tm), -c.gamma_L[i], c.gamma_L[i]);
        const double penalty = std::atan(xm - txm);
        out.penalty_linf = std::max(out.penalty_linf, std::abs(penalty));
        out.F[i] = -spec.eval_f(tm, gm) * spec.eval_rho(tm, dm) + penalty;
    }
    return out;
}

} // namespace detail

/// Right-hand side of the truncated equation at cell midpoints:
/// F = -f(t, G_{Tx}) rho(t, D_{(Tx)'}) + arctan(x - Tx).
inline std::vector<double> assemble_F(const GridFunction& x, const ProblemSpec& spec,
                                      const ProblemConstants& c) {
    return detail::assemble_truncated_rhs(x, spec, c).F;
}

/// The boundary-gap integral Int (1/k) Phi^{-1}(z + Fcal(t)) dt as a
/// function of z; strictly increasing since 1/k > 0 a.e.
inline double zx_gap_integral(double z, const std::vector<double>& F, const ProblemSpec& spec) {
    const detail::QuadCache q(spec.k, spec.mesh(), 8);
    const GridFunction fcal = antiderivative(spec.mesh(), F, 0.0);
    const Mesh& m = spec.mesh();
    double acc = 0.0;
    for (std::size_t i = 0; i < m.n_cells(); ++i) {
        for (std::size_t j = q.ofs[i]; j < q.ofs[i + 1]; ++j) {
            const double fc = fcal.value(i) + F[i] * (q.t[j] - m.nodes()[i]);
            acc += q.w[j] * q.invk[j] * spec.phi.invert(z + fc);
        }
    }
    return acc;
}

namespace detail {

struct ZxWork {
    const QuadCache& quad;
    const ProblemSpec& spec;
    std::vector<double> fcal_pts; // z-independent part at quadrature points

    ZxWork(const QuadCache& q, const ProblemSpec& s, const std::vector<double>& F)
        : quad(q), spec(s), fcal_pts(q.t.size()) {
        const Mesh& m = s.mesh();
        const GridFunction fcal = antiderivative(m, F, 0.0);
        for (std::size_t i = 0; i < m.n_cells(); ++i)
            for (std::size_t j = q.ofs[i]; j < q.ofs[i + 1]; ++j)
                fcal_pts[j] = fcal.value(i) + F[i] * (q.t[j] - m.nodes()[i]);
    }

    double cell_sum(std::size_t i, double z) const {
        double acc = 0.0;
        for (std::size_t j = quad.ofs[i]; j < quad.ofs[i + 1]; ++j)
            acc += quad.w[j] * quad.invk[j] * spec.phi.invert(z + fcal_pts[j]);
        return acc;
    }

    double gap_integral(double z) const {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < quad.ofs.size(); ++i) acc += cell_sum(i, z);
        return acc;
    }

    double solve_z(double gap, double z_tol) const {
        auto g = [&](double z) {
            const double v = gap_integral(z);
            if (!std::isfinite(v))
                throw NumericError("boundary-gap integral is not finite at z = " + fmt(z));
            return v;
        };
        double lo = -1.0, hi = 1.0;
        double glo = g(lo), ghi = g(hi);
        int guard = 0;
        while (glo > gap) {
            hi = lo;
            ghi = glo;
            lo *= 2.0;
            if (++guard > 1024 || !std::isfinite(lo))
                throw NumericError("z bracket not found while expanding downward");
            glo = g(lo);
        }
        while (ghi < gap) {
            lo = hi;
            glo = ghi;
            hi *= 2.0;
            if (++guard > 1024 || !std::isfinite(hi))
                throw NumericError("z bracket not found while expanding upward");
            ghi = g(hi);
        }
        const double ftol = z_tol * (1.0 + std::abs(gap));
        return brent_root([&](double z) { return g(z) - gap; }, lo, hi, glo - gap, ghi - gap,
                          ftol);
    }
};

} // namespace detail

/// The unique z with Int (1/k) Phi^{-1}(z + Fcal) = target_gap, found by
/// bracket doubling from [-1, 1] and Brent refinement.
inline double solve_zx(const std::vector<double>& F, double target_gap, const ProblemSpec& spec,
                       double z_tol = 1e-12) {
    const detail::QuadCache q(spec.k, spec.mesh(), 8);
    return detail::ZxWork(q, spec, F).solve_z(target_gap, z_tol);
}

/// All derived constants for one problem on its mesh.
inline ProblemConstants compute_constants(const ProblemSpec& spec, const SolverConfig& config) {
    config.validate();
    ProblemConstants c;
    const Mesh& m = spec.mesh();

    const double m_envelopes = compute_M(spec.alpha, spec.beta);
    const std::vector<double> krep = cell_k_rep(spec.k.expr, m);
    double k_alpha = 0.0, k_beta = 0.0;
    for (std::size_t i = 0; i < m.n_cells(); ++i) {
        k_alpha = std::max(k_alpha, std::abs(krep[i] * spec.alpha.slope(i)));
        k_beta = std::max(k_beta, std::abs(krep[i] * spec.beta.slope(i)));
    }
    c.M = std::max({m_envelopes, k_alpha, k_beta});
    c.m_active = (c.M == m_envelopes) ? "sup norm of the envelopes"
                 : (c.M == k_alpha)   ? "weighted derivative of alpha"
                                      : "weighted derivative of beta";

    c.k_sup = k_sup_norm(spec.k.expr, m);
    c.eta_M = spec.G.eta_bound(c.M, m.length());
    c.N = choose_N(spec.phi, spec.nagumo.H, c.M, c.k_sup, m.length(), config.margin_N);
    const LMResult lm = compute_LM(spec.phi, spec.nagumo, c.N, c.M, m, config.margin_L);
    c.L_M = lm.L_M;
    c.rhs = lm.rhs;
    c.gamma_L = gamma_L_field(c.L_M, spec.k.expr, spec.alpha, spec.beta, m);
    return c;
}

/// One application of the solution operator: value Ha[Tx] at a, cell slopes
/// from the quadrature average of (1/k) Phi^{-1}(z_x + Fcal), with z_x from
/// the boundary-gap equation.
inline GridFunction apply_A(const GridFunction& x, const ProblemSpec& spec,
                            const ProblemConstants& c, double z_tol = 1e-12,
                            double* z_out = nullptr) {
    const detail::QuadCache q(spec.k, spec.mesh(), 8);
    const detail::Assembled a = detail::assemble_truncated_rhs(x, spec, c);
    const detail::ZxWork zw(q, spec, a.F);
    const double ba = spec.Ha.apply(a.Tx);
    const double bb = spec.Hb.apply(a.Tx);
    const double z = zw.solve_z(bb - ba, z_tol);
    if (z_out) *z_out = z;
    const Mesh& m = spec.mesh();
    std::vector<double> slopes(m.n_cells());
    for (std::size_t i = 0; i < m.n_cells(); ++i) slopes[i] = zw.cell_sum(i, z) / m.width(i);
    return antiderivative(m, slopes, ba);
}

/// Damped fixed-point iteration x <- (1 - lambda) x + lambda A(x) with
/// Anderson mixing over the last `anderson_m` steps, starting from the
/// envelope midline. Stops once the W11 fixed-point residual ||A(x) - x||
/// drops to fp_tol; never throws on plain non-convergence.
inline SolveReport fixed_point(const ProblemSpec& spec, const SolverConfig& config) {
    config.validate();
    validate_problem(spec);
    const ProblemConstants consts = compute_constants(spec, config);
    const Mesh& m = spec.mesh();
    const detail::QuadCache quad(spec.k, spec.mesh(), 8);

    auto apply_op = [&](const GridFunction& x, double& z_out) {
        const detail::Assembled a = detail::assemble_truncated_rhs(x, spec, consts);
        const detail::ZxWork zw(quad, spec, a.F);
        const double ba = spec.Ha.apply(a.Tx);
        const double bb = spec.Hb.apply(a.Tx);
        z_out = zw.solve_z(bb - ba, config.z_tol);
        std::vector<double> slopes(m.n_cells());
        for (std::size_t i = 0; i < m.n_cells(); ++i)
            slopes[i] = zw.cell_sum(i, z_out) / m.width(i);
        return antiderivative(m, slopes, ba);
    };

    GridFunction x = lin_comb(0.5, spec.alpha, 0.5, spec.beta);
    SolveReport report(x, consts);

    std::deque<GridFunction> xs, gs, rs;
    const double lambda = config.damping;
    bool step_converged = false;

    for (std::size_t it = 1; it <= config.max_iters; ++it) {
        double z = 0.0;
        const GridFunction g = apply_op(x, z);
        const GridFunction r = g - x;
        const double res = norm(r, NormKind::W11);
        report.z_history.push_back(z);
        report.residual_norms.push_back(res);
        report.iterations = it;
        if (res <= config.fp_tol) {
            step_converged = true;
            break;
        }

        xs.push_back(x);
        gs.push_back(g);
        rs.push_back(r);
        const std::size_t keep = config.anderson_m + 1;
        while (xs.size() > keep) {
            xs.pop_front();
            gs.pop_front();
            rs.pop_front();
        }

        GridFunction x_next = lin_comb(1.0, x, lambda, r);
        const std::size_t mk = xs.size() - 1;
        if (mk > 0) {
            std::vector<GridFunction> dr, dx;
            dr.reserve(mk);
            dx.reserve(mk);
            for (std::size_t k = 1; k <= mk; ++k) {
                dr.push_back(r - rs[mk - k]);
                dx.push_back(x - xs[mk - k]);
            }
            std::vector<std::vector<double>> A(mk, std::vector<double>(mk));
            std::vector<double> rhs(mk);
            double trace = 0.0;
            for (std::size_t i = 0; i < mk; ++i) {
                for (std::size_t j = 0; j < mk; ++j) A[i][j] = detail::gf_dot(dr[i], dr[j]);
                trace += A[i][i];
                rhs[i] = detail::gf_dot(dr[i], r);
            }
            for (std::size_t i = 0; i < mk; ++i) A[i][i] += 1e-12 * (trace + 1e-300);
            double gamma_l1 = 0.0;
            const bool ok = detail::solve_dense(A, rhs);
            if (ok)
                for (double gma : rhs) gamma_l1 += std::abs(gma);
            if (ok && gamma_l1 <= 100.0) {
                for (std::size_t k = 0; k < mk; ++k) {
                    x_next = lin_comb(1.0, x_next, -rhs[k], dx[k]);
                    x_next = lin_comb(1.0, x_next, -rhs[k] * lambda, dr[k]);
                }
            }
        }

        report.step_norms.push_back(norm(x_next - x, NormKind::W11));
        x = x_next;
    }

    report.solution = x;
    report.step_converged = step_converged;

    // Final diagnostics and the full certificate suite.
    const detail::Assembled fin = detail::assemble_truncated_rhs(x, spec, consts);
    report.penalty_linf = fin.penalty_linf;
    const std::vector<double> krep = cell_k_rep(spec.k.expr, m);
    report.K_field.resize(m.n_cells());
    for (std::size_t i = 0; i < m.n_cells(); ++i) report.K_field[i] = krep[i] * x.slope(i);
    report.residual_l1 = residual_l1_norm(x, spec);

    const std::vector<Certificate> sol_certs =
        check_solution(x, spec, consts, config.verify);
    bool sol_pass = true;
    for (const Certificate& cert : sol_certs) sol_pass = sol_pass && cert.pass;
    report.certificates = sol_certs;
    const std::vector<Certificate> audits = audit_hypotheses(spec, consts, config.verify);
    report.certificates.insert(report.certificates.end(), audits.begin(), audits.end());
    report.converged = step_converged && sol_pass;
    return report;
}

} // namespace phibvp
