#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phibvp/constants.hpp"
#include "phibvp/errors.hpp"
#include "phibvp/expr.hpp"
#include "phibvp/functionals.hpp"
#include "phibvp/kweight.hpp"
#include "phibvp/mesh.hpp"
#include "phibvp/phi.hpp"

namespace phibvp {

/// The full boundary value problem on [a, b], discretized on one mesh that
/// also carries the envelopes.
struct ProblemSpec {
    PhiOperator phi;
    KWeight k;
    Expr f;   // (t, z)
    Expr rho; // (t, y)
    FunctionalTerm G;
    BoundaryFunctional Ha;
    BoundaryFunctional Hb;
    GridFunction alpha;
    GridFunction beta;
    NagumoData nagumo;

    ProblemSpec(PhiOperator phi_, KWeight k_, Expr f_, Expr rho_, FunctionalTerm G_,
                BoundaryFunctional Ha_, BoundaryFunctional Hb_, GridFunction alpha_,
                GridFunction beta_, NagumoData nagumo_)
        : phi(phi_),
          k(std::move(k_)),
          f(std::move(f_)),
          rho(std::move(rho_)),
          G(std::move(G_)),
          Ha(std::move(Ha_)),
          Hb(std::move(Hb_)),
          alpha(std::move(alpha_)),
          beta(std::move(beta_)),
          nagumo(std::move(nagumo_)) {
        if (!alpha.mesh().same_nodes(beta.mesh()))
            throw ConfigError("problem: envelopes live on different meshes");
    }

    const Mesh& mesh() const { return alpha.mesh(); }
    double a() const { return mesh().a(); }
    double b() const { return mesh().b(); }
    double length() const { return mesh().length(); }

    double eval_f(double t, double z) const { return f.eval(Bindings{}.set('t', t).set('z', z)); }
    double eval_rho(double t, double y) const {
        return rho.eval(Bindings{}.set('t', t).set('y', y));
    }
};

/// Certificate tolerances; the defaults target the 2048-cell desk scale.
struct VerifyOptions {
    double residual_l1_tol = 1e-4; // scaled by (1 + L1 scale of f rho)
    double boundary_tol = 1e-8;
    double band_tol = 1e-8; // scaled by (1 + M)
    double sup_rel_slack = 1e-6;
    double deriv_rel_slack = 1e-6;
    double jump_scale = 10.0;
    double hyp_tol = 1e-7;
    double lower_upper_tol = 1e-8;
    std::uint64_t seed = 1;
    std::size_t sample_points = 128;
};

struct SolverConfig {
    std::size_t cells = 2048;
    double grading = 1.5;
    double damping = 0.5;      // in (0, 1]
    std::size_t max_iters = 200;
    std::size_t anderson_m = 3;
    double fp_tol = 1e-9;      // W11 fixed-point residual
    double z_tol = 1e-12;      // boundary-gap equation tolerance (relative)
    double margin_N = 1.01;
    double margin_L = 1.05;
    VerifyOptions verify;

    void validate() const {
        if (cells < 2) throw ConfigError("solver: needs at least 2 cells");
        if (!(damping > 0.0) || damping > 1.0)
            throw ConfigError("solver: damping must lie in (0, 1]");
        if (!(fp_tol > 0.0) || !(z_tol > 0.0))
            throw ConfigError("solver: tolerances must be positive");
        if (!(margin_N > 1.0) || !(margin_L > 1.0))
            throw ConfigError("solver: margins must exceed 1");
        if (!(grading >= 1.0)) throw ConfigError("solver: grading must be >= 1");
    }
};

/// Check the problem-level invariants that are cheap to sample; throws on
/// violation. The certificate suite re-audits them with reported slack.
inline void validate_problem(const ProblemSpec& spec) {
    spec.nagumo.validate();
    const Mesh& m = spec.mesh();

    for (std::size_t i = 0; i < m.n_nodes(); ++i)
        if (spec.alpha.value(i) > spec.beta.value(i))
            throw ConfigError("envelopes are not well-ordered at node " + std::to_string(i));

    for (std::size_t i = 0; i < m.n_cells(); ++i) {
        const double kv = spec.k.eval(m.midpoint(i));
        if (!(kv >= 0.0))
            throw ConfigError("weight k is negative at t = " + detail::fmt(m.midpoint(i)));
    }

    const double inv_k_l1 =
        integrate_singular([&](double t) { return 1.0 / spec.k.eval(t); }, m);
    if (!std::isfinite(inv_k_l1))
        throw ConfigError("1/k is not integrable on the mesh");

    // rho >= 0 on a coarse sample; the hypothesis audit repeats this with
    // located worst violations.
    const std::size_t stride = std::max<std::size_t>(1, m.n_cells() / 64);
    for (std::size_t i = 0; i < m.n_cells(); i += stride) {
        const double t = m.midpoint(i);
        for (double y : {0.0, 0.5, -0.5, 3.0, -3.0, 50.0, -50.0}) {
            const double r = spec.eval_rho(t, y);
            if (r < -1e-12)
                throw ConfigError("rho is negative at (t, y) = (" + detail::fmt(t) + ", " +
                                  detail::fmt(y) + ")");
        }
    }
}

} // namespace phibvp
