#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "phibvp/problem.hpp"

namespace phibvp {

namespace detail {

inline std::string lit(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace detail

/// Singular sqrt weight on [0, 1] with a sinh operator, a cubic non-local
/// integral term, a max-type condition at the left end and a scaled mean at
/// the right end:
///   (sinh(sqrt(t(1-t)) x'))' + a(Int_0^t x^3) |x'|^varrho = 0,
///   x(0) = max{x(1), 1},  x(1) = eps Int_0^1 x.
/// The coupling a(z) is any continuous nondecreasing map, identity by
/// default. Envelopes are the constants -1 and 1.
inline ProblemSpec sinh_sqrt_weight_problem(double eps, double varrho, std::size_t cells = 2048,
                                            double grading = 1.5,
                                            const std::string& coupling = "z") {
    if (!(eps > 0.0) || !(eps < 1.0))
        throw ConfigError("sinh_sqrt_weight_problem: requires 0 < eps < 1, got eps = " +
                          detail::lit(eps));
    if (!(varrho > 0.0) || !(varrho < 1.0))
        throw ConfigError("sinh_sqrt_weight_problem: requires 0 < varrho < 1, got varrho = " +
                          detail::lit(varrho));

    const Mesh mesh = make_graded_mesh(0.0, 1.0, cells, {0.0, 1.0}, grading);
    const GridFunction alpha = GridFunction::constant(mesh, -1.0);
    const GridFunction beta = GridFunction::constant(mesh, 1.0);

    const Expr f = Expr::parse(coupling, "tz");
    // Working radius R = eta_M with M = 1 and the cubic integral term.
    const double R = 1.0;
    double mu_const = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double z = -R + 2.0 * R * static_cast<double>(i) / 2000.0;
        mu_const = std::max(mu_const, std::abs(f.eval(Bindings{}.set('z', z).set('t', 0.5))));
    }

    NagumoData nagumo;
    nagumo.H = 1.0;
    nagumo.psi = Expr::parse("1", "s");
    nagumo.l = Expr::parse("0", "t");
    nagumo.mu = Expr::parse(detail::lit(mu_const), "t");
    nagumo.q = 1.0 / (1.0 - varrho);

    return ProblemSpec(
        PhiOperator::sinh_map(), KWeight{Expr::parse("sqrt(t*(1-t))", "t"), {0.0, 1.0}}, f,
        Expr::parse("abs(y)^" + detail::lit(varrho), "ty"), FunctionalTerm::integral_of_power(3),
        BoundaryFunctional::point_eval(1.0, BoundaryFunctional::Post::MaxWith, 1.0),
        BoundaryFunctional::mean_shift(eps, 0.0), alpha, beta, nagumo);
}

/// p-Laplacian with the weight |sin t|^(1/theta0) on [0, 2 pi], a delayed
/// coupling and functional boundary values:
///   (Phi_p(|sin t|^{1/theta0} x'))' + x_tau(t) |x'|^delta = 0,
///   x(0) = cbrt(x(pi)),  x(2 pi) = (1/(4 pi)) Int_0^{2 pi} (x + 2).
/// Validity needs 1 < p < theta0 + 1 and 0 < delta < p - (p-1)/theta0.
/// Envelopes are the constants 1 and 2.
inline ProblemSpec p_laplacian_delay_problem(double theta0, double p, double delta, double tau,
                                             std::size_t cells = 2048, double grading = 1.5) {
    const double two_pi = 2.0 * std::numbers::pi;
    if (!(theta0 > 1.0))
        throw ConfigError("p_laplacian_delay_problem: requires theta0 > 1, got theta0 = " +
                          detail::lit(theta0));
    if (!(p > 1.0) || !(p < theta0 + 1.0))
        throw ConfigError("p_laplacian_delay_problem: requires 1 < p < theta0 + 1 = " +
                          detail::lit(theta0 + 1.0) + ", got p = " + detail::lit(p));
    const double delta_bound = p - (p - 1.0) / theta0;
    if (!(delta > 0.0) || !(delta < delta_bound))
        throw ConfigError(
            "p_laplacian_delay_problem: requires 0 < delta < p - (p-1)/theta0 = " +
            detail::lit(delta_bound) + ", got delta = " + detail::lit(delta));
    if (!(tau > 0.0) || !(tau < two_pi))
        throw ConfigError("p_laplacian_delay_problem: requires 0 < tau < 2 pi, got tau = " +
                          detail::lit(tau));

    const Mesh mesh = make_graded_mesh(0.0, two_pi, cells, {0.0, std::numbers::pi, two_pi},
                                       grading);
    const GridFunction alpha = GridFunction::constant(mesh, 1.0);
    const GridFunction beta = GridFunction::constant(mesh, 2.0);

    const double q = theta0 / (p - 1.0); // > 1 by the constraint on p
    const double R = 2.0;                // eta_M with M = 2 and the delay term
    const double k_expo = (delta + 1.0 / q - 1.0) / theta0;
    std::string mu_src;
    if (k_expo > 0.0)
        mu_src = detail::lit(R) + "/abs(sin(t))^" + detail::lit(k_expo);
    else if (k_expo < 0.0)
        mu_src = detail::lit(R) + "*abs(sin(t))^" + detail::lit(-k_expo);
    else
        mu_src = detail::lit(R);

    NagumoData nagumo;
    nagumo.H = 1.0;
    nagumo.psi = Expr::parse("s", "s");
    nagumo.l = Expr::parse("0", "t");
    nagumo.mu = Expr::parse(mu_src, "t");
    nagumo.q = q;

    return ProblemSpec(
        PhiOperator::p_laplacian(p),
        KWeight{Expr::parse("abs(sin(t))^" + detail::lit(1.0 / theta0), "t"),
                {0.0, std::numbers::pi, two_pi}},
        Expr::parse("z", "tz"), Expr::parse("abs(y)^" + detail::lit(delta), "ty"),
        FunctionalTerm::delay(tau),
        BoundaryFunctional::point_eval(std::numbers::pi, BoundaryFunctional::Post::Cbrt),
        BoundaryFunctional::mean_shift(0.5, 2.0), alpha, beta, nagumo);
}

/// Piecewise-constant weight on [-1, 1] with a cubic operator, a running-max
/// coupling and fixed boundary values:
///   ((k x')^3)' + (max_{s <= t} x(s)) log(1 + |t^{1/3} x'|^2) = 0,
///   x(-1) = 0,  x(1) = 1,   k = d1 on [-1, 0), d2 on (0, 1].
/// The weight is bounded below, so nothing is singular; t = 0 is kept as a
/// mesh node because k jumps there. Envelopes are the constants 0 and 1.
inline ProblemSpec step_weight_running_max_problem(double d1, double d2,
                                                   std::size_t cells = 2048,
                                                   double grading = 1.5) {
    if (!(d1 > 0.0) || !(d2 > 0.0))
        throw ConfigError("step_weight_running_max_problem: requires d1, d2 > 0");

    const Mesh mesh = make_graded_mesh(-1.0, 1.0, cells, {}, grading, {0.0});
    const GridFunction alpha = GridFunction::constant(mesh, 0.0);
    const GridFunction beta = GridFunction::constant(mesh, 1.0);

    const double d = std::min(d1, d2);
    const double R = 1.0; // eta_M with M = 1 and the running max

    NagumoData nagumo;
    nagumo.H = 1.0;
    nagumo.psi = Expr::parse("s", "s");
    nagumo.l = Expr::parse(detail::lit(R / (d * d)), "t");
    nagumo.mu = Expr::parse("0", "t");
    nagumo.q = 2.0;

    return ProblemSpec(
        PhiOperator::cubic(),
        KWeight{Expr::parse(detail::lit(d1) + "*indicator(-1,0)+" + detail::lit(d2) +
                                "*indicator(0,1)",
                            "t"),
                {}},
        Expr::parse("z", "tz"), Expr::parse("log(1+abs(cbrt(t)*y)^2)", "ty"),
        FunctionalTerm::running_max(), BoundaryFunctional::constant(0.0),
        BoundaryFunctional::constant(1.0), alpha, beta, nagumo);
}

/// f rho == 0 with unit weight and identity operator on [0, 1]; the solve
/// reduces to the straight line through the fixed boundary values.
inline ProblemSpec linear_test_problem(std::size_t cells = 64) {
    const Mesh mesh = make_graded_mesh(0.0, 1.0, cells, {}, 1.0);
    NagumoData nagumo;
    nagumo.H = 1.0;
    nagumo.psi = Expr::parse("1", "s");
    nagumo.l = Expr::parse("0", "t");
    nagumo.mu = Expr::parse("0", "t");
    nagumo.q = 2.0;
    return ProblemSpec(PhiOperator::identity(), KWeight{Expr::parse("1", "t"), {}},
                       Expr::parse("0", "tz"), Expr::parse("0", "ty"),
                       FunctionalTerm::identity(), BoundaryFunctional::constant(0.0),
                       BoundaryFunctional::constant(1.0), GridFunction::constant(mesh, 0.0),
                       GridFunction::constant(mesh, 1.0), nagumo);
}

} // namespace phibvp
