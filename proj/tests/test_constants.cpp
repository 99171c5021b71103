#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "phibvp/constants.hpp"

using namespace phibvp;

namespace {

NagumoData nagumo_with(const std::string& psi, const std::string& l, const std::string& mu,
                       double q, double H = 1.0) {
    NagumoData n;
    n.H = H;
    n.psi = Expr::parse(psi, "s");
    n.l = Expr::parse(l, "t");
    n.mu = Expr::parse(mu, "t");
    n.q = q;
    return n;
}

} // namespace

TEST_CASE("compute_M on constant envelopes") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 8, {}, 1.0);
    CHECK(compute_M(GridFunction::constant(m, -1.0), GridFunction::constant(m, 1.0)) == 1.0);
    CHECK(compute_M(GridFunction::constant(m, 1.0), GridFunction::constant(m, 2.0)) == 2.0);
    CHECK(compute_M(GridFunction::constant(m, 0.0), GridFunction::constant(m, 0.0)) == 0.0);
    CHECK_THROWS_AS(compute_M(GridFunction::constant(m, 1.0), GridFunction::constant(m, 0.0)),
                    ConfigError);
}

TEST_CASE("choose_N with strict margins") {
    // delay-problem data: H = 1, M = 2, ||k|| = 1, b - a = 2 pi
    const double N = choose_N(PhiOperator::p_laplacian(2.0), 1.0, 2.0, 1.0,
                              2.0 * std::numbers::pi, 1.01);
    CHECK(N == Catch::Approx(1.01));

    CHECK(choose_N(PhiOperator::identity(), 2.0, 0.0, 1.0, 1.0, 1.25) == Catch::Approx(2.5));
    CHECK_THROWS_AS(choose_N(PhiOperator::identity(), 2.0, 0.0, 1.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("L_M marching against the closed forms") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 64, {}, 1.0);

    // psi == 1, identity Phi: the branch integral is s - Phi(N), so the
    // threshold sits at N + rhs. Here l == 2, mu == 0 gives rhs = 2.
    {
        const LMResult lm =
            compute_LM(PhiOperator::identity(), nagumo_with("1", "2", "0", 2.0), 1.0, 1.0, m);
        CHECK(lm.rhs == Catch::Approx(2.0).margin(1e-10));
        CHECK(lm.L_M / 1.05 == Catch::Approx(3.0).epsilon(0.02));
    }

    // psi(s) = s: Int_N^s dr/r = log(s/N), threshold at s = N e^{rhs}.
    {
        const LMResult lm =
            compute_LM(PhiOperator::identity(), nagumo_with("s", "2", "0", 2.0), 1.0, 1.0, m);
        CHECK(lm.L_M / 1.05 ==
              Catch::Approx(std::exp(2.0)).epsilon(1e-3));
    }

    // zero right-hand side: any L beyond N works, the margin provides it.
    {
        const LMResult lm =
            compute_LM(PhiOperator::identity(), nagumo_with("1", "0", "0", 2.0), 1.0, 1.0, m);
        CHECK(lm.rhs == 0.0);
        CHECK(lm.L_M > 1.0);
        CHECK(lm.L_M == Catch::Approx(1.05).margin(1e-6));
    }
}

TEST_CASE("Hoelder term of the threshold") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 64, {}, 1.0);
    // ||mu||_{L^2} = 1, (2M)^{1/2} with M = 2 -> rhs = 2.
    const LMResult lm =
        compute_LM(PhiOperator::identity(), nagumo_with("1", "0", "1", 2.0), 1.0, 2.0, m);
    CHECK(lm.rhs == Catch::Approx(2.0).margin(1e-10));

    // q = infinity uses ||mu||_inf * 2M.
    NagumoData inf_n = nagumo_with("1", "0", "0.25", 2.0);
    inf_n.q_infinite = true;
    const LMResult lmi = compute_LM(PhiOperator::identity(), inf_n, 1.0, 2.0, m);
    CHECK(lmi.rhs == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("divergence test failure on a convergent psi integral") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 16, {}, 1.0);
    CHECK_THROWS_AS(
        compute_LM(PhiOperator::identity(), nagumo_with("s^2", "2", "0", 2.0), 1.0, 1.0, m),
        NumericError);
    CHECK_THROWS_WITH(
        compute_LM(PhiOperator::identity(), nagumo_with("s^2", "2", "0", 2.0), 1.0, 1.0, m),
        Catch::Matchers::ContainsSubstring("divergence test failed"));
}

TEST_CASE("marching is monotone in the threshold and N in M") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 32, {}, 1.0);
    double prev_lm = 0.0;
    for (double lval : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const LMResult lm = compute_LM(
            PhiOperator::sinh_map(),
            nagumo_with("1", detail::fmt(lval), "0", 2.0), 1.0, 1.0, m);
        CHECK(lm.L_M >= prev_lm);
        CHECK(lm.L_M >= 1.0);
        CHECK(PhiOperator::sinh_map().apply(lm.L_M) >
              PhiOperator::sinh_map().apply(1.0));
        prev_lm = lm.L_M;
    }

    double prev_n = 0.0;
    for (double M : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        const double N = choose_N(PhiOperator::identity(), 1.0, M, 1.0, 1.0, 1.01);
        CHECK(N >= prev_n);
        prev_n = N;
    }
}

TEST_CASE("gamma_L field") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 8, {}, 1.0);
    const GridFunction flat = GridFunction::constant(m, 0.0);

    const auto unit = gamma_L_field(1.0, Expr::parse("1", "t"), flat, flat, m);
    for (double g : unit) CHECK(g == Catch::Approx(1.0).margin(1e-12));

    const auto scaled = gamma_L_field(2.0, Expr::parse("0.5", "t"), flat, flat, m);
    for (double g : scaled) CHECK(g == Catch::Approx(4.0).margin(1e-12));

    // slopes of the envelopes enter additively
    const GridFunction ramp = antiderivative(m, std::vector<double>(m.n_cells(), 0.25), 0.0);
    const auto with_slopes = gamma_L_field(1.0, Expr::parse("1", "t"), ramp, flat, m);
    for (double g : with_slopes) CHECK(g == Catch::Approx(1.25).margin(1e-12));
}

TEST_CASE("gamma_L next to a singular node uses the cell average of 1/k") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 64, {0.0}, 1.5);
    const GridFunction flat = GridFunction::constant(m, 0.0);
    const auto gamma = gamma_L_field(1.0, Expr::parse("sqrt(t)", "t"), flat, flat, m);

    // first cell: average of 1/sqrt(t) over [0, w] is 2/sqrt(w)
    const double w = m.width(0);
    CHECK(gamma[0] == Catch::Approx(2.0 / std::sqrt(w)).epsilon(1e-3));
    CHECK(std::isfinite(gamma[0]));

    // away from the singularity the midpoint value is used
    const std::size_t far = m.n_cells() - 1;
    CHECK(gamma[far] == Catch::Approx(1.0 / std::sqrt(m.midpoint(far))).epsilon(1e-12));
}

TEST_CASE("k weight helpers") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 32, {}, 1.0);
    CHECK(k_sup_norm(Expr::parse("sqrt(t*(1-t))", "t"), m) == Catch::Approx(0.5).margin(1e-4));
    CHECK_THROWS_AS(cell_inv_k(Expr::parse("0-1", "t"), m), DomainError);
}
