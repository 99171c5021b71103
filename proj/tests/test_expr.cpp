#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "phibvp/expr.hpp"

using namespace phibvp;

namespace {

double eval_t(const Expr& e, double t) { return e.eval(Bindings{}.set('t', t)); }

} // namespace

TEST_CASE("parse and evaluate paper-style expressions") {
    const Expr root = Expr::parse("abs(sin(t))^(1/2)", "t");
    CHECK(eval_t(root, std::numbers::pi / 2.0) == Catch::Approx(1.0));
    CHECK(eval_t(root, 0.1) == Catch::Approx(std::sqrt(std::sin(0.1))));

    const Expr var = Expr::parse("z", "tz");
    CHECK(var.eval(Bindings{}.set('z', -3.5)) == -3.5);

    const Expr rho = Expr::parse("log(1+abs(cbrt(t)*y)^2)", "ty");
    CHECK(rho.eval(Bindings{}.set('t', -1.0).set('y', 0.0)) == Catch::Approx(0.0));
    CHECK(rho.eval(Bindings{}.set('t', 0.5).set('y', 2.0)) ==
          Catch::Approx(std::log(1.0 + std::pow(std::cbrt(0.5) * 2.0, 2.0))));
}

TEST_CASE("syntax errors carry positions") {
    try {
        Expr::parse("q +", "t");
        FAIL("expected a parse error");
    } catch (const ExprError& e) {
        CHECK(e.offset() == 2);
    }
    CHECK_THROWS_AS(Expr::parse("", "t"), ExprError);
    CHECK_THROWS_AS(Expr::parse("(t", "t"), ExprError);
    CHECK_THROWS_AS(Expr::parse("t )", "t"), ExprError);
}

TEST_CASE("unknown identifiers and wrong arity are rejected") {
    CHECK_THROWS_WITH(Expr::parse("q", "t"),
                      Catch::Matchers::ContainsSubstring("unknown identifier"));
    CHECK_THROWS_WITH(Expr::parse("z", "t"),
                      Catch::Matchers::ContainsSubstring("not allowed"));
    CHECK_THROWS_WITH(Expr::parse("sin(t, 1)", "t"),
                      Catch::Matchers::ContainsSubstring("argument"));
    CHECK_THROWS_WITH(Expr::parse("min(t)", "t"),
                      Catch::Matchers::ContainsSubstring("argument"));
    CHECK_THROWS_WITH(Expr::parse("foo(t)", "t"),
                      Catch::Matchers::ContainsSubstring("unknown function"));
}

TEST_CASE("precedence and associativity") {
    CHECK(eval_t(Expr::parse("2^3^2", "t"), 0.0) == Catch::Approx(512.0));
    CHECK(eval_t(Expr::parse("-2^2", "t"), 0.0) == Catch::Approx(-4.0));
    CHECK(eval_t(Expr::parse("2*-3", "t"), 0.0) == Catch::Approx(-6.0));
    CHECK(eval_t(Expr::parse("1-2-3", "t"), 0.0) == Catch::Approx(-4.0));
    CHECK(eval_t(Expr::parse("12/3/2", "t"), 0.0) == Catch::Approx(2.0));
    CHECK(eval_t(Expr::parse("1+2*3^2", "t"), 0.0) == Catch::Approx(19.0));
    CHECK(eval_t(Expr::parse("2^-1", "t"), 0.0) == Catch::Approx(0.5));
}

TEST_CASE("math domain errors name the subexpression") {
    const Expr inv = Expr::parse("1/t", "t");
    CHECK_THROWS_WITH(eval_t(inv, 0.0), Catch::Matchers::ContainsSubstring("division by zero"));
    const Expr lg = Expr::parse("log(t)", "t");
    CHECK_THROWS_WITH(eval_t(lg, -1.0), Catch::Matchers::ContainsSubstring("log(t)"));
    const Expr sq = Expr::parse("sqrt(t)", "t");
    CHECK_THROWS_AS(eval_t(sq, -1.0), DomainError);
}

TEST_CASE("indicator is closed on both ends") {
    const Expr chi = Expr::parse("indicator(-1, 0)", "t");
    CHECK(eval_t(chi, -1.0) == 1.0);
    CHECK(eval_t(chi, 0.0) == 1.0);
    CHECK(eval_t(chi, -0.5) == 1.0);
    CHECK(eval_t(chi, 0.5) == 0.0);
    CHECK(eval_t(chi, -1.0001) == 0.0);

    const Expr k = Expr::parse("2*indicator(-1,0) + 3*indicator(0,1)", "t");
    CHECK(eval_t(k, -0.5) == 2.0);
    CHECK(eval_t(k, 0.5) == 3.0);
    CHECK(eval_t(k, 0.0) == 5.0); // both closed at the shared endpoint

    CHECK_THROWS_AS(Expr::parse("indicator(0,1)", "s"), ExprError);
}

TEST_CASE("reparse of the printed form is structurally identical") {
    const std::vector<std::string> corpus = {
        "abs(sin(t))^(1/2)",
        "sqrt(t*(1-t))",
        "log(1+abs(cbrt(t)*y)^2)",
        "2*indicator(-1,0)+3*indicator(0,1)",
        "-t^2 + 4*t - min(t, 0.5)/max(t, 0.25)",
        "pow(abs(y), 0.5)",
        "1/(1+exp(-t))",
        "--t",
        "2^-3",
        "(t-1)*(t+1)",
    };
    for (const auto& src : corpus) {
        const Expr a = Expr::parse(src, "ty");
        const Expr b = Expr::parse(a.to_string(), "ty");
        INFO(src << "  ->  " << a.to_string());
        CHECK(a.structurally_equal(b));
        CHECK(a.to_string() == b.to_string());
    }
}

TEST_CASE("eval agrees with hand-coded closures") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ut(0.001, 0.999);
    std::uniform_real_distribution<double> uz(-3.0, 3.0);

    const Expr k1 = Expr::parse("sqrt(t*(1-t))", "t");
    const Expr rho1 = Expr::parse("abs(y)^0.5", "ty");
    const Expr k2 = Expr::parse("abs(sin(t))^(1/2)", "t");
    const Expr rho3 = Expr::parse("log(1+abs(cbrt(t)*y)^2)", "ty");

    for (int i = 0; i < 1000; ++i) {
        const double t = ut(rng);
        const double y = uz(rng);
        CHECK(eval_t(k1, t) == Catch::Approx(std::sqrt(t * (1 - t))).epsilon(1e-14));
        CHECK(rho1.eval(Bindings{}.set('t', t).set('y', y)) ==
              Catch::Approx(std::pow(std::abs(y), 0.5)).epsilon(1e-14));
        CHECK(eval_t(k2, t * 2.0 * std::numbers::pi) ==
              Catch::Approx(std::pow(std::abs(std::sin(t * 2.0 * std::numbers::pi)), 0.5))
                  .epsilon(1e-14));
        CHECK(rho3.eval(Bindings{}.set('t', 2.0 * t - 1.0).set('y', y)) ==
              Catch::Approx(std::log(1.0 + std::pow(std::abs(std::cbrt(2.0 * t - 1.0) * y), 2.0)))
                  .epsilon(1e-13).margin(1e-15));
    }
}
