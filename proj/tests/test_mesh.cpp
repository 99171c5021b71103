#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "phibvp/mesh.hpp"

using namespace phibvp;

TEST_CASE("uniform mesh without singular points") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 4, {}, 1.0);
    REQUIRE(m.n_nodes() == 5);
    const std::vector<double> expect{0.0, 0.25, 0.5, 0.75, 1.0};
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(m.nodes()[i] == Catch::Approx(expect[i]).margin(1e-15));
}

TEST_CASE("graded mesh keeps singular points as nodes") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 8, {0.0, 1.0}, 2.0);
    CHECK(m.n_cells() >= 8);
    CHECK(m.nodes().front() == 0.0);
    CHECK(m.nodes().back() == 1.0);
    CHECK(m.point_is_singular(0.0));
    CHECK(m.point_is_singular(1.0));
}

TEST_CASE("cell widths shrink toward an interior singular point") {
    const Mesh m = make_graded_mesh(-1.0, 1.0, 8, {0.0}, 2.0);
    CHECK(m.point_is_singular(0.0));
    std::size_t zero = 0;
    while (m.nodes()[zero] != 0.0) ++zero;
    for (std::size_t i = 0; i + 1 < zero; ++i) CHECK(m.width(i) > m.width(i + 1));
    for (std::size_t i = zero; i + 1 < m.n_cells(); ++i) CHECK(m.width(i) < m.width(i + 1));
}

TEST_CASE("graded widths survive deep refinement without node collapse") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 2048, {0.0, 1.0}, 1.5);
    CHECK(m.n_cells() >= 2048);
    for (std::size_t i = 0; i < m.n_cells(); ++i) CHECK(m.width(i) > 0.0);
}

TEST_CASE("singular point outside interval is rejected") {
    CHECK_THROWS_AS(make_graded_mesh(0.0, 1.0, 4, {2.0}, 1.5), DomainError);
    CHECK_THROWS_AS(make_graded_mesh(0.0, 1.0, 4, {}, 0.5), ConfigError);
}

TEST_CASE("anchors become nodes without refinement") {
    const Mesh m = make_graded_mesh(-1.0, 1.0, 8, {}, 1.5, {0.0});
    bool found = false;
    for (double t : m.nodes()) found = found || (t == 0.0);
    CHECK(found);
    CHECK(!m.point_is_singular(0.0));
}

TEST_CASE("norm basics") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 16, {}, 1.0);
    const GridFunction one = GridFunction::constant(m, 1.0);
    CHECK(norm(one, NormKind::L1) == Catch::Approx(1.0).margin(1e-14));

    std::vector<double> values(m.n_nodes());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = m.nodes()[i];
    const GridFunction ident = GridFunction::from_values(m, values);
    CHECK(norm(ident, NormKind::Linf) == Catch::Approx(1.0));
    CHECK(norm(ident, NormKind::W11) == Catch::Approx(1.5).margin(1e-13));
}

TEST_CASE("W11 norm agrees with a brute-force Riemann sum") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 37, {}, 1.0);
    std::vector<double> values(m.n_nodes());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double t = m.nodes()[i];
        values[i] = std::sin(3.0 * t) - 0.4 * t;
    }
    const GridFunction x = GridFunction::from_values(m, values);

    const std::size_t n = 200000;
    double riemann = 0.0;
    const double h = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (static_cast<double>(i) + 0.5) * h;
        riemann += (std::abs(x.eval(t)) + std::abs(x.slope_at(t))) * h;
    }
    CHECK(norm(x, NormKind::W11) == Catch::Approx(riemann).epsilon(1e-6));
}

TEST_CASE("norm scaling and W11 dominance") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    const Mesh m = make_graded_mesh(0.0, 2.0, 24, {}, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> values(m.n_nodes());
        for (double& v : values) v = unif(rng);
        const GridFunction x = GridFunction::from_values(m, values);
        const double c = unif(rng);
        const GridFunction cx = c * x;
        for (NormKind kind : {NormKind::L1, NormKind::Linf, NormKind::W11})
            CHECK(norm(cx, kind) == Catch::Approx(std::abs(c) * norm(x, kind)).margin(1e-12));
        CHECK(norm(cx, NormKind::Lq, 3.0) ==
              Catch::Approx(std::abs(c) * norm(x, NormKind::Lq, 3.0)).margin(1e-10));
        CHECK(norm(x, NormKind::W11) >= norm(x, NormKind::L1));
    }
}

TEST_CASE("antiderivative basics") {
    const Mesh m2({0.0, 0.5, 1.0});
    const GridFunction c3 = antiderivative(m2, {0.0, 0.0}, 3.0);
    CHECK(c3.value(0) == 3.0);
    CHECK(c3.value(2) == 3.0);

    const GridFunction ramp = antiderivative(m2, {1.0, 1.0}, 0.0);
    CHECK(ramp.value(1) == Catch::Approx(0.5));
    CHECK(ramp.value(2) == Catch::Approx(1.0));

    const GridFunction tent = antiderivative(m2, {1.0, -1.0}, 0.0);
    CHECK(tent.value(0) == 0.0);
    CHECK(tent.value(1) == Catch::Approx(0.5));
    CHECK(tent.value(2) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("antiderivative endpoint gap telescopes exactly") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    const Mesh m = make_graded_mesh(-1.0, 3.0, 33, {}, 1.0);
    std::vector<double> g(m.n_cells());
    for (double& v : g) v = unif(rng);
    const GridFunction F = antiderivative(m, g, 0.25);
    double sum = 0.0;
    double acc = 0.25;
    for (std::size_t i = 0; i < g.size(); ++i) {
        sum = (acc += g[i] * m.width(i));
    }
    CHECK(F.value(m.n_cells()) == sum); // identical rounding path
}

TEST_CASE("integrate_singular on regular and singular integrands") {
    const Mesh uniform = make_graded_mesh(0.0, 1.0, 8, {}, 1.0);
    CHECK(integrate_singular([](double) { return 1.0; }, uniform) ==
          Catch::Approx(1.0).margin(1e-12));

    const Mesh g64 = make_graded_mesh(0.0, 1.0, 64, {0.0}, 1.5);
    const double inv_sqrt = integrate_singular([](double t) { return 1.0 / std::sqrt(t); }, g64);
    CHECK(inv_sqrt == Catch::Approx(2.0).margin(1e-3));

    const Mesh g2 = make_graded_mesh(0.0, 1.0, 256, {0.0, 1.0}, 1.5);
    const double arcsin = integrate_singular(
        [](double t) { return 1.0 / std::sqrt(t * (1.0 - t)); }, g2);
    CHECK(arcsin == Catch::Approx(std::numbers::pi).margin(1e-3));
}

TEST_CASE("integrate_singular reports non-finite interior samples") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 4, {}, 1.0);
    CHECK_THROWS_WITH(
        integrate_singular([](double t) { return (t > 0.3 && t < 0.4) ? INFINITY : 1.0; }, m),
        Catch::Matchers::ContainsSubstring("non-finite integrand sample at t ="));
}

TEST_CASE("integrate_singular converges at order >= 2 on exp") {
    // 1-point rule keeps the error above rounding so the order is measurable.
    const double exact = std::exp(1.0) - 1.0;
    std::vector<double> errs;
    for (std::size_t n : {4u, 8u, 16u}) {
        const Mesh m = make_graded_mesh(0.0, 1.0, n, {}, 1.0);
        errs.push_back(std::abs(
            integrate_singular([](double t) { return std::exp(t); }, m, 1) - exact));
    }
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
        const double order = std::log2(errs[i] / errs[i + 1]);
        CHECK(order >= 2.0);
    }
}

TEST_CASE("grid function consistency is enforced") {
    const Mesh m({0.0, 1.0});
    CHECK_THROWS_AS(GridFunction(m, {0.0, 1.0}, {0.5}), ConfigError);
    CHECK_NOTHROW(GridFunction(m, {0.0, 1.0}, {1.0}));
    CHECK_THROWS_AS(GridFunction(m, {0.0, NAN}, {1.0}), ConfigError);
}

TEST_CASE("resample is exact on refinements") {
    const Mesh coarse({0.0, 0.4, 1.0});
    const GridFunction x = GridFunction::from_values(coarse, {1.0, -0.5, 2.0});
    const Mesh fine({0.0, 0.2, 0.4, 0.7, 1.0});
    const GridFunction y = resample(x, fine);
    for (double t : {0.0, 0.1, 0.35, 0.55, 0.9, 1.0})
        CHECK(y.eval(t) == Catch::Approx(x.eval(t)).margin(1e-15));
    CHECK(w11_distance(x, y) < 1e-13);
}
