#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "phibvp/truncation.hpp"

using namespace phibvp;

namespace {

GridFunction random_fn(const Mesh& m, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> unif(lo, hi);
    std::vector<double> v(m.n_nodes());
    for (double& x : v) x = unif(rng);
    return GridFunction::from_values(m, std::move(v));
}

} // namespace

TEST_CASE("full clamp to the upper envelope") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 8, {}, 1.0);
    const GridFunction x = GridFunction::constant(m, 5.0);
    const GridFunction lo = GridFunction::constant(m, -1.0);
    const GridFunction hi = GridFunction::constant(m, 1.0);
    const GridFunction c = clamp_fn(x, lo, hi);
    for (double v : c.values()) CHECK(v == 1.0);
    for (double s : c.slopes()) CHECK(s == 0.0);
}

TEST_CASE("clamp is the identity inside the band") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 16, {}, 1.0);
    std::mt19937_64 rng(4);
    const GridFunction x = random_fn(m, rng, -0.9, 0.9);
    const GridFunction lo = GridFunction::constant(m, -1.0);
    const GridFunction hi = GridFunction::constant(m, 1.0);
    const GridFunction c = clamp_fn(x, lo, hi);
    REQUIRE(c.mesh().same_nodes(m));
    for (std::size_t i = 0; i < m.n_nodes(); ++i) CHECK(c.value(i) == x.value(i));
    for (std::size_t i = 0; i < m.n_cells(); ++i) CHECK(c.slope(i) == x.slope(i));
}

TEST_CASE("crossings are inserted at exact abscissae") {
    const Mesh m({0.0, 1.0});
    std::vector<double> v{-1.0, 1.0}; // x(t) = 2t - 1
    const GridFunction x = GridFunction::from_values(m, std::move(v));
    const GridFunction lo = GridFunction::constant(m, -0.5);
    const GridFunction hi = GridFunction::constant(m, 0.5);
    const GridFunction c = clamp_fn(x, lo, hi);

    REQUIRE(c.mesh().n_nodes() == 4);
    CHECK(c.mesh().nodes()[1] == Catch::Approx(0.25).margin(1e-15));
    CHECK(c.mesh().nodes()[2] == Catch::Approx(0.75).margin(1e-15));
    CHECK(c.slope(0) == 0.0);
    CHECK(c.slope(1) == Catch::Approx(2.0));
    CHECK(c.slope(2) == 0.0);
    CHECK(c.value(0) == -0.5);
    CHECK(c.value(3) == 0.5);
}

TEST_CASE("envelope ordering and mesh mismatch are rejected") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 4, {}, 1.0);
    const Mesh other = make_graded_mesh(0.0, 1.0, 5, {}, 1.0);
    const GridFunction x = GridFunction::constant(m, 0.0);
    CHECK_THROWS_AS(
        clamp_fn(x, GridFunction::constant(m, 1.0), GridFunction::constant(m, -1.0)),
        ConfigError);
    CHECK_THROWS_AS(
        clamp_fn(x, GridFunction::constant(other, -1.0), GridFunction::constant(m, 1.0)),
        ConfigError);
}

TEST_CASE("derivative clamp") {
    const Mesh m({0.0, 0.5, 1.0});
    const GridFunction steep = antiderivative(m, {3.0, -3.0}, 0.0);
    CHECK(clamp_derivative(steep, {1.0, 1.0}) == std::vector<double>{1.0, -1.0});

    const GridFunction mild = antiderivative(m, {0.3, -0.2}, 0.0);
    CHECK(clamp_derivative(mild, {1.0, 1.0}) == std::vector<double>{0.3, -0.2});

    const GridFunction half = antiderivative(m, {0.5, 0.5}, 0.0);
    CHECK(clamp_derivative(half, {0.0, 0.0}) == std::vector<double>{0.0, 0.0});

    CHECK_THROWS_AS(clamp_derivative(mild, {1.0, -1.0}), ConfigError);
    CHECK_THROWS_AS(clamp_derivative(mild, {1.0}), ConfigError);
}

TEST_CASE("clamp is 1-Lipschitz pointwise and in L1") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const Mesh m = make_graded_mesh(0.0, 1.0, 24, {}, 1.0);
        const GridFunction lo = random_fn(m, rng, -2.0, -0.2);
        std::vector<double> hv(lo.values());
        std::uniform_real_distribution<double> gap(0.0, 2.5);
        for (double& v : hv) v += gap(rng);
        const GridFunction hi = GridFunction::from_values(m, std::move(hv));
        const GridFunction x = random_fn(m, rng, -3.0, 3.0);
        const GridFunction y = random_fn(m, rng, -3.0, 3.0);

        const GridFunction cx = clamp_fn(x, lo, hi);
        const GridFunction cy = clamp_fn(y, lo, hi);
        for (std::size_t i = 0; i < m.n_nodes(); ++i) {
            const double t = m.nodes()[i];
            CHECK(std::abs(cx.eval(t) - cy.eval(t)) <=
                  std::abs(x.value(i) - y.value(i)) + 1e-12);
        }
        const Mesh u = mesh_union(cx.mesh(), cy.mesh());
        const double lhs = norm(resample(cx, u) - resample(cy, u), NormKind::L1);
        const double rhs = norm(x - y, NormKind::L1);
        CHECK(lhs <= rhs + 1e-10);
    }
}

TEST_CASE("clamp is idempotent exactly") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const Mesh m = make_graded_mesh(-1.0, 2.0, 16, {}, 1.0);
        const GridFunction lo = random_fn(m, rng, -1.5, -0.1);
        std::vector<double> hv(lo.values());
        std::uniform_real_distribution<double> gap(0.0, 2.0);
        for (double& v : hv) v += gap(rng);
        const GridFunction hi = GridFunction::from_values(m, std::move(hv));
        const GridFunction x = random_fn(m, rng, -3.0, 3.0);

        const GridFunction c1 = clamp_fn(x, lo, hi);
        const GridFunction c2 =
            clamp_fn(c1, resample(lo, c1.mesh()), resample(hi, c1.mesh()));
        REQUIRE(c2.mesh().same_nodes(c1.mesh()));
        CHECK(c2.values() == c1.values());
        CHECK(c2.slopes() == c1.slopes());
    }
}

TEST_CASE("clamp output stays inside the band") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const Mesh m = make_graded_mesh(0.0, 1.0, 12, {}, 1.0);
        const GridFunction lo = random_fn(m, rng, -2.0, 0.0);
        std::vector<double> hv(lo.values());
        std::uniform_real_distribution<double> gap(0.0, 2.0);
        for (double& v : hv) v += gap(rng);
        const GridFunction hi = GridFunction::from_values(m, std::move(hv));
        const GridFunction x = random_fn(m, rng, -4.0, 4.0);
        const GridFunction c = clamp_fn(x, lo, hi);
        for (std::size_t i = 0; i < c.mesh().n_nodes(); ++i) {
            const double t = c.mesh().nodes()[i];
            CHECK(c.value(i) >= lo.eval(t) - 1e-12);
            CHECK(c.value(i) <= hi.eval(t) + 1e-12);
        }
    }
}

TEST_CASE("clamp is W11-continuous along converging sequences") {
    const Mesh m = make_graded_mesh(0.0, 1.0, 64, {}, 1.0);
    const GridFunction lo = GridFunction::constant(m, 0.0);
    const GridFunction hi = GridFunction::constant(m, 1.0);

    // Three limit functions: interior, saturating, and one touching the
    // lower envelope tangentially at t = 1/2.
    std::vector<GridFunction> limits;
    {
        std::vector<double> v(m.n_nodes());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.4 + 0.2 * m.nodes()[i];
        limits.push_back(GridFunction::from_values(m, v));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.6 * m.nodes()[i] - 0.3;
        limits.push_back(GridFunction::from_values(m, v));
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double d = m.nodes()[i] - 0.5;
            v[i] = d * d; // parabola sampled at nodes, tangent contact with lo
        }
        limits.push_back(GridFunction::from_values(m, v));
    }

    std::mt19937_64 rng(15);
    const GridFunction eta = random_fn(m, rng, -1.0, 1.0);
    for (const GridFunction& x : limits) {
        const GridFunction cx = clamp_fn(x, lo, hi);
        double prev = std::numeric_limits<double>::infinity();
        for (int n = 4; n <= 24; ++n) {
            const GridFunction xn = lin_comb(1.0, x, std::pow(2.0, -n), eta);
            const GridFunction cxn = clamp_fn(xn, lo, hi);
            const double d = w11_distance(cxn, cx);
            CHECK(d <= prev + 1e-12);
            prev = d;
        }
        CHECK(prev <= 1e-4);
    }
}
