#include <cmath>
#include <sstream>

#include <doctest.h>

#include "msq/error.hpp"
#include "msq/grid.hpp"

using namespace msq;

TEST_CASE("constant field integrates to the box measure") {
    const Box box({0.0}, 1.0);
    const Field one = Field::from_function(box, 64, [](Coords) { return 1.0; });
    CHECK(integrate_field(one, box) == doctest::Approx(2.0).epsilon(1e-14));
    const Field zero(box, 64);
    CHECK(integrate_field(zero, box) == 0.0);
}

TEST_CASE("x squared on [-1,1] matches its antiderivative") {
    const Box box({0.0}, 1.0);
    const Field f = Field::from_function(box, 1024, [](Coords x) { return x[0] * x[0]; });
    // midpoint rule error is h^2/12 times the integral of f'' = 2
    const double h = f.spacing();
    const double exact = 2.0 / 3.0;
    CHECK(std::abs(integrate_field(f, box) - exact) <= h * h / 6.0 + 1e-14);
}

TEST_CASE("sub-region integration and domain errors") {
    const Box box({0.0}, 2.0);
    const Field f = Field::from_function(box, 64, [](Coords) { return 1.0; });
    CHECK(integrate_field(f, Box({0.5}, 0.5)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(integrate_field(f, Box({3.0}, 2.0)), DomainError);
}

TEST_CASE("log-scale trapezoid on simple integrands") {
    const double ind = log_scale_integral([](double v) { return v >= 1.0 && v <= std::exp(1.0) ? 1.0 : 0.0; },
                                          1e-2, 1e2, 256);
    CHECK(ind == doctest::Approx(1.0).epsilon(2e-2));
    const double lin = log_scale_integral([](double v) { return v >= 1.0 && v <= 2.0 ? v : 0.0; }, 1e-2, 1e2, 256);
    CHECK(lin == doctest::Approx(1.0).epsilon(2e-2));
}

TEST_CASE("Gamma(2) through the log-scale rule") {
    // tails outside [1e-6, 40] are below 2e-6
    const double got = log_scale_integral([](double v) { return v * std::exp(-v); }, 1e-6, 40.0, 32);
    CHECK(std::abs(got - std::tgamma(2.0)) <= 1e-4);
}

TEST_CASE("non-finite integrand reports where it broke") {
    try {
        log_scale_integral([](double v) { return v > 10.0 ? NAN : 1.0; }, 1.0, 100.0, 8);
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        CHECK(e.at() > 10.0);
    }
}

TEST_CASE("dyadic enumeration in two dimensions") {
    const DyadicTree tree{Box({0.0, 0.0}, 2.0), 4};
    const auto cubes = enumerate_dyadic_cubes(tree, 2);
    REQUIRE(cubes.size() == 16);
    double vol = 0.0;
    for (const Box& q : cubes) {
        vol += q.volume();
        CHECK(tree.root.contains(q));
    }
    CHECK(vol == doctest::Approx(tree.root.volume()).epsilon(1e-14));
    for (std::size_t a = 0; a < cubes.size(); ++a)
        for (std::size_t b = a + 1; b < cubes.size(); ++b) CHECK_FALSE(cubes[a].overlaps(cubes[b]));
}

TEST_CASE("dyadic enumeration on [0,4)") {
    const DyadicTree tree{Box({2.0}, 2.0), 3};
    const auto root = enumerate_dyadic_cubes(tree, 0);
    REQUIRE(root.size() == 1);
    CHECK(root[0] == tree.root);
    const auto halves = enumerate_dyadic_cubes(tree, 1);
    REQUIRE(halves.size() == 2);
    CHECK(halves[0].lo(0) == 0.0);
    CHECK(halves[0].hi(0) == 2.0);
    CHECK(halves[1].lo(0) == 2.0);
    CHECK(halves[1].hi(0) == 4.0);
    CHECK_THROWS_AS(enumerate_dyadic_cubes(tree, 4), DomainError);
}

TEST_CASE("field csv round trip") {
    const Box box({0.0, 0.0}, 1.0);
    const Field f = Field::from_function(box, 8, [](Coords x) { return std::sin(x[0]) + 3.0 * x[1]; });
    std::stringstream ss;
    write_field_csv(ss, f);
    const Field g = read_field_csv(ss);
    REQUIRE(g.same_grid(f));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(g[i] == f[i]);
}

TEST_CASE("locate and node agree") {
    const Field f(Box({0.0, 0.0}, 1.0), 16);
    for (std::size_t i = 0; i < f.size(); i += 7) CHECK(f.locate(f.node(i)) == i);
    CHECK_THROWS_AS(f.locate(Point{1.5, 0.0}), DomainError);
}
