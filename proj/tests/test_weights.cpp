#include <cmath>

#include <doctest.h>

#include "msq/error.hpp"
#include "msq/weights.hpp"

using namespace msq;

TEST_CASE("constant weight has characteristic one") {
    const Box box({0.0}, 2.0);
    Weight w = constant_weight(box, 64, 3.0);
    const auto fam = dyadic_family(box, 6);
    for (double p : {1.0, 1.5, 2.0, 4.0}) CHECK(ap_constant(w, p, fam) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("characteristic is at least one and grows with the family") {
    const Box box({0.0}, 2.0);
    Weight w = random_smooth_weight(box, 128, 5);
    const auto small = dyadic_family(box, 3);
    const auto large = dyadic_family(box, 7);
    const double a = ap_constant(w, 2.0, small), b = ap_constant(w, 2.0, large);
    CHECK(a >= 1.0 - 1e-12);
    CHECK(b >= a);
}

TEST_CASE("|x|^(1/2) is an A_2 weight on [-2,2]") {
    const Box box({0.0}, 2.0);
    const ApMembership m = ap_membership([&](std::size_t N) { return power_weight(box, N, 0.5); }, 2.0, 256);
    CHECK(std::isfinite(m.constant));
    CHECK(m.drift < 1.5);
    CHECK(m.member);
}

TEST_CASE("|x|^(-2) is not an A_2 weight") {
    const Box box({0.0}, 2.0);
    const ApMembership m = ap_membership([&](std::size_t N) { return power_weight(box, N, -2.0); }, 2.0, 256);
    CHECK_FALSE(m.member);
    // the frozen core shrinks with the grid spacing, and the characteristic keeps growing
    double prev = 0.0;
    for (std::size_t N : {128, 256, 512, 1024}) {
        Weight w = power_weight(box, N, -2.0);
        const double a = w.ap(2.0);
        CHECK(a > 1.5 * prev);
        prev = a;
    }
    CHECK(prev > 100.0);
}

TEST_CASE("norms of the indicator of [0,1]") {
    const Box box({0.0}, 2.0);
    const std::size_t N = 256;
    const Field f = Field::from_function(box, N, [](Coords x) { return x[0] >= 0.0 && x[0] < 1.0 ? 1.0 : 0.0; });
    const Weight w = constant_weight(box, N);
    CHECK(weighted_norm(f, w, 2.0, NormKind::Strong) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(weighted_norm(f, w, 2.0, NormKind::Weak) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weak never exceeds strong") {
    const Box box({0.0}, 2.0);
    const std::size_t N = 128;
    const Field f = Field::from_function(box, N, [](Coords x) { return std::exp(-4.0 * x[0] * x[0]) * (1 + x[0]); });
    for (double a : {0.0, 0.5, -0.5}) {
        const Weight w = power_weight(box, N, a);
        for (double p : {0.5, 1.0, 2.0, 3.0})
            CHECK(weighted_norm(f, w, p, NormKind::Weak) <= weighted_norm(f, w, p, NormKind::Strong) * (1 + 1e-12));
    }
}

TEST_CASE("zero function has zero norms") {
    const Box box({0.0}, 1.0);
    const Field z(box, 32);
    const Weight w = constant_weight(box, 32);
    CHECK(weighted_norm(z, w, 2.0, NormKind::Strong) == 0.0);
    CHECK(weighted_norm(z, w, 2.0, NormKind::Weak) == 0.0);
    CHECK_THROWS_AS(weighted_norm(z, w, 0.0, NormKind::Strong), DomainError);
}

TEST_CASE("non-positive weights are rejected") {
    const Box box({0.0}, 1.0);
    const Field f = Field::from_function(box, 16, [](Coords x) { return x[0]; });
    CHECK_THROWS_AS(Weight(f, "signed"), DomainError);
}
