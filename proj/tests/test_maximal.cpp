#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "msq/error.hpp"
#include "msq/maximal.hpp"

using namespace msq;

namespace {

Field indicator01(double half_width, std::size_t N) {
    return Field::from_function(Box({0.0}, half_width), N, [](Coords x) { return x[0] >= 0.0 && x[0] < 1.0 ? 1.0 : 0.0; });
}

}  // namespace

TEST_CASE("maximal function of an indicator inside its support") {
    const Field f = indicator01(4.0, 256);
    const Point x{0.5};
    CHECK(hl_maximal(f, x) == doctest::Approx(1.0));
}

TEST_CASE("maximal function of an indicator at distance one") {
    const Field f = indicator01(4.0, 256);
    const Point x{2.0 + 0.5 * f.spacing()};
    // brute force over intervals [a, b] with a <= x < b on a fine lattice of endpoints
    const double step = 1.0 / 64.0;
    double best = 0.0;
    for (double a = -4.0; a <= x[0]; a += step)
        for (double b = x[0] + step / 2; b <= 4.0; b += step) {
            const double overlap = std::max(0.0, std::min(b, 1.0) - std::max(a, 0.0));
            best = std::max(best, overlap / (b - a));
        }
    const double got = hl_maximal(f, x);
    CHECK(got == doctest::Approx(best).epsilon(2.0 * f.spacing()));
    CHECK(got == doctest::Approx(0.5).epsilon(2.0 * f.spacing()));
}

TEST_CASE("maximal function dominates the smallest average") {
    const Field f = Field::from_function(Box({0.0, 0.0}, 1.0), 16, [](Coords x) { return std::exp(-x[0] * x[0] - 2.0 * x[1]); });
    for (std::size_t i = 0; i < f.size(); i += 5) CHECK(hl_maximal(f, f.node(i)) >= f[i] * (1 - 1e-12));
}

TEST_CASE("field version matches pointwise evaluation") {
    const Field f = Field::from_function(Box({0.0}, 2.0), 64, [](Coords x) { return std::sin(3.0 * x[0]); });
    const Field mf = hl_maximal_field(f, 0.5);
    for (std::size_t i = 0; i < f.size(); i += 9) CHECK(mf[i] == doctest::Approx(hl_maximal(f, f.node(i), 0.5)));
}

TEST_CASE("sharp maximal of a constant vanishes") {
    const Field f = Field::from_function(Box({0.0}, 2.0), 32, [](Coords) { return 2.5; });
    CHECK(sharp_maximal(f, Point{0.3}, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sharp maximal against brute force over constants") {
    const std::size_t N = 64;
    const Field f = indicator01(4.0, N);
    const double delta = 0.5;
    const Point x{0.5 + 0.5 * f.spacing()};
    const std::size_t ix = f.locate(x);
    // sup over grid intervals containing x of inf over c on a 1000-point lattice in [0, 1]
    double brute = 0.0;
    for (std::size_t a = 0; a <= ix; ++a)
        for (std::size_t b = ix + 1; b <= N; ++b) {
            double best = INFINITY;
            for (int k = 0; k <= 1000; ++k) {
                const double c = k / 1000.0;
                double s = 0.0;
                for (std::size_t i = a; i < b; ++i) s += std::abs(std::pow(std::abs(f[i]), delta) - c);
                best = std::min(best, s / static_cast<double>(b - a));
            }
            brute = std::max(brute, std::pow(best, 1.0 / delta));
        }
    const double got = sharp_maximal(f, x, delta);
    CHECK(got <= 4.0 * brute);
    CHECK(brute <= 4.0 * got);
    CHECK(got <= std::pow(2.0, 1.0 / delta) * hl_maximal(f, x, delta) * (1 + 1e-12));
}

TEST_CASE("marcinkiewicz sum of a single unit cube") {
    // l = 1, |x - c| = 10, n = 1, m = 2, eps = 1:
    // [1 / (4/5 * 10)]^(1/2) * 1 / 10 = (1/8)^(1/2) / 10
    CubeFamilySummary fam;
    fam.cubes.push_back(Box({0.0}, 0.5));
    const double want = std::sqrt(1.0 / 8.0) / 10.0;
    CHECK(std::abs(marcinkiewicz_sum(fam, Point{10.0}, 2, 1.0) - want) <= 1e-12 * want);
    CHECK(std::abs(marcinkiewicz_sum(fam, Point{-10.0}, 2, 1.0) - want) <= 1e-12 * want);
}

TEST_CASE("marcinkiewicz sum edge cases") {
    CubeFamilySummary empty;
    CHECK(marcinkiewicz_sum(empty, Point{1.0}, 2, 1.0) == 0.0);
    CubeFamilySummary one;
    one.cubes.push_back(Box({0.0}, 0.5));
    CHECK_THROWS_AS(marcinkiewicz_sum(one, Point{0.0}, 2, 1.0), SingularityError);
    CubeFamilySummary two = one;
    two.cubes.push_back(Box({4.0}, 0.5));
    const double a = marcinkiewicz_sum(one, Point{2.0}, 2, 1.0);
    CHECK(marcinkiewicz_sum(two, Point{2.0}, 2, 1.0) == doctest::Approx(2.0 * a).epsilon(1e-14));
}

TEST_CASE("J function at a unit cube center") {
    CubeFamilySummary fam;
    fam.cubes.push_back(Box({1.0, 1.0}, 0.5));
    CHECK(j_function(fam, Point{1.0, 1.0}, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    // l^3 / (l + r)^3 with l = 1, r = 3
    CHECK(j_function(fam, Point{4.0, 1.0}, 1.0) == doctest::Approx(1.0 / 64.0).epsilon(1e-14));
    CHECK(j_function(CubeFamilySummary{}, Point{0.0, 0.0}, 1.0) == 0.0);
}
