#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "msq/czd.hpp"
#include "msq/error.hpp"

using namespace msq;

namespace {

// exact selection for chi_[0,1) on [0, 4): every dyadic [a, a + l) whose average
// exceeds the level while all strict ancestors below the root do not
std::vector<std::pair<double, double>> dyadic_oracle(double level, int max_depth) {
    auto avg = [](double a, double b) { return std::max(0.0, std::min(b, 1.0) - std::max(a, 0.0)) / (b - a); };
    std::vector<std::pair<double, double>> out;
    for (int j = 1; j <= max_depth; ++j) {
        const double l = 4.0 / std::exp2(j);
        for (int k = 0; k < (1 << j); ++k) {
            const double a = k * l;
            if (!(avg(a, a + l) > level)) continue;
            bool ancestor = false;
            for (int i = 1; i < j; ++i) {
                const double L = 4.0 / std::exp2(i);
                const double A = std::floor(a / L) * L;
                ancestor = ancestor || avg(A, A + L) > level;
            }
            if (!ancestor) out.emplace_back(a, a + l);
        }
    }
    return out;
}

Field random_field(std::mt19937_64& rng, int n, std::size_t N, bool sign) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Box box(Point(static_cast<std::size_t>(n), 0.0), 1.0);
    Field f(box, N);
    std::vector<double> s(f.size());
    // sparse spikes on a smooth background
    for (double& v : s) {
        v = u(rng) < 0.05 ? 20.0 * u(rng) : 0.5 * u(rng);
        if (sign && u(rng) < 0.5) v = -v;
    }
    return f.with_samples(std::move(s));
}

}  // namespace

TEST_CASE("indicator of [0,1) on [0,4) at level 0.3") {
    const Field f = Field::from_function(Box({2.0}, 2.0), 16, [](Coords x) { return x[0] < 1.0 ? 1.0 : 0.0; });
    const CZDecomposition d = cz_decompose(f, 0.3);
    REQUIRE(d.cubes.size() == 1);
    CHECK(d.cubes[0].lo(0) == 0.0);
    CHECK(d.cubes[0].hi(0) == 2.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = f.node(i)[0];
        CHECK(d.good[i] == (x < 2.0 ? 0.5 : 0.0));
    }
    REQUIRE(d.bad.size() == 1);
    for (std::size_t i = 0; i < d.bad[0].atom.size(); ++i) {
        const double x = d.bad[0].atom.node(i)[0];
        CHECK(d.bad[0].atom[i] == (x < 1.0 ? 0.5 : -0.5));
    }
    CHECK(d.good.max_abs() <= 2.0 * 0.3);
    CHECK(d.cubes[0].volume() <= f.lp_norm(1.0) / 0.3);

    const auto oracle = dyadic_oracle(0.3, 4);
    REQUIRE(oracle.size() == d.cubes.size());
    CHECK(oracle[0].first == d.cubes[0].lo(0));
    CHECK(oracle[0].second == d.cubes[0].hi(0));
    CHECK(czd_validate(d).pass);
}

TEST_CASE("stopping time agrees with the dyadic oracle across levels") {
    const Field f = Field::from_function(Box({2.0}, 2.0), 64, [](Coords x) { return x[0] < 1.0 ? 1.0 : 0.0; });
    for (double level : {0.26, 0.4, 0.55, 0.9}) {
        const CZDecomposition d = cz_decompose(f, level);
        auto oracle = dyadic_oracle(level, 6);
        std::vector<std::pair<double, double>> got;
        for (const Box& q : d.cubes) got.emplace_back(q.lo(0), q.hi(0));
        std::sort(got.begin(), got.end());
        std::sort(oracle.begin(), oracle.end());
        CHECK(got == oracle);
    }
}

TEST_CASE("high level selects nothing and zero input stays zero") {
    const Field f = Field::from_function(Box({2.0}, 2.0), 16, [](Coords x) { return x[0] < 1.0 ? 1.0 : 0.0; });
    const CZDecomposition d = cz_decompose(f, 1.0);
    CHECK(d.cubes.empty());
    CHECK(d.bad.empty());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(d.good[i] == f[i]);
    const Field z(Box({2.0}, 2.0), 16);
    const CZDecomposition dz = cz_decompose(z, 0.5);
    CHECK(dz.cubes.empty());
    CHECK(dz.good.max_abs() == 0.0);
}

TEST_CASE("level at or below the root average is refused") {
    const Field f = Field::from_function(Box({2.0}, 2.0), 16, [](Coords x) { return x[0] < 1.0 ? 1.0 : 0.0; });
    CHECK_THROWS_AS(cz_decompose(f, 0.25), PreconditionError);
}

TEST_CASE("one hundred random fields validate") {
    std::mt19937_64 rng(2024);
    int failures = 0;
    for (int i = 0; i < 100; ++i) {
        const int n = i % 4 == 3 ? 2 : 1;
        const Field f = random_field(rng, n, n == 1 ? 256 : 32, i % 2 == 1);
        double avg = 0.0;
        for (double v : f.samples()) avg += std::abs(v);
        avg /= static_cast<double>(f.size());
        const CZDecomposition d = cz_decompose(f, (1.5 + i % 5) * avg);
        const CZValidation v = czd_validate(d);
        if (!v.pass) {
            ++failures;
            MESSAGE("field " << i << ": " << v.first_failure);
        }
        const Field back = bad_sum(d);
        for (std::size_t k = 0; k < f.size(); ++k) CHECK(std::abs(d.good[k] + back[k] - f[k]) <= 1e-12 * (1 + std::abs(f[k])));
    }
    CHECK(failures == 0);
}

TEST_CASE("a shifted atom fails the zero-mean property") {
    const Field f = Field::from_function(Box({2.0}, 2.0), 16, [](Coords x) { return x[0] < 1.0 ? 1.0 : 0.0; });
    CZDecomposition d = cz_decompose(f, 0.3);
    d.bad[0].atom = d.bad[0].atom.map([](double v) { return v + 0.01; });
    const CZValidation v = czd_validate(d);
    CHECK_FALSE(v.pass);
    CHECK(v.first_failure.find("zero-mean") != std::string::npos);
    CHECK_THROWS_AS(czd_require_valid(d), ValidationError);
}

TEST_CASE("no atoms with g equal to f passes exactly when f is bounded by 2^n level") {
    const Field f = Field::from_function(Box({2.0}, 2.0), 16, [](Coords x) { return x[0] < 1.0 ? 1.0 : 0.0; });
    CZDecomposition d = cz_decompose(f, 1.0);
    CHECK(czd_validate(d).pass);
    d.level = 0.49;  // now ||f||_inf = 1 > 2 * 0.49
    CHECK_FALSE(czd_validate(d).pass);
}
