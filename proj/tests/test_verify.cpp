#include <cmath>
#include <limits>

#include <doctest.h>

#include "msq/error.hpp"
#include "msq/verify.hpp"

using namespace msq;

namespace {

CheckSpec small(const std::string& id) {
    CheckSpec s;
    s.id = id;
    s.resolution = 256;
    s.suite.count = 4;
    return s;
}

}  // namespace

TEST_CASE("fit of equal ratios") {
    const ConstantFit f = fit_constant({3.0, 3.0, 3.0, 3.0});
    CHECK(f.constant == 3.0);
    CHECK(f.stability == 1.0);
    CHECK(f.finite);
}

TEST_CASE("fit of interleaved ratios stays below the spread") {
    const ConstantFit f = fit_constant({1, 10, 2, 9, 3, 8, 4, 7, 5, 6});
    CHECK(f.stability <= 10.0);
    CHECK(f.constant == 10.0);
}

TEST_CASE("fit rejects empty and non-finite input") {
    CHECK_THROWS_AS(fit_constant({}), UsageError);
    const ConstantFit f = fit_constant({1.0, std::numeric_limits<double>::quiet_NaN()});
    CHECK_FALSE(f.finite);
    CHECK(std::isinf(f.stability));
}

TEST_CASE("suite is deterministic and L1 normalized") {
    CheckSpec s = small("endpoint_weak_type");
    s.suite.shapes = {"gaussian", "indicator", "wavelet", "spike"};
    const auto a = generate_test_suite(s, 2);
    const auto b = generate_test_suite(s, 2);
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            const auto sa = a[i].inputs[j].samples(), sb = b[i].inputs[j].samples();
            CHECK(std::equal(sa.begin(), sa.end(), sb.begin()));
            CHECK(std::abs(a[i].inputs[j].lp_norm(1.0) - 1.0) <= 1e-6);
        }
}

TEST_CASE("spike family keeps its mass while the support halves") {
    CheckSpec s = small("endpoint_weak_type");
    s.resolution = 1024;
    s.suite.count = 5;
    s.suite.shapes = {"spike"};
    const auto suite = generate_test_suite(s, 2);
    const double h = 2.0 * s.half_width / static_cast<double>(s.resolution);
    for (const TestCase& t : suite)
        for (const Field& f : t.inputs) CHECK(std::abs(f.lp_norm(1.0) - 1.0) <= 1e-9);
    // count cells with nonzero samples directly
    auto support = [](const Field& f) {
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t k = 0; k < f.size(); ++k)
            if (f[k] != 0.0) {
                lo = std::min(lo, f.node(k)[0]);
                hi = std::max(hi, f.node(k)[0]);
            }
        return hi - lo;
    };
    const double first = support(suite[0].inputs[0]);
    const double last = support(suite[4].inputs[0]);
    CHECK(suite[4].scale == doctest::Approx(0.5 * suite[0].scale));
    CHECK(std::abs(last - 0.5 * first) <= 2.0 * h);
    // the hardened copy is another factor 8 smaller
    const double hard = support(suite[9].inputs[0]);
    CHECK(std::abs(hard - last / 8.0) <= 2.0 * h);
}

TEST_CASE("inputs outside the central half-box are refused") {
    CheckSpec s = small("weighted_strong");
    s.suite.support_radius = 3.0;
    CHECK_THROWS_AS(generate_test_suite(s, 2), DomainError);
}

TEST_CASE("hypotheses are validated before running") {
    CheckSpec s = small("sharp_maximal_pointwise");
    s.delta = 0.5;  // needs delta < 1/m
    CHECK_THROWS_AS(validate_check(s), SpecError);
    s = small("cotlar");
    s.eta = 0.0;
    validate_check(s);
    s.eta = 0.6;
    CHECK_THROWS_AS(validate_check(s), SpecError);
    s = small("weighted_strong");
    s.p_list = {1.0, 2.0};
    CHECK_THROWS_AS(validate_check(s), SpecError);
    s = small("weighted_weak");
    s.p_list = {2.0, 2.0};
    CHECK_THROWS_AS(validate_check(s), SpecError);
    s = small("j_norm");
    s.p = 0.4;  // needs p > n / (n + eps) = 1/2
    CHECK_THROWS_AS(validate_check(s), SpecError);
    s = small("weighted_strong");
    s.weight = "power:0.5";
    s.m = 3;
    s.n = 2;
    CHECK_THROWS_AS(validate_check(s), SpecError);
}

TEST_CASE("endpoint check on the smooth kernel is stable") {
    CheckSpec s = small("endpoint_weak_type");
    s.suite.shapes = {"spike"};
    const VerificationReport r = run_check(s);
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.stability <= 2.0);
    CHECK(r.ratios.size() == 8);
}

TEST_CASE("endpoint check on the broken kernel fails") {
    CheckSpec s = small("endpoint_weak_type");
    s.family = s.kernel = "broken";
    s.suite.shapes = {"spike"};
    const VerificationReport r = run_check(s);
    CHECK(r.verdict == Verdict::Fail);
    CHECK(r.stability > 2.0);
}

TEST_CASE("cotlar with one truncation radius and Gaussian inputs") {
    CheckSpec s = small("cotlar");
    s.delta_count = 1;
    s.suite.shapes = {"gaussian"};
    const VerificationReport r = run_check(s);
    CHECK(std::isfinite(r.constant));
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.argmax_point.size() == 1);
}

TEST_CASE("weighted strong bound with the constant weight") {
    CheckSpec s = small("weighted_strong");
    s.p_list = {4.0, 4.0};
    s.p = 2.0;
    const VerificationReport r = run_check(s);
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.stability <= 2.0);
}

TEST_CASE("report serializes its fields") {
    CheckSpec s = small("j_norm");
    s.p = 2.0;
    const VerificationReport r = run_check(s);
    const auto j = to_json(r);
    CHECK(j.at("id") == "j_norm");
    CHECK(j.at("ratios").size() == r.ratios.size());
    CHECK(csv_row(r, 0.0).rfind("j_norm,", 0) == 0);
    CHECK(csv_header().rfind("check_id,", 0) == 0);
}

TEST_CASE("check ids round trip") {
    for (CheckId id : all_check_ids()) CHECK(check_id_from_string(to_string(id)) == id);
    CHECK_THROWS_AS(check_id_from_string("nope"), UsageError);
}
