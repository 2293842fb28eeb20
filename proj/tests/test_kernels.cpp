#include <cmath>
#include <numbers>

#include <doctest.h>

#include "msq/audits.hpp"
#include "msq/error.hpp"
#include "msq/kernels.hpp"

using namespace msq;

namespace {

// product kernel written out for m = 2, n = 1
double psi(double u) { return u * std::exp(-u * u); }
double k2(double v, double z, double y1, double y2) { return psi((z - y1) / v) * psi((z - y2) / v) / (v * v); }
double heat(double t, double x, double z) {
    return std::exp(-(x - z) * (x - z) / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
}

// midpoint rule on [-20, 20] with 4096 nodes
double dense_composed(double t, double v, double x, double y1, double y2) {
    const int N = 4096;
    const double a = -20.0, h = 40.0 / N;
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
        const double z = a + (i + 0.5) * h;
        s += k2(v, z, y1, y2) * heat(t, x, z);
    }
    return s * h;
}

}  // namespace

TEST_CASE("smooth family is the written product") {
    const KernelFamily k = smooth_kernel(2, 1);
    const Point x{0.2};
    const Point ys{-0.5, 0.9};
    for (double v : {0.3, 1.0, 2.5}) CHECK(k(v, x, ys) == doctest::Approx(k2(v, 0.2, -0.5, 0.9)).epsilon(1e-13));
}

TEST_CASE("translation invariance of the built-in family") {
    const KernelFamily k = smooth_kernel(2, 1);
    const Point x{0.1}, ys{0.4, -0.3};
    const Point xs{1.1}, yss{1.4, 0.7};
    CHECK(k(0.7, x, ys) == doctest::Approx(k(0.7, xs, yss)).epsilon(1e-12));
}

TEST_CASE("composed kernel against a dense convolution") {
    const ComposedKernel ck = nonsmooth_kernel(2, 1);
    const double t = 0.25, v = 1.0;
    const double samples[][3] = {{0.3, -0.4, 1.1}, {0.0, 0.5, -0.7}, {-0.6, -1.2, 0.2}, {1.0, 0.1, 0.8}};
    for (const auto& s : samples) {
        const Point x{s[0]}, ys{s[1], s[2]};
        const double got = eval_composed_kernel(ck, t, v, x, ys).value;
        const double want = dense_composed(t, v, s[0], s[1], s[2]);
        CHECK(std::abs(got - want) <= 1e-3 * std::abs(want));
    }
}

TEST_CASE("composed kernel tends to the kernel as t shrinks") {
    const ComposedKernel ck = nonsmooth_kernel(2, 1);
    const Point x{0.3}, ys{-0.4, 1.1};
    const double want = ck.base(1.0, x, ys);
    CHECK(eval_composed_kernel(ck, 1e-8, 1.0, x, ys).value == doctest::Approx(want).epsilon(1e-2));
}

TEST_CASE("zero kernel composes to zero") {
    ComposedKernel ck = nonsmooth_kernel(2, 1);
    ck.base = zero_kernel(2, 1);
    const Point x{0.3}, ys{-0.4, 1.1};
    CHECK(eval_composed_kernel(ck, 0.5, 1.0, x, ys).value == 0.0);
}

TEST_CASE("evaluation box is enforced") {
    ComposedKernel ck = nonsmooth_kernel(1, 1);
    ck.evaluation_box = Box({0.0}, 1.0);
    const Point x{2.0}, ys{0.0};
    CHECK_THROWS_AS(eval_composed_kernel(ck, 0.5, 1.0, x, ys), DomainError);
}

TEST_CASE("heat identity has unit mass and the stated decay") {
    const ApproxIdentity id = heat_identity(1);
    CHECK(id.mass() == doctest::Approx(1.0).epsilon(1e-6));
    const Point radii{1.0, 4.0, 16.0, 64.0};
    const auto lim = decay_limit_values(id, 1.0, radii);
    CHECK(lim.back() < lim.front());
    CHECK(std::isfinite(measure_decay_constant(id, 1.0, radii)));
}

TEST_CASE("size exponent of the g-function kernel, m = 1") {
    const CZAudit a = audit_cz_conditions(smooth_kernel(1, 1));
    CHECK(std::abs(a.size.fitted_exponent + 1.0) <= 0.05);
    CHECK(a.verdict == Verdict::Pass);
}

TEST_CASE("size exponent of the bilinear kernel, m = 2") {
    const CZAudit a = audit_cz_conditions(smooth_kernel(2, 1));
    CHECK(std::abs(a.size.fitted_exponent + 2.0) <= 0.1);
    CHECK(std::abs(a.smooth_x.fitted_exponent - 1.0) <= 0.1);
    CHECK(std::abs(a.smooth_y.fitted_exponent - 1.0) <= 0.1);
    CHECK(a.verdict == Verdict::Pass);
    CHECK(a.size.diagnostics.at("v_range_truncation").get<double>() < 1e-6);
}

TEST_CASE("broken kernel fails the size audit") {
    const CZAudit a = audit_cz_conditions(broken_kernel(2, 1));
    CHECK(a.size.verdict == Verdict::Fail);
    CHECK(a.size.fitted_exponent == doctest::Approx(-2.5).epsilon(0.04));
    CHECK(a.verdict == Verdict::Fail);
}

TEST_CASE("diagonal samples are rejected") {
    const LogScaleRule rule;
    const Point x{0.0}, ys{0.0};
    CHECK_THROWS_AS(kernel_l2v(smooth_kernel(1, 1), x, ys, rule), DomainError);
}

TEST_CASE("H2-size holds on the composed family") {
    const ConditionReport r = audit_nonsmooth_assumption(nonsmooth_kernel(2, 1), Assumption::H2Size);
    CHECK(std::isfinite(r.measured_constant));
    CHECK(r.stability < 2.0);
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.diagnostics.at("identity_decays").get<bool>());
}

TEST_CASE("H2-smooth left side vanishes as t shrinks") {
    const ConditionReport r = audit_nonsmooth_assumption(nonsmooth_kernel(2, 1), Assumption::H2Smooth);
    CHECK(r.exponent_rule == "positive");
    CHECK(r.fitted_exponent > 0.0);
    CHECK(r.verdict == Verdict::Pass);
}

TEST_CASE("H3 with coinciding points has zero left side") {
    const ComposedKernel ck = nonsmooth_kernel(2, 1);
    HSample s;
    s.x = {0.0};
    s.x_prime = {0.0};
    s.ys = {1.0, -1.5};
    s.t = 0.04;
    validate_h_sample(ck, Assumption::H3, s);
    const SampleBreakdown b = evaluate_h_sample(ck, Assumption::H3, s, LogScaleRule{}, ComposedQuadrature{});
    CHECK(b.left == 0.0);
}

TEST_CASE("inadmissible H samples raise before evaluation") {
    const ComposedKernel ck = nonsmooth_kernel(2, 1);
    HSample s;
    s.x = {0.0};
    s.ys = {0.1, -0.1};
    s.t = 1.0;  // 2 t^(1/2) = 2 > min |x - y_j|
    CHECK_THROWS_AS(validate_h_sample(ck, Assumption::H2Size, s), PreconditionError);
    CHECK_THROWS_AS(audit_h_samples(ck, Assumption::H2Size, {s}, {}, HAuditConfig{}), PreconditionError);
}
