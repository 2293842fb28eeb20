// One line per acceptance criterion; exit status is the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "msq/audits.hpp"
#include "msq/czd.hpp"
#include "msq/error.hpp"
#include "msq/verify.hpp"

using namespace msq;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::ostringstream note;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            note << " [x] " << what;
        } else {
            note << " [ok] " << what;
        }
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string brief(const VerificationReport& r) {
    return r.check_id + "/" + r.kernel + "/" + r.weight + " " + std::string(to_string(r.verdict)) + " C=" +
           fmt(r.constant) + " stab=" + fmt(r.stability);
}

CheckSpec spec(const std::string& id, std::size_t count, std::size_t N = 512) {
    CheckSpec s;
    s.id = id;
    s.suite.count = count;
    s.resolution = N;
    return s;
}

// expects PASS with stability <= 2
void expect_pass(Outcome& o, const CheckSpec& s) {
    const VerificationReport r = run_check(s);
    o.require(r.verdict == Verdict::Pass && r.stability <= 2.0, brief(r));
}

// negative control: expects FAIL
void expect_fail(Outcome& o, const CheckSpec& s) {
    const VerificationReport r = run_check(s);
    o.require(r.verdict == Verdict::Fail, "control " + brief(r));
}

Outcome kernel_audit() {
    Outcome o;
    for (int m : {1, 2}) {
        const auto t0 = Clock::now();
        const CZAudit a = audit_cz_conditions(smooth_kernel(m, 1));
        const double dt = seconds_since(t0);
        o.require(std::abs(a.size.fitted_exponent + m) <= 0.1, "m=" + std::to_string(m) + " size exponent " +
                                                                    fmt(a.size.fitted_exponent));
        o.require(std::abs(a.smooth_x.fitted_exponent - 1.0) <= 0.1 && std::abs(a.smooth_y.fitted_exponent - 1.0) <= 0.1,
                  "gamma " + fmt(a.smooth_x.fitted_exponent) + "," + fmt(a.smooth_y.fitted_exponent));
        o.require(a.verdict == Verdict::Pass, "verdict");
        o.require(dt <= 120.0, fmt(dt) + "s");
    }
    const auto t0 = Clock::now();
    const CZAudit b = audit_cz_conditions(broken_kernel(2, 1));
    o.require(b.size.verdict == Verdict::Fail, "broken size " + std::string(to_string(b.size.verdict)) + " stab=" +
                                                   fmt(b.size.stability));
    o.require(seconds_since(t0) <= 120.0, "broken " + fmt(seconds_since(t0)) + "s");
    return o;
}

Outcome h_audit() {
    Outcome o;
    const auto t0 = Clock::now();
    const ComposedKernel ck = nonsmooth_kernel(2, 1);
    for (Assumption a : {Assumption::H2Size, Assumption::H2Smooth, Assumption::H3}) {
        const ConditionReport r = audit_nonsmooth_assumption(ck, a);
        o.require(r.verdict == Verdict::Pass && r.stability <= 2.0 && r.sample_count >= 200,
                  to_string(a) + " " + std::string(to_string(r.verdict)) + " n=" + std::to_string(r.sample_count) +
                      " stab=" + fmt(r.stability));
    }
    // a violating sample placed last must still be refused before anything is evaluated
    HAuditConfig cfg;
    auto base = generate_h_samples(ck, Assumption::H2Size, cfg, cfg.r_max);
    HSample bad = base.front();
    bad.t = 100.0;
    base.push_back(bad);
    bool refused = false;
    const auto t1 = Clock::now();
    try {
        audit_h_samples(ck, Assumption::H2Size, base, {}, cfg);
    } catch (const PreconditionError&) {
        refused = true;
    }
    o.require(refused && seconds_since(t1) < 0.5, "violating sample refused up front");
    const double dt = seconds_since(t0);
    o.require(dt <= 300.0, fmt(dt) + "s");
    return o;
}

Outcome czd_suite() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int failed = 0;
    double worst_rec = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int n = i % 3 == 2 ? 2 : 1;
        const std::size_t N = n == 1 ? 512 : 64;
        const Box box(Point(static_cast<std::size_t>(n), 0.0), 1.0);
        Field f(box, N);
        std::vector<double> s(f.size());
        for (double& v : s) {
            v = u(rng) < 0.03 ? 50.0 * u(rng) : u(rng);
            if (i % 2 && u(rng) < 0.5) v = -v;
        }
        f = f.with_samples(std::move(s));
        double avg = 0.0;
        for (double v : f.samples()) avg += std::abs(v);
        avg /= static_cast<double>(f.size());
        const CZDecomposition d = cz_decompose(f, (1.2 + 3.0 * u(rng)) * avg);
        const CZValidation v = czd_validate(d);
        const double two_n = std::exp2(n);
        const bool exact = d.c_good <= two_n && d.c_atoms <= 2.0 * two_n && d.c_cover <= 1.0;
        if (!v.pass || !exact) ++failed;
        const Field b = bad_sum(d);
        for (std::size_t k = 0; k < f.size(); ++k) worst_rec = std::max(worst_rec, std::abs(d.good[k] + b[k] - f[k]));
    }
    o.require(failed == 0, std::to_string(100 - failed) + "/100 valid");
    o.require(worst_rec <= 1e-12, "reconstruction " + fmt(worst_rec));
    o.require(seconds_since(t0) <= 30.0, fmt(seconds_since(t0)) + "s");
    return o;
}

Outcome auxiliary() {
    Outcome o;
    CheckSpec marc = spec("marcinkiewicz_integral", 10, 4096);
    expect_pass(o, marc);
    for (double p : {2.0, 0.6}) {
        CheckSpec j = spec("j_norm", 10, 4096);
        j.p = p;
        expect_pass(o, j);
    }
    CubeFamilySummary one;
    one.cubes.push_back(Box({0.0}, 0.5));
    const double want = std::sqrt(1.0 / 8.0) / 10.0;
    const double got = marcinkiewicz_sum(one, Point{10.0}, 2, 1.0);
    o.require(std::abs(got - want) <= 1e-12 * want, "hand value " + fmt(got));
    return o;
}

Outcome endpoint() {
    Outcome o;
    const auto t0 = Clock::now();
    CheckSpec s = spec("endpoint_weak_type", 4);
    s.suite.shapes = {"spike"};
    expect_pass(o, s);
    s.family = s.kernel = "broken";
    expect_fail(o, s);
    o.require(seconds_since(t0) <= 600.0, fmt(seconds_since(t0)) + "s");
    return o;
}

// weighted bounds for T, or for T* when tstar is set
Outcome weighted(bool tstar) {
    Outcome o;
    const auto t0 = Clock::now();
    const std::string strong = tstar ? "tstar_strong" : "weighted_strong";
    const std::string weak = tstar ? "tstar_weak" : "weighted_weak";
    for (const char* w : {"constant", "power:0.5"}) {
        CheckSpec s = spec(strong, 4);
        s.p_list = {4.0, 4.0};
        s.weight = w;
        expect_pass(o, s);
    }
    for (const char* w : {"constant", "power:-0.5"}) {
        CheckSpec s = spec(weak, 4);
        s.p_list = {1.0, 2.0};
        s.weight = w;
        expect_pass(o, s);
    }
    for (const std::string& id : {strong, weak}) {
        CheckSpec s = spec(id, 4);
        s.p_list = id == strong ? std::vector<double>{4.0, 4.0} : std::vector<double>{1.0, 2.0};
        s.weight = "power:-2";
        s.suite.centered = true;
        s.suite.shapes = {"gaussian", "spike"};
        expect_fail(o, s);
    }
    o.require(seconds_since(t0) <= (tstar ? 900.0 : 600.0), fmt(seconds_since(t0)) + "s");
    return o;
}

Outcome pointwise() {
    Outcome o;
    for (const char* id : {"far_field", "sharp_maximal_pointwise", "cotlar"}) {
        CheckSpec s = spec(id, 4, std::string(id) == "sharp_maximal_pointwise" ? 1024 : 512);
        const VerificationReport r = run_check(s);
        o.require(r.verdict == Verdict::Pass && r.ratios.size() == 8 && !r.argmax_point.empty(),
                  brief(r) + " argmax test " + std::to_string(r.argmax_test));
        if (r.details.contains("tstar_order_violations"))
            o.require(r.details["tstar_order_violations"].get<std::size_t>() == 0, "T** <= T* at every node");
    }
    return o;
}

Outcome classical() {
    Outcome o;
    for (const char* w : {"constant", "power:0.5"}) {
        CheckSpec fs = spec("fefferman_stein", 15);
        fs.weight = w;
        expect_pass(o, fs);
        CheckSpec hs = spec("hl_weighted_strong", 15);
        hs.weight = w;
        expect_pass(o, hs);
    }
    for (const char* w : {"constant", "power:-0.5"}) {
        CheckSpec hw = spec("hl_weighted_weak", 15);
        hw.weight = w;
        hw.p = 1.0;
        expect_pass(o, hw);
    }
    CheckSpec fs = spec("fefferman_stein", 15);
    fs.suite.offset = 1.0;
    expect_fail(o, fs);
    for (const char* id : {"hl_weighted_strong", "hl_weighted_weak"}) {
        CheckSpec s = spec(id, 15);
        s.weight = "power:2";
        s.p = std::string(id) == "hl_weighted_weak" ? 1.0 : 2.0;
        s.suite.centered = true;
        s.suite.shapes = {"gaussian", "spike"};
        expect_fail(o, s);
    }
    return o;
}

Outcome oracles() {
    Outcome o;
    for (const char* name : {"grid", "kernels", "operators", "maximal", "czd", "weights", "verify", "cli"}) {
        const std::string cmd = std::string(MSQ_TEST_DIR) + "/test_" + name + " > /dev/null 2>&1";
        const int raw = std::system(cmd.c_str());
        o.require(WIFEXITED(raw) && WEXITSTATUS(raw) == 0, std::string("test_") + name);
    }
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"kernel audit", kernel_audit},
        {"H-assumption audit", h_audit},
        {"CZ decomposition", czd_suite},
        {"auxiliary functions", auxiliary},
        {"endpoint weak type", endpoint},
        {"weighted bounds for T", [] { return weighted(false); }},
        {"pointwise bounds", pointwise},
        {"weighted bounds for T*", [] { return weighted(true); }},
        {"classical inequalities", classical},
        {"oracle regressions", oracles},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.note << " raised: " << e.what();
        }
        failed += o.pass ? 0 : 1;
        std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << " ("
                  << fmt(seconds_since(t0)) << "s):" << o.note.str() << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed;
}
