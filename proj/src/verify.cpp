#include "msq/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>

#include "msq/error.hpp"
#include "msq/numeric.hpp"
#include "msq/operators.hpp"
#include "msq/weights.hpp"

namespace msq {

namespace {

constexpr double kRightFloor = 1e-12;
constexpr double kLeftFloor = 1e-10;
// pointwise sharp-maximal and Cotlar ratios are read within this many support radii
constexpr double kNearFactor = 4.0;

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

double derived_p(const std::vector<double>& ps) {
    double inv = 0.0;
    for (double q : ps) inv += 1.0 / q;
    return 1.0 / inv;
}

double default_delta(const CheckSpec& s) { return s.delta > 0.0 ? s.delta : 1.0 / (2.0 * s.m); }
double default_eta(const CheckSpec& s) { return s.eta > 0.0 ? s.eta : 1.0 / (2.0 * s.m); }

double target_p(const CheckSpec& s, CheckId id) {
    switch (id) {
        case CheckId::EndpointWeakType: return 1.0 / s.m;
        case CheckId::WeightedStrong:
        case CheckId::WeightedWeak:
        case CheckId::TStarStrong:
        case CheckId::TStarWeak: return derived_p(s.p_list);
        case CheckId::JNorm:
        case CheckId::FeffermanStein:
        case CheckId::HLWeightedStrong: return s.p > 0.0 ? s.p : 2.0;
        case CheckId::HLWeightedWeak: return s.p > 0.0 ? s.p : 1.0;
        default: return s.p;
    }
}

struct WeightSpec {
    enum Kind { Constant, Power, Random } kind = Constant;
    double a = 0.0;
    std::uint64_t seed = 0;
};

WeightSpec parse_weight(const std::string& w) {
    WeightSpec out;
    if (w == "constant") return out;
    const auto colon = w.find(':');
    const std::string head = w.substr(0, colon);
    const std::string tail = colon == std::string::npos ? "" : w.substr(colon + 1);
    try {
        std::size_t used = 0;
        if (head == "power" && !tail.empty()) {
            out.kind = WeightSpec::Power;
            out.a = std::stod(tail, &used);
        } else if (head == "random" && !tail.empty()) {
            out.kind = WeightSpec::Random;
            out.seed = std::stoull(tail, &used);
        } else {
            throw SpecError("");
        }
        if (used != tail.size()) throw SpecError("");
    } catch (const std::exception&) {
        throw SpecError("unknown weight '" + w + "' (constant, power:<a> or random:<seed>)");
    }
    return out;
}

Weight make_weight(const WeightSpec& ws, const Box& box, std::size_t N) {
    switch (ws.kind) {
        case WeightSpec::Power: return power_weight(box, N, ws.a);
        case WeightSpec::Random: return random_smooth_weight(box, N, ws.seed);
        default: return constant_weight(box, N);
    }
}

bool uses_weight(CheckId id) {
    switch (id) {
        case CheckId::WeightedStrong:
        case CheckId::WeightedWeak:
        case CheckId::TStarStrong:
        case CheckId::TStarWeak:
        case CheckId::FeffermanStein:
        case CheckId::HLWeightedStrong:
        case CheckId::HLWeightedWeak: return true;
        default: return false;
    }
}

bool is_cube_check(CheckId id) { return id == CheckId::MarcinkiewiczIntegral || id == CheckId::JNorm; }

bool is_single_input(CheckId id) {
    return id == CheckId::FeffermanStein || id == CheckId::HLWeightedStrong || id == CheckId::HLWeightedWeak;
}

struct Outcome {
    double ratio = 0.0;
    std::size_t node = 0;
    bool has_node = false;
    std::size_t order_violations = 0;
    std::string error;
};

// max over nodes of left/right, honouring the floors; `mask` selects nodes.
void pointwise(const Field& left, const Field& right, const std::vector<char>* mask, Outcome& o) {
    o.ratio = 0.0;
    for (std::size_t i = 0; i < left.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        double r;
        if (right[i] < kRightFloor)
            r = std::abs(left[i]) < kLeftFloor ? 0.0 : std::numeric_limits<double>::infinity();
        else
            r = std::abs(left[i]) / right[i];
        if (!o.has_node || !(r <= o.ratio)) {
            o.ratio = r;
            o.node = i;
            o.has_node = true;
            if (std::isnan(r)) return;
        }
    }
}

Field product_of_maximals(std::span<const Field> fs) {
    Field out = hl_maximal_field(fs[0]);
    for (std::size_t j = 1; j < fs.size(); ++j) {
        const Field mj = hl_maximal_field(fs[j]);
        std::vector<double> s(out.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = out[i] * mj[i];
        out = out.with_samples(std::move(s));
    }
    return out;
}

// Nodes with |x| <= radius.
std::vector<char> near_mask(const Field& f, double radius) {
    std::vector<char> mask(f.size(), 0);
    Point x(static_cast<std::size_t>(f.dim()));
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.node(i, x);
        double r = 0.0;
        for (double c : x) r += c * c;
        mask[i] = std::sqrt(r) <= radius;
    }
    return mask;
}

double power_integral(const Field& f, const Weight& w, double p) {
    return std::pow(weighted_norm(f, w, p, NormKind::Strong), p);
}

}  // namespace

KernelFamily check_kernel(const CheckSpec& s) {
    if (s.family == "smooth") return smooth_kernel(s.m, s.n).relabeled(s.kernel);
    if (s.family == "broken") return broken_kernel(s.m, s.n).relabeled(s.kernel);
    if (s.family == "nonsmooth") return nonsmooth_kernel(s.m, s.n).base.relabeled(s.kernel);
    if (s.family == "zero") return zero_kernel(s.m, s.n).relabeled(s.kernel);
    throw SpecError("unknown kernel family '" + s.family + "'");
}

nlohmann::json to_json(const CheckSpec& s) {
    nlohmann::json j;
    j["id"] = s.id;
    j["kernel"] = s.kernel;
    j["family"] = s.family;
    j["m"] = s.m;
    j["n"] = s.n;
    j["v_range"] = {s.v_min, s.v_max};
    j["points_per_decade"] = s.points_per_decade;
    j["p_list"] = s.p_list;
    j["p"] = s.p;
    j["delta"] = s.delta;
    j["eta"] = s.eta;
    j["epsilon"] = s.epsilon;
    j["weight"] = s.weight;
    j["half_width"] = s.half_width;
    j["resolution"] = s.resolution;
    j["delta_count"] = s.delta_count;
    j["far_radius"] = s.far_radius;
    j["stability_limit"] = s.stability_limit;
    j["suite"] = {{"count", s.suite.count},
                  {"seed", s.suite.seed},
                  {"shapes", s.suite.shapes},
                  {"centered", s.suite.centered},
                  {"support_radius", s.suite.support_radius},
                  {"offset", s.suite.offset}};
    return j;
}

void validate_check(const CheckSpec& s) {
    const CheckId id = check_id_from_string(s.id);
    if (s.m < 1 || s.n < 1) throw SpecError("m and n must be positive");
    if (s.n * s.m > 4) throw SpecError("integration dimension exceeds 4");
    if (!(s.half_width > 0.0)) throw SpecError("box half-width must be positive");
    if (!is_power_of_two(s.resolution) || s.resolution < 8) throw SpecError("resolution must be a power of two >= 8");
    if (!(s.stability_limit >= 1.0)) throw SpecError("stability limit must be at least 1");
    if (!(s.v_min > 0.0 && s.v_max > s.v_min) || s.points_per_decade < 1) throw SpecError("bad v-range");
    for (const auto& sh : s.suite.shapes)
        if (sh != "gaussian" && sh != "indicator" && sh != "wavelet" && sh != "spike")
            throw SpecError("unknown test shape '" + sh + "'");
    (void)check_kernel(s);
    if (uses_weight(id)) (void)parse_weight(s.weight);
    else if (s.weight != "constant") throw SpecError(s.id + " takes no weight");

    const auto need_list = [&](const char* what) {
        if (s.p_list.size() != static_cast<std::size_t>(s.m))
            throw SpecError(s.id + " needs exactly m exponents p_1..p_m (" + what + ")");
        for (double q : s.p_list)
            if (!(q >= 1.0) || !std::isfinite(q)) throw SpecError("exponents p_i must lie in [1, inf)");
    };
    const auto check_p = [&]() {
        const double p = derived_p(s.p_list);
        if (s.p != 0.0 && std::abs(s.p - p) > 1e-12 * p)
            throw SpecError("p must satisfy 1/p = sum 1/p_i (expected " + std::to_string(p) + ")");
    };
    switch (id) {
        case CheckId::EndpointWeakType:
            for (double q : s.p_list)
                if (q != 1.0) throw SpecError("endpoint check needs every p_i = 1");
            if (s.p != 0.0 && std::abs(s.p - 1.0 / s.m) > 1e-12) throw SpecError("endpoint check has p = 1/m");
            break;
        case CheckId::WeightedStrong:
        case CheckId::TStarStrong:
            need_list("strong case");
            for (double q : s.p_list)
                if (q == 1.0) throw SpecError("strong case needs every p_i > 1");
            check_p();
            break;
        case CheckId::WeightedWeak:
        case CheckId::TStarWeak:
            need_list("weak case");
            if (std::none_of(s.p_list.begin(), s.p_list.end(), [](double q) { return q == 1.0; }))
                throw SpecError("weak case needs some p_i = 1");
            check_p();
            break;
        case CheckId::SharpMaximalPointwise: {
            const double d = default_delta(s);
            if (!(d > 0.0 && d < 1.0 / s.m)) throw SpecError("sharp maximal check needs 0 < delta < 1/m");
            break;
        }
        case CheckId::FarField:
            if (s.far_radius < 0.0) throw SpecError("far-field radius must be nonnegative");
            break;
        case CheckId::Cotlar: {
            const double e = default_eta(s);
            if (!(e > 0.0 && e < 1.0 / s.m)) throw SpecError("Cotlar check needs 0 < eta < 1/m");
            if (s.delta_count < 1) throw SpecError("Cotlar check needs at least one truncation radius");
            break;
        }
        case CheckId::MarcinkiewiczIntegral:
            if (!(s.epsilon > 0.0)) throw SpecError("epsilon must be positive");
            break;
        case CheckId::JNorm: {
            if (!(s.epsilon > 0.0)) throw SpecError("epsilon must be positive");
            const double p = target_p(s, id);
            if (!(p > s.n / (s.n + s.epsilon)) || !std::isfinite(p)) throw SpecError("j_norm needs n/(n+eps) < p < inf");
            break;
        }
        case CheckId::FeffermanStein: {
            const double p = target_p(s, id);
            const double d = s.delta > 0.0 ? s.delta : 0.5;
            if (!(p > 0.0) || !std::isfinite(p)) throw SpecError("Fefferman-Stein needs 0 < p < inf");
            if (!(d > 0.0 && d < 1.0)) throw SpecError("Fefferman-Stein check supports 0 < delta < 1");
            break;
        }
        case CheckId::HLWeightedStrong:
            if (!(target_p(s, id) > 1.0)) throw SpecError("strong maximal bound needs p > 1");
            break;
        case CheckId::HLWeightedWeak:
            if (!(target_p(s, id) >= 1.0)) throw SpecError("weak maximal bound needs p >= 1");
            break;
    }
    if (id == CheckId::TStarStrong || id == CheckId::TStarWeak)
        if (s.delta_count < 1) throw SpecError("T* needs at least one truncation radius");
}

VerificationReport run_check(const CheckSpec& s) {
    const auto t0 = std::chrono::steady_clock::now();
    validate_check(s);
    const CheckId id = check_id_from_string(s.id);

    VerificationReport rep;
    rep.check_id = s.id;
    rep.kernel = is_cube_check(id) || is_single_input(id) ? std::string("none") : s.kernel;
    rep.weight = uses_weight(id) ? s.weight : "constant";
    rep.spec = to_json(s);

    const Box box(Point(static_cast<std::size_t>(s.n), 0.0), s.half_width);
    const std::size_t N = s.resolution;
    std::vector<Outcome> outcomes;
    std::vector<Point> node_points;

    if (is_cube_check(id)) {
        const auto fams = generate_cube_families(s);
        outcomes.resize(fams.size());
        const double p = target_p(s, id);
        const Field grid = Field::from_function(box, N, [](Coords) { return 0.0; });
        parallel_for(fams.size(), [&](std::size_t t) {
            Outcome& o = outcomes[t];
            try {
                const auto& fam = fams[t];
                const double measure = fam.total_measure();
                std::vector<Box> dilates;
                for (const auto& q : fam.cubes) dilates.push_back(q.dilate(5.0 * std::sqrt(double(s.n))));
                std::vector<double> terms;
                Point x(static_cast<std::size_t>(s.n));
                const double hn = grid.cell_volume();
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    grid.node(i, x);
                    if (id == CheckId::MarcinkiewiczIntegral) {
                        bool inside = false;
                        for (const auto& d : dilates) inside = inside || d.contains(Coords(x));
                        if (!inside) terms.push_back(marcinkiewicz_sum(fam, x, s.m, s.epsilon) * hn);
                    } else {
                        terms.push_back(std::pow(j_function(fam, x, s.epsilon), p) * hn);
                    }
                }
                const double integral = compensated_sum(terms);
                o.ratio = id == CheckId::MarcinkiewiczIntegral ? integral / measure
                                                               : std::pow(integral / measure, 1.0 / p);
            } catch (const Error& e) {
                o.error = e.what();
            }
        });
        rep.details["families"] = fams.size();
    } else {
        const int arity = is_single_input(id) ? 1 : s.m;
        const auto suite = generate_test_suite(s, arity);
        if (id == CheckId::FarField && s.far_radius > 0.0)
            for (std::size_t t = 0; t < suite.size(); ++t)
                if (suite[t].support_radius > s.far_radius)
                    throw SpecError("test " + std::to_string(t) + " is not supported in B(0, R)");
        outcomes.resize(suite.size());

        std::optional<Weight> weight;
        if (uses_weight(id)) weight.emplace(make_weight(parse_weight(s.weight), box, N));
        const KernelFamily k = check_kernel(s);
        SquareFunctionConfig cfg{LogScaleRule(s.v_min, s.v_max, s.points_per_decade), {}};
        if (id == CheckId::Cotlar || id == CheckId::TStarStrong || id == CheckId::TStarWeak) {
            if (s.delta_count == 1)
                cfg.deltas = {4.0 * box.side() / static_cast<double>(N)};
            else
                cfg.deltas = default_delta_grid(suite.front().inputs.front(), s.delta_count);
        }
        const double p = target_p(s, id);

        parallel_for(suite.size(), [&](std::size_t t) {
            Outcome& o = outcomes[t];
            const auto& fs = suite[t].inputs;
            try {
                switch (id) {
                    case CheckId::EndpointWeakType: {
                        const Field T = square_function_field(k, fs, cfg);
                        double rhs = 1.0;
                        for (const auto& f : fs) rhs *= f.lp_norm(1.0);
                        o.ratio = lebesgue_norm(T, p, NormKind::Weak) / rhs;
                        break;
                    }
                    case CheckId::WeightedStrong:
                    case CheckId::WeightedWeak:
                    case CheckId::TStarStrong:
                    case CheckId::TStarWeak: {
                        Field T;
                        if (id == CheckId::TStarStrong || id == CheckId::TStarWeak) {
                            auto mf = maximal_square_function_fields(k, fs, cfg);
                            for (std::size_t i = 0; i < mf.star.size(); ++i)
                                if (mf.starstar[i] > mf.star[i]) ++o.order_violations;
                            T = std::move(mf.star);
                        } else {
                            T = square_function_field(k, fs, cfg);
                        }
                        const bool weak = id == CheckId::WeightedWeak || id == CheckId::TStarWeak;
                        double rhs = 1.0;
                        for (std::size_t j = 0; j < fs.size(); ++j)
                            rhs *= weighted_norm(fs[j], *weight, s.p_list[j], NormKind::Strong);
                        o.ratio = weighted_norm(T, *weight, p, weak ? NormKind::Weak : NormKind::Strong) / rhs;
                        break;
                    }
                    case CheckId::SharpMaximalPointwise: {
                        const Field T = square_function_field(k, fs, cfg);
                        const auto mask = near_mask(T, kNearFactor * suite[t].support_radius);
                        pointwise(sharp_maximal_field(T, default_delta(s)), product_of_maximals(fs), &mask, o);
                        break;
                    }
                    case CheckId::FarField: {
                        const Field T = square_function_field(k, fs, cfg);
                        const double R = s.far_radius > 0.0 ? s.far_radius : suite[t].support_radius;
                        std::vector<char> mask(T.size(), 0);
                        Point x(static_cast<std::size_t>(s.n));
                        std::size_t kept = 0;
                        for (std::size_t i = 0; i < T.size(); ++i) {
                            T.node(i, x);
                            double r = 0.0;
                            for (double c : x) r += c * c;
                            mask[i] = std::sqrt(r) > 2.0 * R;
                            kept += mask[i];
                        }
                        if (kept == 0) throw DomainError("no grid node satisfies |x| > 2R");
                        pointwise(T, product_of_maximals(fs), &mask, o);
                        break;
                    }
                    case CheckId::Cotlar: {
                        auto mf = maximal_square_function_fields(k, fs, cfg);
                        for (std::size_t i = 0; i < mf.star.size(); ++i)
                            if (mf.starstar[i] > mf.star[i]) ++o.order_violations;
                        const Field T = square_function_field(k, fs, cfg);
                        const Field MT = hl_maximal_field(T, default_eta(s));
                        const Field PM = product_of_maximals(fs);
                        std::vector<double> rhs(T.size());
                        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = MT[i] + PM[i];
                        pointwise(mf.star, T.with_samples(std::move(rhs)), nullptr, o);
                        break;
                    }
                    case CheckId::FeffermanStein: {
                        const double d = s.delta > 0.0 ? s.delta : 0.5;
                        const Field Md = hl_maximal_field(fs[0], d);
                        const Field Ms = sharp_maximal_field(fs[0], d);
                        o.ratio = power_integral(Md, *weight, p) / power_integral(Ms, *weight, p);
                        break;
                    }
                    case CheckId::HLWeightedStrong:
                    case CheckId::HLWeightedWeak: {
                        const Field M = hl_maximal_field(fs[0]);
                        const NormKind kind = id == CheckId::HLWeightedWeak ? NormKind::Weak : NormKind::Strong;
                        o.ratio = weighted_norm(M, *weight, p, kind) / weighted_norm(fs[0], *weight, p, NormKind::Strong);
                        break;
                    }
                    default: break;
                }
            } catch (const Error& e) {
                o.error = e.what();
            }
        });
        node_points.resize(outcomes.size());
        for (std::size_t t = 0; t < outcomes.size(); ++t)
            if (outcomes[t].has_node) node_points[t] = suite[t].inputs.front().node(outcomes[t].node);

        if (weight) {
            const double cls = [&] {
                if (id == CheckId::WeightedWeak || id == CheckId::TStarWeak) return 1.0;
                if (id == CheckId::WeightedStrong || id == CheckId::TStarStrong)
                    return *std::min_element(s.p_list.begin(), s.p_list.end());
                if (id == CheckId::FeffermanStein) return 2.0;
                return p;
            }();
            const auto ws = parse_weight(s.weight);
            const auto mem = ap_membership([&](std::size_t res) { return make_weight(ws, box, res); }, cls, N);
            rep.details["weight_class_p"] = cls;
            rep.details["ap_constant"] = mem.constant;
            rep.details["ap_refined_constant"] = mem.refined_constant;
            rep.details["ap_member"] = mem.member;
        }
        std::vector<double> scales;
        for (const auto& tc : suite) scales.push_back(tc.scale);
        rep.details["scales"] = scales;
    }

    bool errored = false;
    for (std::size_t t = 0; t < outcomes.size(); ++t) {
        if (!outcomes[t].error.empty()) {
            errored = true;
            rep.verdict = Verdict::Error;
            rep.failing_test = static_cast<int>(t);
            rep.message = "test " + std::to_string(t) + ": " + outcomes[t].error;
            break;
        }
    }
    std::size_t violations = 0;
    for (const auto& o : outcomes) {
        rep.ratios.push_back(o.ratio);
        violations += o.order_violations;
    }
    if (id == CheckId::Cotlar || id == CheckId::TStarStrong || id == CheckId::TStarWeak)
        rep.details["tstar_order_violations"] = violations;

    if (!errored) {
        const ConstantFit fit = fit_constant(rep.ratios);
        rep.constant = fit.constant;
        rep.stability = fit.stability;
        double best = -1.0;
        for (std::size_t t = 0; t < rep.ratios.size(); ++t) {
            const double r = rep.ratios[t];
            if (!(r <= best)) {
                best = r;
                rep.argmax_test = static_cast<int>(t);
                if (std::isnan(r)) break;
            }
        }
        if (rep.argmax_test >= 0 && !node_points.empty() && outcomes[rep.argmax_test].has_node)
            rep.argmax_point = node_points[rep.argmax_test];
        if (!fit.finite) {
            rep.verdict = Verdict::Fail;
            rep.message = "non-finite ratio";
        } else if (fit.stability > s.stability_limit) {
            rep.verdict = Verdict::Fail;
            rep.message = "constant grows under hardening";
        } else {
            rep.verdict = Verdict::Pass;
        }
    }
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

nlohmann::json to_json(const VerificationReport& r) {
    nlohmann::json j;
    j["id"] = r.check_id;
    j["kernel"] = r.kernel;
    j["weight"] = r.weight;
    j["spec"] = r.spec;
    nlohmann::json ratios = nlohmann::json::array();
    for (double x : r.ratios) {
        if (std::isfinite(x)) ratios.push_back(x);
        else ratios.push_back(std::isnan(x) ? "nan" : "inf");
    }
    j["ratios"] = ratios;
    const auto num = [](double x) -> nlohmann::json {
        if (std::isfinite(x)) return x;
        return std::isnan(x) ? "nan" : "inf";
    };
    j["C"] = num(r.constant);
    j["stability"] = num(r.stability);
    j["verdict"] = std::string(to_string(r.verdict));
    j["argmax"] = {{"test", r.argmax_test}, {"point", r.argmax_point}};
    if (r.failing_test >= 0) j["failing_test"] = r.failing_test;
    j["wall_seconds"] = r.wall_seconds;
    j["message"] = r.message;
    j["details"] = r.details;
    return j;
}

std::string csv_header() { return "check_id,kernel,verdict,constant,stability,wall_seconds"; }

std::string csv_row(const VerificationReport& r, double wall_seconds) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.10g,%.10g,%.3f", r.check_id.c_str(), r.kernel.c_str(),
                  std::string(to_string(r.verdict)).c_str(), r.constant, r.stability, wall_seconds);
    return buf;
}

}  // namespace msq
