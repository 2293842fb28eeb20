#include "msq/audits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msq/error.hpp"
#include "msq/numeric.hpp"

namespace msq {

namespace {

double distance(Coords a, Coords b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

double separation_sum(Coords x, Coords ys, int n) {
    double s = 0.0;
    for (std::size_t j = 0; j * n < ys.size(); ++j) s += distance(x, ys.subspan(j * n, n));
    return s;
}

// (\int |values|^2 dv/v)^(1/2) with a finiteness check.
double l2v(const LogScaleRule& rule, std::vector<double>& values) {
    for (auto& x : values) x *= x;
    const double sq = rule.apply(values);
    if (!std::isfinite(sq)) throw AccuracyError("v-integral is not finite");
    return std::sqrt(sq);
}

struct FitData {
    std::vector<double> x, y;
    std::vector<int> group;
    void add(double lx, double left, int g) {
        if (!(left > 0.0)) return;
        x.push_back(lx);
        y.push_back(std::log(left));
        group.push_back(g);
    }
};

double fit_or_nan(const FitData& d) {
    try {
        return pooled_slope(d.x, d.y, d.group);
    } catch (const UsageError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

double max_ratio(const std::vector<double>& r) {
    double m = 0.0;
    for (double x : r) {
        if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
        m = std::max(m, x);
    }
    return m;
}

void finish(ConditionReport& rep, const std::vector<double>& base, const std::vector<double>& extra,
            const FitData& fit, bool all_zero) {
    rep.sample_count = base.size();
    rep.measured_constant = max_ratio(base);
    rep.extended_constant = std::max(rep.measured_constant, max_ratio(extra));
    if (rep.measured_constant > 0.0)
        rep.stability = rep.extended_constant / rep.measured_constant;
    else
        rep.stability = rep.extended_constant > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    rep.ratio_deciles = decile_table(base);
    bool ok = std::isfinite(rep.measured_constant) && std::isfinite(rep.extended_constant) &&
              rep.stability <= rep.stability_limit;
    if (all_zero) {
        rep.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
        rep.message = "left side vanishes on the whole sample";
    } else {
        rep.fitted_exponent = fit_or_nan(fit);
        bool exp_ok = std::isfinite(rep.fitted_exponent);
        if (exp_ok && rep.exponent_rule == "positive") exp_ok = rep.fitted_exponent > 0.0;
        if (exp_ok && rep.exponent_rule == "within")
            exp_ok = std::abs(rep.fitted_exponent - rep.nominal_exponent) <= rep.exponent_tolerance;
        if (!exp_ok) rep.message = "fitted exponent outside the accepted range";
        ok = ok && exp_ok;
    }
    if (rep.stability > rep.stability_limit) rep.message = "constant not stable under range extension";
    rep.verdict = ok ? Verdict::Pass : Verdict::Fail;
}

}  // namespace

nlohmann::json to_json(const ConditionReport& r) {
    nlohmann::json j;
    j["condition_id"] = r.condition_id;
    j["kernel"] = r.kernel_label;
    j["sample_count"] = r.sample_count;
    j["measured_constant"] = r.measured_constant;
    j["extended_constant"] = r.extended_constant;
    j["stability"] = r.stability;
    j["fitted_exponent"] = r.fitted_exponent;
    j["nominal_exponent"] = r.nominal_exponent;
    j["exponent_rule"] = r.exponent_rule;
    j["verdict"] = std::string(to_string(r.verdict));
    j["ratio_deciles"] = r.ratio_deciles;
    if (!r.diagnostics.empty()) j["diagnostics"] = r.diagnostics;
    if (!r.breakdown.empty()) {
        auto& arr = j["breakdown"] = nlohmann::json::array();
        for (const auto& b : r.breakdown)
            arr.push_back({{"left", b.left}, {"bump_term", b.bump_term}, {"power_term", b.power_term},
                           {"ratio", b.ratio}});
    }
    if (!r.message.empty()) j["message"] = r.message;
    return j;
}

double kernel_l2v(const KernelFamily& k, Coords x, Coords ys, const LogScaleRule& rule) {
    const int n = k.n();
    bool diagonal = true;
    for (int j = 0; j < k.m(); ++j) diagonal = diagonal && distance(x, ys.subspan(j * n, n)) == 0.0;
    if (diagonal) throw DomainError("kernel evaluated on the diagonal x = y_1 = ... = y_m");
    std::vector<double> vals(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) vals[i] = k(rule.nodes()[i], x, ys);
    return l2v(rule, vals);
}

CZAudit audit_cz_conditions(const KernelFamily& k, const CZSamplingConfig& cfg) {
    const int m = k.m(), n = k.n();
    const double mn = m * n;
    const double gamma = k.constants().gamma;
    const double B = k.constants().B;
    if (!(cfg.r_min > 0.0 && cfg.r_max > cfg.r_min) || cfg.radii_per_configuration < 2 || cfg.configurations == 0)
        throw PreconditionError("cz audit needs 0 < r_min < r_max, two radii and one configuration");
    for (double rho : cfg.perturbation_ratios) {
        if (!(rho > 0.0) || rho > 1.0 / B)
            throw PreconditionError("perturbation ratio " + std::to_string(rho) + " exceeds 1/B");
    }
    if (!(cfg.range_extension >= 1.0)) throw PreconditionError("range extension must be at least 1");

    struct Config {
        Point x, ys, pert;
        int slot;
    };
    Rng rng(cfg.seed);
    std::vector<Config> configs;
    for (std::size_t c = 0; c < cfg.configurations; ++c) {
        Config cf;
        cf.x.resize(n);
        for (auto& xi : cf.x) xi = rng.uniform(-1.0, 1.0);
        cf.ys.resize(static_cast<std::size_t>(m * n));
        for (int j = 0; j < m; ++j) {
            const auto u = rng.unit_vector(n);
            const double w = rng.uniform(0.3, 1.0);
            for (int q = 0; q < n; ++q) cf.ys[j * n + q] = w * u[q];  // offsets, scaled by r below
        }
        cf.pert = rng.unit_vector(n);
        cf.slot = static_cast<int>(c % static_cast<std::size_t>(m));
        configs.push_back(std::move(cf));
    }

    const auto R = static_cast<int>(cfg.radii_per_configuration);
    const double q = std::pow(cfg.r_max / cfg.r_min, 1.0 / (R - 1));
    const int ext = cfg.range_extension > 1.0 ? static_cast<int>(std::ceil(std::log(cfg.range_extension) / std::log(q) - 1e-9)) : 0;

    CZAudit out;
    auto init = [&](ConditionReport& r, const char* id, double nominal) {
        r.condition_id = id;
        r.kernel_label = k.label();
        r.nominal_exponent = nominal;
        r.exponent_rule = "within";
        r.exponent_tolerance = cfg.exponent_tolerance;
        r.stability_limit = cfg.stability_limit;
    };
    init(out.size, "cz_size", -mn);
    init(out.smooth_x, "cz_smooth_x", gamma);
    init(out.smooth_y, "cz_smooth_y", gamma);

    std::vector<double> size_base, size_extra, sx_base, sx_extra, sy_base, sy_extra;
    FitData size_fit, sx_fit, sy_fit;
    bool size_zero = true, sx_zero = true, sy_zero = true;
    double v_trunc = 0.0;  // relative change of the squared v-integral on the doubled range

    Point x(n), ys(static_cast<std::size_t>(m * n)), z(n), ys2(static_cast<std::size_t>(m * n));
    for (int ri = -ext; ri < R + ext; ++ri) {
        const bool in_base = ri >= 0 && ri < R;
        const double r = cfg.r_min * std::pow(q, ri);
        for (std::size_t c = 0; c < configs.size(); ++c) {
            const Config& cf = configs[c];
            x = cf.x;
            for (int j = 0; j < m; ++j)
                for (int d = 0; d < n; ++d) ys[j * n + d] = cf.x[d] + r * cf.ys[j * n + d];
            const double sigma = separation_sum(x, ys, n);
            double maxd = 0.0;
            for (int j = 0; j < m; ++j) maxd = std::max(maxd, distance(x, Coords(ys).subspan(j * n, n)));

            const double S = kernel_l2v(k, x, ys, cfg.rule);
            const double ratio = S * std::pow(sigma, mn);
            if ((ri == 0 || ri == R - 1) && S > 0.0) {
                const auto F = [&](double v) {
                    const double kv = k(v, x, ys);
                    return kv * kv;
                };
                v_trunc = std::max(v_trunc, cfg.rule.truncation_estimate(F) / (S * S));
            }
            (in_base ? size_base : size_extra).push_back(ratio);
            if (in_base) {
                size_fit.add(std::log(sigma), S, static_cast<int>(c));
                size_zero = size_zero && S == 0.0;
            }

            for (std::size_t pi = 0; pi < cfg.perturbation_ratios.size(); ++pi) {
                const double delta = cfg.perturbation_ratios[pi] * maxd;
                const int group = static_cast<int>(c) * 1000 + (ri + ext);
                std::vector<double> diff(cfg.rule.size());

                for (int d = 0; d < n; ++d) z[d] = x[d] + delta * cf.pert[d];
                for (std::size_t i = 0; i < cfg.rule.size(); ++i) {
                    const double v = cfg.rule.nodes()[i];
                    diff[i] = k(v, z, ys) - k(v, x, ys);
                }
                const double Qx = l2v(cfg.rule, diff);
                const double right = std::pow(delta, gamma) / std::pow(sigma, mn + gamma);
                (in_base ? sx_base : sx_extra).push_back(Qx / right);
                if (in_base) {
                    sx_fit.add(std::log(delta), Qx, group);
                    sx_zero = sx_zero && Qx == 0.0;
                }

                ys2 = ys;
                for (int d = 0; d < n; ++d) ys2[cf.slot * n + d] += delta * cf.pert[d];
                diff.assign(cfg.rule.size(), 0.0);
                for (std::size_t i = 0; i < cfg.rule.size(); ++i) {
                    const double v = cfg.rule.nodes()[i];
                    diff[i] = k(v, x, ys) - k(v, x, ys2);
                }
                const double Qy = l2v(cfg.rule, diff);
                (in_base ? sy_base : sy_extra).push_back(Qy / right);
                if (in_base) {
                    sy_fit.add(std::log(delta), Qy, group);
                    sy_zero = sy_zero && Qy == 0.0;
                }
            }
        }
    }
    finish(out.size, size_base, size_extra, size_fit, size_zero);
    out.size.diagnostics["v_range_truncation"] = v_trunc;
    finish(out.smooth_x, sx_base, sx_extra, sx_fit, sx_zero);
    finish(out.smooth_y, sy_base, sy_extra, sy_fit, sy_zero);
    const bool pass = out.size.verdict == Verdict::Pass && out.smooth_x.verdict == Verdict::Pass &&
                      out.smooth_y.verdict == Verdict::Pass;
    out.verdict = pass ? Verdict::Pass : Verdict::Fail;
    return out;
}

std::string to_string(Assumption a) {
    switch (a) {
        case Assumption::H1: return "H1";
        case Assumption::H2Size: return "H2-size";
        case Assumption::H2Smooth: return "H2-smooth";
        case Assumption::H3: return "H3";
    }
    return "?";
}

Assumption assumption_from_string(const std::string& s) {
    if (s == "H1") return Assumption::H1;
    if (s == "H2-size") return Assumption::H2Size;
    if (s == "H2-smooth") return Assumption::H2Smooth;
    if (s == "H3") return Assumption::H3;
    throw UsageError("unknown assumption '" + s + "' (expected H1, H2-size, H2-smooth or H3)");
}

namespace {

// Distance that bounds t^(1/s) for the assumption, and the factor it is divided by.
double constraint_distance(const ComposedKernel& ck, Assumption which, Coords x, Coords ys) {
    const int n = ck.base.n(), m = ck.base.m();
    if (which == Assumption::H1) return distance(x, ys.subspan((ck.slot - 1) * n, n));
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int j = 0; j < m; ++j) {
        const double d = distance(x, ys.subspan(j * n, n));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return which == Assumption::H2Smooth ? hi : lo;
}

}  // namespace

void validate_h_sample(const ComposedKernel& ck, Assumption which, const HSample& s) {
    const int n = ck.base.n(), m = ck.base.m();
    if (which == Assumption::H1 && ck.slot < 1)
        throw PreconditionError("H1 needs a kernel composed in a y-slot (slot >= 1)");
    if (which != Assumption::H1 && ck.slot != 0)
        throw PreconditionError(to_string(which) + " needs a kernel composed in the x-slot (slot 0)");
    if (static_cast<int>(s.x.size()) != n || static_cast<int>(s.ys.size()) != m * n)
        throw PreconditionError("sample has the wrong dimension");
    if (!(s.t > 0.0)) throw PreconditionError("sample needs t > 0");
    const double sc = ck.identity.scale(s.t);
    const double d = constraint_distance(ck, which, s.x, s.ys);
    const double slack = 1.0 + 1e-12;
    if (!(2.0 * sc <= d * slack)) {
        throw PreconditionError(to_string(which) + " sample violates 2 t^(1/s) <= " +
                                (which == Assumption::H2Smooth ? "max" : "min") + "_j |x - y_j| (t^(1/s) = " +
                                std::to_string(sc) + ", distance = " + std::to_string(d) + ")");
    }
    if (which == Assumption::H3) {
        if (static_cast<int>(s.x_prime.size()) != n) throw PreconditionError("H3 sample needs x'");
        if (!(2.0 * distance(s.x, s.x_prime) <= sc * slack))
            throw PreconditionError("H3 sample violates 2 |x - x'| <= t^(1/s)");
    }
}

std::vector<HSample> generate_h_samples(const ComposedKernel& ck, Assumption which, const HAuditConfig& cfg,
                                        double r_max) {
    const int n = ck.base.n(), m = ck.base.m();
    if (cfg.directions == 0 || cfg.radii < 2 || cfg.t_values < 2 || !(cfg.r_min > 0.0) ||
        !(cfg.r_max > cfg.r_min) || !(cfg.t_ratio_min > 0.0 && cfg.t_ratio_min < 1.0))
        throw PreconditionError("invalid H sampling configuration");
    const double q = std::pow(cfg.r_max / cfg.r_min, 1.0 / static_cast<double>(cfg.radii - 1));
    const auto rhos = geomspace(cfg.t_ratio_min, 1.0, cfg.t_values);
    const double lo = (which == Assumption::H1 || which == Assumption::H2Smooth) ? 0.05 : 0.6;
    const double s_exp = ck.identity.s();

    struct Dir {
        Point x, offs, e;
        double frac;
    };
    Rng rng(cfg.seed);
    std::vector<Dir> dirs;
    for (std::size_t d = 0; d < cfg.directions; ++d) {
        Dir dr;
        dr.x.resize(n);
        for (auto& xi : dr.x) xi = rng.uniform(-1.0, 1.0);
        dr.offs.resize(static_cast<std::size_t>(m * n));
        for (int j = 0; j < m; ++j) {
            const auto u = rng.unit_vector(n);
            const double w = rng.uniform(lo, 1.0);
            for (int k = 0; k < n; ++k) dr.offs[j * n + k] = w * u[k];
        }
        dr.e = rng.unit_vector(n);
        dr.frac = rng.uniform(0.25, 1.0);
        dirs.push_back(std::move(dr));
    }

    std::vector<HSample> out;
    for (int ri = 0;; ++ri) {
        const double r = cfg.r_min * std::pow(q, ri);
        if (r > r_max * (1.0 + 1e-9)) break;
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            const Dir& dr = dirs[d];
            HSample base;
            base.x = dr.x;
            base.ys.resize(dr.offs.size());
            for (int j = 0; j < m; ++j)
                for (int k = 0; k < n; ++k) base.ys[j * n + k] = dr.x[k] + r * dr.offs[j * n + k];
            const double D = constraint_distance(ck, which, base.x, base.ys);
            for (std::size_t ti = 0; ti < rhos.size(); ++ti) {
                HSample s = base;
                const double sc = rhos[ti] * D / 2.0;
                s.t = std::pow(sc, s_exp);
                s.direction = static_cast<int>(d);
                s.radius_index = ri;
                s.t_index = static_cast<int>(ti);
                if (which == Assumption::H3) {
                    s.x_prime = s.x;
                    for (int k = 0; k < n; ++k) s.x_prime[k] += dr.frac * 0.5 * sc * dr.e[k];
                }
                out.push_back(std::move(s));
            }
        }
    }
    return out;
}

SampleBreakdown evaluate_h_sample(const ComposedKernel& ck, Assumption which, const HSample& s,
                                  const LogScaleRule& rule, const ComposedQuadrature& quad) {
    const KernelFamily& K = ck.base;
    const int n = K.n(), m = K.m();
    const double mn = m * n;
    const double eps = K.constants().epsilon;
    const double sc = ck.identity.scale(s.t);
    std::vector<double> vals(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double v = rule.nodes()[i];
        switch (which) {
            case Assumption::H2Size:
                vals[i] = eval_composed_kernel(ck, s.t, v, s.x, s.ys, quad).value;
                break;
            case Assumption::H1:
            case Assumption::H2Smooth:
                vals[i] = K(v, s.x, s.ys) - eval_composed_kernel(ck, s.t, v, s.x, s.ys, quad).value;
                break;
            case Assumption::H3:
                vals[i] = eval_composed_kernel(ck, s.t, v, s.x, s.ys, quad).value -
                          eval_composed_kernel(ck, s.t, v, s.x_prime, s.ys, quad).value;
                break;
        }
    }
    SampleBreakdown b;
    b.left = l2v(rule, vals);
    const double sigma = separation_sum(s.x, s.ys, n);
    if (which == Assumption::H2Size) {
        b.power_term = 1.0 / std::pow(sigma, mn);
    } else {
        b.power_term = std::pow(s.t, eps / ck.identity.s()) / std::pow(sigma, mn + eps);
    }
    if (which == Assumption::H1) {
        const int i = ck.slot - 1;
        Coords yi = Coords(s.ys).subspan(i * n, n);
        double acc = 0.0;
        for (int k = 0; k < m; ++k)
            if (k != i) acc += ck.bump(distance(yi, Coords(s.ys).subspan(k * n, n)) / sc);
        b.bump_term = acc / std::pow(sigma, mn);
    } else if (which == Assumption::H2Smooth) {
        int jmax = 0;
        double dmax = -1.0;
        for (int k = 0; k < m; ++k) {
            const double d = distance(s.x, Coords(s.ys).subspan(k * n, n));
            if (d > dmax) {
                dmax = d;
                jmax = k;
            }
        }
        double acc = 0.0;
        for (int k = 0; k < m; ++k)
            if (k != jmax) acc += ck.bump(distance(s.x, Coords(s.ys).subspan(k * n, n)) / sc);
        b.bump_term = acc / std::pow(sigma, mn);
    }
    const double right = b.bump_term + b.power_term;
    b.ratio = b.left == 0.0 ? 0.0 : b.left / right;
    return b;
}

ConditionReport audit_h_samples(const ComposedKernel& ck, Assumption which, const std::vector<HSample>& base,
                                const std::vector<HSample>& extra, const HAuditConfig& cfg) {
    for (const auto& s : base) validate_h_sample(ck, which, s);
    for (const auto& s : extra) validate_h_sample(ck, which, s);

    ConditionReport rep;
    rep.condition_id = to_string(which);
    rep.kernel_label = ck.base.label();
    rep.exponent_tolerance = cfg.exponent_tolerance;
    rep.stability_limit = cfg.stability_limit;
    const int n = ck.base.n();
    if (which == Assumption::H2Size) {
        rep.exponent_rule = "within";
        rep.nominal_exponent = -static_cast<double>(ck.base.m() * n);
    } else {
        rep.exponent_rule = "positive";
        rep.nominal_exponent = ck.base.constants().epsilon / ck.identity.s();
    }

    std::vector<SampleBreakdown> bb(base.size()), be(extra.size());
    try {
        parallel_for(base.size(), [&](std::size_t i) { bb[i] = evaluate_h_sample(ck, which, base[i], cfg.rule, cfg.quad); });
        parallel_for(extra.size(), [&](std::size_t i) { be[i] = evaluate_h_sample(ck, which, extra[i], cfg.rule, cfg.quad); });
    } catch (const AccuracyError& e) {
        rep.verdict = Verdict::Error;
        rep.message = e.what();
        return rep;
    }

    std::vector<double> rb, re;
    FitData fit;
    bool all_zero = true;
    for (std::size_t i = 0; i < base.size(); ++i) {
        rb.push_back(bb[i].ratio);
        all_zero = all_zero && bb[i].left == 0.0;
        const HSample& s = base[i];
        if (which == Assumption::H2Size) {
            fit.add(std::log(separation_sum(s.x, s.ys, n)), bb[i].left, s.direction * 1000 + s.t_index);
        } else {
            fit.add(std::log(s.t), bb[i].left, s.direction * 1000 + s.radius_index);
        }
    }
    for (const auto& b : be) re.push_back(b.ratio);
    rep.breakdown = std::move(bb);
    finish(rep, rb, re, fit, all_zero);

    // decay of the identity profile, r^(n + eta) h(r) as r grows
    const Point radii{1.0, 4.0, 16.0, 64.0, 256.0};
    const auto lim = decay_limit_values(ck.identity, ck.identity.eta(), radii);
    rep.diagnostics["identity_decay_radii"] = radii;
    rep.diagnostics["identity_decay_values"] = lim;
    rep.diagnostics["identity_decay_constant"] = measure_decay_constant(ck.identity, ck.identity.eta(), radii);
    rep.diagnostics["identity_decays"] = lim.back() <= lim.front() && lim.back() < 1e-12;
    return rep;
}

ConditionReport audit_nonsmooth_assumption(const ComposedKernel& ck, Assumption which, const HAuditConfig& cfg) {
    auto base = generate_h_samples(ck, which, cfg, cfg.r_max);
    auto all = generate_h_samples(ck, which, cfg, cfg.r_max * cfg.range_extension);
    std::vector<HSample> extra(all.begin() + static_cast<std::ptrdiff_t>(base.size()), all.end());
    return audit_h_samples(ck, which, base, extra, cfg);
}

}  // namespace msq
