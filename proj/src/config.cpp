#include "msq/config.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace msq {

namespace {

std::string join(const std::vector<std::string>& xs, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw UsageError("empty list item");
        out.push_back(item);
    }
    if (out.empty()) throw UsageError("empty list");
    return out;
}

double to_double(const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        throw UsageError("expected a number, got '" + v + "'");
    }
    if (used != v.size()) throw UsageError("expected a number, got '" + v + "'");
    return d;
}

long long to_int(const std::string& v) {
    std::size_t used = 0;
    long long d = 0;
    try {
        d = std::stoll(v, &used);
    } catch (const std::exception&) {
        throw UsageError("expected an integer, got '" + v + "'");
    }
    if (used != v.size()) throw UsageError("expected an integer, got '" + v + "'");
    return d;
}

std::size_t to_size(const std::string& v) {
    const long long d = to_int(v);
    if (d < 0) throw UsageError("expected a nonnegative integer, got '" + v + "'");
    return static_cast<std::size_t>(d);
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("expected true or false, got '" + v + "'");
}

bool is_kernel_check(CheckId id) {
    switch (id) {
        case CheckId::MarcinkiewiczIntegral:
        case CheckId::JNorm:
        case CheckId::FeffermanStein:
        case CheckId::HLWeightedStrong:
        case CheckId::HLWeightedWeak: return false;
        default: return true;
    }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : UsageError("invalid config:\n  " + join(errors, "\n  ")), errors_(std::move(errors)) {}

const KernelSpec& RunConfig::kernel(const std::string& label) const {
    for (const auto& k : kernels)
        if (k.label == label) return k;
    throw UsageError("unknown kernel label '" + label + "'");
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::vector<std::string> errors;
    std::vector<std::set<std::string>> check_keys;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto at = [&](const std::string& msg) { errors.push_back("line " + std::to_string(lineno) + ": " + msg); };
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            at("syntax error, expected 'section.key = value'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto dot = key.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
            at("syntax error, key '" + key + "' is not of the form section.key");
            continue;
        }
        if (value.empty()) {
            at("missing value for '" + key + "'");
            continue;
        }
        const std::string sec = key.substr(0, dot), k = key.substr(dot + 1);
        try {
            if (sec == "grid") {
                if (k == "n") cfg.n = static_cast<int>(to_int(value));
                else if (k == "half_width") cfg.half_width = to_double(value);
                else if (k == "resolution") cfg.resolution = to_size(value);
                else throw UsageError("unknown key '" + key + "'");
            } else if (sec == "run") {
                if (k == "out") cfg.out = value;
                else if (k == "seed") cfg.seed = static_cast<std::uint64_t>(to_size(value));
                else if (k == "jobs") cfg.jobs = static_cast<int>(to_int(value));
                else if (k == "timing") cfg.timing = to_bool(value);
                else throw UsageError("unknown key '" + key + "'");
            } else if (sec == "kernel") {
                if (k == "label") {
                    KernelSpec ks;
                    ks.label = value;
                    ks.line = lineno;
                    cfg.kernels.push_back(ks);
                    continue;
                }
                if (cfg.kernels.empty()) throw UsageError("'" + key + "' before kernel.label");
                auto& ks = cfg.kernels.back();
                if (k == "family") ks.family = value;
                else if (k == "m") ks.m = static_cast<int>(to_int(value));
                else if (k == "v_min") ks.v_min = to_double(value);
                else if (k == "v_max") ks.v_max = to_double(value);
                else if (k == "points_per_decade") ks.points_per_decade = static_cast<int>(to_int(value));
                else throw UsageError("unknown key '" + key + "'");
            } else if (sec == "audit") {
                if (k == "kernel") {
                    AuditSpec a;
                    a.kernel = value;
                    a.line = lineno;
                    cfg.audits.push_back(a);
                    continue;
                }
                if (cfg.audits.empty()) throw UsageError("'" + key + "' before audit.kernel");
                if (k == "kind") cfg.audits.back().kind = value;
                else throw UsageError("unknown key '" + key + "'");
            } else if (sec == "check") {
                if (k == "id") {
                    CheckEntry e;
                    e.spec.id = value;
                    e.line = lineno;
                    (void)check_id_from_string(value);
                    cfg.checks.push_back(e);
                    check_keys.emplace_back();
                    continue;
                }
                if (cfg.checks.empty()) throw UsageError("'" + key + "' before check.id");
                auto& e = cfg.checks.back();
                auto& s = e.spec;
                check_keys.back().insert(k);
                if (k == "kernel") {
                    s.kernel = value;
                    e.explicit_kernel = true;
                } else if (k == "p_list") {
                    s.p_list.clear();
                    for (const auto& x : split_list(value)) s.p_list.push_back(to_double(x));
                } else if (k == "p") s.p = to_double(value);
                else if (k == "delta") s.delta = to_double(value);
                else if (k == "eta") s.eta = to_double(value);
                else if (k == "epsilon") s.epsilon = to_double(value);
                else if (k == "weight") s.weight = value;
                else if (k == "half_width") s.half_width = to_double(value);
                else if (k == "resolution") s.resolution = to_size(value);
                else if (k == "delta_count") s.delta_count = to_size(value);
                else if (k == "far_radius") s.far_radius = to_double(value);
                else if (k == "stability_limit") s.stability_limit = to_double(value);
                else if (k == "count") s.suite.count = to_size(value);
                else if (k == "seed") {
                    s.suite.seed = static_cast<std::uint64_t>(to_size(value));
                    e.explicit_seed = true;
                } else if (k == "shapes") s.suite.shapes = split_list(value);
                else if (k == "centered") s.suite.centered = to_bool(value);
                else if (k == "support_radius") s.suite.support_radius = to_double(value);
                else if (k == "offset") s.suite.offset = to_double(value);
                else throw UsageError("unknown key '" + key + "'");
            } else {
                throw UsageError("unknown section '" + sec + "'");
            }
        } catch (const UsageError& e) {
            at(e.what());
        }
    }

    // cross-item validation
    if (cfg.n < 1) errors.push_back("grid.n must be positive");
    if (cfg.jobs < 1) errors.push_back("run.jobs must be positive");
    std::set<std::string> labels;
    for (const auto& ks : cfg.kernels) {
        const std::string where = "line " + std::to_string(ks.line) + ": ";
        if (!labels.insert(ks.label).second) errors.push_back(where + "duplicate kernel label '" + ks.label + "'");
        if (ks.m < 1) errors.push_back(where + "kernel.m must be positive");
        if (cfg.n * ks.m > 4) errors.push_back(where + "integration dimension exceeds 4 (kernel '" + ks.label + "')");
        if (ks.family != "smooth" && ks.family != "broken" && ks.family != "nonsmooth" && ks.family != "zero")
            errors.push_back(where + "unknown kernel family '" + ks.family + "'");
        if (!(ks.v_min > 0.0 && ks.v_max > ks.v_min) || ks.points_per_decade < 1)
            errors.push_back(where + "bad v-range for kernel '" + ks.label + "'");
    }
    for (const auto& a : cfg.audits) {
        const std::string where = "line " + std::to_string(a.line) + ": ";
        const auto it = std::find_if(cfg.kernels.begin(), cfg.kernels.end(), [&](const KernelSpec& k) { return k.label == a.kernel; });
        if (it == cfg.kernels.end()) {
            errors.push_back(where + "unknown kernel label '" + a.kernel + "'");
            continue;
        }
        if (a.kind == "cz") continue;
        try {
            (void)assumption_from_string(a.kind);
            if (it->family != "nonsmooth") errors.push_back(where + "H audits need a nonsmooth kernel");
        } catch (const Error&) {
            errors.push_back(where + "unknown audit kind '" + a.kind + "'");
        }
    }
    for (std::size_t i = 0; i < cfg.checks.size(); ++i) {
        auto& e = cfg.checks[i];
        auto& s = e.spec;
        const std::string where = "line " + std::to_string(e.line) + ": ";
        const auto& keys = check_keys[i];
        s.n = cfg.n;
        if (!keys.count("half_width")) s.half_width = cfg.half_width;
        if (!keys.count("resolution")) s.resolution = cfg.resolution;
        const CheckId id = check_id_from_string(s.id);
        if (is_kernel_check(id)) {
            if (!e.explicit_kernel) {
                if (cfg.kernels.size() == 1) s.kernel = cfg.kernels.front().label;
                else {
                    errors.push_back(where + "check '" + s.id + "' needs check.kernel");
                    continue;
                }
            }
            const auto it = std::find_if(cfg.kernels.begin(), cfg.kernels.end(),
                                         [&](const KernelSpec& k) { return k.label == s.kernel; });
            if (it == cfg.kernels.end()) {
                errors.push_back(where + "unknown kernel label '" + s.kernel + "'");
                continue;
            }
            s.family = it->family;
            s.m = it->m;
            s.v_min = it->v_min;
            s.v_max = it->v_max;
            s.points_per_decade = it->points_per_decade;
        } else if (e.explicit_kernel) {
            errors.push_back(where + "check '" + s.id + "' takes no kernel");
            continue;
        } else {
            s.kernel = "none";
            if (!cfg.kernels.empty()) s.m = cfg.kernels.front().m;
        }
        try {
            validate_check(s);
        } catch (const Error& err) {
            errors.push_back(where + err.what());
        }
    }
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

namespace {

struct Row {
    std::string id, kernel;
    Verdict verdict;
    double constant, stability, seconds;
};

std::string csv_line(const Row& r, bool timing) {
    char buf[320];
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.10g,%.10g,%.3f", r.id.c_str(), r.kernel.c_str(),
                  std::string(to_string(r.verdict)).c_str(), r.constant, r.stability, timing ? r.seconds : 0.0);
    return buf;
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
    std::ofstream f(p);
    if (!f) throw UsageError("cannot write '" + p.string() + "'");
    f << j.dump(2) << "\n";
    if (!f) throw UsageError("write failed for '" + p.string() + "'");
}

std::string two_digits(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02zu", i);
    return buf;
}

}  // namespace

int run_all(const RunConfig& cfg, const RunOptions& opts, std::ostream& log) {
    const std::uint64_t seed = opts.seed.value_or(cfg.seed);
    const std::filesystem::path out = opts.out.value_or(cfg.out);
    const int jobs = opts.jobs.value_or(cfg.jobs);
    if (jobs < 1) {
        log << "error: --jobs must be positive\n";
        return 2;
    }
#ifdef _OPENMP
    omp_set_num_threads(jobs);
#endif
    for (const auto& id : opts.only) {
        try {
            (void)check_id_from_string(id);
        } catch (const Error& e) {
            log << "error: " << e.what() << "\n";
            return 2;
        }
    }
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) {
        log << "error: cannot create output directory '" << out.string() << "': " << ec.message() << "\n";
        return 2;
    }

    std::vector<Row> rows;
    std::size_t item = 0;
    try {
        if (opts.part != RunPart::Checks) {
            for (const auto& a : cfg.audits) {
                const KernelSpec& ks = cfg.kernel(a.kernel);
                const auto t0 = std::chrono::steady_clock::now();
                const LogScaleRule rule(ks.v_min, ks.v_max, ks.points_per_decade);
                std::vector<ConditionReport> reps;
                if (a.kind == "cz") {
                    CheckSpec tmp;
                    tmp.family = ks.family;
                    tmp.kernel = ks.label;
                    tmp.m = ks.m;
                    tmp.n = cfg.n;
                    CZSamplingConfig c;
                    c.rule = rule;
                    c.seed += seed - 1;
                    const CZAudit au = audit_cz_conditions(check_kernel(tmp), c);
                    reps = {au.size, au.smooth_x, au.smooth_y};
                } else {
                    const Assumption which = assumption_from_string(a.kind);
                    ComposedKernel ck = nonsmooth_kernel(ks.m, cfg.n);
                    if (which == Assumption::H1) ck.slot = 1;
                    HAuditConfig h;
                    h.rule = rule;
                    h.seed += seed - 1;
                    try {
                        reps = {audit_nonsmooth_assumption(ck, which, h)};
                    } catch (const Error& e) {
                        ConditionReport r;
                        r.condition_id = a.kind;
                        r.kernel_label = ks.label;
                        r.verdict = Verdict::Error;
                        r.message = e.what();
                        reps = {r};
                    }
                }
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                nlohmann::json j;
                j["audit"] = a.kind;
                j["kernel"] = ks.label;
                j["conditions"] = nlohmann::json::array();
                for (auto& r : reps) {
                    r.kernel_label = ks.label;
                    j["conditions"].push_back(to_json(r));
                    rows.push_back({r.condition_id, ks.label, r.verdict, r.measured_constant, r.stability, secs});
                    log << to_string(r.verdict) << "  " << r.condition_id << "  kernel=" << ks.label
                        << "  C=" << r.measured_constant << "  stability=" << r.stability << "\n";
                }
                write_json(out / (two_digits(item++) + "_audit_" + a.kind + "_" + ks.label + ".json"), j);
            }
        }
        if (opts.part != RunPart::Audits) {
            for (std::size_t i = 0; i < cfg.checks.size(); ++i) {
                const auto& e = cfg.checks[i];
                if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), e.spec.id) == opts.only.end())
                    continue;
                CheckSpec s = e.spec;
                if (!e.explicit_seed) s.suite.seed = seed + i;
                VerificationReport rep;
                try {
                    rep = run_check(s);
                } catch (const Error& err) {
                    rep.check_id = s.id;
                    rep.kernel = s.kernel;
                    rep.spec = to_json(s);
                    rep.verdict = Verdict::Error;
                    rep.message = err.what();
                }
                rows.push_back({rep.check_id, rep.kernel, rep.verdict, rep.constant, rep.stability, rep.wall_seconds});
                log << to_string(rep.verdict) << "  " << rep.check_id << "  kernel=" << rep.kernel
                    << "  weight=" << rep.weight << "  C=" << rep.constant << "  stability=" << rep.stability
                    << (rep.message.empty() ? "" : "  (" + rep.message + ")") << "\n";
                write_json(out / (two_digits(item++) + "_" + rep.check_id + ".json"), to_json(rep));
            }
        }
        std::ofstream csv(out / "summary.csv");
        if (!csv) throw UsageError("cannot write '" + (out / "summary.csv").string() + "'");
        csv << csv_header() << "\n";
        for (const auto& r : rows) csv << csv_line(r, cfg.timing) << "\n";
        if (!csv) throw UsageError("write failed for summary.csv");
    } catch (const UsageError& e) {
        log << "error: " << e.what() << "\n";
        return 2;
    }
    bool fail = false, error = false;
    for (const auto& r : rows) {
        fail = fail || r.verdict == Verdict::Fail;
        error = error || r.verdict == Verdict::Error;
    }
    return error ? 2 : fail ? 1 : 0;
}

}  // namespace msq
