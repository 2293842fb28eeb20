#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "msq/kernels.hpp"
#include "msq/report.hpp"

namespace msq {

/// One audited configuration: left side, the two pieces of the right side
/// (taken with A = 1) and their ratio.
struct SampleBreakdown {
    double left = 0.0;
    double bump_term = 0.0;  ///< the phi-term, 0 when the condition has none
    double power_term = 0.0; ///< size term or t^(eps/s) term
    double ratio = 0.0;
};

/// Outcome of auditing one kernel condition on a finite sample.
///
/// The measured constant is the largest left/right ratio on the base sample;
/// `stability` is the measured constant on the extended sample divided by it.
struct ConditionReport {
    std::string condition_id;
    std::string kernel_label;
    std::size_t sample_count = 0;
    double measured_constant = 0.0;
    double extended_constant = 0.0;
    double stability = 0.0;
    double fitted_exponent = 0.0;
    double nominal_exponent = 0.0;
    /// "within": |fitted - nominal| <= tolerance; "positive": fitted > 0.
    std::string exponent_rule = "within";
    double exponent_tolerance = 0.1;
    double stability_limit = 2.0;
    Verdict verdict = Verdict::Error;
    std::vector<double> ratio_deciles;
    std::vector<SampleBreakdown> breakdown;
    std::string message;
    /// extra measurements that do not enter the verdict
    nlohmann::json diagnostics = nlohmann::json::object();
};

nlohmann::json to_json(const ConditionReport& r);

/// Sampling plan for the size and smoothness conditions of a kernel family.
struct CZSamplingConfig {
    std::size_t configurations = 16;       ///< random direction sets
    std::size_t radii_per_configuration = 9;
    double r_min = 0.05;
    double r_max = 20.0;
    /// |z - x| / max_j |x - y_j|; each must be <= 1/B.
    std::vector<double> perturbation_ratios{1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1};
    double range_extension = 2.0;  ///< extended sample covers [r_min / e, r_max * e]
    double exponent_tolerance = 0.1;
    double stability_limit = 2.0;
    std::uint64_t seed = 17;
    LogScaleRule rule{1e-4, 1e4, 32};
};

struct CZAudit {
    ConditionReport size;       ///< (\int |K_v|^2 dv/v)^(1/2) <= A / (sum |x - y_j|)^(mn)
    ConditionReport smooth_x;   ///< perturbation of x
    ConditionReport smooth_y;   ///< perturbation of one y_i
    Verdict verdict = Verdict::Error;
};

/// (\int |K_v(x, y)|^2 dv/v)^(1/2). Throws DomainError on the diagonal and
/// AccuracyError if the v-integral is not finite.
double kernel_l2v(const KernelFamily& k, Coords x, Coords ys, const LogScaleRule& rule);

CZAudit audit_cz_conditions(const KernelFamily& k, const CZSamplingConfig& cfg = {});

enum class Assumption { H1, H2Size, H2Smooth, H3 };
std::string to_string(Assumption a);
Assumption assumption_from_string(const std::string& s);

/// One admissible configuration for an H-assumption audit.
struct HSample {
    Point x;
    Point ys;       ///< flat y_1 .. y_m
    Point x_prime;  ///< H3 only
    double t = 0.0;
    int direction = 0;     ///< direction set the sample was built from
    int radius_index = 0;  ///< position in the separation sweep
    int t_index = 0;       ///< position in the t sweep
};

struct HAuditConfig {
    std::size_t directions = 5;
    std::size_t radii = 5;      ///< radii per direction set, geometric in [r_min, r_max]
    std::size_t t_values = 8;   ///< values of t per (direction, radius)
    double r_min = 0.25;
    double r_max = 4.0;
    /// t^(1/s) = ratio * (constraint distance) / 2 with ratio geometric in [t_ratio_min, 1].
    double t_ratio_min = 1.0 / 64.0;
    double range_extension = 2.0;  ///< extended sample uses [r_min, e * r_max]
    double exponent_tolerance = 0.1;
    double stability_limit = 2.0;
    std::uint64_t seed = 29;
    LogScaleRule rule{1e-4, 1e4, 32};
    ComposedQuadrature quad;
};

/// Admissible samples for `which` with separations up to `r_max`. The radii
/// continue one geometric progression from cfg.r_min, so a larger `r_max`
/// yields a superset. H1 needs ck.slot >= 1, the others ck.slot == 0.
std::vector<HSample> generate_h_samples(const ComposedKernel& ck, Assumption which, const HAuditConfig& cfg,
                                        double r_max);

/// Throws PreconditionError when `s` violates the admissibility constraint of `which`.
void validate_h_sample(const ComposedKernel& ck, Assumption which, const HSample& s);

/// Left side, right side pieces and ratio for one sample (sample must be admissible).
SampleBreakdown evaluate_h_sample(const ComposedKernel& ck, Assumption which, const HSample& s,
                                  const LogScaleRule& rule, const ComposedQuadrature& quad);

/// Audits `which` on `base`; `extra` holds the additional samples of the
/// extended run. Every sample is validated before any kernel evaluation and
/// the first violation raises PreconditionError.
ConditionReport audit_h_samples(const ComposedKernel& ck, Assumption which, const std::vector<HSample>& base,
                                const std::vector<HSample>& extra, const HAuditConfig& cfg);

ConditionReport audit_nonsmooth_assumption(const ComposedKernel& ck, Assumption which,
                                           const HAuditConfig& cfg = {});

}  // namespace msq
