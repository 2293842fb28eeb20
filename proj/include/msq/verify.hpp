#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "msq/grid.hpp"
#include "msq/kernels.hpp"
#include "msq/maximal.hpp"
#include "msq/report.hpp"

namespace msq {

enum class CheckId {
    EndpointWeakType,
    WeightedStrong,
    WeightedWeak,
    SharpMaximalPointwise,
    FarField,
    Cotlar,
    TStarStrong,
    TStarWeak,
    MarcinkiewiczIntegral,
    JNorm,
    FeffermanStein,
    HLWeightedStrong,
    HLWeightedWeak,
};

std::string to_string(CheckId id);
/// Throws UsageError for an unknown id.
CheckId check_id_from_string(const std::string& s);
const std::vector<CheckId>& all_check_ids();

/// How test inputs are drawn.
///
/// Test i < count carries a scale s_i running from 1 to 1/2; test count + i
/// repeats the same draw at scale s_i / 8. Centers and widths are multiplied by
/// the scale, so the hardened half concentrates toward the origin.
struct SuiteSpec {
    std::size_t count = 8;  ///< base tests; the suite holds 2 * count
    std::uint64_t seed = 1;
    /// gaussian, indicator, wavelet, spike; cycled over the tests
    std::vector<std::string> shapes{"gaussian", "indicator", "wavelet"};
    bool centered = false;       ///< every input centered at the origin
    double support_radius = 0.0; ///< inputs live in B(0, support_radius); 0 picks a check default
    /// constant added on the whole box after normalization; nonzero only for
    /// negative controls, since the sum is no longer compactly supported;
    /// the hardened half uses 8 times the offset
    double offset = 0.0;
};

struct CheckSpec {
    std::string id = "weighted_strong";
    std::string kernel = "smooth";  ///< label, for reports
    std::string family = "smooth";  ///< smooth | broken | nonsmooth
    int m = 2;
    int n = 1;
    double v_min = 1e-4;
    double v_max = 1e4;
    int points_per_decade = 32;

    std::vector<double> p_list;  ///< p_1 .. p_m for the T checks
    double p = 0.0;              ///< target exponent; 0 derives it or uses the check default
    double delta = 0.0;          ///< sharp maximal / Fefferman-Stein; 0 means 1/(2m) or 1/2
    double eta = 0.0;            ///< Cotlar; 0 means 1/(2m)
    double epsilon = 1.0;        ///< auxiliary functions
    std::string weight = "constant";  ///< constant | power:<a> | random:<seed>

    double half_width = 4.0;
    std::size_t resolution = 512;
    std::size_t delta_count = 12;  ///< truncation radii for T*, geometric from h to the diameter
    double far_radius = 0.0;       ///< R for far_field, 0 uses each test's own support radius
    double stability_limit = 2.0;
    SuiteSpec suite;
};

nlohmann::json to_json(const CheckSpec& s);

struct TestCase {
    std::vector<Field> inputs;
    double scale = 1.0;
    std::string shape;
    double support_radius = 0.0;  ///< max |x| over nonzero samples plus half a cell diagonal
};

/// 2 * suite.count tests of `arity` inputs each on the check's grid. Every
/// input is normalized to unit L^1 norm. Throws DomainError if an input leaves
/// the central half-box or is not resolved by the grid.
std::vector<TestCase> generate_test_suite(const CheckSpec& spec, int arity);

/// Random families of disjoint dyadic cubes for the auxiliary checks, the
/// second half built from smaller cubes.
std::vector<CubeFamilySummary> generate_cube_families(const CheckSpec& spec);

struct ConstantFit {
    double constant = 0.0;   ///< max over the first half
    double stability = 0.0;  ///< max over all / constant
    bool finite = true;
};

/// Throws UsageError on an empty list.
ConstantFit fit_constant(const std::vector<double>& ratios);

struct VerificationReport {
    std::string check_id;
    std::string kernel;
    std::string weight;
    nlohmann::json spec;
    std::vector<double> ratios;
    double constant = 0.0;
    double stability = 0.0;
    Verdict verdict = Verdict::Error;
    int argmax_test = -1;  ///< test holding the largest ratio
    Point argmax_point;    ///< node of that ratio, for pointwise checks
    int failing_test = -1; ///< test that raised, for ERROR verdicts
    double wall_seconds = 0.0;
    std::string message;
    nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const VerificationReport& r);
std::string csv_header();
/// check_id,kernel,verdict,constant,stability,wall_seconds
std::string csv_row(const VerificationReport& r, double wall_seconds);

/// Throws SpecError when the exponents, kernel or suite violate the
/// hypotheses of the inequality.
void validate_check(const CheckSpec& spec);

/// Validates, builds the suite, evaluates both sides on every test and fits
/// the constant. Numerical failures give verdict ERROR with the test index.
VerificationReport run_check(const CheckSpec& spec);

/// The kernel family a check evaluates; nonsmooth maps to its base family.
KernelFamily check_kernel(const CheckSpec& spec);

}  // namespace msq
