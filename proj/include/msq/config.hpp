#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msq/audits.hpp"
#include "msq/error.hpp"
#include "msq/verify.hpp"

namespace msq {

/// All problems found in a config, one "line N: message" entry each.
class ConfigError : public UsageError {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    std::vector<std::string> errors_;
};

struct KernelSpec {
    std::string label;
    std::string family = "smooth";  ///< smooth | broken | nonsmooth | zero
    int m = 2;
    double v_min = 1e-4;
    double v_max = 1e4;
    int points_per_decade = 32;
    int line = 0;
};

struct AuditSpec {
    std::string kernel;
    std::string kind = "cz";  ///< cz | H1 | H2-size | H2-smooth | H3
    int line = 0;
};

struct CheckEntry {
    CheckSpec spec;
    bool explicit_seed = false;  ///< otherwise the suite seed derives from run.seed
    bool explicit_kernel = false;
    int line = 0;
};

struct RunConfig {
    int n = 1;
    double half_width = 4.0;
    std::size_t resolution = 512;
    std::vector<KernelSpec> kernels;
    std::vector<AuditSpec> audits;
    std::vector<CheckEntry> checks;
    std::filesystem::path out = "msq-out";
    std::uint64_t seed = 1;
    int jobs = 1;
    bool timing = false;  ///< write measured wall time into summary.csv (otherwise 0)

    const KernelSpec& kernel(const std::string& label) const;
};

/// Line-oriented `section.key = value` text, `#` starts a comment.
/// `kernel.label`, `audit.kernel` and `check.id` each open a new block that
/// the following keys of the same section fill in. Throws ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

enum class RunPart { Audits, Checks, Both };

struct RunOptions {
    RunPart part = RunPart::Both;
    std::vector<std::string> only;  ///< check ids to keep, empty keeps all
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::filesystem::path> out;
};

/// Runs audits then checks in declaration order, writes one JSON report per
/// item and summary.csv into the output directory, and logs one line per item
/// to `log`. Returns 0 if every verdict is PASS, 1 if any FAIL, 2 on ERROR or I/O failure.
int run_all(const RunConfig& cfg, const RunOptions& opts, std::ostream& log);

}  // namespace msq
