#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <doctest.h>

#include "msq/config.hpp"

using namespace msq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("msq-test-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const int raw = std::system((std::string(MSQ_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

const char* kPassing = R"(# two quick checks
grid.n = 1
grid.resolution = 128
kernel.label = k
kernel.m = 2
check.id = j_norm
check.p = 2
check.count = 3
check.id = hl_weighted_strong
check.p = 2
check.count = 3
)";

const char* kBrokenControl = R"(grid.resolution = 256
kernel.label = smooth
kernel.family = smooth
kernel.label = bad
kernel.family = broken
check.id = endpoint_weak_type
check.kernel = smooth
check.shapes = spike
check.count = 4
check.id = endpoint_weak_type
check.kernel = bad
check.shapes = spike
check.count = 4
)";

}  // namespace

TEST_CASE("minimal config gets defaults") {
    const RunConfig c = parse_config("kernel.label = k\ncheck.id = weighted_strong\ncheck.p_list = 4,4\n");
    CHECK(c.n == 1);
    CHECK(c.resolution == 512);
    REQUIRE(c.kernels.size() == 1);
    CHECK(c.kernels[0].m == 2);
    REQUIRE(c.checks.size() == 1);
    CHECK(c.checks[0].spec.kernel == "k");
    CHECK(c.checks[0].spec.p_list == std::vector<double>{4.0, 4.0});
}

TEST_CASE("config errors carry line numbers") {
    try {
        parse_config("grid.n = 2\nkernel.label = a\nkernel.m = 3\nkernel.label = a\ncheck.foo = 1\nnot a line\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string all;
        for (const auto& m : e.errors()) all += m + "\n";
        CHECK(all.find("integration dimension exceeds 4") != std::string::npos);
        CHECK(all.find("'a'") != std::string::npos);
        CHECK(all.find("line 5") != std::string::npos);
        CHECK(all.find("line 6") != std::string::npos);
    }
}

TEST_CASE("checks outside their hypotheses are config errors") {
    CHECK_THROWS_AS(parse_config("kernel.label = k\ncheck.id = sharp_maximal_pointwise\ncheck.delta = 0.7\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("kernel.label = k\nkernel.label = j\ncheck.id = cotlar\n"), ConfigError);
}

TEST_CASE("passing config exits 0 and reruns identically") {
    const fs::path dir = scratch("pass");
    RunConfig c = parse_config(kPassing);
    c.out = dir / "out";
    std::ostringstream log;
    CHECK(run_all(c, {}, log) == 0);
    const std::string first = read_file(dir / "out" / "summary.csv");
    int rows = 0;
    for (char ch : first) rows += ch == '\n';
    CHECK(rows == 1 + 2);
    CHECK(run_all(c, {}, log) == 0);
    CHECK(read_file(dir / "out" / "summary.csv") == first);
}

TEST_CASE("broken kernel control makes the run exit 1") {
    const fs::path dir = scratch("broken");
    std::ofstream(dir / "run.cfg") << kBrokenControl;
    CHECK(run_cli("run --config " + (dir / "run.cfg").string() + " --out " + (dir / "out").string()) == 1);
    const std::string summary = read_file(dir / "out" / "summary.csv");
    CHECK(summary.find("FAIL") != std::string::npos);
    CHECK(summary.find("PASS") != std::string::npos);
}

TEST_CASE("bad config and missing file exit 2") {
    const fs::path dir = scratch("usage");
    std::ofstream(dir / "bad.cfg") << "check.bogus = 1\n";
    CHECK(run_cli("run --config " + (dir / "bad.cfg").string()) == 2);
    CHECK(run_cli("run --config " + (dir / "missing.cfg").string()) == 2);
    CHECK(run_cli("version") == 0);
}
