#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "msq/config.hpp"
#include "msq/czd.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<std::string> split_ids(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

// chi_[0,1) on the root [0,4) at level 0.3
int demo_czd(const std::string& out_dir) {
    using namespace msq;
    const Box root({2.0}, 2.0);
    const Field f = Field::from_function(root, 16, [](Coords x) { return x[0] >= 0.0 && x[0] < 1.0 ? 1.0 : 0.0; });
    const CZDecomposition d = cz_decompose(f, 0.3);
    std::cout << "f = indicator of [0,1) on [0,4), 16 cells, level " << d.level << "\n";
    for (std::size_t k = 0; k < d.cubes.size(); ++k) {
        const Box& q = d.cubes[k];
        std::cout << "cube " << k << ": [" << q.lo(0) << ", " << q.hi(0) << ")  depth " << d.depths[k] << "\n";
    }
    std::cout << "good part:";
    for (double v : d.good.samples()) std::cout << " " << v;
    std::cout << "\n";
    for (std::size_t k = 0; k < d.bad.size(); ++k) {
        std::cout << "atom " << k << ":";
        for (double v : d.bad[k].atom.samples()) std::cout << " " << v;
        std::cout << "\n";
    }
    std::cout << "||g||_inf / level = " << d.c_good << "  (bound 2^n = 2)\n";
    std::cout << "max ||b_k||_1 / (level |Q_k|) = " << d.c_atoms << "  (bound 2 * 2^n = 4)\n";
    std::cout << "level * sum |Q_k| / ||f||_1 = " << d.c_cover << "  (bound 1)\n";
    const CZValidation v = czd_validate(d);
    for (const auto& c : v.checks)
        std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.property << "  value " << c.value << "  bound " << c.bound << "\n";
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_decomposition(out_dir, "demo", d);
        std::cout << "wrote " << out_dir << "/demo.json\n";
    }
    return v.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multilinear square function laboratory"};
    app.require_subcommand(1);

    std::string config, out, only;
    std::uint64_t seed = 0;
    int jobs = 0;
    const auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides run.out)");
        sub->add_option("--seed", seed, "base seed (overrides run.seed)");
        sub->add_option("--jobs", jobs, "worker threads (overrides run.jobs)")->check(CLI::PositiveNumber);
        sub->add_option("--only", only, "comma separated check ids");
    };
    auto* audit = app.add_subcommand("audit", "kernel condition audits only");
    auto* check = app.add_subcommand("check", "inequality checks only");
    auto* run = app.add_subcommand("run", "audits, then checks");
    for (auto* s : {audit, check, run}) add_run_flags(s);
    auto* demo = app.add_subcommand("demo-czd", "print a worked Calderon-Zygmund decomposition");
    std::string demo_out;
    demo->add_option("--out", demo_out, "also write the decomposition files here");
    auto* version = app.add_subcommand("version", "print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (version->parsed()) {
            std::cout << "msq " << kVersion << "\n";
            return 0;
        }
        if (demo->parsed()) return demo_czd(demo_out);

        msq::RunOptions opts;
        opts.part = audit->parsed() ? msq::RunPart::Audits : check->parsed() ? msq::RunPart::Checks : msq::RunPart::Both;
        opts.only = split_ids(only);
        const auto* sub = audit->parsed() ? audit : check->parsed() ? check : run;
        if (sub->count("--seed")) opts.seed = seed;
        if (sub->count("--jobs")) opts.jobs = jobs;
        if (sub->count("--out")) opts.out = out;
        const msq::RunConfig cfg = msq::load_config(config);
        return msq::run_all(cfg, opts, std::cout);
    } catch (const msq::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
