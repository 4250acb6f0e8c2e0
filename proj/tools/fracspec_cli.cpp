#include <algorithm>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracspec/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fracspec;

int main(int argc, char** argv) {
    CLI::App app{"Fractional diffusion spectral laboratory"};
    app.require_subcommand(1);

    std::string config, out = "out", spectral;
    std::vector<std::string> records;
    int workers = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool strict = false;

    auto add_common = [&](CLI::App* s, bool needs_config) {
        auto* c = s->add_option("--config", config, "experiment config (JSON)");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        s->add_option("--out", out, "output directory");
        s->add_option("--workers", workers, "OpenMP worker threads (0 = default)")->check(CLI::NonNegativeNumber);
        s->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { seed = v; seed_given = true; },
                                              "override the config seed");
        s->add_flag("--strict", strict, "treat tolerance warnings as failures");
    };
    auto* sim = app.add_subcommand("simulate", "forward records of the configured source");
    add_common(sim, true);
    auto* rec = app.add_subcommand("recover", "spectral data from records");
    add_common(rec, true);
    rec->add_option("records", records, "record files (default: <out>/record*.frec)");
    auto* wav = app.add_subcommand("wavecheck", "compare the hyperbolic operator with the wave oracle");
    add_common(wav, true);
    wav->add_option("--spectral", spectral, "spectral data JSON (default: <out>/spectral.json)");
    auto* rep = app.add_subcommand("report", "CSV exports of an output directory");
    add_common(rep, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        RunOptions opt{strict, workers};
        RunResult r;
        if (rep->parsed()) {
            r = run_report(out, opt);
        } else {
            ExperimentConfig c = load_config(config);
            if (seed_given) c.seed = seed;
            if (sim->parsed()) {
                r = run_simulate(c, out, opt);
            } else if (rec->parsed()) {
                std::vector<fs::path> paths(records.begin(), records.end());
                if (paths.empty() && fs::is_directory(out))
                    for (const auto& e : fs::directory_iterator(out))
                        if (e.path().extension() == ".frec") paths.push_back(e.path());
                std::sort(paths.begin(), paths.end());
                r = run_recover(c, paths, out, opt);
            } else {
                r = run_wavecheck(c, spectral.empty() ? fs::path(out) / "spectral.json" : fs::path(spectral), out, opt);
            }
        }
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << r.status << "\n";
        return r.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}
