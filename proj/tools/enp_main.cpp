// enp: batch front-end for risk profiles, optimal allocations and the
// modular-vs-integrated SCR comparison.
//
// Exit codes: 0 ok, 1 validation failure, 2 config error, 3 numeric error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "enp/errors.hpp"
#include "enp/scenario.hpp"
#include "enp/validate.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed_override = -1;
    int jobs = 0;
    std::string measure = "both";
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_measure) {
    cmd->add_option("--config", args.config_path, "scenario config file (JSON)")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed_override, "override the config seed");
    cmd->add_option("--jobs", args.jobs, "worker threads (default: ENP_JOBS or cores)");
    if (with_measure) {
        cmd->add_option("--measure", args.measure, "var, es or both")
            ->check(CLI::IsMember({"var", "es", "both"}));
    }
}

enp::ScenarioConfig load(const CommonArgs& args) {
    enp::ScenarioConfig cfg = enp::load_scenario(args.config_path);
    if (args.seed_override >= 0) {
        cfg.mc.seed = static_cast<std::uint64_t>(args.seed_override);
    }
    if (args.jobs > 0) cfg.mc.jobs = args.jobs;
    return cfg;
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& content) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    std::cout << "wrote " << path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-minimal static hedges for claim-size times asset "
                 "liabilities: profiles, optimal allocations, SCR comparison"};
    app.require_subcommand(1);

    CommonArgs profile_args, optimize_args, scr_args, validate_args;
    CLI::App* profile = app.add_subcommand("profile",
                                           "risk profile over a phi grid (MC, "
                                           "expansions, Cornish-Fisher)");
    add_common(profile, profile_args, true);
    CLI::App* optimize = app.add_subcommand(
        "optimize", "optimal allocation vs volatility and skew grids");
    add_common(optimize, optimize_args, false);
    CLI::App* scr = app.add_subcommand(
        "scr", "integrated vs modular (ENP / RP) total SCR over a phi grid");
    add_common(scr, scr_args, false);
    CLI::App* validate = app.add_subcommand(
        "validate", "run the acceptance checks; nonzero exit on failure");
    add_common(validate, validate_args, false);
    std::vector<int> validate_only;
    validate->add_option("--only", validate_only, "run only these check ids")
        ->delimiter(',');

    CommonArgs kterms_args, samples_args;
    CLI::App* kterms = app.add_subcommand(
        "kterms", "debug export of the K-term bundle over the phi grid");
    add_common(kterms, kterms_args, false);
    CLI::App* samples = app.add_subcommand(
        "samples", "debug dump of surplus draws at one allocation");
    add_common(samples, samples_args, false);
    double samples_phi = 1.0;
    std::int64_t samples_count = 10000;
    samples->add_option("--phi", samples_phi, "allocation to dump at");
    samples->add_option("--count", samples_count, "rows to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (profile->parsed()) {
            const enp::ScenarioConfig cfg = load(profile_args);
            const bool want_var = profile_args.measure != "es";
            const bool want_es = profile_args.measure != "var";
            if (want_var) {
                write_file(profile_args.out_dir, "profile_var.csv",
                           enp::run_profile_csv(cfg, enp::Measure::VaR));
            }
            if (want_es) {
                write_file(profile_args.out_dir, "profile_es.csv",
                           enp::run_profile_csv(cfg, enp::Measure::ES));
            }
        } else if (optimize->parsed()) {
            const enp::ScenarioConfig cfg = load(optimize_args);
            write_file(optimize_args.out_dir, "optimize.csv",
                       enp::run_optimize_csv(cfg));
        } else if (scr->parsed()) {
            const enp::ScenarioConfig cfg = load(scr_args);
            write_file(scr_args.out_dir, "scr.csv", enp::run_scr_csv(cfg));
        } else if (kterms->parsed()) {
            const enp::ScenarioConfig cfg = load(kterms_args);
            write_file(kterms_args.out_dir, "kterms.csv", enp::run_kterms_csv(cfg));
        } else if (samples->parsed()) {
            const enp::ScenarioConfig cfg = load(samples_args);
            write_file(samples_args.out_dir, "samples.csv",
                       enp::run_samples_csv(cfg, samples_phi, samples_count));
        } else if (validate->parsed()) {
            const enp::ScenarioConfig cfg = load(validate_args);
            enp::AcceptanceSettings settings;
            settings.n_samples = cfg.mc.n_samples;
            settings.seed = cfg.mc.seed;
            settings.n_chunks = cfg.mc.n_chunks;
            settings.jobs = cfg.mc.jobs;
            settings.only = validate_only;
            if (auto warn = enp::tail_sample_warning(cfg.mc)) {
                std::cout << "warning: " << *warn << '\n';
            }
            const auto results = enp::run_acceptance(settings, &std::cout);
            int failures = 0;
            for (const auto& r : results) failures += r.passed ? 0 : 1;
            std::cout << (failures == 0 ? "all checks passed"
                                        : std::to_string(failures) +
                                              " check(s) failed")
                      << '\n';
            return failures == 0 ? 0 : 1;
        }
    } catch (const enp::scenario_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
