// Command-line front end: solves the conformal constraint system on the
// flat torus and runs the verification modes.  See README.md for the
// config format; CONSTRAINTS_NUM_THREADS caps internal parallelism.

#include <CLI11.hpp>

#include <iostream>

#include "constraints/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Conformal constraint equations on the flat torus"};

    std::string config_path;
    std::string mode_override;
    std::string out_override;
    bool verbose = false;
    app.add_option("--config", config_path, "path to a key/value config file");
    app.add_option("--mode", mode_override,
                   "fixed-point | continuation | lichnerowicz | vector | make-tt | "
                   "check | stability | bootstrap");
    app.add_option("--out", out_override, "output directory for fields and report.json");
    app.add_flag("--verbose", verbose, "echo the report to stdout");

    CLI11_PARSE(app, argc, argv);

    constraints::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = constraints::parse_config(config_path);
        if (!mode_override.empty()) cfg.mode = mode_override;
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (verbose) cfg.verbose = true;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 4;
    }

    constraints::RunOutcome outcome = constraints::run(cfg);
    if (cfg.verbose || outcome.exit_code != 0) {
        if (outcome.report.contains("error"))
            std::cerr << "error: " << outcome.report["error"].get<std::string>() << "\n";
        if (cfg.verbose) std::cout << outcome.report.dump(2) << "\n";
    }
    std::cout << "mode=" << cfg.mode << " status="
              << outcome.report.value("status", std::string("unknown"))
              << " exit=" << outcome.exit_code << " report=" << cfg.out_dir
              << "/report.json\n";
    return outcome.exit_code;
}
