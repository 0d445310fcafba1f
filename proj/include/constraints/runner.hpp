// Mode dispatch: builds the seed described by a RunConfig, runs the
// requested driver, writes CFLD artifacts and the JSON report, and maps
// failures onto process exit codes:
//   0 success, 2 solver failure, 3 infeasible/degenerate verdict,
//   4 configuration error.

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>

#include "constraints/config.hpp"
#include "constraints/io.hpp"
#include "constraints/presets.hpp"
#include "constraints/report.hpp"
#include "constraints/runner_modes.hpp"

namespace constraints {

struct RunOutcome {
    int exit_code = 0;
    Json report;
};

inline int classify_failure(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 4;
    if (dynamic_cast<const DegenerateData*>(&e) || dynamic_cast<const ConditionViolated*>(&e) ||
        dynamic_cast<const InfeasibleStability*>(&e) ||
        dynamic_cast<const SolvabilityViolation*>(&e) ||
        dynamic_cast<const NonPositiveEta*>(&e) || dynamic_cast<const NonEscaping*>(&e))
        return 3;
    if (dynamic_cast<const SolverError*>(&e)) return 2;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return 4;
    return 2;
}

inline RunOutcome run(const RunConfig& cfg) {
    RunOutcome outcome;
    outcome.report["schema_version"] = kReportSchemaVersion;
    outcome.report["mode"] = cfg.mode;
    outcome.report["config"] = cfg.raw;

    const auto start = std::chrono::steady_clock::now();
    try {
        validate_config(cfg);
        std::filesystem::create_directories(cfg.out_dir);
        detail::dispatch_mode(cfg, outcome.report);
        outcome.report["status"] = "ok";
    } catch (const std::exception& e) {
        outcome.exit_code = classify_failure(e);
        outcome.report["status"] = "error";
        outcome.report["error"] = e.what();
        outcome.report["error_exit_code"] = outcome.exit_code;
    }
    const auto stop = std::chrono::steady_clock::now();
    outcome.report["elapsed_seconds"] =
        std::chrono::duration<double>(stop - start).count();

    // "check" demotes threshold violations to exit 2 after reporting.
    if (outcome.exit_code == 0 && outcome.report.contains("check") &&
        outcome.report["check"].contains("passed") &&
        outcome.report["check"]["passed"] == false)
        outcome.exit_code = 2;
    if (outcome.exit_code == 0 && outcome.report.contains("stability") &&
        outcome.report["stability"]["feasible"] == false)
        outcome.exit_code = 3;

    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (!ec) {
        std::ofstream os(std::filesystem::path(cfg.out_dir) / "report.json");
        os << outcome.report.dump(2) << "\n";
    }
    return outcome;
}

}  // namespace constraints
