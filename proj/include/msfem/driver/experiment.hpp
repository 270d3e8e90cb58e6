#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msfem/diagnostics.hpp"
#include "msfem/driver/config.hpp"
#include "msfem/driver/output.hpp"
#include "msfem/scheme.hpp"

namespace msfem::driver {

struct RunResult {
    std::vector<diagnostics::StepDiagnostics> diagnostics;  // step 0 first
    std::vector<diagnostics::InvariantResult> invariants;
    bool invariants_pass = false;
    std::optional<std::string> failure;  // solver failure message
    int steps_completed = 0;
    scheme::Trajectory trajectory;
};

struct RunControl {
    bool keep_all_states = false;
    /// Called after each step's diagnostics; for progress output.
    std::function<void(const diagnostics::StepDiagnostics&)> on_step;
};

/// Runs one configuration. If config.output_dir is non-empty, writes
/// config.json, diagnostics.csv, snapshot fields and summary.json there.
/// Solver failures are reported in RunResult::failure, not thrown.
[[nodiscard]] RunResult run_experiment(const ExperimentConfig& config, const RunControl& control = {});

struct ConvergenceResult {
    EocTable table;
    std::optional<std::string> failure;
};

/// Runs the reference level and every level of the ladder with the same time
/// grid and tabulates errors and orders. Per-level outputs go to
/// <output_dir>/level_<k>, the table to <output_dir>/eoc_table.csv.
[[nodiscard]] ConvergenceResult run_convergence(const ExperimentConfig& base, const std::vector<int>& levels,
                                                int reference_level, const RunControl& control = {});

}  // namespace msfem::driver
