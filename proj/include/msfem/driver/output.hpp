#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "msfem/diagnostics.hpp"
#include "msfem/driver/config.hpp"
#include "msfem/fespace.hpp"
#include "msfem/scheme.hpp"

namespace msfem::driver {

/// Shortest text that reads back to the same double (17 significant digits).
[[nodiscard]] std::string format_double(double v);

/// Raised when an output file cannot be created or written.
class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Streams diagnostics.csv one row at a time so that a run interrupted by a
/// solver failure still leaves the rows it completed.
class DiagnosticsWriter {
public:
    DiagnosticsWriter(const std::filesystem::path& path, int ncomp);
    void write(const diagnostics::StepDiagnostics& d);

private:
    std::ofstream out_;
    std::filesystem::path path_;
    int ncomp_;
};

/// Rows as given; run_experiment passes steps 1..n only.
void write_diagnostics_csv(const std::filesystem::path& path, int ncomp,
                           const std::vector<diagnostics::StepDiagnostics>& rows);

/// One file, two row kinds. "p1" rows carry x, y, rho_1..rho_N, rho, p and
/// mu_1..mu_N at a vertex; "p2" rows carry u_x, u_y at a P2 node. Columns
/// not used by a row kind are left empty.
void write_fields_csv(const std::filesystem::path& path, const fem::Discretization& disc,
                      const scheme::State& s);

/// Reads a fields CSV back into a state (t is left at 0).
[[nodiscard]] scheme::State read_fields_csv(const std::filesystem::path& path);

/// ASCII VTK unstructured grid on the unwrapped vertex grid. Point data:
/// rho_i, rho, p, mu_i, velocity (vertex values of the P2 field) and |u|^2.
void write_fields_vtu(const std::filesystem::path& path, const fem::Discretization& disc,
                      const scheme::State& s);

/// fields_<t>.csv with t printed to six decimals.
[[nodiscard]] std::string snapshot_stem(double t);

struct RunSummary {
    std::string status;  // "ok", "invariant_failure" or "solver_failure"
    std::string message;
    int steps_requested = 0;
    int steps_completed = 0;
    std::vector<diagnostics::InvariantResult> invariants;
    std::optional<diagnostics::StepDiagnostics> initial;
};

void write_summary_json(const std::filesystem::path& path, const ExperimentConfig& config,
                        const RunSummary& summary);

struct EocTable {
    std::vector<diagnostics::ErrorRow> rows;
    std::vector<std::optional<double>> eoc_rho, eoc_mu, eoc_u, eoc_p;
    std::vector<double> max_div_defect;
};

/// level, err_rho, eoc_rho, err_mu, eoc_mu, err_u, eoc_u, err_p, eoc_p,
/// max_div_defect. Undefined orders are written as empty cells.
void write_eoc_csv(const std::filesystem::path& path, const EocTable& table);

}  // namespace msfem::driver
