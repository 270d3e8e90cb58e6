#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "msfem/fespace.hpp"
#include "msfem/model.hpp"
#include "msfem/scheme.hpp"

namespace msfem::diagnostics {

using scheme::State;

/// One row per accepted step (step 0 describes the initial data and carries
/// zero dissipation terms).
struct StepDiagnostics {
    int step = 0;
    double t = 0.0;
    std::vector<double> partial_masses;
    double constraint_max = 0.0;     // max nodal |sum_i V_i rho_i - 1|
    double min_nodal_density = 0.0;  // min over i and nodes of rho_i
    double min_total_density = 0.0;
    double max_total_density = 0.0;
    double e_kin = 0.0;
    double e_int = 0.0;
    double e_total = 0.0;
    double d_num = 0.0;
    double visc_dissipation = 0.0;
    double diff_dissipation = 0.0;
    double energy_balance = 0.0;
    double e_rel = 0.0;
    double div_defect = 0.0;  // max_a |<div u, phi_a>|
    int newton_iterations = 0;
};

/// Column names matching StepDiagnostics, with one mass column per component.
[[nodiscard]] std::vector<std::string> csv_columns(int ncomp);

struct SteadyState {
    std::vector<double> rho_inf;
    std::array<double, 2> u_inf{0.0, 0.0};
};

/// rho_i^inf = <rho_i^0, 1>, u^inf = <rho^0 u^0, 1> / <rho^0, 1>.
[[nodiscard]] SteadyState steady_state(const fem::Discretization& disc, const State& initial);

[[nodiscard]] std::vector<double> partial_masses(const fem::Discretization& disc, const State& s);
[[nodiscard]] double constraint_max(const State& s, const model::MixtureParams& params);
/// 1/2 <rho |u|^2, 1>
[[nodiscard]] double kinetic_energy(const fem::Discretization& disc, const State& s);
/// <f(rho), 1>
[[nodiscard]] double internal_energy(const fem::Discretization& disc, const State& s);

/// (1/2tau) <rho_old |u_new - u_old|^2, 1>
///   + (1/tau) [sum_i <df/drho_i(rho_new), rho_new_i - rho_old_i> - <f(rho_new) - f(rho_old), 1>]
[[nodiscard]] double numerical_dissipation(const fem::Discretization& disc, const State& old_state,
                                           const State& new_state, double tau);

[[nodiscard]] double relative_energy(const fem::Discretization& disc, const State& s,
                                     const SteadyState& steady);

/// max_a |<div u, phi_a>| over P1 test functions.
[[nodiscard]] double div_defect(const scheme::StaticOperators& ops, const State& s);

[[nodiscard]] StepDiagnostics evaluate_initial(const fem::Discretization& disc,
                                               const model::MixtureParams& params, const State& s,
                                               const SteadyState& steady);

/// Diagnostics of a completed step; dissipation matrices are taken from the
/// step system so that they match what the solver used.
[[nodiscard]] StepDiagnostics evaluate_step(const fem::Discretization& disc,
                                            const model::MixtureParams& params,
                                            const scheme::StepEvent& event, const SteadyState& steady);

struct InvariantResult {
    std::string name;
    bool pass = true;
    double worst = 0.0;      // worst observed value of the checked quantity
    double tolerance = 0.0;  // bound it is compared against
    std::string description;
};

/// Accumulates the structural checks over a run.
class InvariantMonitor {
public:
    InvariantMonitor(const model::MixtureParams& params, double tau);

    void observe(const StepDiagnostics& d);
    [[nodiscard]] std::vector<InvariantResult> results() const;
    [[nodiscard]] bool all_pass() const;

private:
    model::MixtureParams params_;
    double tau_;
    bool have_previous_ = false;
    StepDiagnostics previous_;
    std::vector<double> initial_masses_;
    double mass_drift_ = 0.0;
    double constraint_ = 0.0;
    double bounds_violation_ = 0.0;
    double energy_increase_ = -std::numeric_limits<double>::infinity();
    double balance_ = 0.0;
    double min_dissipation_ = std::numeric_limits<double>::infinity();
    double min_density_ = std::numeric_limits<double>::infinity();
    double div_defect_ = 0.0;
};

/// Convergence errors of one level against the reference.
struct ErrorRow {
    int level = 0;
    double err_rho = 0.0;
    double err_mu = 0.0;
    double err_u = 0.0;
    double err_p = 0.0;
};

/// Both state lists hold the states after steps 1..n on the same time grid.
/// Coarse fields are evaluated exactly at the reference quadrature points.
[[nodiscard]] ErrorRow error_norms(const fem::Discretization& coarse, const std::vector<State>& coarse_states,
                                   const fem::Discretization& ref, const std::vector<State>& ref_states,
                                   double tau);

/// eoc[k] = log(err[k-1]/err[k]) / log(h[k-1]/h[k]); eoc[0] and pairs with a
/// zero error are empty.
[[nodiscard]] std::vector<std::optional<double>> eoc(const std::vector<double>& errors,
                                                     const std::vector<double>& h);

}  // namespace msfem::diagnostics
