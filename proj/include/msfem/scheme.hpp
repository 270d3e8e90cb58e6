#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msfem/assembly.hpp"
#include "msfem/fespace.hpp"
#include "msfem/linalg.hpp"
#include "msfem/model.hpp"

namespace msfem::scheme {

using linalg::CsrMatrix;

/// Coefficients at one time level. u stacks the two P2 components.
struct State {
    double t = 0.0;
    std::vector<std::vector<double>> rho;  // N x nP1
    std::vector<std::vector<double>> mu;   // N x nP1
    std::vector<double> u;                 // 2 * nP2
    std::vector<double> p;                 // nP1
    double multiplier = 0.0;

    [[nodiscard]] int n_components() const noexcept { return static_cast<int>(rho.size()); }
    /// Nodal total density sum_i rho_i.
    [[nodiscard]] std::vector<double> total_density() const;
};

struct SolverConfig {
    double tau = 1e-3;
    double t_final = 0.1;
    double newton_tol = 1e-9;
    int newton_max_iter = 25;
    double damping = 0.5;
    int max_halvings = 30;

    void validate() const;
    /// round(t_final / tau)
    [[nodiscard]] int num_steps() const;

    bool operator==(const SolverConfig&) const = default;
};

/// Position of each unknown block in the flat Newton vector, which is also
/// the row order of the residual: mass (N), potential (N), momentum (2),
/// divergence, mean-pressure.
class Layout {
public:
    Layout(int ncomp, int n1, int n2) : N_(ncomp), n1_(n1), n2_(n2) {}

    [[nodiscard]] int ncomp() const noexcept { return N_; }
    [[nodiscard]] int n1() const noexcept { return n1_; }
    [[nodiscard]] int n2() const noexcept { return n2_; }
    [[nodiscard]] int rho(int i) const noexcept { return i * n1_; }
    [[nodiscard]] int mu(int i) const noexcept { return (N_ + i) * n1_; }
    [[nodiscard]] int u() const noexcept { return 2 * N_ * n1_; }
    [[nodiscard]] int p() const noexcept { return u() + 2 * n2_; }
    [[nodiscard]] int multiplier() const noexcept { return p() + n1_; }
    [[nodiscard]] int size() const noexcept { return multiplier() + 1; }

    [[nodiscard]] std::vector<double> pack(const State& s) const;
    [[nodiscard]] State unpack(std::span<const double> x, double t) const;

private:
    int N_;
    int n1_;
    int n2_;
};

/// Newton did not converge. Carries the time step and last residual norm.
class NewtonFailure : public std::runtime_error {
public:
    NewtonFailure(const std::string& what, int step, int iterations, double residual_norm)
        : std::runtime_error(what), step_(step), iterations_(iterations), residual_norm_(residual_norm)
    {
    }
    [[nodiscard]] int step() const noexcept { return step_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }
    [[nodiscard]] double residual_norm() const noexcept { return residual_norm_; }

private:
    int step_;
    int iterations_;
    double residual_norm_;
};

/// Matrices that depend only on the mesh and the parameters.
struct StaticOperators {
    StaticOperators(const fem::Discretization& disc, const model::MixtureParams& params);

    CsrMatrix mass_p1;    // <phi_b, phi_a>
    CsrMatrix mass_p2v;   // P2-vector mass
    CsrMatrix stress;     // S
    CsrMatrix div_pressure;  // D: <q_b, div v_a>
    std::vector<double> ones_p1;  // <1, phi_a>
};

/// The nonlinear system of one time step, linearized around any guess.
/// Everything that depends on the old state only is assembled once.
class StepSystem {
public:
    StepSystem(const fem::Discretization& disc, const model::MixtureParams& params,
               std::shared_ptr<const StaticOperators> ops, const State& old, double tau);

    [[nodiscard]] const Layout& layout() const noexcept { return layout_; }
    [[nodiscard]] const State& old_state() const noexcept { return old_; }
    [[nodiscard]] double tau() const noexcept { return tau_; }

    /// Throws model::DomainError when a density is nonpositive at a
    /// quadrature point of the guess.
    [[nodiscard]] std::vector<double> residual(std::span<const double> x) const;
    [[nodiscard]] CsrMatrix jacobian(std::span<const double> x) const;

    /// L2 norm using the P1/P2 mass matrices; the multiplier enters as-is.
    [[nodiscard]] double l2_norm(std::span<const double> dx) const;

    /// Block matrix K_ij = <M_ij(rho_old) grad phi_b, grad phi_a>.
    [[nodiscard]] const CsrMatrix& diffusion() const noexcept { return diffusion_; }
    [[nodiscard]] const StaticOperators& operators() const noexcept { return *ops_; }
    /// Residual part that is linear in the unknowns.
    [[nodiscard]] const CsrMatrix& linear_part() const noexcept { return linear_; }

private:
    void add_nonlinear_terms(std::span<const double> x, std::span<double> r) const;

    const fem::Discretization* disc_;
    model::MixtureParams params_;
    std::shared_ptr<const StaticOperators> ops_;
    State old_;
    double tau_;
    Layout layout_;
    std::vector<double> rho_old_total_qp_;
    CsrMatrix diffusion_;
    CsrMatrix linear_;
    std::vector<double> constant_;
};

struct NewtonResult {
    State state;
    int iterations = 0;
    double update_norm = 0.0;
    double residual_norm = 0.0;
};

/// Initial guess = old state. Throws NewtonFailure or linalg::SingularMatrixError.
[[nodiscard]] NewtonResult newton_solve(const StepSystem& system, const SolverConfig& config,
                                        int step_index = 0);

/// Nodal densities all strictly positive.
[[nodiscard]] bool densities_positive(const Layout& layout, std::span<const double> x);

// Initial data.

enum class InitialData { convergence2, experiment1, experiment2, uniform };

struct InitialDataSpec {
    InitialData kind = InitialData::convergence2;
    /// uniform: rho_1..rho_{N-1}; rho_N closes the constraint.
    std::vector<double> uniform_rho;
    std::array<double, 2> uniform_u{0.0, 0.0};

    bool operator==(const InitialDataSpec&) const = default;
};

/// Builds the state from the first N-1 densities and the velocity. rho_N is
/// derived nodewise from sum_i V_i rho_i = 1, mu = df/drho(rho), p = 0.
/// Throws std::invalid_argument if a derived density is nonpositive.
[[nodiscard]] State initial_state_from_functions(
    const fem::Discretization& disc, const model::MixtureParams& params,
    const std::vector<std::function<double(double, double)>>& rho_first,
    const std::function<std::array<double, 2>(double, double)>& velocity);

[[nodiscard]] State initial_state(const InitialDataSpec& spec, const model::MixtureParams& params,
                                  const fem::Discretization& disc);

/// Pointwise formulas of the named initial data, exposed for tests.
namespace formulas {
[[nodiscard]] double convergence_rho1(double x, double y);
[[nodiscard]] double experiment1_rho1(double x, double y);
[[nodiscard]] double experiment1_rho2(double x, double y);
[[nodiscard]] double experiment2_rho1(double x, double y);
[[nodiscard]] double experiment2_rho2(double x, double y);
[[nodiscard]] std::array<double, 2> swirl_velocity(double x, double y);
}  // namespace formulas

// Time march.

struct StepEvent {
    int step = 0;  // 1-based index of the completed step
    const State* old_state = nullptr;
    const State* new_state = nullptr;
    const StepSystem* system = nullptr;
    int newton_iterations = 0;
};

using StepSink = std::function<void(const StepEvent&)>;

struct RunOptions {
    std::vector<double> snapshot_times;
    bool keep_all_states = false;
};

struct Trajectory {
    State initial;
    State final_state;
    std::vector<State> states;     // every step when keep_all_states
    std::vector<State> snapshots;  // nearest step to each snapshot time
    std::vector<int> newton_iterations;
    int steps = 0;
};

/// Advances config.num_steps() steps, calling sink after each one.
/// NewtonFailure carries the 1-based index of the failing step.
[[nodiscard]] Trajectory run(const fem::Discretization& disc, const model::MixtureParams& params,
                             const State& initial, const SolverConfig& config,
                             const StepSink& sink = {}, const RunOptions& options = {});

}  // namespace msfem::scheme
