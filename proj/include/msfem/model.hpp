#pragma once

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

// Ideal-gas mixture closures: f(rho) = sum_i rho_i log(rho_i / rho) with
// rho = sum_i rho_i, and the mobility M_ij = m0 (rho_i delta_ij - rho_i rho_j / rho).
namespace msfem::model {

/// Raised when a closure is evaluated outside its domain (nonpositive density).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct MixtureParams {
    int n_components = 2;
    std::vector<double> V;  // specific volumes
    double nu = 1e-3;
    double lambda = 0.0;
    double mobility_scale = 1.0;

    /// Throws std::invalid_argument naming the first violated bound.
    void validate() const;
    [[nodiscard]] double v_min() const;
    [[nodiscard]] double v_max() const;
    /// (nu, lambda) for the stress tensor nu (grad u + grad u^T) + lambda div u I.
    [[nodiscard]] std::pair<double, double> stress_parameters() const { return {nu, lambda}; }

    bool operator==(const MixtureParams&) const = default;
};

[[nodiscard]] double internal_energy(std::span<const double> rho);

/// out_i = log(rho_i / rho)
void chemical_potential_core(std::span<const double> rho, std::span<double> out);
[[nodiscard]] std::vector<double> chemical_potential_core(std::span<const double> rho);

/// Row-major N x N: H_ij = delta_ij / rho_i - 1 / rho.
void energy_hessian(std::span<const double> rho, std::span<double> out);
[[nodiscard]] std::vector<double> energy_hessian(std::span<const double> rho);

/// Row-major N x N. Requires rho_i >= 0 and rho > 0.
void mobility(std::span<const double> rho, double scale, std::span<double> out);
[[nodiscard]] std::vector<double> mobility(std::span<const double> rho, double scale = 1.0);

}  // namespace msfem::model
