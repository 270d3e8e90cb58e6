#include "msfem/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace msfem::model {

void MixtureParams::validate() const
{
    if (n_components < 2) {
        throw std::invalid_argument("n_components must be >= 2");
    }
    if (V.size() != static_cast<std::size_t>(n_components)) {
        throw std::invalid_argument("V must have n_components entries");
    }
    for (std::size_t i = 0; i < V.size(); ++i) {
        if (!(V[i] > 0.0) || !std::isfinite(V[i])) {
            throw std::invalid_argument("V[" + std::to_string(i) + "] must be positive");
        }
    }
    if (!(nu > 0.0) || !std::isfinite(nu)) {
        throw std::invalid_argument("nu must be positive");
    }
    if (!(lambda >= -nu) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be >= -nu");
    }
    if (!(mobility_scale > 0.0) || !std::isfinite(mobility_scale)) {
        throw std::invalid_argument("mobility_scale must be positive");
    }
}

double MixtureParams::v_min() const { return *std::min_element(V.begin(), V.end()); }
double MixtureParams::v_max() const { return *std::max_element(V.begin(), V.end()); }

namespace {

void check_out(std::span<const double> rho, std::span<double> out, std::size_t size, const char* what)
{
    if (rho.empty() || out.size() != size) {
        throw std::invalid_argument(std::string(what) + ": output size mismatch");
    }
}

double checked_total(std::span<const double> rho)
{
    double total = 0.0;
    for (double r : rho) {
        if (!(r > 0.0)) {
            throw DomainError("nonpositive partial density " + std::to_string(r));
        }
        total += r;
    }
    return total;
}

}  // namespace

double internal_energy(std::span<const double> rho)
{
    const double total = checked_total(rho);
    double f = 0.0;
    for (double r : rho) {
        f += r * std::log(r / total);
    }
    return f;
}

void chemical_potential_core(std::span<const double> rho, std::span<double> out)
{
    check_out(rho, out, rho.size(), "chemical_potential_core");
    const double total = checked_total(rho);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        out[i] = std::log(rho[i] / total);
    }
}

std::vector<double> chemical_potential_core(std::span<const double> rho)
{
    std::vector<double> out(rho.size());
    chemical_potential_core(rho, out);
    return out;
}

void energy_hessian(std::span<const double> rho, std::span<double> out)
{
    check_out(rho, out, rho.size() * rho.size(), "energy_hessian");
    const double total = checked_total(rho);
    const std::size_t n = rho.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = (i == j ? 1.0 / rho[i] : 0.0) - 1.0 / total;
        }
    }
}

std::vector<double> energy_hessian(std::span<const double> rho)
{
    std::vector<double> out(rho.size() * rho.size());
    energy_hessian(rho, out);
    return out;
}

void mobility(std::span<const double> rho, double scale, std::span<double> out)
{
    check_out(rho, out, rho.size() * rho.size(), "mobility");
    double total = 0.0;
    for (double r : rho) {
        if (!(r >= 0.0)) {
            throw DomainError("mobility: negative partial density " + std::to_string(r));
        }
        total += r;
    }
    if (!(total > 0.0)) {
        throw DomainError("mobility: total density must be positive");
    }
    const std::size_t n = rho.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = scale * ((i == j ? rho[i] : 0.0) - rho[i] * rho[j] / total);
        }
    }
}

std::vector<double> mobility(std::span<const double> rho, double scale)
{
    std::vector<double> out(rho.size() * rho.size());
    mobility(rho, scale, out);
    return out;
}

}  // namespace msfem::model
