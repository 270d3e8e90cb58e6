#include <cmath>
#include <numbers>
#include <string>

#include "msfem/scheme.hpp"

namespace msfem::scheme {

namespace formulas {

namespace {

constexpr double pi = std::numbers::pi;

bool in_band(double s) { return (s >= 0.1 && s < 0.2) || (s > 0.8 && s <= 0.9); }

double sq(double v) { return v * v; }

}  // namespace

double convergence_rho1(double x, double y)
{
    return 1.0 + 0.8 * std::sin(4.0 * pi * x) * std::sin(2.0 * pi * y);
}

// Square frame of width 0.1: value 1.1 on the frame, 0.2 elsewhere.
double experiment1_rho1(double x, double y)
{
    return (in_band(x) || in_band(y)) ? 1.1 : 0.2;
}

double experiment1_rho2(double x, double y)
{
    return (sq(x - 0.5) + sq(y - 0.5) - sq(0.25) <= 0.0) ? 1.1 : 0.2;
}

double experiment2_rho1(double x, double y)
{
    return 0.5 + 0.49999 * std::tanh((std::hypot(x - 0.4, y - 0.4) - 0.25) / (1e-2 * std::sqrt(2.0)));
}

double experiment2_rho2(double x, double y)
{
    return 0.5 + 0.49999 * std::tanh((std::hypot(x - 0.6, y - 0.6) - 0.25) / (1e-2 * std::sqrt(2.0)));
}

std::array<double, 2> swirl_velocity(double x, double y)
{
    return {-sq(std::sin(pi * x)) * std::sin(2.0 * pi * y), std::sin(2.0 * pi * x) * sq(std::sin(pi * y))};
}

}  // namespace formulas

State initial_state_from_functions(const fem::Discretization& disc, const model::MixtureParams& params,
                                   const std::vector<std::function<double(double, double)>>& rho_first,
                                   const std::function<std::array<double, 2>(double, double)>& velocity)
{
    params.validate();
    const int N = params.n_components;
    if (rho_first.size() != static_cast<std::size_t>(N - 1)) {
        throw std::invalid_argument("initial data: expected " + std::to_string(N - 1) + " density functions");
    }
    const int n1 = disc.p1().ndof();
    const int n2 = disc.p2().ndof();
    State s;
    s.rho.resize(N);
    for (int i = 0; i < N - 1; ++i) {
        s.rho[i] = fem::interpolate_nodal(rho_first[i], disc.p1());
    }
    s.rho[N - 1].resize(n1);
    for (int a = 0; a < n1; ++a) {
        double v = 1.0;
        for (int i = 0; i < N - 1; ++i) {
            v -= params.V[i] * s.rho[i][a];
        }
        s.rho[N - 1][a] = v / params.V[N - 1];
    }
    for (int i = 0; i < N; ++i) {
        for (int a = 0; a < n1; ++a) {
            if (!(s.rho[i][a] > 0.0)) {
                const auto p = disc.p1().dof_coordinate(a);
                throw std::invalid_argument("initial data: density " + std::to_string(i + 1) +
                                            " is nonpositive at node (" + std::to_string(p.x) + ", " +
                                            std::to_string(p.y) + ")");
            }
        }
    }
    s.mu.assign(N, std::vector<double>(n1));
    std::vector<double> rq(N), mu(N);
    for (int a = 0; a < n1; ++a) {
        for (int i = 0; i < N; ++i) {
            rq[i] = s.rho[i][a];
        }
        model::chemical_potential_core(rq, mu);
        for (int i = 0; i < N; ++i) {
            s.mu[i][a] = mu[i];
        }
    }
    s.u.resize(2 * static_cast<std::size_t>(n2));
    for (int b = 0; b < n2; ++b) {
        const auto p = disc.p2().dof_coordinate(b);
        const auto v = velocity(p.x, p.y);
        s.u[b] = v[0];
        s.u[n2 + b] = v[1];
    }
    s.p.assign(n1, 0.0);
    s.multiplier = 0.0;
    s.t = 0.0;
    return s;
}

State initial_state(const InitialDataSpec& spec, const model::MixtureParams& params,
                    const fem::Discretization& disc)
{
    const int N = params.n_components;
    auto require_n = [&](int expected, const char* name) {
        if (N != expected) {
            throw std::invalid_argument(std::string(name) + " initial data needs " + std::to_string(expected) +
                                        " components");
        }
    };
    switch (spec.kind) {
    case InitialData::convergence2:
        require_n(2, "convergence2");
        return initial_state_from_functions(disc, params, {formulas::convergence_rho1}, formulas::swirl_velocity);
    case InitialData::experiment1:
        require_n(3, "experiment1");
        return initial_state_from_functions(disc, params, {formulas::experiment1_rho1, formulas::experiment1_rho2},
                                            formulas::swirl_velocity);
    case InitialData::experiment2:
        require_n(3, "experiment2");
        return initial_state_from_functions(disc, params, {formulas::experiment2_rho1, formulas::experiment2_rho2},
                                            formulas::swirl_velocity);
    case InitialData::uniform: {
        if (spec.uniform_rho.size() != static_cast<std::size_t>(N - 1)) {
            throw std::invalid_argument("uniform initial data needs N-1 densities");
        }
        std::vector<std::function<double(double, double)>> f;
        for (double v : spec.uniform_rho) {
            f.emplace_back([v](double, double) { return v; });
        }
        const auto u = spec.uniform_u;
        return initial_state_from_functions(disc, params, f, [u](double, double) { return u; });
    }
    }
    throw std::invalid_argument("unknown initial data kind");
}

}  // namespace msfem::scheme
