// Acceptance runner. Prints one PASS/FAIL line per criterion; `--only N`
// restricts the run to criterion N. Criterion 6 reuses the oracle test
// suites linked into this binary.
#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "msfem/driver/experiment.hpp"
#include "msfem/model.hpp"

using namespace msfem;
using driver::ExperimentConfig;
using driver::Preset;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

driver::RunResult run(ExperimentConfig c)
{
    c.output_dir.clear();
    auto r = driver::run_experiment(c);
    if (r.failure) std::fprintf(stderr, "solver failure: %s\n", r.failure->c_str());
    return r;
}

ExperimentConfig experiment1(double t_final)
{
    auto c = driver::preset_defaults(Preset::experiment1);
    c.level = 4;
    c.solver.tau = 1e-3;
    c.solver.t_final = t_final;
    c.snapshot_times.clear();
    return c;
}

const driver::RunResult& short_experiment1()
{
    static const driver::RunResult r = run(experiment1(0.05));
    return r;
}

Verdict structure_preservation()
{
    const auto& r = short_experiment1();
    if (r.failure || r.steps_completed != 50) return {false, "run did not complete 50 steps"};
    const auto& d = r.diagnostics;
    double drift = 0, constraint = 0, rise = -1e300, dmin = 1e300;
    for (std::size_t k = 0; k < d.size(); ++k) {
        constraint = std::max(constraint, d[k].constraint_max);
        if (k == 0) continue;
        for (std::size_t i = 0; i < d[k].partial_masses.size(); ++i) {
            drift = std::max(drift, std::abs(d[k].partial_masses[i] - d[k - 1].partial_masses[i]) /
                                        std::abs(d[0].partial_masses[i]));
        }
        rise = std::max(rise, (d[k].e_total - d[k - 1].e_total) / (1 + std::abs(d[k - 1].e_total)));
        dmin = std::min({dmin, d[k].d_num, d[k].visc_dissipation, d[k].diff_dissipation});
    }
    const bool ok = drift <= 1e-11 && constraint <= 1e-10 && rise <= 1e-9 && dmin >= -1e-12;
    return {ok, fmt("mass drift %.2e, constraint %.2e, max scaled energy change %.2e, min dissipation %.2e", drift,
                    constraint, rise, dmin)};
}

Verdict energy_balance()
{
    const auto& r = short_experiment1();
    if (r.failure || r.steps_completed != 50) return {false, "run did not complete 50 steps"};
    const auto& d = r.diagnostics;
    const double tau = 1e-3;
    double worst = 0;
    for (std::size_t k = 1; k < d.size(); ++k) {
        const double b = (d[k].e_total - d[k - 1].e_total) / tau + d[k].visc_dissipation + d[k].diff_dissipation +
                         d[k].d_num;
        worst = std::max(worst, std::abs(b) / (1 + std::abs(d[k - 1].e_total) / tau));
    }
    return {worst <= 1e-7, fmt("max scaled balance defect %.2e", worst)};
}

Verdict convergence_orders()
{
    auto c = driver::preset_defaults(Preset::convergence2);
    c.params.V = driver::convergence_volumes('A');
    c.solver.tau = 1e-3;
    c.solver.t_final = 0.1;
    c.output_dir.clear();
    driver::RunControl ctl;
    ctl.on_step = [](const diagnostics::StepDiagnostics& s) {
        if (s.step % 25 == 0) std::fprintf(stderr, "  step %d\n", s.step);
    };
    const auto r = driver::run_convergence(c, {1, 2, 3, 4}, 5, ctl);
    if (r.failure) return {false, "solver failure: " + *r.failure};
    const auto& t = r.table;
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        std::fprintf(stderr, "  level %d: err rho %.3e mu %.3e u %.3e p %.3e\n", t.rows[k].level, t.rows[k].err_rho,
                     t.rows[k].err_mu, t.rows[k].err_u, t.rows[k].err_p);
    }
    const auto& er = t.eoc_rho.back();
    const auto& em = t.eoc_mu.back();
    const auto& eu = t.eoc_u.back();
    const auto& ep = t.eoc_p.back();
    if (!er || !em || !eu || !ep) return {false, "finest-pair order undefined"};
    auto in = [](double v) { return v >= 1.6 && v <= 2.4; };
    const bool ok = in(*er) && in(*em) && in(*ep) && *eu >= 1.8;
    return {ok, fmt("finest-pair eoc rho %.3f, mu %.3f, u %.3f, p %.3f", *er, *em, *eu, *ep)};
}

Verdict equal_volumes()
{
    auto c = driver::preset_defaults(Preset::convergence2);
    c.params.V = driver::convergence_volumes('B');
    c.level = 3;
    const auto r = run(c);
    if (r.failure) return {false, "solver failure"};
    double div = 0, dev = 0;
    for (std::size_t k = 1; k < r.diagnostics.size(); ++k) {
        const auto& d = r.diagnostics[k];
        div = std::max(div, d.div_defect);
        dev = std::max({dev, std::abs(d.min_total_density - 2.0), std::abs(d.max_total_density - 2.0)});
    }
    return {div <= 1e-10 && dev <= 1e-10,
            fmt("%.0f steps, max divergence defect %.2e, max |rho - 2| %.2e", r.steps_completed, div, dev)};
}

Verdict relative_energy_decay()
{
    const auto r = run(experiment1(0.3));
    if (r.failure || r.steps_completed != 300) return {false, "run did not complete 300 steps"};
    const auto& d = r.diagnostics;
    std::size_t start = 0;
    while (start < d.size() && d[start].t < 0.05 - 1e-12) ++start;
    double worst = 0;
    for (std::size_t k = start; k + 1 < d.size(); ++k) {
        worst = std::max(worst, d[k + 1].e_rel / d[k].e_rel - 1.0);
    }
    const double ratio = d.back().e_rel / d[start].e_rel;
    return {worst <= 1e-6 && ratio <= 0.2,
            fmt("E_rel(0.05) %.4e, E_rel(T) %.4e, ratio %.4f, max relative rise %.2e", d[start].e_rel,
                d.back().e_rel, ratio, worst)};
}

Verdict oracle_equivalence()
{
    int argc = 2;
    char arg0[] = "acceptance";
    std::string filter = "--gtest_filter=Meshes/Kernels.*:Meshes/ResidualOracle.*:Jacobian.MatchesFiniteDifferences";
    std::vector<char> f(filter.begin(), filter.end());
    f.push_back('\0');
    char* argv[] = {arg0, f.data(), nullptr};
    ::testing::InitGoogleTest(&argc, argv);
    const int rc = RUN_ALL_TESTS();
    const auto* u = ::testing::UnitTest::GetInstance();
    return {rc == 0 && u->test_to_run_count() > 0,
            fmt("%.0f oracle tests run, %.0f failed", u->test_to_run_count(), u->failed_test_count())};
}

Verdict closure_suite()
{
    std::mt19937 gen(2024);
    std::uniform_real_distribution<double> dens(0.01, 3.0), dir(-1.0, 1.0);
    double rows = 0, eig = 0, euler = 0, gd = 0, kern = 0;
    for (int draw = 0; draw < 1000; ++draw) {
        const int N = 2 + draw % 4;
        std::vector<double> rho(N), delta(N);
        for (int i = 0; i < N; ++i) {
            rho[i] = dens(gen);
            delta[i] = dir(gen);
        }
        const auto M = model::mobility(rho, 1.0);
        Eigen::MatrixXd Me(N, N);
        for (int i = 0; i < N; ++i) {
            double s = 0;
            for (int j = 0; j < N; ++j) {
                s += M[i * N + j];
                Me(i, j) = M[i * N + j];
            }
            rows = std::max(rows, std::abs(s));
        }
        eig = std::min(eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Me).eigenvalues().minCoeff());

        const double f = model::internal_energy(rho);
        const auto mu = model::chemical_potential_core(rho);
        double e = 0;
        for (int i = 0; i < N; ++i) e += rho[i] * mu[i];
        euler = std::max(euler, std::abs(e - f) / std::max(1.0, std::abs(f)));

        // Gibbs-Duhem: sum_i rho_i d(mu_i) = 0 along any direction delta.
        const auto H = model::energy_hessian(rho);
        double g = 0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) g += rho[i] * H[i * N + j] * delta[j];
        gd = std::max(gd, std::abs(g));
        for (int i = 0; i < N; ++i) {
            double hr = 0;
            for (int j = 0; j < N; ++j) hr += H[i * N + j] * rho[j];
            kern = std::max(kern, std::abs(hr));
        }
    }
    const bool ok = rows <= 1e-13 && eig >= -1e-13 && euler <= 1e-12 && gd <= 1e-12 && kern <= 1e-12;
    return {ok, fmt("row sums %.1e, min eigenvalue %.1e, Euler %.1e, Gibbs-Duhem %.1e", rows, eig, euler, gd) +
                    fmt(", H rho %.1e", kern)};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv)
{
    int only = 0;
    for (int a = 1; a < argc; ++a) {
        if (std::strcmp(argv[a], "--only") == 0 && a + 1 < argc) {
            only = std::atoi(argv[++a]);
        } else {
            std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
            return 2;
        }
    }
    const std::vector<Criterion> all{
        {1, "structure preservation", structure_preservation},
        {2, "energy balance", energy_balance},
        {3, "convergence orders", convergence_orders},
        {4, "equal specific volumes", equal_volumes},
        {5, "relative energy decay", relative_energy_decay},
        {6, "oracle equivalence", oracle_equivalence},
        {7, "closure identities", closure_suite},
    };
    bool ok = true;
    bool ran = false;
    for (const auto& c : all) {
        if (only != 0 && c.id != only) continue;
        ran = true;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                    secs);
        std::fflush(stdout);
        ok = ok && v.pass;
    }
    if (!ran) {
        std::fprintf(stderr, "no criterion %d\n", only);
        return 2;
    }
    return ok ? 0 : 1;
}
