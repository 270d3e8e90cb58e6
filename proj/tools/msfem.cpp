// msfem: command-line front end for the mixture flow solver.
//
//   msfem run --config run.json [--level k] [--tau t] [--tfinal T] [--out dir]
//   msfem exp1 | exp2 [overrides]
//   msfem converge --levels 1,2,3,4 --ref 5 [--variant A|B]
//
// Exit status: 0 ok, 1 invariant violated, 2 bad configuration, 3 solver failure.

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "msfem/driver/config.hpp"
#include "msfem/driver/experiment.hpp"

using namespace msfem;
using namespace msfem::driver;

namespace {

constexpr int kOk = 0;
constexpr int kInvariant = 1;
constexpr int kConfig = 2;
constexpr int kSolver = 3;

struct Overrides {
    std::string config;
    std::optional<int> level;
    std::optional<double> tau;
    std::optional<double> t_final;
    std::optional<std::string> out;
    std::optional<std::vector<double>> snapshots;
    bool vtu = false;
    bool quiet = false;
};

void add_overrides(CLI::App* cmd, Overrides& o, bool with_config)
{
    if (with_config) {
        cmd->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
    }
    cmd->add_option("--level", o.level, "mesh level k (spacing 2^-(k+1))");
    cmd->add_option("--tau", o.tau, "time step");
    cmd->add_option("--tfinal", o.t_final, "final time");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--snapshots", o.snapshots, "snapshot times")->delimiter(',');
    cmd->add_flag("--vtu", o.vtu, "also write VTU snapshots");
    cmd->add_flag("-q,--quiet", o.quiet, "no per-step progress");
}

ExperimentConfig apply(ExperimentConfig c, const Overrides& o)
{
    if (o.level) c.level = *o.level;
    if (o.tau) c.solver.tau = *o.tau;
    if (o.t_final) c.solver.t_final = *o.t_final;
    if (o.out) c.output_dir = *o.out;
    if (o.snapshots) {
        c.snapshot_times = *o.snapshots;
    } else {
        clip_snapshot_times(c);
    }
    if (o.vtu) c.write_vtu = true;
    validate(c);
    return c;
}

RunControl progress(bool quiet)
{
    RunControl rc;
    if (!quiet) {
        rc.on_step = [](const diagnostics::StepDiagnostics& d) {
            std::fprintf(stderr, "step %5d  t=%.6f  E=%.10e  Erel=%.4e  newton=%d\n", d.step, d.t, d.e_total,
                         d.e_rel, d.newton_iterations);
        };
    }
    return rc;
}

int report(const RunResult& r, const ExperimentConfig& c)
{
    for (const auto& inv : r.invariants) {
        std::printf("%-28s %s  worst=%.3e  tol=%.1e\n", inv.name.c_str(), inv.pass ? "PASS" : "FAIL", inv.worst,
                    inv.tolerance);
    }
    if (!c.output_dir.empty()) {
        std::printf("output: %s\n", c.output_dir.string().c_str());
    }
    if (r.failure) {
        std::fprintf(stderr, "solver failure: %s\n", r.failure->c_str());
        return kSolver;
    }
    return r.invariants_pass ? kOk : kInvariant;
}

int do_run(const ExperimentConfig& c, bool quiet)
{
    const RunResult r = run_experiment(c, progress(quiet));
    return report(r, c);
}

int do_converge(ExperimentConfig c, const std::vector<int>& levels, int ref, bool quiet)
{
    const ConvergenceResult r = run_convergence(c, levels, ref, progress(quiet));
    if (r.failure) {
        std::fprintf(stderr, "solver failure: %s\n", r.failure->c_str());
        return kSolver;
    }
    auto order = [](const std::optional<double>& e) {
        char buf[16];
        if (!e) return std::string("   -  ");
        std::snprintf(buf, sizeof buf, "%6.2f", *e);
        return std::string(buf);
    };
    std::printf("level   err(rho)   eoc     err(mu)    eoc     err(u)     eoc     err(p)     eoc   max div\n");
    const auto& t = r.table;
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        const auto& row = t.rows[k];
        std::printf("%5d  %.3e %s  %.3e %s  %.3e %s  %.3e %s  %.1e\n", row.level, row.err_rho,
                    order(t.eoc_rho[k]).c_str(), row.err_mu, order(t.eoc_mu[k]).c_str(), row.err_u,
                    order(t.eoc_u[k]).c_str(), row.err_p, order(t.eoc_p[k]).c_str(), t.max_div_defect[k]);
    }
    if (!c.output_dir.empty()) {
        std::printf("table: %s\n", (c.output_dir / "eoc_table.csv").string().c_str());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Finite-element solver for quasi-incompressible multicomponent flow"};
    app.require_subcommand(1);

    Overrides run_o, e1_o, e2_o, conv_o;
    auto* run = app.add_subcommand("run", "run a configuration file");
    add_overrides(run, run_o, true);
    run->get_option("--config")->required();

    auto* exp1 = app.add_subcommand("exp1", "three-component mixing experiment");
    add_overrides(exp1, e1_o, false);
    auto* exp2 = app.add_subcommand("exp2", "three-component experiment with strong depletion");
    add_overrides(exp2, e2_o, false);

    auto* conv = app.add_subcommand("converge", "convergence study against a reference level");
    add_overrides(conv, conv_o, true);
    std::vector<int> levels{1, 2, 3, 4};
    int ref = 5;
    std::string variant = "A";
    conv->add_option("--levels", levels, "levels of the ladder")->delimiter(',');
    conv->add_option("--ref", ref, "reference level");
    conv->add_option("--variant", variant, "A: V=(0.3,0.7), B: V=(0.5,0.5)")->check(CLI::IsMember({"A", "B"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return do_run(apply(load_config(run_o.config), run_o), run_o.quiet);
        }
        if (exp1->parsed()) {
            return do_run(apply(preset_defaults(Preset::experiment1), e1_o), e1_o.quiet);
        }
        if (exp2->parsed()) {
            return do_run(apply(preset_defaults(Preset::experiment2), e2_o), e2_o.quiet);
        }
        if (conv->parsed()) {
            ExperimentConfig c = conv_o.config.empty() ? preset_defaults(Preset::convergence2)
                                                       : load_config(conv_o.config);
            if (c.preset != Preset::convergence2) {
                throw ConfigError("preset", "converge needs the convergence2 preset");
            }
            if (conv_o.config.empty() || conv->count("--variant") > 0) {
                c.params.V = convergence_volumes(variant[0]);
            }
            if (!conv_o.out) {
                c.output_dir = "out/converge_" + variant;
            }
            c = apply(c, conv_o);
            return do_converge(c, levels, ref, conv_o.quiet);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kSolver;
    }
    return kOk;
}
