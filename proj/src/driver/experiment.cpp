#include "msfem/driver/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "msfem/linalg.hpp"
#include "msfem/mesh.hpp"
#include "msfem/model.hpp"

namespace msfem::driver {

namespace {

void write_snapshot(const ExperimentConfig& config, const fem::Discretization& disc, const scheme::State& s)
{
    const auto stem = config.output_dir / snapshot_stem(s.t);
    write_fields_csv(stem.string() + ".csv", disc, s);
    if (config.write_vtu) {
        write_fields_vtu(stem.string() + ".vtu", disc, s);
    }
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const RunControl& control)
{
    validate(config);
    const bool files = !config.output_dir.empty();
    const fem::Discretization disc(mesh::mesh_level_to_resolution(config.level));
    const scheme::State initial = scheme::initial_state(config.initial, config.params, disc);
    const auto steady = diagnostics::steady_state(disc, initial);
    const int steps = config.solver.num_steps();

    std::vector<int> snap_steps;
    for (double t : config.snapshot_times) {
        snap_steps.push_back(std::clamp(static_cast<int>(std::llround(t / config.solver.tau)), 0, steps));
    }
    auto is_snapshot = [&](int k) { return std::find(snap_steps.begin(), snap_steps.end(), k) != snap_steps.end(); };

    std::optional<DiagnosticsWriter> writer;
    if (files) {
        std::filesystem::create_directories(config.output_dir);
        std::ofstream cfg(config.output_dir / "config.json");
        cfg << serialize_config(config);
        writer.emplace(config.output_dir / "diagnostics.csv", config.params.n_components);
    }

    RunResult result;
    diagnostics::InvariantMonitor monitor(config.params, config.solver.tau);
    auto record = [&](const diagnostics::StepDiagnostics& d) {
        monitor.observe(d);
        result.diagnostics.push_back(d);
        if (writer && d.step > 0) writer->write(d);
        if (control.on_step) control.on_step(d);
    };

    record(diagnostics::evaluate_initial(disc, config.params, initial, steady));
    if (files && is_snapshot(0)) {
        write_snapshot(config, disc, initial);
    }

    auto sink = [&](const scheme::StepEvent& ev) {
        record(diagnostics::evaluate_step(disc, config.params, ev, steady));
        result.steps_completed = ev.step;
        if (files && is_snapshot(ev.step)) {
            write_snapshot(config, disc, *ev.new_state);
        }
    };

    scheme::RunOptions options;
    options.snapshot_times = config.snapshot_times;
    options.keep_all_states = control.keep_all_states;
    try {
        result.trajectory = scheme::run(disc, config.params, initial, config.solver, sink, options);
    } catch (const scheme::NewtonFailure& e) {
        result.failure = e.what();
    } catch (const linalg::SingularMatrixError& e) {
        result.failure = std::string("singular Jacobian: ") + e.what();
    } catch (const model::DomainError& e) {
        result.failure = std::string("density left the admissible set: ") + e.what();
    }

    result.invariants = monitor.results();
    result.invariants_pass = monitor.all_pass();
    if (files) {
        RunSummary summary;
        summary.status = result.failure ? "solver_failure" : result.invariants_pass ? "ok" : "invariant_failure";
        summary.message = result.failure.value_or("");
        summary.steps_requested = steps;
        summary.steps_completed = result.steps_completed;
        summary.invariants = result.invariants;
        summary.initial = result.diagnostics.front();
        write_summary_json(config.output_dir / "summary.json", config, summary);
    }
    return result;
}

ConvergenceResult run_convergence(const ExperimentConfig& base, const std::vector<int>& levels,
                                  int reference_level, const RunControl& control)
{
    if (levels.empty()) {
        throw ConfigError("levels", "need at least one level");
    }
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (levels[k] < 1 || levels[k] >= reference_level) {
            throw ConfigError("levels", "levels must lie in [1, reference level)");
        }
        if (k > 0 && levels[k] <= levels[k - 1]) {
            throw ConfigError("levels", "levels must be strictly increasing");
        }
    }
    const bool files = !base.output_dir.empty();
    auto level_config = [&](int level) {
        ExperimentConfig c = base;
        c.level = level;
        c.output_dir = files ? base.output_dir / ("level_" + std::to_string(level)) : std::filesystem::path();
        return c;
    };
    RunControl keep = control;
    keep.keep_all_states = true;

    ConvergenceResult out;
    const ExperimentConfig ref_cfg = level_config(reference_level);
    RunResult ref = run_experiment(ref_cfg, keep);
    if (ref.failure) {
        out.failure = "reference level " + std::to_string(reference_level) + ": " + *ref.failure;
        return out;
    }
    const fem::Discretization ref_disc(mesh::mesh_level_to_resolution(reference_level));

    std::vector<double> h, e_rho, e_mu, e_u, e_p;
    for (int level : levels) {
        RunResult r = run_experiment(level_config(level), keep);
        if (r.failure) {
            out.failure = "level " + std::to_string(level) + ": " + *r.failure;
            return out;
        }
        const int n = mesh::mesh_level_to_resolution(level);
        const fem::Discretization disc(n);
        auto row = diagnostics::error_norms(disc, r.trajectory.states, ref_disc, ref.trajectory.states,
                                            base.solver.tau);
        row.level = level;
        out.table.rows.push_back(row);
        double div = 0.0;
        for (const auto& d : r.diagnostics) {
            if (d.step > 0) div = std::max(div, d.div_defect);
        }
        out.table.max_div_defect.push_back(div);
        h.push_back(1.0 / n);
        e_rho.push_back(row.err_rho);
        e_mu.push_back(row.err_mu);
        e_u.push_back(row.err_u);
        e_p.push_back(row.err_p);
    }
    out.table.eoc_rho = diagnostics::eoc(e_rho, h);
    out.table.eoc_mu = diagnostics::eoc(e_mu, h);
    out.table.eoc_u = diagnostics::eoc(e_u, h);
    out.table.eoc_p = diagnostics::eoc(e_p, h);
    if (files) {
        write_eoc_csv(base.output_dir / "eoc_table.csv", out.table);
    }
    return out;
}

}  // namespace msfem::driver
