#include "msfem/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msfem::scheme {

using fem::Kind;
using linalg::TripletBuffer;

namespace {

// Rows [first, first + count) of scale * A, placed at (row0, col0).
void append_row_block(TripletBuffer& buf, const CsrMatrix& a, int first, int count, int row0, int col0,
                      double scale)
{
    const auto off = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (int r = 0; r < count; ++r) {
        for (auto k = off[first + r]; k < off[first + r + 1]; ++k) {
            buf.add(row0 + r, col0 + cols[k], scale * vals[k]);
        }
    }
}

}  // namespace

std::vector<double> State::total_density() const
{
    std::vector<double> total(rho.empty() ? 0 : rho[0].size(), 0.0);
    for (const auto& r : rho) {
        for (std::size_t a = 0; a < total.size(); ++a) {
            total[a] += r[a];
        }
    }
    return total;
}

void SolverConfig::validate() const
{
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw std::invalid_argument("tau must be positive");
    }
    if (!(t_final >= tau * (1.0 - 1e-12)) || !std::isfinite(t_final)) {
        throw std::invalid_argument("t_final must be >= tau");
    }
    if (!(newton_tol > 0.0)) {
        throw std::invalid_argument("newton_tol must be positive");
    }
    if (newton_max_iter < 1) {
        throw std::invalid_argument("newton_max_iter must be >= 1");
    }
    if (!(damping > 0.0 && damping < 1.0)) {
        throw std::invalid_argument("damping must lie in (0, 1)");
    }
    if (max_halvings < 0) {
        throw std::invalid_argument("max_halvings must be >= 0");
    }
}

int SolverConfig::num_steps() const
{
    return std::max(1, static_cast<int>(std::llround(t_final / tau)));
}

std::vector<double> Layout::pack(const State& s) const
{
    if (s.n_components() != N_ || s.u.size() != static_cast<std::size_t>(2 * n2_) ||
        s.p.size() != static_cast<std::size_t>(n1_)) {
        throw std::invalid_argument("Layout::pack: state does not match layout");
    }
    std::vector<double> x(size());
    for (int i = 0; i < N_; ++i) {
        if (s.rho[i].size() != static_cast<std::size_t>(n1_) ||
            s.mu[i].size() != static_cast<std::size_t>(n1_)) {
            throw std::invalid_argument("Layout::pack: component size mismatch");
        }
        std::copy(s.rho[i].begin(), s.rho[i].end(), x.begin() + rho(i));
        std::copy(s.mu[i].begin(), s.mu[i].end(), x.begin() + mu(i));
    }
    std::copy(s.u.begin(), s.u.end(), x.begin() + u());
    std::copy(s.p.begin(), s.p.end(), x.begin() + p());
    x[multiplier()] = s.multiplier;
    return x;
}

State Layout::unpack(std::span<const double> x, double t) const
{
    if (x.size() != static_cast<std::size_t>(size())) {
        throw std::invalid_argument("Layout::unpack: length mismatch");
    }
    State s;
    s.t = t;
    s.rho.resize(N_);
    s.mu.resize(N_);
    for (int i = 0; i < N_; ++i) {
        s.rho[i].assign(x.begin() + rho(i), x.begin() + rho(i) + n1_);
        s.mu[i].assign(x.begin() + mu(i), x.begin() + mu(i) + n1_);
    }
    s.u.assign(x.begin() + u(), x.begin() + u() + 2 * n2_);
    s.p.assign(x.begin() + p(), x.begin() + p() + n1_);
    s.multiplier = x[multiplier()];
    return s;
}

StaticOperators::StaticOperators(const fem::Discretization& disc, const model::MixtureParams& params)
{
    params.validate();
    const auto [nu, lambda] = params.stress_parameters();
    const std::vector<double> one(disc.quad().size(), 1.0);
    mass_p1 = fem::assemble_mass(disc, Kind::P1);
    mass_p2v = fem::assemble_weighted_vector_mass(disc, one);
    stress = fem::assemble_stress(disc, nu, lambda);
    div_pressure = fem::assemble_div_pressure(disc);
    ones_p1 = fem::assemble_load(disc, Kind::P1, one);
}

StepSystem::StepSystem(const fem::Discretization& disc, const model::MixtureParams& params,
                       std::shared_ptr<const StaticOperators> ops, const State& old, double tau)
    : disc_(&disc),
      params_(params),
      ops_(std::move(ops)),
      old_(old),
      tau_(tau),
      layout_(params.n_components, disc.p1().ndof(), disc.p2().ndof())
{
    params_.validate();
    if (!(tau > 0.0)) {
        throw std::invalid_argument("StepSystem: tau must be positive");
    }
    if (!ops_) {
        ops_ = std::make_shared<const StaticOperators>(disc, params_);
    }
    const int N = layout_.ncomp();
    const int n1 = layout_.n1();
    const int n2 = layout_.n2();
    const auto& qd = disc.quad();
    const std::size_t nq = qd.size();

    std::vector<std::vector<double>> rho_old_qp(N);
    rho_old_total_qp_.assign(nq, 0.0);
    for (int i = 0; i < N; ++i) {
        rho_old_qp[i] = fem::values_at_qp(disc, Kind::P1, old.rho[i]);
        for (std::size_t q = 0; q < nq; ++q) {
            rho_old_total_qp_[q] += rho_old_qp[i][q];
        }
    }

    // Mobility at the old densities.
    std::vector<double> mob(nq * N * N);
    std::vector<double> rq(N);
    for (std::size_t q = 0; q < nq; ++q) {
        for (int i = 0; i < N; ++i) {
            rq[i] = rho_old_qp[i][q];
        }
        model::mobility(rq, params_.mobility_scale, std::span<double>(&mob[q * N * N], N * N));
    }
    diffusion_ = fem::assemble_weighted_block_stiffness(disc, N, mob);

    std::vector<CsrMatrix> transport(N);
    for (int i = 0; i < N; ++i) {
        transport[i] = fem::assemble_transport(disc, rho_old_qp[i]);
    }
    const CsrMatrix mass_old = fem::assemble_weighted_vector_mass(disc, rho_old_total_qp_);

    std::vector<double> w_qp(2 * nq);
    {
        const auto ux = fem::values_at_qp(disc, Kind::P2, std::span<const double>(old.u).subspan(0, n2));
        const auto uy = fem::values_at_qp(disc, Kind::P2, std::span<const double>(old.u).subspan(n2, n2));
        for (std::size_t q = 0; q < nq; ++q) {
            w_qp[2 * q] = rho_old_total_qp_[q] * ux[q];
            w_qp[2 * q + 1] = rho_old_total_qp_[q] * uy[q];
        }
    }
    const CsrMatrix skew = fem::assemble_skew_convection(disc, w_qp);

    const double inv_tau = 1.0 / tau;
    const int sz = layout_.size();
    TripletBuffer buf(sz, sz);
    const CsrMatrix& m1 = ops_->mass_p1;
    for (int i = 0; i < N; ++i) {
        // mass equations
        linalg::append_block(buf, m1, layout_.rho(i), layout_.rho(i), inv_tau);
        linalg::append_block(buf, transport[i], layout_.rho(i), layout_.u(), -1.0);
        // chemical potentials
        linalg::append_block(buf, m1, layout_.mu(i), layout_.mu(i), 1.0);
        linalg::append_block(buf, m1, layout_.mu(i), layout_.p(), -params_.V[i]);
    }
    linalg::append_block(buf, diffusion_, layout_.rho(0), layout_.mu(0), 1.0);

    // momentum
    linalg::append_block(buf, mass_old, layout_.u(), layout_.u(), inv_tau);
    linalg::append_block(buf, skew, layout_.u(), layout_.u(), 1.0);
    linalg::append_block(buf, ops_->stress, layout_.u(), layout_.u(), 1.0);
    linalg::append_block(buf, ops_->div_pressure, layout_.u(), layout_.p(), -1.0);
    for (int i = 0; i < N; ++i) {
        const CsrMatrix tt = transport[i].transpose();
        linalg::append_block(buf, tt, layout_.u(), layout_.mu(i), 1.0);
        linalg::append_block(buf, tt, layout_.u(), layout_.p(), -params_.V[i]);
    }

    // divergence: <div u, q> + sum_ij V_i K_ij mu_j + m <1, q>
    linalg::append_block(buf, ops_->div_pressure.transpose(), layout_.p(), layout_.u(), 1.0);
    for (int i = 0; i < N; ++i) {
        append_row_block(buf, diffusion_, i * n1, n1, layout_.p(), layout_.mu(0), params_.V[i]);
    }
    for (int a = 0; a < n1; ++a) {
        buf.add(layout_.p() + a, layout_.multiplier(), ops_->ones_p1[a]);
        buf.add(layout_.multiplier(), layout_.p() + a, ops_->ones_p1[a]);
    }
    linear_ = linalg::assemble_from_triplets(buf);

    constant_.assign(sz, 0.0);
    for (int i = 0; i < N; ++i) {
        linalg::spmv_add(m1, old.rho[i], std::span<double>(constant_).subspan(layout_.rho(i), n1), -inv_tau);
    }
    linalg::spmv_add(mass_old, old.u, std::span<double>(constant_).subspan(layout_.u(), 2 * n2), -inv_tau);
}

void StepSystem::add_nonlinear_terms(std::span<const double> x, std::span<double> r) const
{
    const auto& disc = *disc_;
    const int N = layout_.ncomp();
    const int n1 = layout_.n1();
    const int n2 = layout_.n2();
    const std::size_t nq = disc.quad().size();

    std::vector<std::vector<double>> rho_qp(N);
    for (int i = 0; i < N; ++i) {
        rho_qp[i] = fem::values_at_qp(disc, Kind::P1, x.subspan(layout_.rho(i), n1));
    }
    std::vector<std::vector<double>> f(N, std::vector<double>(nq));
    std::vector<double> rq(N), mu(N), drho(nq);
    for (std::size_t q = 0; q < nq; ++q) {
        double total = 0.0;
        for (int i = 0; i < N; ++i) {
            rq[i] = rho_qp[i][q];
            total += rq[i];
        }
        model::chemical_potential_core(rq, mu);
        for (int i = 0; i < N; ++i) {
            f[i][q] = -mu[i];
        }
        drho[q] = total - rho_old_total_qp_[q];
    }
    for (int i = 0; i < N; ++i) {
        const auto load = fem::assemble_load(disc, Kind::P1, f[i]);
        for (int a = 0; a < n1; ++a) {
            r[layout_.mu(i) + a] += load[a];
        }
    }

    const auto ux = fem::values_at_qp(disc, Kind::P2, x.subspan(layout_.u(), n2));
    const auto uy = fem::values_at_qp(disc, Kind::P2, x.subspan(layout_.u() + n2, n2));
    const double half_inv_tau = 0.5 / tau_;
    std::vector<double> g(2 * nq);
    for (std::size_t q = 0; q < nq; ++q) {
        g[2 * q] = half_inv_tau * ux[q] * drho[q];
        g[2 * q + 1] = half_inv_tau * uy[q] * drho[q];
    }
    const auto load = fem::assemble_vector_load(disc, g);
    for (int k = 0; k < 2 * n2; ++k) {
        r[layout_.u() + k] += load[k];
    }
}

std::vector<double> StepSystem::residual(std::span<const double> x) const
{
    if (x.size() != static_cast<std::size_t>(layout_.size())) {
        throw std::invalid_argument("StepSystem::residual: length mismatch");
    }
    std::vector<double> r = constant_;
    linalg::spmv_add(linear_, x, r);
    add_nonlinear_terms(x, r);
    return r;
}

CsrMatrix StepSystem::jacobian(std::span<const double> x) const
{
    if (x.size() != static_cast<std::size_t>(layout_.size())) {
        throw std::invalid_argument("StepSystem::jacobian: length mismatch");
    }
    const auto& disc = *disc_;
    const int N = layout_.ncomp();
    const int n1 = layout_.n1();
    const int n2 = layout_.n2();
    const std::size_t nq = disc.quad().size();

    std::vector<std::vector<double>> rho_qp(N);
    for (int i = 0; i < N; ++i) {
        rho_qp[i] = fem::values_at_qp(disc, Kind::P1, x.subspan(layout_.rho(i), n1));
    }
    std::vector<double> hess(nq * N * N), drho(nq), rq(N);
    for (std::size_t q = 0; q < nq; ++q) {
        double total = 0.0;
        for (int i = 0; i < N; ++i) {
            rq[i] = rho_qp[i][q];
            total += rq[i];
        }
        std::span<double> h(&hess[q * N * N], N * N);
        model::energy_hessian(rq, h);
        for (double& v : h) {
            v = -v;
        }
        drho[q] = total - rho_old_total_qp_[q];
    }
    const auto ux = fem::values_at_qp(disc, Kind::P2, x.subspan(layout_.u(), n2));
    const auto uy = fem::values_at_qp(disc, Kind::P2, x.subspan(layout_.u() + n2, n2));
    std::vector<double> u_qp(2 * nq);
    for (std::size_t q = 0; q < nq; ++q) {
        u_qp[2 * q] = ux[q];
        u_qp[2 * q + 1] = uy[q];
    }

    const double half_inv_tau = 0.5 / tau_;
    const int sz = layout_.size();
    TripletBuffer buf(sz, sz);
    linalg::append_block(buf, fem::assemble_weighted_block_mass(disc, N, hess), layout_.mu(0), layout_.rho(0));
    linalg::append_block(buf, fem::assemble_weighted_vector_mass(disc, drho), layout_.u(), layout_.u(),
                         half_inv_tau);
    const CsrMatrix coupling = fem::assemble_velocity_density_coupling(disc, u_qp);
    for (int k = 0; k < N; ++k) {
        linalg::append_block(buf, coupling, layout_.u(), layout_.rho(k), half_inv_tau);
    }
    return linalg::add(linear_, linalg::assemble_from_triplets(buf));
}

double StepSystem::l2_norm(std::span<const double> dx) const
{
    const int N = layout_.ncomp();
    const int n1 = layout_.n1();
    const int n2 = layout_.n2();
    const auto& m1 = ops_->mass_p1;
    auto sq = [](const CsrMatrix& m, std::span<const double> v) { return linalg::dot(v, linalg::spmv(m, v)); };
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
        s += sq(m1, dx.subspan(layout_.rho(i), n1));
        s += sq(m1, dx.subspan(layout_.mu(i), n1));
    }
    s += sq(ops_->mass_p2v, dx.subspan(layout_.u(), 2 * n2));
    s += sq(m1, dx.subspan(layout_.p(), n1));
    const double m = dx[layout_.multiplier()];
    s += m * m;
    return std::sqrt(std::max(0.0, s));
}

bool densities_positive(const Layout& layout, std::span<const double> x)
{
    for (int i = 0; i < layout.ncomp(); ++i) {
        for (int a = 0; a < layout.n1(); ++a) {
            if (!(x[layout.rho(i) + a] > 0.0)) {
                return false;
            }
        }
    }
    return true;
}

NewtonResult newton_solve(const StepSystem& system, const SolverConfig& config, int step_index)
{
    config.validate();
    const Layout& layout = system.layout();
    const State& old = system.old_state();
    std::vector<double> x = layout.pack(old);
    std::vector<double> r = system.residual(x);
    double rnorm = linalg::norm2(r);

    for (int it = 1; it <= config.newton_max_iter; ++it) {
        const linalg::LuFactors lu(system.jacobian(x));
        std::vector<double> dx = lu.solve(r);
        for (double& v : dx) {
            v = -v;
        }
        const double full_norm = system.l2_norm(dx);

        double alpha = 1.0;
        bool accepted = false;
        std::vector<double> xt(x.size());
        std::vector<double> rt;
        double rt_norm = 0.0;
        for (int h = 0; h <= config.max_halvings; ++h, alpha *= config.damping) {
            for (std::size_t k = 0; k < x.size(); ++k) {
                xt[k] = x[k] + alpha * dx[k];
            }
            if (!densities_positive(layout, xt)) {
                continue;
            }
            try {
                rt = system.residual(xt);
            } catch (const model::DomainError&) {
                continue;
            }
            rt_norm = linalg::norm2(rt);
            // A step already below the tolerance cannot reduce a residual
            // that sits at rounding level, so it is taken as is.
            if (rt_norm < rnorm || alpha * full_norm <= config.newton_tol) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw NewtonFailure("Newton line search failed at step " + std::to_string(step_index) +
                                    " (iteration " + std::to_string(it) + ")",
                                step_index, it, rnorm);
        }
        x.swap(xt);
        r.swap(rt);
        rnorm = rt_norm;
        const double update = alpha * full_norm;
        if (alpha == 1.0 && update <= config.newton_tol) {
            NewtonResult res;
            res.state = layout.unpack(x, old.t + system.tau());
            res.iterations = it;
            res.update_norm = update;
            res.residual_norm = rnorm;
            return res;
        }
    }
    throw NewtonFailure("Newton did not converge in " + std::to_string(config.newton_max_iter) +
                            " iterations at step " + std::to_string(step_index),
                        step_index, config.newton_max_iter, rnorm);
}

Trajectory run(const fem::Discretization& disc, const model::MixtureParams& params, const State& initial,
               const SolverConfig& config, const StepSink& sink, const RunOptions& options)
{
    config.validate();
    params.validate();
    const auto ops = std::make_shared<const StaticOperators>(disc, params);
    const int steps = config.num_steps();

    // Nearest step for each requested snapshot time.
    std::vector<int> snap_steps;
    for (double ts : options.snapshot_times) {
        snap_steps.push_back(std::clamp(static_cast<int>(std::llround(ts / config.tau)), 0, steps));
    }

    Trajectory traj;
    traj.initial = initial;
    traj.steps = steps;
    auto take_snapshots = [&](int k, const State& s) {
        for (int target : snap_steps) {
            if (target == k) {
                traj.snapshots.push_back(s);
            }
        }
    };
    take_snapshots(0, initial);

    State current = initial;
    for (int k = 1; k <= steps; ++k) {
        const StepSystem system(disc, params, ops, current, config.tau);
        NewtonResult res = newton_solve(system, config, k);
        res.state.t = initial.t + k * config.tau;
        traj.newton_iterations.push_back(res.iterations);
        if (sink) {
            StepEvent ev;
            ev.step = k;
            ev.old_state = &current;
            ev.new_state = &res.state;
            ev.system = &system;
            ev.newton_iterations = res.iterations;
            sink(ev);
        }
        take_snapshots(k, res.state);
        if (options.keep_all_states) {
            traj.states.push_back(res.state);
        }
        current = std::move(res.state);
    }
    traj.final_state = std::move(current);
    return traj;
}

}  // namespace msfem::scheme
