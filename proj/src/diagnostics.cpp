#include "msfem/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msfem::diagnostics {

using fem::Kind;

namespace {

struct QpFields {
    std::vector<std::vector<double>> rho;  // per component
    std::vector<double> total;
    std::vector<double> ux, uy;
};

QpFields fields_at_qp(const fem::Discretization& disc, const State& s)
{
    QpFields f;
    const std::size_t nq = disc.quad().size();
    const int n2 = disc.p2().ndof();
    f.total.assign(nq, 0.0);
    for (const auto& r : s.rho) {
        f.rho.push_back(fem::values_at_qp(disc, Kind::P1, r));
        for (std::size_t q = 0; q < nq; ++q) {
            f.total[q] += f.rho.back()[q];
        }
    }
    f.ux = fem::values_at_qp(disc, Kind::P2, std::span<const double>(s.u).subspan(0, n2));
    f.uy = fem::values_at_qp(disc, Kind::P2, std::span<const double>(s.u).subspan(n2, n2));
    return f;
}

std::vector<double> component_values(const QpFields& f, std::size_t q)
{
    std::vector<double> v(f.rho.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = f.rho[i][q];
    }
    return v;
}

double kinetic_from(const fem::Discretization& disc, const QpFields& f)
{
    const auto& qd = disc.quad();
    double s = 0.0;
    for (std::size_t q = 0; q < qd.size(); ++q) {
        s += qd.weight(q) * f.total[q] * (f.ux[q] * f.ux[q] + f.uy[q] * f.uy[q]);
    }
    return 0.5 * s;
}

double internal_from(const fem::Discretization& disc, const QpFields& f)
{
    const auto& qd = disc.quad();
    double s = 0.0;
    for (std::size_t q = 0; q < qd.size(); ++q) {
        s += qd.weight(q) * model::internal_energy(component_values(f, q));
    }
    return s;
}

double quadratic_form(const linalg::CsrMatrix& a, std::span<const double> x)
{
    return linalg::dot(x, linalg::spmv(a, x));
}

}  // namespace

std::vector<std::string> csv_columns(int ncomp)
{
    std::vector<std::string> c{"step", "t"};
    for (int i = 1; i <= ncomp; ++i) {
        c.push_back("mass_" + std::to_string(i));
    }
    for (const char* name : {"constraint_max", "min_nodal_density", "min_total_density", "max_total_density",
                             "e_kin", "e_int", "e_total", "d_num", "visc_dissipation", "diff_dissipation",
                             "energy_balance", "e_rel", "div_defect", "newton_iterations"}) {
        c.emplace_back(name);
    }
    return c;
}

SteadyState steady_state(const fem::Discretization& disc, const State& initial)
{
    const QpFields f = fields_at_qp(disc, initial);
    const auto& qd = disc.quad();
    SteadyState st;
    st.rho_inf = partial_masses(disc, initial);
    double mass = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t q = 0; q < qd.size(); ++q) {
        const double w = qd.weight(q);
        mass += w * f.total[q];
        mx += w * f.total[q] * f.ux[q];
        my += w * f.total[q] * f.uy[q];
    }
    if (!(mass > 0.0)) {
        throw model::DomainError("steady_state: total mass must be positive");
    }
    st.u_inf = {mx / mass, my / mass};
    return st;
}

std::vector<double> partial_masses(const fem::Discretization& disc, const State& s)
{
    std::vector<double> m;
    for (const auto& r : s.rho) {
        const auto v = fem::values_at_qp(disc, Kind::P1, r);
        m.push_back(fem::integrate(disc, [&](std::size_t q) { return v[q]; }));
    }
    return m;
}

double constraint_max(const State& s, const model::MixtureParams& params)
{
    double worst = 0.0;
    const std::size_t n1 = s.rho.empty() ? 0 : s.rho[0].size();
    for (std::size_t a = 0; a < n1; ++a) {
        double z = -1.0;
        for (std::size_t i = 0; i < s.rho.size(); ++i) {
            z += params.V[i] * s.rho[i][a];
        }
        worst = std::max(worst, std::abs(z));
    }
    return worst;
}

double kinetic_energy(const fem::Discretization& disc, const State& s)
{
    return kinetic_from(disc, fields_at_qp(disc, s));
}

double internal_energy(const fem::Discretization& disc, const State& s)
{
    return internal_from(disc, fields_at_qp(disc, s));
}

double numerical_dissipation(const fem::Discretization& disc, const State& old_state, const State& new_state,
                             double tau)
{
    if (!(tau > 0.0)) {
        throw std::invalid_argument("numerical_dissipation: tau must be positive");
    }
    const QpFields fo = fields_at_qp(disc, old_state);
    const QpFields fn = fields_at_qp(disc, new_state);
    const auto& qd = disc.quad();
    const std::size_t N = fo.rho.size();
    double kin = 0.0;
    double conv = 0.0;
    std::vector<double> mu(N);
    for (std::size_t q = 0; q < qd.size(); ++q) {
        const double w = qd.weight(q);
        const double dx = fn.ux[q] - fo.ux[q];
        const double dy = fn.uy[q] - fo.uy[q];
        kin += w * fo.total[q] * (dx * dx + dy * dy);
        const auto rn = component_values(fn, q);
        const auto ro = component_values(fo, q);
        model::chemical_potential_core(rn, mu);
        double lin = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            lin += mu[i] * (rn[i] - ro[i]);
        }
        conv += w * (lin - (model::internal_energy(rn) - model::internal_energy(ro)));
    }
    return kin / (2.0 * tau) + conv / tau;
}

double relative_energy(const fem::Discretization& disc, const State& s, const SteadyState& steady)
{
    const QpFields f = fields_at_qp(disc, s);
    const auto& qd = disc.quad();
    const std::size_t N = f.rho.size();
    if (steady.rho_inf.size() != N) {
        throw std::invalid_argument("relative_energy: component count mismatch");
    }
    double rho_inf = 0.0;
    for (double r : steady.rho_inf) {
        if (!(r > 0.0)) {
            throw model::DomainError("relative_energy: steady densities must be positive");
        }
        rho_inf += r;
    }
    double e = 0.0;
    for (std::size_t q = 0; q < qd.size(); ++q) {
        double v = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double r = f.rho[i][q];
            if (!(r > 0.0)) {
                throw model::DomainError("relative_energy: nonpositive density");
            }
            v += r * std::log(r / steady.rho_inf[i]);
        }
        const double rho = f.total[q];
        const double dx = f.ux[q] - steady.u_inf[0];
        const double dy = f.uy[q] - steady.u_inf[1];
        v += -rho * std::log(rho / rho_inf) + 0.5 * rho * (dx * dx + dy * dy);
        e += qd.weight(q) * v;
    }
    return e;
}

double div_defect(const scheme::StaticOperators& ops, const State& s)
{
    const auto d = linalg::spmv(ops.div_pressure.transpose(), s.u);
    double worst = 0.0;
    for (double v : d) {
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

namespace {

void fill_state_terms(StepDiagnostics& d, const fem::Discretization& disc, const model::MixtureParams& params,
                      const State& s, const SteadyState& steady)
{
    const QpFields f = fields_at_qp(disc, s);
    d.t = s.t;
    d.partial_masses = partial_masses(disc, s);
    d.constraint_max = constraint_max(s, params);
    d.min_nodal_density = std::numeric_limits<double>::infinity();
    for (const auto& r : s.rho) {
        d.min_nodal_density = std::min(d.min_nodal_density, *std::min_element(r.begin(), r.end()));
    }
    const auto total = s.total_density();
    d.min_total_density = *std::min_element(total.begin(), total.end());
    d.max_total_density = *std::max_element(total.begin(), total.end());
    d.e_kin = kinetic_from(disc, f);
    d.e_int = internal_from(disc, f);
    d.e_total = d.e_kin + d.e_int;
    d.e_rel = relative_energy(disc, s, steady);
}

}  // namespace

StepDiagnostics evaluate_initial(const fem::Discretization& disc, const model::MixtureParams& params,
                                 const State& s, const SteadyState& steady)
{
    StepDiagnostics d;
    d.step = 0;
    fill_state_terms(d, disc, params, s, steady);
    const scheme::StaticOperators ops(disc, params);
    d.div_defect = div_defect(ops, s);
    return d;
}

StepDiagnostics evaluate_step(const fem::Discretization& disc, const model::MixtureParams& params,
                              const scheme::StepEvent& event, const SteadyState& steady)
{
    if (event.old_state == nullptr || event.new_state == nullptr || event.system == nullptr) {
        throw std::invalid_argument("evaluate_step: incomplete step event");
    }
    const State& old_state = *event.old_state;
    const State& s = *event.new_state;
    const scheme::StepSystem& sys = *event.system;
    const double tau = sys.tau();

    StepDiagnostics d;
    d.step = event.step;
    d.newton_iterations = event.newton_iterations;
    fill_state_terms(d, disc, params, s, steady);

    d.visc_dissipation = quadratic_form(sys.operators().stress, s.u);
    std::vector<double> mu;
    for (const auto& m : s.mu) {
        mu.insert(mu.end(), m.begin(), m.end());
    }
    d.diff_dissipation = quadratic_form(sys.diffusion(), mu);
    d.d_num = numerical_dissipation(disc, old_state, s, tau);
    const double e_old = kinetic_energy(disc, old_state) + internal_energy(disc, old_state);
    d.energy_balance = (d.e_total - e_old) / tau + d.visc_dissipation + d.diff_dissipation + d.d_num;
    d.div_defect = div_defect(sys.operators(), s);
    return d;
}

InvariantMonitor::InvariantMonitor(const model::MixtureParams& params, double tau) : params_(params), tau_(tau)
{
    params_.validate();
}

void InvariantMonitor::observe(const StepDiagnostics& d)
{
    if (initial_masses_.empty()) {
        initial_masses_ = d.partial_masses;
    }
    constraint_ = std::max(constraint_, d.constraint_max);
    min_density_ = std::min(min_density_, d.min_nodal_density);
    if (d.min_nodal_density >= 0.0) {
        const double lo = 1.0 / params_.v_max();
        const double hi = 1.0 / params_.v_min();
        bounds_violation_ = std::max({bounds_violation_, lo - d.min_total_density, d.max_total_density - hi});
    }
    div_defect_ = std::max(div_defect_, d.div_defect);
    if (have_previous_) {
        for (std::size_t i = 0; i < d.partial_masses.size(); ++i) {
            const double scale = std::abs(initial_masses_[i]);
            const double drift = std::abs(d.partial_masses[i] - previous_.partial_masses[i]);
            mass_drift_ = std::max(mass_drift_, scale > 0.0 ? drift / scale : drift);
        }
        energy_increase_ = std::max(energy_increase_, (d.e_total - previous_.e_total) / (1.0 + std::abs(previous_.e_total)));
        balance_ = std::max(balance_, std::abs(d.energy_balance) / (1.0 + std::abs(previous_.e_total) / tau_));
        min_dissipation_ = std::min({min_dissipation_, d.d_num, d.visc_dissipation, d.diff_dissipation});
    }
    previous_ = d;
    have_previous_ = true;
}

std::vector<InvariantResult> InvariantMonitor::results() const
{
    const bool stepped = std::isfinite(min_dissipation_);
    std::vector<InvariantResult> out;
    out.push_back({"partial_mass_conservation", mass_drift_ <= 1e-11, mass_drift_, 1e-11,
                   "max per-step |<rho_i^{k+1},1> - <rho_i^k,1>| / |<rho_i^0,1>|"});
    out.push_back({"pointwise_constraint", constraint_ <= 1e-10, constraint_, 1e-10,
                   "max nodal |sum_i V_i rho_i - 1|"});
    out.push_back({"positivity", min_density_ > 0.0, min_density_, 0.0, "min nodal partial density (must be > 0)"});
    out.push_back({"total_density_bounds", bounds_violation_ <= 1e-10, bounds_violation_, 1e-10,
                   "max excursion of nodal rho outside [1/V_max, 1/V_min]"});
    const double inc = stepped ? energy_increase_ : 0.0;
    out.push_back({"energy_dissipation", inc <= 1e-9, inc, 1e-9, "max (E^{k+1} - E^k) / (1 + |E^k|)"});
    out.push_back({"energy_balance", balance_ <= 1e-7, balance_, 1e-7,
                   "max |(E^{k+1}-E^k)/tau + visc + diff + D_num| / (1 + |E^k|/tau)"});
    const double md = stepped ? min_dissipation_ : 0.0;
    out.push_back({"dissipation_sign", md >= -1e-12, md, -1e-12, "min of D_num, visc and diff dissipation"});
    if (params_.v_min() == params_.v_max()) {
        out.push_back({"equal_volume_divergence", div_defect_ <= 1e-10, div_defect_, 1e-10,
                       "max_a |<div u, phi_a>| (equal specific volumes)"});
    }
    return out;
}

bool InvariantMonitor::all_pass() const
{
    const auto r = results();
    return std::all_of(r.begin(), r.end(), [](const InvariantResult& x) { return x.pass; });
}

namespace {

// Coarse basis values at every reference quadrature point.
struct Transfer {
    std::vector<int> element;
    std::vector<std::array<double, 3>> p1;
    std::vector<std::array<double, 6>> p2;
};

Transfer build_transfer(const fem::Discretization& coarse, const fem::Discretization& ref)
{
    const int nc = coarse.mesh().resolution();
    const int nr = ref.mesh().resolution();
    if (nr < nc || nr % nc != 0) {
        throw std::invalid_argument("error_norms: levels do not nest");
    }
    const auto& qd = ref.quad();
    Transfer t;
    t.element.resize(qd.size());
    t.p1.resize(qd.size());
    t.p2.resize(qd.size());
    for (std::size_t q = 0; q < qd.size(); ++q) {
        const auto loc = coarse.mesh().locate(qd.point(q));
        t.element[q] = loc.triangle;
        const auto b1 = fem::eval_basis(Kind::P1, loc.barycentric);
        const auto b2 = fem::eval_basis(Kind::P2, loc.barycentric);
        std::copy(b1.values.begin(), b1.values.begin() + 3, t.p1[q].begin());
        std::copy(b2.values.begin(), b2.values.begin() + 6, t.p2[q].begin());
    }
    return t;
}

// ||c - r||^2 for a coarse field c and reference field r of the same kind.
double squared_difference(const Transfer& t, const fem::Discretization& coarse, const fem::Discretization& ref,
                          Kind kind, std::span<const double> c, std::span<const double> r)
{
    const auto rv = fem::values_at_qp(ref, kind, r);
    const auto& space = coarse.space(kind);
    const auto& qd = ref.quad();
    double s = 0.0;
    for (std::size_t q = 0; q < qd.size(); ++q) {
        const auto dofs = space.element_dofs(t.element[q]);
        double cv = 0.0;
        if (kind == Kind::P1) {
            for (int a = 0; a < 3; ++a) {
                cv += c[dofs[a]] * t.p1[q][a];
            }
        } else {
            for (int a = 0; a < 6; ++a) {
                cv += c[dofs[a]] * t.p2[q][a];
            }
        }
        const double d = cv - rv[q];
        s += qd.weight(q) * d * d;
    }
    return s;
}

}  // namespace

ErrorRow error_norms(const fem::Discretization& coarse, const std::vector<State>& coarse_states,
                     const fem::Discretization& ref, const std::vector<State>& ref_states, double tau)
{
    if (coarse_states.size() != ref_states.size() || coarse_states.empty()) {
        throw std::invalid_argument("error_norms: trajectories have different snapshot grids");
    }
    for (std::size_t l = 0; l < coarse_states.size(); ++l) {
        if (std::abs(coarse_states[l].t - ref_states[l].t) > 1e-9 * std::max(1.0, std::abs(ref_states[l].t))) {
            throw std::invalid_argument("error_norms: snapshot times differ");
        }
        if (coarse_states[l].n_components() != ref_states[l].n_components()) {
            throw std::invalid_argument("error_norms: component counts differ");
        }
    }
    const Transfer t = build_transfer(coarse, ref);
    const int n2c = coarse.p2().ndof();
    const int n2r = ref.p2().ndof();
    ErrorRow row;
    double mu_sum = 0.0;
    double p_sum = 0.0;
    for (std::size_t l = 0; l < coarse_states.size(); ++l) {
        const State& c = coarse_states[l];
        const State& r = ref_states[l];
        double e_rho = 0.0, e_mu = 0.0;
        for (int i = 0; i < c.n_components(); ++i) {
            e_rho += squared_difference(t, coarse, ref, Kind::P1, c.rho[i], r.rho[i]);
            e_mu += squared_difference(t, coarse, ref, Kind::P1, c.mu[i], r.mu[i]);
        }
        double e_u = 0.0;
        for (int k = 0; k < 2; ++k) {
            e_u += squared_difference(t, coarse, ref, Kind::P2, std::span<const double>(c.u).subspan(k * n2c, n2c),
                                      std::span<const double>(r.u).subspan(k * n2r, n2r));
        }
        const double e_p = squared_difference(t, coarse, ref, Kind::P1, c.p, r.p);
        row.err_rho = std::max(row.err_rho, std::sqrt(e_rho));
        row.err_u = std::max(row.err_u, std::sqrt(e_u));
        mu_sum += e_mu;
        p_sum += e_p;
    }
    row.err_mu = std::sqrt(tau * mu_sum);
    row.err_p = std::sqrt(tau * p_sum);
    return row;
}

std::vector<std::optional<double>> eoc(const std::vector<double>& errors, const std::vector<double>& h)
{
    if (errors.size() != h.size()) {
        throw std::invalid_argument("eoc: errors and spacings differ in length");
    }
    std::vector<std::optional<double>> out(errors.size());
    for (std::size_t k = 1; k < errors.size(); ++k) {
        if (errors[k - 1] > 0.0 && errors[k] > 0.0 && h[k - 1] != h[k]) {
            out[k] = std::log(errors[k - 1] / errors[k]) / std::log(h[k - 1] / h[k]);
        }
    }
    return out;
}

}  // namespace msfem::diagnostics
