#include "msfem/driver/output.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "json.hpp"

namespace msfem::driver {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) {
        throw OutputError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out) {
        throw OutputError("write to '" + path.string() + "' failed");
    }
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

double parse_double(const std::string& s, const std::filesystem::path& path)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw OutputError("read_fields_csv: bad number '" + s + "' in " + path.string());
    }
    return v;
}

void write_data_array(std::ostream& out, const std::string& name, int components,
                      const std::vector<double>& values)
{
    out << "        <DataArray type=\"Float64\" Name=\"" << name << "\"";
    if (components > 1) {
        out << " NumberOfComponents=\"" << components << "\"";
    }
    out << " format=\"ascii\">\n          ";
    for (std::size_t k = 0; k < values.size(); ++k) {
        out << format_double(values[k]) << (k + 1 < values.size() ? " " : "\n");
    }
    out << "        </DataArray>\n";
}

}  // namespace

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

DiagnosticsWriter::DiagnosticsWriter(const std::filesystem::path& path, int ncomp)
    : out_(open_for_write(path)), path_(path), ncomp_(ncomp)
{
    const auto cols = diagnostics::csv_columns(ncomp);
    for (std::size_t k = 0; k < cols.size(); ++k) {
        out_ << cols[k] << (k + 1 < cols.size() ? ',' : '\n');
    }
    finish(out_, path_);
}

void DiagnosticsWriter::write(const diagnostics::StepDiagnostics& d)
{
    if (static_cast<int>(d.partial_masses.size()) != ncomp_) {
        throw std::invalid_argument("DiagnosticsWriter: component count mismatch");
    }
    out_ << d.step << ',' << format_double(d.t);
    for (double m : d.partial_masses) {
        out_ << ',' << format_double(m);
    }
    for (double v : {d.constraint_max, d.min_nodal_density, d.min_total_density, d.max_total_density, d.e_kin,
                     d.e_int, d.e_total, d.d_num, d.visc_dissipation, d.diff_dissipation, d.energy_balance,
                     d.e_rel, d.div_defect}) {
        out_ << ',' << format_double(v);
    }
    out_ << ',' << d.newton_iterations << '\n';
    finish(out_, path_);
}

void write_diagnostics_csv(const std::filesystem::path& path, int ncomp,
                           const std::vector<diagnostics::StepDiagnostics>& rows)
{
    DiagnosticsWriter w(path, ncomp);
    for (const auto& r : rows) {
        w.write(r);
    }
}

void write_fields_csv(const std::filesystem::path& path, const fem::Discretization& disc, const scheme::State& s)
{
    const int N = s.n_components();
    const int n1 = disc.p1().ndof();
    const int n2 = disc.p2().ndof();
    if (static_cast<int>(s.p.size()) != n1 || static_cast<int>(s.u.size()) != 2 * n2) {
        throw std::invalid_argument("write_fields_csv: state does not match the discretization");
    }
    auto out = open_for_write(path);
    out << "kind,index,x,y";
    for (int i = 1; i <= N; ++i) out << ",rho_" << i;
    out << ",rho,p";
    for (int i = 1; i <= N; ++i) out << ",mu_" << i;
    out << ",u_x,u_y\n";

    const auto total = s.total_density();
    for (int a = 0; a < n1; ++a) {
        const auto c = disc.p1().dof_coordinate(a);
        out << "p1," << a << ',' << format_double(c.x) << ',' << format_double(c.y);
        for (int i = 0; i < N; ++i) out << ',' << format_double(s.rho[i][a]);
        out << ',' << format_double(total[a]) << ',' << format_double(s.p[a]);
        for (int i = 0; i < N; ++i) out << ',' << format_double(s.mu[i][a]);
        out << ",,\n";
    }
    const std::string gap(2 * N + 2, ',');
    for (int a = 0; a < n2; ++a) {
        const auto c = disc.p2().dof_coordinate(a);
        out << "p2," << a << ',' << format_double(c.x) << ',' << format_double(c.y) << gap << ','
            << format_double(s.u[a]) << ',' << format_double(s.u[n2 + a]) << '\n';
    }
    finish(out, path);
}

scheme::State read_fields_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw OutputError("read_fields_csv: cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    const auto header = split(line);
    // kind,index,x,y, N rho, rho, p, N mu, u_x, u_y
    const int N = (static_cast<int>(header.size()) - 8) / 2;
    if (N < 1 || static_cast<int>(header.size()) != 2 * N + 8 || header[0] != "kind") {
        throw OutputError("read_fields_csv: unexpected header in " + path.string());
    }
    scheme::State s;
    s.rho.resize(N);
    s.mu.resize(N);
    std::vector<double> ux, uy;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw OutputError("read_fields_csv: bad row in " + path.string());
        }
        const auto index = static_cast<std::size_t>(std::stol(cells[1]));
        if (cells[0] == "p1") {
            if (index != s.p.size()) {
                throw OutputError("read_fields_csv: p1 rows out of order");
            }
            for (int i = 0; i < N; ++i) s.rho[i].push_back(parse_double(cells[4 + i], path));
            s.p.push_back(parse_double(cells[4 + N + 1], path));
            for (int i = 0; i < N; ++i) s.mu[i].push_back(parse_double(cells[6 + N + i], path));
        } else if (cells[0] == "p2") {
            if (index != ux.size()) {
                throw OutputError("read_fields_csv: p2 rows out of order");
            }
            ux.push_back(parse_double(cells[6 + 2 * N], path));
            uy.push_back(parse_double(cells[7 + 2 * N], path));
        } else {
            throw OutputError("read_fields_csv: unknown row kind '" + cells[0] + "'");
        }
    }
    s.u = std::move(ux);
    s.u.insert(s.u.end(), uy.begin(), uy.end());
    return s;
}

void write_fields_vtu(const std::filesystem::path& path, const fem::Discretization& disc, const scheme::State& s)
{
    const int N = s.n_components();
    const int n2 = disc.p2().ndof();
    const mesh::ExportGrid g = mesh::export_grid(disc.mesh());
    const std::size_t np = g.points.size();
    const auto total = s.total_density();

    auto out = open_for_write(path);
    out << "<?xml version=\"1.0\"?>\n"
        << "<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n"
        << "  <UnstructuredGrid>\n"
        << "    <Piece NumberOfPoints=\"" << np << "\" NumberOfCells=\"" << g.triangles.size() << "\">\n"
        << "      <PointData Scalars=\"rho\" Vectors=\"velocity\">\n";

    auto gather = [&](const std::vector<double>& nodal) {
        std::vector<double> v(np);
        for (std::size_t k = 0; k < np; ++k) v[k] = nodal[g.source_vertex[k]];
        return v;
    };
    for (int i = 0; i < N; ++i) write_data_array(out, "rho_" + std::to_string(i + 1), 1, gather(s.rho[i]));
    write_data_array(out, "rho", 1, gather(total));
    write_data_array(out, "p", 1, gather(s.p));
    for (int i = 0; i < N; ++i) write_data_array(out, "mu_" + std::to_string(i + 1), 1, gather(s.mu[i]));

    // P2 dofs 0..n^2-1 are the mesh vertices.
    std::vector<double> vel(3 * np), speed2(np);
    for (std::size_t k = 0; k < np; ++k) {
        const int a = g.source_vertex[k];
        const double ux = s.u[a], uy = s.u[n2 + a];
        vel[3 * k] = ux;
        vel[3 * k + 1] = uy;
        vel[3 * k + 2] = 0.0;
        speed2[k] = ux * ux + uy * uy;
    }
    write_data_array(out, "velocity", 3, vel);
    write_data_array(out, "speed_squared", 1, speed2);
    out << "      </PointData>\n      <Points>\n";

    std::vector<double> xyz(3 * np);
    for (std::size_t k = 0; k < np; ++k) {
        xyz[3 * k] = g.points[k].x;
        xyz[3 * k + 1] = g.points[k].y;
    }
    write_data_array(out, "Points", 3, xyz);
    out << "      </Points>\n      <Cells>\n"
        << "        <DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n          ";
    for (std::size_t t = 0; t < g.triangles.size(); ++t) {
        out << g.triangles[t][0] << ' ' << g.triangles[t][1] << ' ' << g.triangles[t][2]
            << (t + 1 < g.triangles.size() ? " " : "\n");
    }
    out << "        </DataArray>\n"
        << "        <DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n          ";
    for (std::size_t t = 0; t < g.triangles.size(); ++t) {
        out << 3 * (t + 1) << (t + 1 < g.triangles.size() ? " " : "\n");
    }
    out << "        </DataArray>\n"
        << "        <DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n          ";
    for (std::size_t t = 0; t < g.triangles.size(); ++t) {
        out << 5 << (t + 1 < g.triangles.size() ? " " : "\n");
    }
    out << "        </DataArray>\n      </Cells>\n    </Piece>\n  </UnstructuredGrid>\n</VTKFile>\n";
    finish(out, path);
}

std::string snapshot_stem(double t)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "fields_%.6f", t);
    return buf;
}

void write_summary_json(const std::filesystem::path& path, const ExperimentConfig& config,
                        const RunSummary& summary)
{
    nlohmann::json j;
    j["status"] = summary.status;
    if (!summary.message.empty()) {
        j["message"] = summary.message;
    }
    j["preset"] = to_string(config.preset);
    j["level"] = config.level;
    j["steps_requested"] = summary.steps_requested;
    j["steps_completed"] = summary.steps_completed;
    j["config"] = nlohmann::json::parse(serialize_config(config));
    nlohmann::json inv = nlohmann::json::array();
    bool all = true;
    for (const auto& r : summary.invariants) {
        nlohmann::json e;
        e["name"] = r.name;
        e["verdict"] = r.pass ? "PASS" : "FAIL";
        // JSON has no infinities; an unobserved bound is reported as null.
        e["worst"] = std::isfinite(r.worst) ? nlohmann::json(r.worst) : nlohmann::json();
        e["tolerance"] = r.tolerance;
        e["description"] = r.description;
        inv.push_back(e);
        all = all && r.pass;
    }
    j["invariants"] = inv;
    if (summary.initial) {
        const auto& d = *summary.initial;
        j["initial"] = {{"partial_masses", d.partial_masses}, {"constraint_max", d.constraint_max},
                        {"e_kin", d.e_kin},   {"e_int", d.e_int},
                        {"e_total", d.e_total}, {"e_rel", d.e_rel}};
    }
    j["all_invariants_pass"] = all;
    auto out = open_for_write(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

void write_eoc_csv(const std::filesystem::path& path, const EocTable& table)
{
    const std::size_t n = table.rows.size();
    for (const auto* col : {&table.eoc_rho, &table.eoc_mu, &table.eoc_u, &table.eoc_p}) {
        if (col->size() != n) {
            throw std::invalid_argument("write_eoc_csv: column length mismatch");
        }
    }
    if (table.max_div_defect.size() != n) {
        throw std::invalid_argument("write_eoc_csv: column length mismatch");
    }
    auto out = open_for_write(path);
    out << "level,err_rho,eoc_rho,err_mu,eoc_mu,err_u,eoc_u,err_p,eoc_p,max_div_defect\n";
    auto order = [](const std::optional<double>& e) { return e ? format_double(*e) : std::string(); };
    for (std::size_t k = 0; k < n; ++k) {
        const auto& r = table.rows[k];
        out << r.level << ',' << format_double(r.err_rho) << ',' << order(table.eoc_rho[k]) << ','
            << format_double(r.err_mu) << ',' << order(table.eoc_mu[k]) << ',' << format_double(r.err_u) << ','
            << order(table.eoc_u[k]) << ',' << format_double(r.err_p) << ',' << order(table.eoc_p[k]) << ','
            << format_double(table.max_div_defect[k]) << '\n';
    }
    finish(out, path);
}

}  // namespace msfem::driver
