#include "msfem/mesh.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace msfem::mesh {

namespace {

int wrap(int i, int n) { return ((i % n) + n) % n; }

}  // namespace

PeriodicMesh::PeriodicMesh(int n) : n_(n)
{
    if (n < 2) {
        throw std::invalid_argument("build_uniform_periodic_mesh: n must be >= 2, got " +
                                    std::to_string(n));
    }
    const double h = 1.0 / n;
    auto vid = [n](int i, int j) { return wrap(j, n) * n + wrap(i, n); };
    // Edge ids per cell (i,j): 0 horizontal (i,j)-(i+1,j), 1 vertical
    // (i,j)-(i,j+1), 2 diagonal (i,j)-(i+1,j+1).
    auto eid = [n](int i, int j, int kind) { return 3 * (wrap(j, n) * n + wrap(i, n)) + kind; };

    vertices_.resize(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            vertices_[vid(i, j)] = {i * h, j * h};
        }
    }

    edges_.resize(static_cast<std::size_t>(3) * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            edges_[eid(i, j, 0)] = {{vid(i, j), vid(i + 1, j)}, {(i + 0.5) * h, j * h}};
            edges_[eid(i, j, 1)] = {{vid(i, j), vid(i, j + 1)}, {i * h, (j + 0.5) * h}};
            edges_[eid(i, j, 2)] = {{vid(i, j), vid(i + 1, j + 1)}, {(i + 0.5) * h, (j + 0.5) * h}};
        }
    }

    triangles_.reserve(static_cast<std::size_t>(2) * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Point sw{i * h, j * h};
            const Point se{(i + 1) * h, j * h};
            const Point ne{(i + 1) * h, (j + 1) * h};
            const Point nw{i * h, (j + 1) * h};
            // lower: SW, SE, NE
            triangles_.push_back({{vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)},
                                  {sw, se, ne},
                                  {eid(i, j, 0), eid(i + 1, j, 1), eid(i, j, 2)}});
            // upper: SW, NE, NW
            triangles_.push_back({{vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)},
                                  {sw, ne, nw},
                                  {eid(i, j, 2), eid(i, j + 1, 0), eid(i, j, 1)}});
        }
    }
}

double PeriodicMesh::signed_area(int triangle) const
{
    const auto& c = triangles_[triangle].coords;
    return 0.5 * ((c[1].x - c[0].x) * (c[2].y - c[0].y) - (c[2].x - c[0].x) * (c[1].y - c[0].y));
}

Location PeriodicMesh::locate(Point p) const
{
    double x = p.x - std::floor(p.x);
    double y = p.y - std::floor(p.y);
    int i = std::min(static_cast<int>(x * n_), n_ - 1);
    int j = std::min(static_cast<int>(y * n_), n_ - 1);
    const double s = x * n_ - i;
    const double t = y * n_ - j;
    const int cell = j * n_ + i;
    if (s >= t) {
        // lower triangle SW, SE, NE: p = SW + s*(SE-SW) + t*(NE-SE)
        return {2 * cell, {1.0 - s, s - t, t}};
    }
    // upper triangle SW, NE, NW
    return {2 * cell + 1, {1.0 - t, s, t - s}};
}

PeriodicMesh build_uniform_periodic_mesh(int n) { return PeriodicMesh(n); }

int mesh_level_to_resolution(int level)
{
    if (level < 1 || level > 12) {
        throw std::invalid_argument("mesh level must be in [1, 12], got " + std::to_string(level));
    }
    return 1 << (level + 1);
}

ExportGrid export_grid(const PeriodicMesh& mesh)
{
    const int n = mesh.resolution();
    const double h = mesh.spacing();
    ExportGrid g;
    auto pid = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            g.points.push_back({i * h, j * h});
            g.source_vertex.push_back((j % n) * n + (i % n));
        }
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            g.triangles.push_back({pid(i, j), pid(i + 1, j), pid(i + 1, j + 1)});
            g.triangles.push_back({pid(i, j), pid(i + 1, j + 1), pid(i, j + 1)});
        }
    }
    return g;
}

void write_mesh_csv(const PeriodicMesh& mesh, const std::filesystem::path& nodes_path,
                    const std::filesystem::path& elements_path)
{
    const ExportGrid g = export_grid(mesh);
    std::ofstream nodes(nodes_path);
    std::ofstream elems(elements_path);
    if (!nodes || !elems) {
        throw std::runtime_error("write_mesh_csv: cannot open output files");
    }
    nodes.precision(17);
    nodes << "id,x,y,vertex\n";
    for (std::size_t k = 0; k < g.points.size(); ++k) {
        nodes << k << ',' << g.points[k].x << ',' << g.points[k].y << ',' << g.source_vertex[k] << '\n';
    }
    elems << "id,p0,p1,p2\n";
    for (std::size_t k = 0; k < g.triangles.size(); ++k) {
        elems << k << ',' << g.triangles[k][0] << ',' << g.triangles[k][1] << ',' << g.triangles[k][2]
              << '\n';
    }
}

}  // namespace msfem::mesh
