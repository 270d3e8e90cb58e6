#pragma once

#include <array>
#include <filesystem>
#include <vector>

namespace msfem::mesh {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Triangle of the periodic mesh. `coords` are unwrapped copies of the
/// vertex coordinates, so an element crossing the seam still has consistent
/// geometry. Local edges are ordered (0,1), (1,2), (2,0).
struct Triangle {
    std::array<int, 3> vertices;
    std::array<Point, 3> coords;
    std::array<int, 3> edges;
};

struct Edge {
    std::array<int, 2> vertices;
    Point midpoint;  // representative coordinate in [0,1)^2
};

/// Host element and barycentric coordinates of a point.
struct Location {
    int triangle;
    std::array<double, 3> barycentric;
};

/// Uniform triangulation of the unit torus: an n x n grid of squares, each
/// split along its SW-NE diagonal. Vertex (i, j) has id j*n + i and sits at
/// (i/n, j/n). Unwrapped element coordinates all lie in [0,1]^2.
class PeriodicMesh {
public:
    explicit PeriodicMesh(int n);

    [[nodiscard]] int resolution() const noexcept { return n_; }
    [[nodiscard]] double spacing() const noexcept { return 1.0 / n_; }

    [[nodiscard]] const std::vector<Point>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
    [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }

    [[nodiscard]] double signed_area(int triangle) const;

    /// Locates a point (wrapped into the unit square first).
    [[nodiscard]] Location locate(Point p) const;

private:
    int n_;
    std::vector<Point> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<Edge> edges_;
};

[[nodiscard]] PeriodicMesh build_uniform_periodic_mesh(int n);

/// Level k of the refinement ladder has n = 2^(k+1), i.e. spacing 2^(-k-1).
[[nodiscard]] int mesh_level_to_resolution(int level);

/// Unwrapped (n+1) x (n+1) point grid for export; periodic vertices appear
/// more than once.
struct ExportGrid {
    std::vector<Point> points;
    std::vector<int> source_vertex;             // periodic vertex of each point
    std::vector<std::array<int, 3>> triangles;  // indices into points
};

[[nodiscard]] ExportGrid export_grid(const PeriodicMesh& mesh);

/// Writes nodes.csv-style (id,x,y,vertex) and elements.csv-style (id,p0,p1,p2) files.
void write_mesh_csv(const PeriodicMesh& mesh, const std::filesystem::path& nodes_path,
                    const std::filesystem::path& elements_path);

}  // namespace msfem::mesh
