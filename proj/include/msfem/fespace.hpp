#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "msfem/mesh.hpp"

namespace msfem::fem {

enum class Kind { P1, P2 };

[[nodiscard]] constexpr int dofs_per_element(Kind kind) { return kind == Kind::P1 ? 3 : 6; }

/// Rule on the reference triangle; weights sum to 1 so that a physical
/// integral is area * sum_q w_q f(x_q).
struct QuadratureRule {
    std::vector<std::array<double, 3>> points;  // barycentric
    std::vector<double> weights;
    int degree = 0;
};

/// 7-point rule exact for polynomials of degree <= 5.
[[nodiscard]] const QuadratureRule& degree5_rule();

/// Lagrange basis at a barycentric point. Gradients are with respect to the
/// reference coordinates (xi, eta) = (lambda_1, lambda_2). P2 ordering:
/// vertices 0..2, then midpoints of edges (0,1), (1,2), (2,0).
struct BasisValues {
    int count = 0;
    std::array<double, 6> values{};
    std::array<std::array<double, 2>, 6> ref_gradients{};
};

[[nodiscard]] BasisValues eval_basis(Kind kind, std::array<double, 3> barycentric);

/// Periodic Lagrange space. P1 dofs are the mesh vertices; P2 dofs are the
/// vertices followed by the edge midpoints (dof = n^2 + edge id).
class FeSpace {
public:
    FeSpace(const mesh::PeriodicMesh& mesh, Kind kind);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] int ndof() const noexcept { return ndof_; }
    [[nodiscard]] int dofs_per_element() const noexcept { return fem::dofs_per_element(kind_); }
    [[nodiscard]] std::span<const int> element_dofs(int element) const
    {
        const int k = dofs_per_element();
        return {dofs_.data() + static_cast<std::size_t>(element) * k, static_cast<std::size_t>(k)};
    }
    /// Representative coordinate of a dof, in [0,1)^2.
    [[nodiscard]] mesh::Point dof_coordinate(int dof) const { return coords_[dof]; }
    [[nodiscard]] const mesh::PeriodicMesh& mesh() const noexcept { return *mesh_; }

private:
    const mesh::PeriodicMesh* mesh_;
    Kind kind_;
    int ndof_;
    std::vector<int> dofs_;
    std::vector<mesh::Point> coords_;
};

/// Physical basis values, gradients and weights at every quadrature point of
/// every element, computed once per mesh.
class QuadratureData {
public:
    QuadratureData(const mesh::PeriodicMesh& mesh, const QuadratureRule& rule);

    [[nodiscard]] int num_elements() const noexcept { return num_elements_; }
    [[nodiscard]] int num_points() const noexcept { return num_points_; }
    [[nodiscard]] std::size_t size() const noexcept
    {
        return static_cast<std::size_t>(num_elements_) * num_points_;
    }
    [[nodiscard]] std::size_t index(int element, int q) const noexcept
    {
        return static_cast<std::size_t>(element) * num_points_ + q;
    }

    /// Quadrature weight times element area.
    [[nodiscard]] double weight(std::size_t qp) const noexcept { return weights_[qp]; }
    [[nodiscard]] const double* p1_values(std::size_t qp) const noexcept { return &p1_val_[3 * qp]; }
    [[nodiscard]] const double* p1_gradients(std::size_t qp) const noexcept { return &p1_grad_[6 * qp]; }
    [[nodiscard]] const double* p2_values(std::size_t qp) const noexcept { return &p2_val_[6 * qp]; }
    [[nodiscard]] const double* p2_gradients(std::size_t qp) const noexcept { return &p2_grad_[12 * qp]; }
    [[nodiscard]] mesh::Point point(std::size_t qp) const noexcept { return points_[qp]; }

    [[nodiscard]] const double* values(Kind kind, std::size_t qp) const noexcept
    {
        return kind == Kind::P1 ? p1_values(qp) : p2_values(qp);
    }
    [[nodiscard]] const double* gradients(Kind kind, std::size_t qp) const noexcept
    {
        return kind == Kind::P1 ? p1_gradients(qp) : p2_gradients(qp);
    }

private:
    int num_elements_;
    int num_points_;
    std::vector<double> weights_;
    std::vector<double> p1_val_, p1_grad_, p2_val_, p2_grad_;
    std::vector<mesh::Point> points_;
};

/// Mesh, the P1/P2 pair and quadrature data for one resolution.
/// Immovable: spaces refer back to the mesh.
class Discretization {
public:
    explicit Discretization(int n);
    Discretization(const Discretization&) = delete;
    Discretization& operator=(const Discretization&) = delete;

    static std::shared_ptr<const Discretization> create(int n)
    {
        return std::make_shared<const Discretization>(n);
    }

    [[nodiscard]] const mesh::PeriodicMesh& mesh() const noexcept { return mesh_; }
    [[nodiscard]] const FeSpace& p1() const noexcept { return p1_; }
    [[nodiscard]] const FeSpace& p2() const noexcept { return p2_; }
    [[nodiscard]] const FeSpace& space(Kind kind) const noexcept { return kind == Kind::P1 ? p1_ : p2_; }
    [[nodiscard]] const QuadratureData& quad() const noexcept { return quad_; }

private:
    mesh::PeriodicMesh mesh_;
    FeSpace p1_;
    FeSpace p2_;
    QuadratureData quad_;
};

/// Coefficient at each dof = f(dof coordinate).
[[nodiscard]] std::vector<double> interpolate_nodal(const std::function<double(double, double)>& f,
                                                    const FeSpace& space);

/// Field values at every quadrature point (element-major).
[[nodiscard]] std::vector<double> values_at_qp(const Discretization& disc, Kind kind,
                                               std::span<const double> coeffs);
/// Field gradients at every quadrature point, interleaved (dx, dy).
[[nodiscard]] std::vector<double> gradients_at_qp(const Discretization& disc, Kind kind,
                                                  std::span<const double> coeffs);

/// Field value at a point given its host element and barycentric coordinates.
[[nodiscard]] double evaluate(const FeSpace& space, std::span<const double> coeffs,
                              const mesh::Location& loc);

/// Sum over elements and quadrature points of weight * area * integrand(qp).
[[nodiscard]] double integrate(const Discretization& disc,
                               const std::function<double(std::size_t qp)>& integrand);

}  // namespace msfem::fem
