#include "msfem/fespace.hpp"

#include <cmath>
#include <stdexcept>

namespace msfem::fem {

const QuadratureRule& degree5_rule()
{
    static const QuadratureRule rule = [] {
        const double s15 = std::sqrt(15.0);
        const double a1 = (6.0 - s15) / 21.0;
        const double a2 = (6.0 + s15) / 21.0;
        const double w1 = (155.0 - s15) / 1200.0;
        const double w2 = (155.0 + s15) / 1200.0;
        QuadratureRule r;
        r.degree = 5;
        r.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                    {1.0 - 2.0 * a1, a1, a1},
                    {a1, 1.0 - 2.0 * a1, a1},
                    {a1, a1, 1.0 - 2.0 * a1},
                    {1.0 - 2.0 * a2, a2, a2},
                    {a2, 1.0 - 2.0 * a2, a2},
                    {a2, a2, 1.0 - 2.0 * a2}};
        r.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
        return r;
    }();
    return rule;
}

BasisValues eval_basis(Kind kind, std::array<double, 3> l)
{
    constexpr double tol = 1e-12;
    if (l[0] < -tol || l[1] < -tol || l[2] < -tol || std::abs(l[0] + l[1] + l[2] - 1.0) > tol) {
        throw std::invalid_argument("eval_basis: invalid barycentric point");
    }
    // d(lambda_k)/d(xi, eta)
    static constexpr std::array<std::array<double, 2>, 3> dl{{{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}}};
    BasisValues b;
    if (kind == Kind::P1) {
        b.count = 3;
        for (int k = 0; k < 3; ++k) {
            b.values[k] = l[k];
            b.ref_gradients[k] = dl[k];
        }
        return b;
    }
    b.count = 6;
    for (int k = 0; k < 3; ++k) {
        b.values[k] = l[k] * (2.0 * l[k] - 1.0);
        const double f = 4.0 * l[k] - 1.0;
        b.ref_gradients[k] = {f * dl[k][0], f * dl[k][1]};
    }
    static constexpr std::array<std::array<int, 2>, 3> edge{{{0, 1}, {1, 2}, {2, 0}}};
    for (int e = 0; e < 3; ++e) {
        const int a = edge[e][0];
        const int c = edge[e][1];
        b.values[3 + e] = 4.0 * l[a] * l[c];
        b.ref_gradients[3 + e] = {4.0 * (dl[a][0] * l[c] + l[a] * dl[c][0]),
                                  4.0 * (dl[a][1] * l[c] + l[a] * dl[c][1])};
    }
    return b;
}

FeSpace::FeSpace(const mesh::PeriodicMesh& mesh, Kind kind) : mesh_(&mesh), kind_(kind)
{
    const auto& tris = mesh.triangles();
    const int nv = static_cast<int>(mesh.vertices().size());
    const int k = fem::dofs_per_element(kind);
    dofs_.resize(tris.size() * k);
    for (std::size_t t = 0; t < tris.size(); ++t) {
        for (int a = 0; a < 3; ++a) {
            dofs_[t * k + a] = tris[t].vertices[a];
        }
        if (kind == Kind::P2) {
            for (int e = 0; e < 3; ++e) {
                dofs_[t * k + 3 + e] = nv + tris[t].edges[e];
            }
        }
    }
    coords_ = mesh.vertices();
    if (kind == Kind::P2) {
        for (const auto& e : mesh.edges()) {
            coords_.push_back(e.midpoint);
        }
    }
    ndof_ = static_cast<int>(coords_.size());
}

QuadratureData::QuadratureData(const mesh::PeriodicMesh& mesh, const QuadratureRule& rule)
    : num_elements_(static_cast<int>(mesh.triangles().size())),
      num_points_(static_cast<int>(rule.points.size()))
{
    const std::size_t total = size();
    weights_.resize(total);
    p1_val_.resize(3 * total);
    p1_grad_.resize(6 * total);
    p2_val_.resize(6 * total);
    p2_grad_.resize(12 * total);
    points_.resize(total);

    std::vector<BasisValues> ref1, ref2;
    for (const auto& pt : rule.points) {
        ref1.push_back(eval_basis(Kind::P1, pt));
        ref2.push_back(eval_basis(Kind::P2, pt));
    }

    for (int e = 0; e < num_elements_; ++e) {
        const auto& c = mesh.triangles()[e].coords;
        const double a = c[1].x - c[0].x;
        const double b = c[2].x - c[0].x;
        const double cc = c[1].y - c[0].y;
        const double d = c[2].y - c[0].y;
        const double det = a * d - b * cc;
        if (!(det > 0.0)) {
            throw std::logic_error("QuadratureData: non-positive element orientation");
        }
        const double area = 0.5 * det;
        auto to_phys = [&](const std::array<double, 2>& g) {
            return std::array<double, 2>{(d * g[0] - cc * g[1]) / det, (-b * g[0] + a * g[1]) / det};
        };
        for (int q = 0; q < num_points_; ++q) {
            const std::size_t qp = index(e, q);
            weights_[qp] = rule.weights[q] * area;
            const auto& l = rule.points[q];
            points_[qp] = {l[0] * c[0].x + l[1] * c[1].x + l[2] * c[2].x,
                           l[0] * c[0].y + l[1] * c[1].y + l[2] * c[2].y};
            for (int k = 0; k < 3; ++k) {
                p1_val_[3 * qp + k] = ref1[q].values[k];
                const auto g = to_phys(ref1[q].ref_gradients[k]);
                p1_grad_[6 * qp + 2 * k] = g[0];
                p1_grad_[6 * qp + 2 * k + 1] = g[1];
            }
            for (int k = 0; k < 6; ++k) {
                p2_val_[6 * qp + k] = ref2[q].values[k];
                const auto g = to_phys(ref2[q].ref_gradients[k]);
                p2_grad_[12 * qp + 2 * k] = g[0];
                p2_grad_[12 * qp + 2 * k + 1] = g[1];
            }
        }
    }
}

Discretization::Discretization(int n)
    : mesh_(n), p1_(mesh_, Kind::P1), p2_(mesh_, Kind::P2), quad_(mesh_, degree5_rule())
{
}

std::vector<double> interpolate_nodal(const std::function<double(double, double)>& f,
                                      const FeSpace& space)
{
    std::vector<double> c(space.ndof());
    for (int i = 0; i < space.ndof(); ++i) {
        const auto p = space.dof_coordinate(i);
        c[i] = f(p.x, p.y);
    }
    return c;
}

std::vector<double> values_at_qp(const Discretization& disc, Kind kind, std::span<const double> coeffs)
{
    const auto& space = disc.space(kind);
    if (coeffs.size() != static_cast<std::size_t>(space.ndof())) {
        throw std::invalid_argument("values_at_qp: coefficient length mismatch");
    }
    const auto& qd = disc.quad();
    const int k = space.dofs_per_element();
    std::vector<double> out(qd.size());
    for (int e = 0; e < qd.num_elements(); ++e) {
        const auto dofs = space.element_dofs(e);
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double* phi = qd.values(kind, qp);
            double s = 0.0;
            for (int a = 0; a < k; ++a) {
                s += coeffs[dofs[a]] * phi[a];
            }
            out[qp] = s;
        }
    }
    return out;
}

std::vector<double> gradients_at_qp(const Discretization& disc, Kind kind,
                                    std::span<const double> coeffs)
{
    const auto& space = disc.space(kind);
    if (coeffs.size() != static_cast<std::size_t>(space.ndof())) {
        throw std::invalid_argument("gradients_at_qp: coefficient length mismatch");
    }
    const auto& qd = disc.quad();
    const int k = space.dofs_per_element();
    std::vector<double> out(2 * qd.size());
    for (int e = 0; e < qd.num_elements(); ++e) {
        const auto dofs = space.element_dofs(e);
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double* g = qd.gradients(kind, qp);
            double gx = 0.0;
            double gy = 0.0;
            for (int a = 0; a < k; ++a) {
                gx += coeffs[dofs[a]] * g[2 * a];
                gy += coeffs[dofs[a]] * g[2 * a + 1];
            }
            out[2 * qp] = gx;
            out[2 * qp + 1] = gy;
        }
    }
    return out;
}

double evaluate(const FeSpace& space, std::span<const double> coeffs, const mesh::Location& loc)
{
    const BasisValues b = eval_basis(space.kind(), loc.barycentric);
    const auto dofs = space.element_dofs(loc.triangle);
    double s = 0.0;
    for (int a = 0; a < b.count; ++a) {
        s += coeffs[dofs[a]] * b.values[a];
    }
    return s;
}

double integrate(const Discretization& disc, const std::function<double(std::size_t qp)>& integrand)
{
    const auto& qd = disc.quad();
    double s = 0.0;
    for (std::size_t qp = 0; qp < qd.size(); ++qp) {
        s += qd.weight(qp) * integrand(qp);
    }
    return s;
}

}  // namespace msfem::fem
