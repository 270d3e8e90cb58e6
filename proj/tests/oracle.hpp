#pragma once

// Slow reference evaluation of weak forms. Builds its own element geometry,
// Lagrange bases and 7-point rule from the mesh alone and integrates
// pointwise, without touching the optimized assembly path.

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "msfem/mesh.hpp"

namespace oracle {

struct Rule {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> w;
};

// Degree-5 rule (Radon): centroid plus two orbits of three points.
inline const Rule& rule7()
{
    static const Rule r = [] {
        const double s = std::sqrt(15.0);
        const double a = (6.0 - s) / 21.0;
        const double b = (6.0 + s) / 21.0;
        const double wa = (155.0 - s) / 1200.0;
        const double wb = (155.0 + s) / 1200.0;
        Rule q;
        q.bary = {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {a, a, 1 - 2 * a}, {a, 1 - 2 * a, a}, {1 - 2 * a, a, a},
                  {b, b, 1 - 2 * b}, {b, 1 - 2 * b, b}, {1 - 2 * b, b, b}};
        q.w = {9.0 / 40.0, wa, wa, wa, wb, wb, wb};
        return q;
    }();
    return r;
}

struct Vec2 {
    double x = 0, y = 0;
};

/// Element geometry and dof maps derived directly from the mesh.
struct Element {
    std::array<double, 3> x, y;
    double area;
    std::array<Vec2, 3> grad_lambda;
    std::array<int, 3> p1;
    std::array<int, 6> p2;
};

inline std::vector<Element> elements(const msfem::mesh::PeriodicMesh& m)
{
    const int nv = static_cast<int>(m.vertices().size());
    std::vector<Element> out;
    for (const auto& t : m.triangles()) {
        Element e{};
        for (int k = 0; k < 3; ++k) {
            e.x[k] = t.coords[k].x;
            e.y[k] = t.coords[k].y;
            e.p1[k] = t.vertices[k];
            e.p2[k] = t.vertices[k];
            e.p2[3 + k] = nv + t.edges[k];
        }
        const double det = (e.x[1] - e.x[0]) * (e.y[2] - e.y[0]) - (e.x[2] - e.x[0]) * (e.y[1] - e.y[0]);
        e.area = 0.5 * std::abs(det);
        for (int i = 0; i < 3; ++i) {
            const int j = (i + 1) % 3, k = (i + 2) % 3;
            e.grad_lambda[i] = {(e.y[j] - e.y[k]) / det, (e.x[k] - e.x[j]) / det};
        }
        out.push_back(e);
    }
    return out;
}

struct Basis {
    int n = 0;
    std::array<double, 6> v{};
    std::array<Vec2, 6> g{};
};

inline Basis p1_basis(const Element& e, const std::array<double, 3>& L)
{
    Basis b;
    b.n = 3;
    for (int i = 0; i < 3; ++i) {
        b.v[i] = L[i];
        b.g[i] = e.grad_lambda[i];
    }
    return b;
}

// Vertices first, then midpoints of edges (0,1), (1,2), (2,0).
inline Basis p2_basis(const Element& e, const std::array<double, 3>& L)
{
    Basis b;
    b.n = 6;
    for (int i = 0; i < 3; ++i) {
        b.v[i] = L[i] * (2 * L[i] - 1);
        b.g[i] = {(4 * L[i] - 1) * e.grad_lambda[i].x, (4 * L[i] - 1) * e.grad_lambda[i].y};
    }
    for (int k = 0; k < 3; ++k) {
        const int i = k, j = (k + 1) % 3;
        b.v[3 + k] = 4 * L[i] * L[j];
        b.g[3 + k] = {4 * (L[i] * e.grad_lambda[j].x + L[j] * e.grad_lambda[i].x),
                      4 * (L[i] * e.grad_lambda[j].y + L[j] * e.grad_lambda[i].y)};
    }
    return b;
}

/// Value and gradient of a scalar field at a point of an element.
struct Eval {
    double v = 0;
    Vec2 g;
};

inline Eval eval_p1(const Element& e, const std::array<double, 3>& L, const std::vector<double>& c,
                    std::size_t offset = 0)
{
    const Basis b = p1_basis(e, L);
    Eval r;
    for (int k = 0; k < 3; ++k) {
        const double ck = c[offset + e.p1[k]];
        r.v += ck * b.v[k];
        r.g.x += ck * b.g[k].x;
        r.g.y += ck * b.g[k].y;
    }
    return r;
}

inline Eval eval_p2(const Element& e, const std::array<double, 3>& L, const std::vector<double>& c,
                    std::size_t offset = 0)
{
    const Basis b = p2_basis(e, L);
    Eval r;
    for (int k = 0; k < 6; ++k) {
        const double ck = c[offset + e.p2[k]];
        r.v += ck * b.v[k];
        r.g.x += ck * b.g[k].x;
        r.g.y += ck * b.g[k].y;
    }
    return r;
}

/// Point of the element (unwrapped coordinates).
inline Vec2 position(const Element& e, const std::array<double, 3>& L)
{
    return {L[0] * e.x[0] + L[1] * e.x[1] + L[2] * e.x[2], L[0] * e.y[0] + L[1] * e.y[1] + L[2] * e.y[2]};
}

/// Sum over elements and rule points of area * w * f(element, barycentric).
inline double integrate(const std::vector<Element>& els,
                        const std::function<double(const Element&, const std::array<double, 3>&)>& f)
{
    const Rule& r = rule7();
    double s = 0.0;
    for (const auto& e : els) {
        double se = 0.0;
        for (std::size_t q = 0; q < r.w.size(); ++q) {
            se += r.w[q] * f(e, r.bary[q]);
        }
        s += e.area * se;
    }
    return s;
}

inline std::vector<double> random_vector(std::mt19937& gen, std::size_t n, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(gen);
    return v;
}

inline double bilinear(const std::vector<double>& v, const std::vector<double>& Au)
{
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += v[k] * Au[k];
    return s;
}

}  // namespace oracle
