#include "msfem/assembly.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace msfem::fem {

using linalg::Index;
using linalg::TripletBuffer;

int assembly_threads()
{
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("MSFEM_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) {
            threads = std::min(threads, cap);
        }
    }
    return threads;
}

namespace {

// Runs kernel(element, buffer) over contiguous element chunks and
// concatenates the chunk buffers in element order, so the assembled matrix
// does not depend on the thread count.
template <class Kernel>
CsrMatrix element_loop(const Discretization& disc, Index nrows, Index ncols, Kernel&& kernel)
{
    const int ne = disc.quad().num_elements();
    const int nthreads = std::min(assembly_threads(), std::max(1, ne / 64));
    if (nthreads == 1) {
        TripletBuffer buf(nrows, ncols);
        for (int e = 0; e < ne; ++e) {
            kernel(e, buf);
        }
        return linalg::assemble_from_triplets(buf);
    }
    std::vector<TripletBuffer> parts(nthreads, TripletBuffer(nrows, ncols));
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            const int begin = static_cast<int>(static_cast<long>(ne) * t / nthreads);
            const int end = static_cast<int>(static_cast<long>(ne) * (t + 1) / nthreads);
            for (int e = begin; e < end; ++e) {
                kernel(e, parts[t]);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    TripletBuffer all(nrows, ncols);
    for (const auto& p : parts) {
        all.append(p);
    }
    return linalg::assemble_from_triplets(all);
}

void check_qp_length(std::span<const double> f, std::size_t expected, const char* what)
{
    if (f.size() != expected) {
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(expected) +
                                    " quadrature values, got " + std::to_string(f.size()));
    }
}

}  // namespace

CsrMatrix assemble_weighted_mass(const Discretization& disc, Kind kind, std::span<const double> weight_qp)
{
    const auto& qd = disc.quad();
    check_qp_length(weight_qp, qd.size(), "assemble_weighted_mass");
    const auto& space = disc.space(kind);
    const int k = space.dofs_per_element();
    return element_loop(disc, space.ndof(), space.ndof(), [&](int e, TripletBuffer& buf) {
        double local[6][6] = {};
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double w = qd.weight(qp) * weight_qp[qp];
            const double* phi = qd.values(kind, qp);
            for (int a = 0; a < k; ++a) {
                for (int b = 0; b < k; ++b) {
                    local[a][b] += w * phi[a] * phi[b];
                }
            }
        }
        const auto dofs = space.element_dofs(e);
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) {
                buf.add(dofs[a], dofs[b], local[a][b]);
            }
        }
    });
}

CsrMatrix assemble_mass(const Discretization& disc, Kind kind)
{
    const std::vector<double> one(disc.quad().size(), 1.0);
    return assemble_weighted_mass(disc, kind, one);
}

namespace {

template <bool Gradient>
CsrMatrix block_p1_form(const Discretization& disc, int ncomp, std::span<const double> coeff_qp)
{
    const auto& qd = disc.quad();
    if (ncomp < 1) {
        throw std::invalid_argument("block form: ncomp must be positive");
    }
    const std::size_t nn = static_cast<std::size_t>(ncomp) * ncomp;
    check_qp_length(coeff_qp, qd.size() * nn, "block form");
    const auto& space = disc.p1();
    const Index n1 = space.ndof();
    return element_loop(disc, ncomp * n1, ncomp * n1, [&](int e, TripletBuffer& buf) {
        std::vector<double> local(nn * 9, 0.0);
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double w = qd.weight(qp);
            double base[3][3];
            if constexpr (Gradient) {
                const double* g = qd.p1_gradients(qp);
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        base[a][b] = w * (g[2 * a] * g[2 * b] + g[2 * a + 1] * g[2 * b + 1]);
                    }
                }
            } else {
                const double* phi = qd.p1_values(qp);
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        base[a][b] = w * phi[a] * phi[b];
                    }
                }
            }
            const double* c = &coeff_qp[qp * nn];
            for (std::size_t ij = 0; ij < nn; ++ij) {
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        local[ij * 9 + a * 3 + b] += c[ij] * base[a][b];
                    }
                }
            }
        }
        const auto dofs = space.element_dofs(e);
        for (int i = 0; i < ncomp; ++i) {
            for (int j = 0; j < ncomp; ++j) {
                const std::size_t ij = static_cast<std::size_t>(i) * ncomp + j;
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        buf.add(i * n1 + dofs[a], j * n1 + dofs[b], local[ij * 9 + a * 3 + b]);
                    }
                }
            }
        }
    });
}

}  // namespace

CsrMatrix assemble_weighted_block_stiffness(const Discretization& disc, int ncomp,
                                            std::span<const double> coeff_qp)
{
    return block_p1_form<true>(disc, ncomp, coeff_qp);
}

CsrMatrix assemble_weighted_block_mass(const Discretization& disc, int ncomp,
                                       std::span<const double> coeff_qp)
{
    return block_p1_form<false>(disc, ncomp, coeff_qp);
}

CsrMatrix assemble_transport(const Discretization& disc, std::span<const double> rho_qp)
{
    const auto& qd = disc.quad();
    check_qp_length(rho_qp, qd.size(), "assemble_transport");
    const Index n1 = disc.p1().ndof();
    const Index n2 = disc.p2().ndof();
    return element_loop(disc, n1, 2 * n2, [&](int e, TripletBuffer& buf) {
        double local[2][3][6] = {};
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double w = qd.weight(qp) * rho_qp[qp];
            const double* g1 = qd.p1_gradients(qp);
            const double* v2 = qd.p2_values(qp);
            for (int c = 0; c < 2; ++c) {
                for (int a = 0; a < 3; ++a) {
                    for (int b = 0; b < 6; ++b) {
                        local[c][a][b] += w * v2[b] * g1[2 * a + c];
                    }
                }
            }
        }
        const auto d1 = disc.p1().element_dofs(e);
        const auto d2 = disc.p2().element_dofs(e);
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 2; ++c) {
                for (int b = 0; b < 6; ++b) {
                    buf.add(d1[a], c * n2 + d2[b], local[c][a][b]);
                }
            }
        }
    });
}

CsrMatrix assemble_convection(const Discretization& disc, std::span<const double> w_qp)
{
    const auto& qd = disc.quad();
    check_qp_length(w_qp, 2 * qd.size(), "assemble_convection");
    const Index n2 = disc.p2().ndof();
    return element_loop(disc, 2 * n2, 2 * n2, [&](int e, TripletBuffer& buf) {
        double local[6][6] = {};
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double wt = qd.weight(qp);
            const double wx = w_qp[2 * qp];
            const double wy = w_qp[2 * qp + 1];
            const double* v = qd.p2_values(qp);
            const double* g = qd.p2_gradients(qp);
            for (int b = 0; b < 6; ++b) {
                const double adv = wt * (wx * g[2 * b] + wy * g[2 * b + 1]);
                for (int a = 0; a < 6; ++a) {
                    local[a][b] += adv * v[a];
                }
            }
        }
        const auto d2 = disc.p2().element_dofs(e);
        for (int c = 0; c < 2; ++c) {
            for (int a = 0; a < 6; ++a) {
                for (int b = 0; b < 6; ++b) {
                    buf.add(c * n2 + d2[a], c * n2 + d2[b], local[a][b]);
                }
            }
        }
    });
}

CsrMatrix assemble_skew_convection(const Discretization& disc, std::span<const double> w_qp)
{
    const CsrMatrix c = assemble_convection(disc, w_qp);
    // 0.5*x and 0.5*y are exact, and fl(p - q) = -fl(q - p), so B = -B^T exactly.
    return linalg::add(c, c.transpose(), 0.5, -0.5);
}

CsrMatrix assemble_stress(const Discretization& disc, double nu, double lambda)
{
    if (!(nu > 0.0)) {
        throw std::invalid_argument("assemble_stress: nu must be positive");
    }
    if (lambda < -nu) {
        throw std::invalid_argument("assemble_stress: lambda must be >= -nu");
    }
    const auto& qd = disc.quad();
    const Index n2 = disc.p2().ndof();
    return element_loop(disc, 2 * n2, 2 * n2, [&](int e, TripletBuffer& buf) {
        // local[c][d][a][b]: test (a, c), trial (b, d)
        double local[2][2][6][6] = {};
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double w = qd.weight(qp);
            const double* g = qd.p2_gradients(qp);
            for (int a = 0; a < 6; ++a) {
                for (int b = 0; b < 6; ++b) {
                    const double gg = g[2 * a] * g[2 * b] + g[2 * a + 1] * g[2 * b + 1];
                    for (int c = 0; c < 2; ++c) {
                        for (int d = 0; d < 2; ++d) {
                            double s = nu * g[2 * b + c] * g[2 * a + d] + lambda * g[2 * b + d] * g[2 * a + c];
                            if (c == d) {
                                s += nu * gg;
                            }
                            local[c][d][a][b] += w * s;
                        }
                    }
                }
            }
        }
        const auto d2 = disc.p2().element_dofs(e);
        for (int c = 0; c < 2; ++c) {
            for (int d = 0; d < 2; ++d) {
                for (int a = 0; a < 6; ++a) {
                    for (int b = 0; b < 6; ++b) {
                        buf.add(c * n2 + d2[a], d * n2 + d2[b], local[c][d][a][b]);
                    }
                }
            }
        }
    });
}

CsrMatrix assemble_div_pressure(const Discretization& disc)
{
    const auto& qd = disc.quad();
    const Index n1 = disc.p1().ndof();
    const Index n2 = disc.p2().ndof();
    return element_loop(disc, 2 * n2, n1, [&](int e, TripletBuffer& buf) {
        double local[2][6][3] = {};
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double w = qd.weight(qp);
            const double* v1 = qd.p1_values(qp);
            const double* g2 = qd.p2_gradients(qp);
            for (int c = 0; c < 2; ++c) {
                for (int a = 0; a < 6; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        local[c][a][b] += w * v1[b] * g2[2 * a + c];
                    }
                }
            }
        }
        const auto d1 = disc.p1().element_dofs(e);
        const auto d2 = disc.p2().element_dofs(e);
        for (int c = 0; c < 2; ++c) {
            for (int a = 0; a < 6; ++a) {
                for (int b = 0; b < 3; ++b) {
                    buf.add(c * n2 + d2[a], d1[b], local[c][a][b]);
                }
            }
        }
    });
}

CsrMatrix assemble_weighted_vector_mass(const Discretization& disc, std::span<const double> rho_qp)
{
    const auto& qd = disc.quad();
    check_qp_length(rho_qp, qd.size(), "assemble_weighted_vector_mass");
    const Index n2 = disc.p2().ndof();
    return element_loop(disc, 2 * n2, 2 * n2, [&](int e, TripletBuffer& buf) {
        double local[6][6] = {};
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double w = qd.weight(qp) * rho_qp[qp];
            const double* v = qd.p2_values(qp);
            for (int a = 0; a < 6; ++a) {
                for (int b = 0; b < 6; ++b) {
                    local[a][b] += w * v[a] * v[b];
                }
            }
        }
        const auto d2 = disc.p2().element_dofs(e);
        for (int c = 0; c < 2; ++c) {
            for (int a = 0; a < 6; ++a) {
                for (int b = 0; b < 6; ++b) {
                    buf.add(c * n2 + d2[a], c * n2 + d2[b], local[a][b]);
                }
            }
        }
    });
}

CsrMatrix assemble_velocity_density_coupling(const Discretization& disc, std::span<const double> u_qp)
{
    const auto& qd = disc.quad();
    check_qp_length(u_qp, 2 * qd.size(), "assemble_velocity_density_coupling");
    const Index n1 = disc.p1().ndof();
    const Index n2 = disc.p2().ndof();
    return element_loop(disc, 2 * n2, n1, [&](int e, TripletBuffer& buf) {
        double local[2][6][3] = {};
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double w = qd.weight(qp);
            const double* v1 = qd.p1_values(qp);
            const double* v2 = qd.p2_values(qp);
            for (int c = 0; c < 2; ++c) {
                const double wc = w * u_qp[2 * qp + c];
                for (int a = 0; a < 6; ++a) {
                    for (int b = 0; b < 3; ++b) {
                        local[c][a][b] += wc * v2[a] * v1[b];
                    }
                }
            }
        }
        const auto d1 = disc.p1().element_dofs(e);
        const auto d2 = disc.p2().element_dofs(e);
        for (int c = 0; c < 2; ++c) {
            for (int a = 0; a < 6; ++a) {
                for (int b = 0; b < 3; ++b) {
                    buf.add(c * n2 + d2[a], d1[b], local[c][a][b]);
                }
            }
        }
    });
}

std::vector<double> assemble_load(const Discretization& disc, Kind kind, std::span<const double> f_qp)
{
    const auto& qd = disc.quad();
    check_qp_length(f_qp, qd.size(), "assemble_load");
    const auto& space = disc.space(kind);
    const int k = space.dofs_per_element();
    std::vector<double> out(space.ndof(), 0.0);
    for (int e = 0; e < qd.num_elements(); ++e) {
        const auto dofs = space.element_dofs(e);
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double w = qd.weight(qp) * f_qp[qp];
            const double* phi = qd.values(kind, qp);
            for (int a = 0; a < k; ++a) {
                out[dofs[a]] += w * phi[a];
            }
        }
    }
    return out;
}

std::vector<double> assemble_vector_load(const Discretization& disc, std::span<const double> f_qp)
{
    const auto& qd = disc.quad();
    check_qp_length(f_qp, 2 * qd.size(), "assemble_vector_load");
    const int n2 = disc.p2().ndof();
    std::vector<double> out(2 * static_cast<std::size_t>(n2), 0.0);
    for (int e = 0; e < qd.num_elements(); ++e) {
        const auto dofs = disc.p2().element_dofs(e);
        for (int q = 0; q < qd.num_points(); ++q) {
            const std::size_t qp = qd.index(e, q);
            const double w = qd.weight(qp);
            const double* phi = qd.p2_values(qp);
            for (int c = 0; c < 2; ++c) {
                for (int a = 0; a < 6; ++a) {
                    out[c * n2 + dofs[a]] += w * f_qp[2 * qp + c] * phi[a];
                }
            }
        }
    }
    return out;
}

}  // namespace msfem::fem
