#pragma once

#include <span>
#include <vector>

#include "msfem/fespace.hpp"
#include "msfem/linalg.hpp"

// Bilinear and trilinear forms of the scheme. Coefficient fields are passed
// as values at the quadrature points of QuadratureData (element-major);
// vector-valued coefficients are interleaved per point. Velocity spaces are
// stacked by component: dof (a, c) has index c * ndof(P2) + a.
//
// Matrix rows always correspond to the test function, columns to the trial
// function.
namespace msfem::fem {

using linalg::CsrMatrix;

/// Element loop parallelism, capped by the MSFEM_THREADS environment variable.
[[nodiscard]] int assembly_threads();

/// <phi_b, phi_a>
[[nodiscard]] CsrMatrix assemble_mass(const Discretization& disc, Kind kind);

/// <w phi_b, phi_a>
[[nodiscard]] CsrMatrix assemble_weighted_mass(const Discretization& disc, Kind kind,
                                               std::span<const double> weight_qp);

/// Block (i, j) of the N x N block matrix on P1^N: <C_ij grad phi_b, grad phi_a>,
/// with C_ij at quadrature point qp stored at coeff_qp[qp*N*N + i*N + j].
[[nodiscard]] CsrMatrix assemble_weighted_block_stiffness(const Discretization& disc, int ncomp,
                                                          std::span<const double> coeff_qp);

/// Block (i, j): <C_ij phi_b, phi_a> on P1^N, same coefficient layout.
[[nodiscard]] CsrMatrix assemble_weighted_block_mass(const Discretization& disc, int ncomp,
                                                     std::span<const double> coeff_qp);

/// P2-vector trial -> P1 test: <rho phi_b e_c, grad psi_a>.
/// Its transpose is the momentum coupling <rho grad mu, v>.
[[nodiscard]] CsrMatrix assemble_transport(const Discretization& disc,
                                           std::span<const double> rho_qp);

/// C with C[(a,c),(b,c)] = <(w . grad) phi_b, phi_a>; w interleaved at qp.
[[nodiscard]] CsrMatrix assemble_convection(const Discretization& disc,
                                            std::span<const double> w_qp);

/// B = (C - C^T) / 2, so v^T B u = b_skw(w; u, v). Antisymmetric bit for bit.
[[nodiscard]] CsrMatrix assemble_skew_convection(const Discretization& disc,
                                                 std::span<const double> w_qp);

/// <nu (grad u + grad u^T) + lambda div u I, grad v>. Requires nu > 0 and
/// lambda >= -nu.
[[nodiscard]] CsrMatrix assemble_stress(const Discretization& disc, double nu, double lambda);

/// P1 trial -> P2-vector test: <phi_b, div v_a>. Transposed: <div u, q>.
[[nodiscard]] CsrMatrix assemble_div_pressure(const Discretization& disc);

/// <rho u, v> on the P2-vector space.
[[nodiscard]] CsrMatrix assemble_weighted_vector_mass(const Discretization& disc,
                                                      std::span<const double> rho_qp);

/// P1 trial -> P2-vector test: <u_c phi_b, phi_a> for test dof (a, c).
[[nodiscard]] CsrMatrix assemble_velocity_density_coupling(const Discretization& disc,
                                                           std::span<const double> u_qp);

/// <f, phi_a>
[[nodiscard]] std::vector<double> assemble_load(const Discretization& disc, Kind kind,
                                                std::span<const double> f_qp);

/// <f, v_a> for f interleaved at qp, on the P2-vector space.
[[nodiscard]] std::vector<double> assemble_vector_load(const Discretization& disc,
                                                       std::span<const double> f_qp);

}  // namespace msfem::fem
