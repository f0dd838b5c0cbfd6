#pragma once
// Discrete complex Hessian of a grid function via centered second differences,
//   H(j,k) = 1/4 [ (D_{xj xk} + D_{yj yk}) u + i (D_{xj yk} - D_{yj xk}) u ],
// the normalized operator density c_nm * sigma_m(lambda(H)), mixed densities
// by polarization, and first-order helpers (gradient, real Laplacian).

#include "mhess/grid.hpp"

namespace mhess {

// node must be interior (full second-difference stencil inside the closure)
HermitianMatrix wirtinger_hessian(const GridFunction& u, int64_t node);

EigenvalueVector hessian_eigenvalues(const GridFunction& u, int64_t node);

// c_nm * sigma_m(lambda(wirtinger_hessian))
double hessian_operator_value(const GridFunction& u, int64_t node, int m);

// c_nm times the mixed sigma_m of the Hessians of us (|us| = m), through the
// polarization identity (1/m!) sum_{S nonempty} (-1)^(m-|S|) sigma_m(sum_S H_i)
double mixed_hessian_value(const std::vector<const GridFunction*>& us,
                           int64_t node);

// eigenvalues of the discrete Hessian lie in closed Gamma_m (eps < 0: default)
bool msh_cone_test(const GridFunction& u, int64_t node, int m, double eps = -1.0);

// real 2n-dimensional Laplacian, centered; node must be interior
double laplacian(const GridFunction& u, int64_t node);

// centered first differences; node must be interior
void gradient_centered(const GridFunction& u, int64_t node, Point& g);

// per axis: centered when both neighbors are in the closure, one-sided when
// only one is, zero otherwise; defined on every in-closure node
void gradient_lenient(const GridFunction& u, int64_t node, Point& g);

}  // namespace mhess
