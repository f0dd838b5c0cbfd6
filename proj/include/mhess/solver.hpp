#pragma once
// Gauss-Seidel solver for the discrete Dirichlet problem
//   c_nm sigma_m(lambda(Hess_h u)) = f   on interior nodes,
//   u = phi                              on the boundary (fractional-distance
//                                        interpolation at boundary-adjacent nodes).
// Only the diagonal Hessian entries depend on the center value u(p), each with
// slope -1/h^2, so the spectrum shifts uniformly: lambda(c) = lambda0 -
// (c - u0)/h^2 * 1.  The per-node density F(c) is therefore nonincreasing in c
// on the admissible interval (-inf, c*], where c* = u0 + h^2 * cone_exit_shift
// makes sigma_m vanish; each update is a scalar bisection.

#include <string>

#include "mhess/grid.hpp"
#include "mhess/hessian_op.hpp"

namespace mhess {

enum class Admissibility { project, reject };
enum class SweepOrder { lexicographic, redblack };

struct SolveConfig {
  int m = 2;
  double tol = 1e-8;              // residual tolerance, density units
  int max_sweeps = 50000;
  double damping = 1.0;           // in (0, 1]
  double bisection_tol = 1e-12;   // on the node value
  Admissibility admissibility = Admissibility::project;
  SweepOrder order = SweepOrder::lexicographic;
  bool coarse_start = true;       // cascadic warm start from a 2h solve
  double clamp_threshold = 1e6;   // finite cap for singular densities

  void validate() const;
};

struct SolveReport {
  int sweeps = 0;
  double residual = 0.0;
  double max_cone_violation = 0.0;
  int clamped_nodes = 0;
  bool converged = false;
  // rows (sweep, residual, max_cone_violation) at the diagnostic checkpoints
  std::vector<std::array<double, 3>> history;
};

using BoundaryData = std::function<double(const Point&)>;

// discrete harmonic extension of phi (SOR on the 2n-point Laplacian with the
// same fractional-distance boundary rows)
GridFunction harmonic_extension(std::shared_ptr<const LatticeDomain> dom,
                                const BoundaryData& phi);

// sup + max gradient + max second-difference magnitude over interior nodes
double c2_norm_estimate(const GridFunction& g);

// A with A*rho + phi_hat a discrete subsolution of density f_max:
// A = phi_hat_c2 / lambda_min(Hess rho) + (f_max / sigma)^(1/m) + 1
double subsolution_constant(const DomainSpec& spec, double f_max,
                            double phi_hat_c2, int m, double sigma);

GridFunction dirichlet_solve(std::shared_ptr<const LatticeDomain> dom,
                             const GridFunction& f, const BoundaryData& phi,
                             const SolveConfig& cfg,
                             SolveReport* report = nullptr);

// the homogeneous solve f = 0 (discrete Perron envelope of phi)
GridFunction perron_envelope(std::shared_ptr<const LatticeDomain> dom,
                             const BoundaryData& phi, int m,
                             const SolveConfig& cfg,
                             SolveReport* report = nullptr);

// max over interior nodes of |hessian_operator_value(u,.,m) - f|
double residual(const GridFunction& u, const GridFunction& f, int m);

struct ComparisonReport {
  bool ordered = false;           // v <= u + 10 h^2 on all closure nodes
  double max_violation = 0.0;     // max (v - u - 10 h^2, 0 floor not applied)
  bool boundary_precondition_ok = false;  // v <= u + 10 h^2 on boundary nodes
  double boundary_gap = 0.0;      // max over boundary nodes of v - u
};

// for solutions with density(u) <= density(v) nodewise and ordered boundary
// data, the comparison principle predicts v <= u
ComparisonReport comparison_check(const GridFunction& u, const GridFunction& v,
                                  int m);

struct EnergyReport {
  double mass_u = 0.0, mass_v = 0.0;  // quadrature of the Laplacian
  double grad_u = 0.0, grad_v = 0.0;  // quadrature of |grad .|^2
};

// requires u <= v + 10 h^2 on closure nodes and |u - v| <= 10 h at boundary
// nodes; the expected direction is mass_v <= mass_u and grad_v <= grad_u
EnergyReport energy_comparison(const GridFunction& u, const GridFunction& v);

// max{u_shift, u + c0 delta^nu} on nodes with conservative_dist > delta,
// u + c0 delta^nu elsewhere in the closure
GridFunction glue_extension(const GridFunction& u, const GridFunction& u_shift,
                            double c0, double nu, double delta);

void write_residual_history(const std::string& path, const SolveReport& rep);

}  // namespace mhess
