#pragma once
// Explicit boundary barriers for Holder data phi with |phi(x)-phi(y)| <=
// M |x-y|^(2 alpha):
//   upper kind (superharmonic):  a_xi(z) = K|rho|^tau + M|z-xi|^(2 alpha) + phi(xi)
//   lower kind (m-sh):           b_xi(z) = -M(|z-xi|^2 - K rho)^alpha + phi(xi)
// their envelopes over boundary samples, the Lipschitz envelope sandwich
// A rho + phi_hat <= h <= phi_hat - A rho, and composite minorants
// A rho_nu + h.

#include "mhess/grid.hpp"
#include "mhess/solver.hpp"

namespace mhess {

enum class BarrierKind { superharmonic_a, msh_b };

struct BarrierParams {
  double M = 1.0;      // Holder norm of phi (includes the sup term)
  double K = 0.0;      // stiffness; set by choose_K
  double alpha = 0.5;  // in (0, 1/2]
  double tau = 0.5;    // in (0, 1), tau <= 2 alpha for the superharmonic kind
  BarrierKind kind = BarrierKind::msh_b;
  int m = 2;           // cone order certified for the m-sh kind

  void validate() const;
};

struct BoundarySample {
  std::vector<Point> xi;
  std::vector<double> phi_val;
  int n = 0;
};

// boundary crossing points of the lattice rays (every `every_k`-th anchor)
BoundarySample boundary_samples(const LatticeDomain& dom, const BoundaryData& phi,
                                int every_k = 1);

void write_boundary_samples(const std::string& path, const BoundarySample& s);

// sup |phi| + max pairwise |dphi| / |dxi|^(2 alpha) over sample pairs
double holder_norm_estimate(const BoundarySample& s, double two_alpha);

// single barriers as callables; xi must satisfy |rho(xi)| <= 1e-8
std::function<double(const Point&)> superharmonic_barrier(
    const DomainSpec& spec, const BoundaryData& phi, const Point& xi,
    const BarrierParams& params);
std::function<double(const Point&)> msh_barrier(const DomainSpec& spec,
                                                const BoundaryData& phi,
                                                const Point& xi,
                                                const BarrierParams& params);

// analytic complex Hessian of b_xi at an interior point (w > 0):
//   M a w^(a-1) (K Hess rho - I) + M a (1-a) w^(a-2) (dw)(dw)^H,
//   w = |z-xi|^2 - K rho,  dw_j = conj(z_j - xi_j) - K d_rho_j
HermitianMatrix msh_barrier_hessian(const DomainSpec& spec, const Point& xi,
                                    const BarrierParams& params, const Point& z);

struct MshCertification {
  bool ok = true;
  int64_t worst_node = -1;
  double worst_violation = 0.0;  // max closed-cone violation of sigma_k
};

// closed Gamma_m membership of the analytic Hessian at every interior node
MshCertification certify_msh_barrier(const LatticeDomain& dom, const Point& xi,
                                     const BarrierParams& params);

// max of the discrete Laplacian of `fn` over interior nodes with
// conservative_dist < collar; pass collar <= 0 for the 0.2 * inradius default
double collar_laplacian_max(const LatticeDomain& dom,
                            const std::function<double(const Point&)>& fn,
                            double collar = 0.0, int64_t* worst = nullptr);

// doubling search {1, 2, 4, ...}: for msh_b the smallest K with
// eigenvalues(K Hess rho - I) >= 1 on the closure; for superharmonic_a the
// smallest K whose collar Laplacian test (worst boundary sample) passes
double choose_K(const LatticeDomain& dom, const BoundaryData& phi,
                const BarrierParams& params);

// pointwise envelope over the samples: max of b_xi for msh_b, or min of
// a_xi - K' rho for superharmonic_a with K' from a doubling search making
// every extended barrier discretely superharmonic on all interior nodes
GridFunction barrier_envelope(std::shared_ptr<const LatticeDomain> dom,
                              const BoundarySample& samples,
                              const BarrierParams& params,
                              double* kprime_out = nullptr);

// (A rho + phi_hat, phi_hat - A rho)
std::pair<GridFunction, GridFunction> lipschitz_envelope_bounds(
    const GridFunction& phi_hat, double A);

// A rho_nu + h_env (rho_0 = rho reproduces the Lipschitz lower bound)
GridFunction composite_barrier(const GridFunction& h_env, double A, double nu);

}  // namespace mhess
