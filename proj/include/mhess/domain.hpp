#pragma once
// Strongly m-pseudoconvex model domains in C^n (balls and ellipsoids given by
// a quadratic defining function rho < 0), their lattice discretizations with
// interior / boundary-adjacent / exterior node classes, fractional boundary
// distances along grid lines (Shortley-Weller style), the family
// rho_nu = -|rho|^(1-nu), and the pseudoconvexity certificate
//   sigma = min over 1<=k<=m, sampled z, of c_nk * sigma_k(lambda(Hess rho)).

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "mhess/core_math.hpp"
#include "mhess/errors.hpp"

namespace mhess {

// real coordinates, axis order (x1, y1, x2, y2, ..., xn, yn)
using Point = std::array<double, 2 * kMaxN>;

enum class DomainKind { ball, ellipsoid, bare };

struct DomainSpec {
  DomainKind kind = DomainKind::ball;
  int n = 2;                // complex dimension
  double R = 1.0;           // ball radius
  std::vector<double> a;    // ellipsoid coefficients, rho = sum a_j |z_j|^2 - 1

  static DomainSpec ball(int n, double R);
  static DomainSpec ellipsoid(int n, std::vector<double> a);
};

// real-axis index pairs whose mixed second differences enter the Wirtinger
// Hessian: for complex j < k the four pairs (xj,xk), (yj,yk), (xj,yk), (yj,xk)
std::vector<std::pair<int, int>> hessian_stencil_pairs(int n);

double rho(const DomainSpec& d, const Point& z);
void rho_gradient(const DomainSpec& d, const Point& z, Point& grad);  // real, 2n
// d rho / d z_j, j = 0..n-1
std::array<cplx, kMaxN> rho_complex_gradient(const DomainSpec& d, const Point& z);
HermitianMatrix rho_complex_hessian(const DomainSpec& d, const Point& z);
double rho_gradient_max(const DomainSpec& d);  // max |grad rho| over the closure
// half-extent of the domain along each real axis
double axis_extent(const DomainSpec& d, int axis);

// rho_nu(z) = -|rho(z)|^(1-nu), nu in [0, 1/2)
double rho_nu_value(const DomainSpec& d, const Point& z, double nu);
// Hessian of rho_nu at an interior point (rho < 0):
//   (1-nu)|rho|^-nu * Hess(rho) + nu(1-nu)|rho|^(-1-nu) * (d rho)(d rho)^H
HermitianMatrix rho_nu_hessian(const DomainSpec& d, const Point& z, double nu);

enum class NodeClass : uint8_t { exterior = 0, boundary = 1, interior = 2 };

// Boundary interpolation data for one boundary-adjacent node: the nearest
// crossing of {rho = 0} along a grid line through the node, plus the
// opposite in-closure neighbor used for linear interpolation.
struct BoundaryAnchor {
  int64_t node = -1;
  int64_t inner = -1;   // node - sign*e_axis, or -1 when unavailable
  int axis = -1;        // -1: gradient-ray fallback, value pinned to phi(xi)
  int sign = 0;
  double theta = 0.0;   // crossing at node + theta*h*sign*e_axis, in [0, 2]
  Point xi{};           // the boundary point itself
};

struct LatticeDomain {
  DomainSpec spec;
  int n = 0;            // complex dimension
  double h = 0.0;
  std::array<double, 2 * kMaxN> origin{};
  std::array<int, 2 * kMaxN> dims{};
  std::array<int64_t, 2 * kMaxN> stride{};
  std::vector<NodeClass> cls;
  std::vector<double> rho_at;       // rho at every node (empty for bare lattices)
  std::vector<int64_t> interior;    // lexicographic flat indices
  std::vector<int64_t> boundary;    // lexicographic flat indices
  std::vector<BoundaryAnchor> anchors;  // parallel to `boundary`
  double grad_max = 1.0;

  int64_t total() const;
  Point coords(int64_t flat) const;
  int64_t flat_index(const std::array<int, 2 * kMaxN>& idx) const;
  void unflatten(int64_t flat, std::array<int, 2 * kMaxN>& idx) const;
  bool in_closure(int64_t flat) const { return cls[flat] != NodeClass::exterior; }
  // valid only for stencil neighbors of in-closure nodes (margin guaranteed)
  int64_t step(int64_t flat, int axis, int sign) const {
    return flat + sign * stride[axis];
  }
  // distance lower bound |rho| / max|grad rho|; 0 outside
  double conservative_dist(int64_t flat) const;
  double inradius() const;  // of the continuum domain, along coordinate axes
};

// Build the lattice: bounding box plus a one-cell margin, symmetric about the
// origin so that 0 is a node.  Throws ValidationError when h exceeds a quarter
// of the narrowest domain width or no interior node exists at this resolution.
std::shared_ptr<const LatticeDomain> make_domain(const DomainSpec& spec, double h);

struct PseudoconvexityCertificate {
  bool ok = false;
  double sigma = 0.0;   // min over k <= m and samples of c_nk sigma_k(Hess rho)
  int m = 0;
  Point worst{};        // sample attaining the minimum
};

// Samples Hess(rho) on in-closure lattice nodes (at sampling step h_sample)
// plus the boundary crossing points.  h_sample <= 0 picks a default.
PseudoconvexityCertificate certify_pseudoconvexity(const DomainSpec& spec, int m,
                                                   double h_sample = 0.0);

}  // namespace mhess
