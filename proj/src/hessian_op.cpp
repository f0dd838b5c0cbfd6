#include "mhess/hessian_op.hpp"

#include <cassert>
#include <cmath>
#include <string>

namespace mhess {

namespace {

void require_interior(const GridFunction& u, int64_t node, const char* who) {
  if (u.dom->cls[size_t(node)] != NodeClass::interior)
    throw ValidationError(std::string(who) + ": stencil leaves the domain at node " +
                          std::to_string(node));
}

// centered pure second difference along real axis a, times h^2
inline double d2_pure(const GridFunction& u, int64_t f, int64_t sa) {
  return u[f + sa] - 2.0 * u[f] + u[f - sa];
}

// 4-point cross second difference along axes a, b, times 4h^2
inline double d2_mixed(const GridFunction& u, int64_t f, int64_t sa, int64_t sb) {
  return u[f + sa + sb] - u[f + sa - sb] - u[f - sa + sb] + u[f - sa - sb];
}

}  // namespace

HermitianMatrix wirtinger_hessian(const GridFunction& u, int64_t node) {
  require_interior(u, node, "wirtinger_hessian");
  const LatticeDomain& d = *u.dom;
  const double ih2 = 1.0 / (d.h * d.h);
  HermitianMatrix H(d.n);
  for (int j = 0; j < d.n; ++j) {
    const int64_t sx = d.stride[2 * j], sy = d.stride[2 * j + 1];
    H(j, j) = 0.25 * ih2 * (d2_pure(u, node, sx) + d2_pure(u, node, sy));
    for (int k = j + 1; k < d.n; ++k) {
      const int64_t tx = d.stride[2 * k], ty = d.stride[2 * k + 1];
      const double re =
          0.25 * ih2 *
          (0.25 * (d2_mixed(u, node, sx, tx) + d2_mixed(u, node, sy, ty)));
      const double im =
          0.25 * ih2 *
          (0.25 * (d2_mixed(u, node, sx, ty) - d2_mixed(u, node, sy, tx)));
      H(j, k) = cplx(re, im);
    }
  }
  H.symmetrize();
  return H;
}

EigenvalueVector hessian_eigenvalues(const GridFunction& u, int64_t node) {
  return hermitian_eigenvalues(wirtinger_hessian(u, node));
}

double hessian_operator_value(const GridFunction& u, int64_t node, int m) {
  EigenvalueVector ev = hessian_eigenvalues(u, node);
  return hessian_normalization(u.dom->n, m) *
         elementary_symmetric(ev.span(), m);
}

double mixed_hessian_value(const std::vector<const GridFunction*>& us,
                           int64_t node) {
  const int m = int(us.size());
  const int n = us[0]->dom->n;
  if (m < 1 || m > n) throw ValidationError("mixed_hessian_value: need 1 <= m <= n");
  std::vector<HermitianMatrix> H;
  H.reserve(size_t(m));
  for (const GridFunction* u : us) H.push_back(wirtinger_hessian(*u, node));

  double acc = 0.0;
  for (unsigned S = 1; S < (1u << m); ++S) {
    HermitianMatrix A(n);
    int popcount = 0;
    for (int i = 0; i < m; ++i)
      if (S & (1u << i)) {
        A = A + H[size_t(i)];
        ++popcount;
      }
    EigenvalueVector ev = hermitian_eigenvalues(A);
    const double sgn = ((m - popcount) % 2 == 0) ? 1.0 : -1.0;
    acc += sgn * elementary_symmetric(ev.span(), m);
  }
  double mfact = 1.0;
  for (int i = 2; i <= m; ++i) mfact *= i;
  return hessian_normalization(n, m) * acc / mfact;
}

bool msh_cone_test(const GridFunction& u, int64_t node, int m, double eps) {
  EigenvalueVector ev = hessian_eigenvalues(u, node);
  return in_gamma_m_closed(ev.span(), m, eps);
}

double laplacian(const GridFunction& u, int64_t node) {
  require_interior(u, node, "laplacian");
  const LatticeDomain& d = *u.dom;
  double s = 0.0;
  for (int i = 0; i < 2 * d.n; ++i) s += d2_pure(u, node, d.stride[i]);
  return s / (d.h * d.h);
}

void gradient_centered(const GridFunction& u, int64_t node, Point& g) {
  require_interior(u, node, "gradient_centered");
  const LatticeDomain& d = *u.dom;
  g.fill(0.0);
  for (int i = 0; i < 2 * d.n; ++i)
    g[i] = (u[node + d.stride[i]] - u[node - d.stride[i]]) / (2.0 * d.h);
}

void gradient_lenient(const GridFunction& u, int64_t node, Point& g) {
  const LatticeDomain& d = *u.dom;
  assert(d.in_closure(node));
  std::array<int, 2 * kMaxN> idx{};
  d.unflatten(node, idx);
  g.fill(0.0);
  for (int i = 0; i < 2 * d.n; ++i) {
    const bool up_ok = idx[i] + 1 < d.dims[i] && d.in_closure(node + d.stride[i]);
    const bool dn_ok = idx[i] - 1 >= 0 && d.in_closure(node - d.stride[i]);
    if (up_ok && dn_ok)
      g[i] = (u[node + d.stride[i]] - u[node - d.stride[i]]) / (2.0 * d.h);
    else if (up_ok)
      g[i] = (u[node + d.stride[i]] - u[node]) / d.h;
    else if (dn_ok)
      g[i] = (u[node] - u[node - d.stride[i]]) / d.h;
  }
}

}  // namespace mhess
