#include "mhess/barriers.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>

namespace mhess {

void BarrierParams::validate() const {
  if (!(M >= 0.0)) throw ValidationError("BarrierParams: M must be >= 0");
  if (!(alpha > 0.0) || alpha > 0.5)
    throw ValidationError("BarrierParams: alpha must lie in (0, 1/2]");
  if (!(tau > 0.0) || !(tau < 1.0))
    throw ValidationError("BarrierParams: tau must lie in (0, 1)");
  if (kind == BarrierKind::superharmonic_a && tau > 2.0 * alpha + 1e-15)
    throw ValidationError("BarrierParams: superharmonic kind needs tau <= 2 alpha");
  if (m < 1 || m > kMaxN) throw ValidationError("BarrierParams: m out of range");
}

namespace {

void require_on_boundary(const DomainSpec& spec, const Point& xi) {
  if (std::fabs(rho(spec, xi)) > 1e-8)
    throw ValidationError("barrier: xi is not a boundary point");
}

double dist2(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int i = 0; i < 2 * n; ++i) s += (a[size_t(i)] - b[size_t(i)]) * (a[size_t(i)] - b[size_t(i)]);
  return s;
}

double hess_rho_min_eig(const DomainSpec& spec) {
  if (spec.kind == DomainKind::ball) return 1.0;
  if (spec.kind == DomainKind::ellipsoid)
    return *std::min_element(spec.a.begin(), spec.a.end());
  throw ValidationError("barrier: needs a geometric domain");
}

}  // namespace

BoundarySample boundary_samples(const LatticeDomain& dom, const BoundaryData& phi,
                                int every_k) {
  if (every_k < 1) throw ValidationError("boundary_samples: every_k must be >= 1");
  BoundarySample s;
  s.n = dom.n;
  for (size_t i = 0; i < dom.anchors.size(); i += size_t(every_k)) {
    s.xi.push_back(dom.anchors[i].xi);
    s.phi_val.push_back(phi(dom.anchors[i].xi));
  }
  return s;
}

void write_boundary_samples(const std::string& path, const BoundarySample& s) {
  FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw ValidationError("write_boundary_samples: cannot open " + path);
  for (int j = 0; j < s.n; ++j) std::fprintf(fp, "x%d,y%d,", j + 1, j + 1);
  std::fprintf(fp, "phi_value\n");
  for (size_t i = 0; i < s.xi.size(); ++i) {
    for (int c = 0; c < 2 * s.n; ++c)
      std::fprintf(fp, "%.17g,", s.xi[i][size_t(c)]);
    std::fprintf(fp, "%.17g\n", s.phi_val[i]);
  }
  std::fclose(fp);
}

double holder_norm_estimate(const BoundarySample& s, double two_alpha) {
  if (s.xi.empty()) throw ValidationError("holder_norm_estimate: no samples");
  double sup = 0.0;
  for (double v : s.phi_val) sup = std::max(sup, std::fabs(v));
  size_t stride = 1;
  while (s.xi.size() / stride > 1500) ++stride;
  double semi = 0.0;
  for (size_t i = 0; i < s.xi.size(); i += stride)
    for (size_t j = i + stride; j < s.xi.size(); j += stride) {
      double d2 = dist2(s.xi[i], s.xi[j], s.n);
      if (d2 < 1e-24) continue;
      semi = std::max(semi, std::fabs(s.phi_val[i] - s.phi_val[j]) /
                                std::pow(d2, 0.5 * two_alpha));
    }
  return sup + semi;
}

std::function<double(const Point&)> superharmonic_barrier(
    const DomainSpec& spec, const BoundaryData& phi, const Point& xi,
    const BarrierParams& params) {
  params.validate();
  if (params.kind != BarrierKind::superharmonic_a)
    throw ValidationError("superharmonic_barrier: wrong params.kind");
  require_on_boundary(spec, xi);
  const double phixi = phi(xi);
  const double K = params.K, M = params.M, a = params.alpha, tau = params.tau;
  const int n = spec.n;
  DomainSpec sp = spec;
  Point x = xi;
  return [sp, x, phixi, K, M, a, tau, n](const Point& z) {
    return K * std::pow(std::fabs(rho(sp, z)), tau) +
           M * std::pow(dist2(z, x, n), a) + phixi;
  };
}

std::function<double(const Point&)> msh_barrier(const DomainSpec& spec,
                                                const BoundaryData& phi,
                                                const Point& xi,
                                                const BarrierParams& params) {
  params.validate();
  if (params.kind != BarrierKind::msh_b)
    throw ValidationError("msh_barrier: wrong params.kind");
  require_on_boundary(spec, xi);
  const double phixi = phi(xi);
  const double K = params.K, M = params.M, a = params.alpha;
  const int n = spec.n;
  DomainSpec sp = spec;
  Point x = xi;
  return [sp, x, phixi, K, M, a, n](const Point& z) {
    // snap vanishing w to 0 so b(xi) = phi(xi) holds in exact bits even when
    // the crossing leaves rho(xi) at roundoff level; interior w is >> 1e-12
    double w = dist2(z, x, n) - K * rho(sp, z);
    if (w < 1e-12) w = 0.0;
    return -M * std::pow(w, a) + phixi;
  };
}

HermitianMatrix msh_barrier_hessian(const DomainSpec& spec, const Point& xi,
                                    const BarrierParams& params, const Point& z) {
  const int n = spec.n;
  const double w = dist2(z, xi, n) - params.K * rho(spec, z);
  if (!(w > 0.0))
    throw ValidationError("msh_barrier_hessian: undefined at the base point");
  const double M = params.M, a = params.alpha, K = params.K;
  HermitianMatrix Hr = rho_complex_hessian(spec, z);
  auto gr = rho_complex_gradient(spec, z);
  std::array<cplx, kMaxN> dw{};
  for (int j = 0; j < n; ++j)
    dw[size_t(j)] =
        cplx(z[size_t(2 * j)] - xi[size_t(2 * j)],
             -(z[size_t(2 * j) + 1] - xi[size_t(2 * j) + 1])) -
        K * gr[size_t(j)];
  const double c1 = M * a * std::pow(w, a - 1.0);
  const double c2 = M * a * (1.0 - a) * std::pow(w, a - 2.0);
  HermitianMatrix H(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      cplx base = K * Hr(j, k);
      if (j == k) base -= 1.0;
      H(j, k) = c1 * base + c2 * dw[size_t(j)] * std::conj(dw[size_t(k)]);
    }
  H.symmetrize();
  return H;
}

MshCertification certify_msh_barrier(const LatticeDomain& dom, const Point& xi,
                                     const BarrierParams& params) {
  MshCertification cert;
  for (int64_t p : dom.interior) {
    HermitianMatrix H = msh_barrier_hessian(dom.spec, xi, params, dom.coords(p));
    EigenvalueVector ev = hermitian_eigenvalues(H);
    if (!in_gamma_m_closed(ev.span(), params.m)) {
      double viol = gamma_violation(ev.span(), params.m);
      if (viol > cert.worst_violation) {
        cert.worst_violation = viol;
        cert.worst_node = p;
      }
      cert.ok = false;
    }
  }
  return cert;
}

double collar_laplacian_max(const LatticeDomain& dom,
                            const std::function<double(const Point&)>& fn,
                            double collar, int64_t* worst) {
  if (collar <= 0.0) collar = 0.2 * dom.inradius();
  const double h = dom.h;
  double mx = -1e300;
  int64_t wn = -1;
  for (int64_t p : dom.interior) {
    if (dom.conservative_dist(p) >= collar) continue;
    const Point z = dom.coords(p);
    const double c = fn(z);
    double lap = 0.0;
    for (int i = 0; i < 2 * dom.n; ++i) {
      Point zp = z, zm = z;
      zp[size_t(i)] += h;
      zm[size_t(i)] -= h;
      lap += fn(zp) + fn(zm) - 2.0 * c;
    }
    lap /= h * h;
    if (lap > mx) {
      mx = lap;
      wn = p;
    }
  }
  if (worst) *worst = wn;
  if (wn < 0)
    throw ValidationError("collar_laplacian_max: no interior node in the collar");
  return mx;
}

namespace {

// Discrete-Laplacian pieces of a_xi on a node set: P = lap_h |rho|^tau
// (xi-independent) and Q = max over the nearest samples of M lap_h |z-xi|^(2a).
// The xi maximum is dominated by nearby samples because lap |z-xi|^(2a)
// decreases with distance, so only the nearest few are evaluated.
struct SuperharmonicPieces {
  std::vector<int64_t> nodes;
  std::vector<double> P, Q;
};

SuperharmonicPieces superharmonic_pieces(const LatticeDomain& dom,
                                         const BoundarySample& samples,
                                         const BarrierParams& params,
                                         double max_dist) {
  SuperharmonicPieces out;
  const double h = dom.h, h2 = h * h;
  const double tau = params.tau, a = params.alpha, M = params.M;
  const int L = 8;
  for (int64_t p : dom.interior) {
    if (max_dist > 0.0 && dom.conservative_dist(p) >= max_dist) continue;
    out.nodes.push_back(p);
    double lapP =
        -2.0 * (2.0 * dom.n) * std::pow(std::fabs(dom.rho_at[size_t(p)]), tau);
    for (int i = 0; i < 2 * dom.n; ++i) {
      lapP += std::pow(std::fabs(dom.rho_at[size_t(p + dom.stride[i])]), tau);
      lapP += std::pow(std::fabs(dom.rho_at[size_t(p - dom.stride[i])]), tau);
    }
    out.P.push_back(lapP / h2);

    const Point z = dom.coords(p);
    // nearest L samples by squared distance
    std::array<size_t, L> best{};
    std::array<double, L> bestd{};
    int nb = 0;
    for (size_t s = 0; s < samples.xi.size(); ++s) {
      double d2 = dist2(z, samples.xi[s], dom.n);
      if (nb < L) {
        best[size_t(nb)] = s;
        bestd[size_t(nb)] = d2;
        ++nb;
        continue;
      }
      int worst = 0;
      for (int t = 1; t < L; ++t)
        if (bestd[size_t(t)] > bestd[size_t(worst)]) worst = t;
      if (d2 < bestd[size_t(worst)]) {
        bestd[size_t(worst)] = d2;
        best[size_t(worst)] = s;
      }
    }
    double q = -1e300;
    for (int t = 0; t < nb; ++t) {
      const Point& xi = samples.xi[best[size_t(t)]];
      double lap = -2.0 * (2.0 * dom.n) * std::pow(dist2(z, xi, dom.n), a);
      for (int i = 0; i < 2 * dom.n; ++i) {
        Point zp = z, zm = z;
        zp[size_t(i)] += h;
        zm[size_t(i)] -= h;
        lap += std::pow(dist2(zp, xi, dom.n), a) + std::pow(dist2(zm, xi, dom.n), a);
      }
      q = std::max(q, M * lap / h2);
    }
    out.Q.push_back(q);
  }
  return out;
}

double doubling_K_superharmonic(const SuperharmonicPieces& pieces) {
  for (double K = 1.0; K <= double(1 << 20); K *= 2.0) {
    double mx = -1e300;
    for (size_t i = 0; i < pieces.nodes.size(); ++i)
      mx = std::max(mx, K * pieces.P[i] + pieces.Q[i]);
    if (mx <= 1e-6) return K;
  }
  throw NumericalError("choose_K: superharmonic search exceeded 2^20");
}

}  // namespace

double choose_K(const LatticeDomain& dom, const BoundaryData& phi,
                const BarrierParams& params) {
  params.validate();
  if (params.kind == BarrierKind::msh_b) {
    const double lmin = hess_rho_min_eig(dom.spec);
    if (!(lmin > 0.0))
      throw ValidationError("choose_K: defining Hessian not positive");
    for (double K = 1.0; K <= double(1 << 20); K *= 2.0)
      if (K * lmin - 1.0 >= 1.0) return K;
    throw NumericalError("choose_K: m-sh search exceeded 2^20");
  }
  int every_k = std::max<int>(1, int(dom.anchors.size() / 800));
  BoundarySample samples = boundary_samples(dom, phi, every_k);
  double supphi = 0.0;
  for (double v : samples.phi_val) supphi = std::max(supphi, std::fabs(v));
  if (params.M < supphi - 1e-12)
    throw ValidationError("choose_K: M below sup|phi|");
  SuperharmonicPieces pieces =
      superharmonic_pieces(dom, samples, params, 0.2 * dom.inradius());
  if (pieces.nodes.empty())
    throw ValidationError("choose_K: no interior node in the collar");
  return doubling_K_superharmonic(pieces);
}

GridFunction barrier_envelope(std::shared_ptr<const LatticeDomain> dom,
                              const BoundarySample& samples,
                              const BarrierParams& params, double* kprime_out) {
  params.validate();
  if (samples.xi.empty()) throw ValidationError("barrier_envelope: no samples");
  const LatticeDomain& d = *dom;
  if (d.rho_at.empty())
    throw ValidationError("barrier_envelope: needs a geometric domain");
  double supphi = 0.0;
  for (double v : samples.phi_val) supphi = std::max(supphi, std::fabs(v));
  if (params.M < supphi - 1e-12)
    throw ValidationError("barrier_envelope: M below sup|phi|");
  double K = params.K;
  const double M = params.M, a = params.alpha;
  GridFunction env(dom);
  const int64_t total = d.total();

  if (params.kind == BarrierKind::msh_b) {
    if (K <= 0.0) {
      BarrierParams p2 = params;
      p2.K = 0.0;
      K = choose_K(d, [](const Point&) { return 0.0; }, p2);
    }
    for (int64_t p = 0; p < total; ++p) {
      if (!d.in_closure(p)) continue;
      const Point z = d.coords(p);
      double mx = -1e300;
      for (size_t s = 0; s < samples.xi.size(); ++s) {
        double w = dist2(z, samples.xi[s], d.n) - K * d.rho_at[size_t(p)];
        if (w < 1e-12) w = 0.0;
        double v = -M * std::pow(w, a) + samples.phi_val[s];
        mx = std::max(mx, v);
      }
      env[p] = mx;
    }
    return env;
  }

  // superharmonic kind: envelope of extended barriers a_xi - K' rho
  SuperharmonicPieces pieces = superharmonic_pieces(d, samples, params, 0.0);
  if (K <= 0.0) K = doubling_K_superharmonic(pieces);
  // K': make K P + Q - K' lap_h rho <= 1e-6 on every interior node.  The
  // discrete Laplacian of the quadratic rho is exact.
  double lap_rho = 0.0;
  if (d.spec.kind == DomainKind::ball) lap_rho = 4.0 * d.n;
  else
    for (double c : d.spec.a) lap_rho += 4.0 * c;
  double worst = -1e300;
  for (size_t i = 0; i < pieces.nodes.size(); ++i)
    worst = std::max(worst, K * pieces.P[i] + pieces.Q[i]);
  double kprime = 0.0;
  if (worst > 1e-6) {
    kprime = 1.0;
    while (worst - kprime * lap_rho > 1e-6 && kprime <= double(1 << 20))
      kprime *= 2.0;
    if (kprime > double(1 << 20))
      throw NumericalError("barrier_envelope: K' search exceeded 2^20");
  }
  if (kprime_out) *kprime_out = kprime;
  const double tau = params.tau;
  for (int64_t p = 0; p < total; ++p) {
    if (!d.in_closure(p)) continue;
    const Point z = d.coords(p);
    double mn = 1e300;
    for (size_t s = 0; s < samples.xi.size(); ++s)
      mn = std::min(mn, M * std::pow(dist2(z, samples.xi[s], d.n), a) +
                            samples.phi_val[s]);
    const double r = d.rho_at[size_t(p)];
    env[p] = K * std::pow(std::fabs(r), tau) - kprime * r + mn;
  }
  return env;
}

std::pair<GridFunction, GridFunction> lipschitz_envelope_bounds(
    const GridFunction& phi_hat, double A) {
  const LatticeDomain& d = *phi_hat.dom;
  if (d.rho_at.empty())
    throw ValidationError("lipschitz_envelope_bounds: needs a geometric domain");
  GridFunction lower(phi_hat.dom), upper(phi_hat.dom);
  const int64_t total = d.total();
  for (int64_t p = 0; p < total; ++p) {
    if (!d.in_closure(p)) continue;
    lower[p] = A * d.rho_at[size_t(p)] + phi_hat[p];
    upper[p] = phi_hat[p] - A * d.rho_at[size_t(p)];
  }
  return {lower, upper};
}

GridFunction composite_barrier(const GridFunction& h_env, double A, double nu) {
  const LatticeDomain& d = *h_env.dom;
  if (d.spec.kind == DomainKind::bare)
    throw ValidationError("composite_barrier: needs a geometric domain");
  GridFunction out(h_env.dom);
  const int64_t total = d.total();
  for (int64_t p = 0; p < total; ++p) {
    if (!d.in_closure(p)) continue;
    out[p] = A * rho_nu_value(d.spec, d.coords(p), nu) + h_env[p];
  }
  return out;
}

}  // namespace mhess
