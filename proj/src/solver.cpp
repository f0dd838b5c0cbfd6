#include "mhess/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>

namespace mhess {

void SolveConfig::validate() const {
  if (m < 1 || m > kMaxN) throw ValidationError("SolveConfig: m out of range");
  if (!(tol > 0.0)) throw ValidationError("SolveConfig: tol must be positive");
  if (max_sweeps < 1) throw ValidationError("SolveConfig: max_sweeps must be >= 1");
  if (!(damping > 0.0) || damping > 1.0)
    throw ValidationError("SolveConfig: damping must lie in (0, 1]");
  if (!(bisection_tol > 0.0))
    throw ValidationError("SolveConfig: bisection_tol must be positive");
  if (!(clamp_threshold > 0.0))
    throw ValidationError("SolveConfig: clamp_threshold must be positive");
}

GridFunction harmonic_extension(std::shared_ptr<const LatticeDomain> dom,
                                const BoundaryData& phi) {
  const LatticeDomain& d = *dom;
  if (d.spec.kind == DomainKind::bare)
    throw ValidationError("harmonic_extension: needs a geometric domain");
  GridFunction u(dom);
  std::vector<double> phival(d.anchors.size(), 0.0);
  double scale = 1.0;
  for (size_t i = 0; i < d.anchors.size(); ++i) {
    phival[i] = phi(d.anchors[i].xi);
    if (!std::isfinite(phival[i]))
      throw ValidationError("harmonic_extension: phi not finite at a boundary point");
    scale = std::max(scale, std::fabs(phival[i]));
    u[d.boundary[i]] = phival[i];
  }
  const double omega = 1.7;
  const double inv_deg = 1.0 / (4.0 * d.n);
  for (int sweep = 1; sweep <= 100000; ++sweep) {
    double dmax = 0.0;
    for (size_t i = 0; i < d.boundary.size(); ++i) {
      const BoundaryAnchor& an = d.anchors[i];
      double val = (an.inner >= 0)
                       ? (an.theta * u[an.inner] + phival[i]) / (1.0 + an.theta)
                       : phival[i];
      dmax = std::max(dmax, std::fabs(val - u[an.node]));
      u[an.node] = val;
    }
    for (int64_t f : d.interior) {
      double s = 0.0;
      for (int ax = 0; ax < 2 * d.n; ++ax)
        s += u[f + d.stride[ax]] + u[f - d.stride[ax]];
      double val = u[f] + omega * (s * inv_deg - u[f]);
      dmax = std::max(dmax, std::fabs(val - u[f]));
      u[f] = val;
    }
    if (dmax <= 1e-14 * scale) break;
  }
  return u;
}

double c2_norm_estimate(const GridFunction& g) {
  const LatticeDomain& d = *g.dom;
  const double h = d.h, h2 = h * h;
  double sup = 0.0, gsup = 0.0, hsup = 0.0;
  const int64_t total = d.total();
  for (int64_t f = 0; f < total; ++f)
    if (d.in_closure(f)) sup = std::max(sup, std::fabs(g[f]));
  const auto pairs = hessian_stencil_pairs(d.n);
  Point gr;
  for (int64_t f : d.interior) {
    gradient_centered(g, f, gr);
    double g2 = 0.0;
    for (int i = 0; i < 2 * d.n; ++i) g2 += gr[i] * gr[i];
    gsup = std::max(gsup, std::sqrt(g2));
    for (int ax = 0; ax < 2 * d.n; ++ax) {
      int64_t s = d.stride[ax];
      hsup = std::max(hsup, std::fabs(g[f + s] - 2.0 * g[f] + g[f - s]) / h2);
    }
    for (auto [a, b] : pairs) {
      int64_t sa = d.stride[a], sb = d.stride[b];
      double mix = (g[f + sa + sb] - g[f + sa - sb] - g[f - sa + sb] +
                    g[f - sa - sb]) /
                   (4.0 * h2);
      hsup = std::max(hsup, std::fabs(mix));
    }
  }
  return sup + gsup + hsup;
}

double subsolution_constant(const DomainSpec& spec, double f_max,
                            double phi_hat_c2, int m, double sigma) {
  if (!(sigma > 0.0))
    throw ValidationError("subsolution_constant: needs a positive pseudoconvexity bound");
  double lmin;
  if (spec.kind == DomainKind::ball) lmin = 1.0;
  else if (spec.kind == DomainKind::ellipsoid)
    lmin = *std::min_element(spec.a.begin(), spec.a.end());
  else
    throw ValidationError("subsolution_constant: needs a geometric domain");
  if (!(lmin > 0.0))
    throw ValidationError("subsolution_constant: defining Hessian not positive");
  return phi_hat_c2 / lmin + std::pow(std::max(f_max, 0.0) / sigma, 1.0 / m) + 1.0;
}

namespace {

struct NodeUpdate {
  double cstar;  // largest admissible center value
  double cnew;   // proposed solution of F(c) = f
};

NodeUpdate solve_node(const GridFunction& u, int64_t p, double fp, int m,
                      double bisection_tol) {
  const LatticeDomain& d = *u.dom;
  const double h2 = d.h * d.h;
  const double u0 = u[p];
  EigenvalueVector ev = hessian_eigenvalues(u, p);
  auto sig = elementary_symmetric_all(ev.span(), m);
  const double cnm = hessian_normalization(d.n, m);
  const double sstar = cone_exit_shift(ev.span(), m);
  NodeUpdate nu;
  nu.cstar = u0 + h2 * sstar;
  if (fp <= 0.0) {
    nu.cnew = nu.cstar;
    return nu;
  }
  auto F = [&](double del) {
    return cnm * shifted_sigma({sig.data(), sig.size()}, d.n, m, del);
  };
  double hi = sstar, lo = sstar - 1.0;
  int guard = 0;
  while (F(lo) < fp && ++guard < 200) lo = sstar - 2.0 * (sstar - lo);
  const double dtol = bisection_tol / h2;
  for (int it = 0; it < 128 && hi - lo > dtol; ++it) {
    double mid = 0.5 * (lo + hi);
    (F(mid) >= fp ? lo : hi) = mid;
  }
  nu.cnew = u0 + h2 * 0.5 * (lo + hi);
  return nu;
}

}  // namespace

GridFunction dirichlet_solve(std::shared_ptr<const LatticeDomain> dom,
                             const GridFunction& f, const BoundaryData& phi,
                             const SolveConfig& cfg, SolveReport* report) {
  cfg.validate();
  const LatticeDomain& d = *dom;
  if (d.spec.kind == DomainKind::bare)
    throw ValidationError("dirichlet_solve: needs a geometric domain");
  if (cfg.m > d.n) throw ValidationError("dirichlet_solve: m exceeds n");
  if (!same_lattice(*f.dom, d))
    throw ValidationError("dirichlet_solve: f lives on a different lattice");

  const int m = cfg.m;
  const double h2 = d.h * d.h;
  SolveReport rep;

  std::vector<double> fv(d.interior.size(), 0.0);
  double fmax = 0.0;
  for (size_t i = 0; i < d.interior.size(); ++i) {
    double x = f[d.interior[i]];
    if (!std::isfinite(x) || x < 0.0)
      throw ValidationError("dirichlet_solve: f must be finite and >= 0 on interior nodes");
    if (x > cfg.clamp_threshold) {
      x = cfg.clamp_threshold;
      ++rep.clamped_nodes;
    }
    fv[i] = x;
    fmax = std::max(fmax, x);
  }

  std::vector<double> phival(d.anchors.size(), 0.0);
  for (size_t i = 0; i < d.anchors.size(); ++i) {
    phival[i] = phi(d.anchors[i].xi);
    if (!std::isfinite(phival[i]))
      throw ValidationError("dirichlet_solve: phi not finite at a boundary point");
  }

  GridFunction u(dom);
  bool warm = false;
  if (cfg.coarse_start) {
    try {
      auto dom2 = make_domain(d.spec, 2.0 * d.h);
      GridFunction f2(dom2);
      for (int64_t p2 : dom2->interior) {
        Point z = dom2->coords(p2);
        std::array<int, 2 * kMaxN> idx{};
        for (int i = 0; i < 2 * d.n; ++i)
          idx[size_t(i)] = int(std::lround((z[size_t(i)] - d.origin[i]) / d.h));
        f2[p2] = f[d.flat_index(idx)];
      }
      GridFunction u2 = dirichlet_solve(dom2, f2, phi, cfg, nullptr);
      const int64_t total = d.total();
      for (int64_t p = 0; p < total; ++p)
        if (d.in_closure(p)) u[p] = multilinear_sample(u2, d.coords(p));
      warm = true;
    } catch (const ValidationError&) {
    } catch (const NumericalError&) {
    }
  }
  if (!warm) {
    GridFunction phihat = harmonic_extension(dom, phi);
    PseudoconvexityCertificate cert = certify_pseudoconvexity(d.spec, m);
    if (!cert.ok)
      throw NumericalError("dirichlet_solve: pseudoconvexity certificate failed");
    const double A = subsolution_constant(d.spec, fmax, c2_norm_estimate(phihat),
                                          m, cert.sigma);
    const int64_t total = d.total();
    for (int64_t p = 0; p < total; ++p)
      if (d.in_closure(p)) u[p] = A * d.rho_at[size_t(p)] + phihat[p];
  }
  for (size_t i = 0; i < d.anchors.size(); ++i) {
    const BoundaryAnchor& an = d.anchors[i];
    u[an.node] = (an.inner >= 0)
                     ? (an.theta * u[an.inner] + phival[i]) / (1.0 + an.theta)
                     : phival[i];
  }

  // sweep orders: lexicographic, or two parity classes each in lex order
  std::vector<int64_t> order;
  if (cfg.order == SweepOrder::lexicographic) {
    order = d.interior;
  } else {
    std::array<int, 2 * kMaxN> idx{};
    for (int64_t p : d.interior) {
      d.unflatten(p, idx);
      int par = 0;
      for (int i = 0; i < 2 * d.n; ++i) par += idx[size_t(i)];
      if (par % 2 == 0) order.push_back(p);
    }
    for (int64_t p : d.interior) {
      d.unflatten(p, idx);
      int par = 0;
      for (int i = 0; i < 2 * d.n; ++i) par += idx[size_t(i)];
      if (par % 2 != 0) order.push_back(p);
    }
  }

  std::vector<double> forder(order.size(), 0.0);
  for (size_t i = 0; i < order.size(); ++i)
    forder[i] = fv[size_t(std::lower_bound(d.interior.begin(), d.interior.end(),
                                           order[i]) -
                         d.interior.begin())];

  const double cnm = hessian_normalization(d.n, m);
  auto diagnose = [&](bool allow_project, double& rmax, double& vmax,
                      int& projected) {
    rmax = 0.0;
    vmax = 0.0;
    projected = 0;
    for (size_t i = 0; i < d.interior.size(); ++i) {
      const int64_t p = d.interior[i];
      EigenvalueVector ev = hessian_eigenvalues(u, p);
      auto sig = elementary_symmetric_all(ev.span(), m);
      rmax = std::max(rmax, std::fabs(cnm * sig[size_t(m)] - fv[i]));
      vmax = std::max(vmax, gamma_violation(ev.span(), m));
      if (!in_gamma_m_closed(ev.span(), m)) {
        if (cfg.admissibility == Admissibility::reject)
          throw NumericalError("dirichlet_solve: cone violation at node " +
                               std::to_string(p));
        if (allow_project) {
          u[p] += h2 * cone_exit_shift(ev.span(), m);
          ++projected;
        }
      }
    }
  };

  double umax = 1.0;
  bool converged = false;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    double dmax = 0.0;
    for (size_t i = 0; i < d.anchors.size(); ++i) {
      const BoundaryAnchor& an = d.anchors[i];
      double val = (an.inner >= 0)
                       ? (an.theta * u[an.inner] + phival[i]) / (1.0 + an.theta)
                       : phival[i];
      dmax = std::max(dmax, std::fabs(val - u[an.node]));
      u[an.node] = val;
      umax = std::max(umax, std::fabs(val));
    }
    for (size_t i = 0; i < order.size(); ++i) {
      const int64_t p = order[i];
      NodeUpdate nu = solve_node(u, p, forder[i], m, cfg.bisection_tol);
      double c = u[p] + cfg.damping * (nu.cnew - u[p]);
      if (c > nu.cstar) c = nu.cstar;
      dmax = std::max(dmax, std::fabs(c - u[p]));
      u[p] = c;
      umax = std::max(umax, std::fabs(c));
    }
    rep.sweeps = sweep;
    const bool check = sweep <= 10 || sweep % 5 == 0 || dmax <= 1e-15 * umax;
    if (check) {
      double rmax, vmax;
      int projected;
      diagnose(cfg.admissibility == Admissibility::project, rmax, vmax, projected);
      rep.history.push_back({double(sweep), rmax, vmax});
      rep.residual = rmax;
      rep.max_cone_violation = vmax;
      if (rmax <= cfg.tol && projected == 0) {
        converged = true;
        break;
      }
      if (dmax <= 1e-15 * umax && projected == 0) break;  // stagnated
    }
  }
  rep.converged = converged;
  if (report) *report = rep;
  if (!converged)
    throw NumericalError("dirichlet_solve: no convergence after " +
                         std::to_string(rep.sweeps) + " sweeps, residual " +
                         std::to_string(rep.residual));
  return u;
}

GridFunction perron_envelope(std::shared_ptr<const LatticeDomain> dom,
                             const BoundaryData& phi, int m,
                             const SolveConfig& cfg, SolveReport* report) {
  SolveConfig c2 = cfg;
  c2.m = m;
  GridFunction zero(dom);
  return dirichlet_solve(dom, zero, phi, c2, report);
}

double residual(const GridFunction& u, const GridFunction& f, int m) {
  if (!same_lattice(*u.dom, *f.dom))
    throw ValidationError("residual: mismatched lattices");
  double rmax = 0.0;
  for (int64_t p : u.dom->interior)
    rmax = std::max(rmax, std::fabs(hessian_operator_value(u, p, m) - f[p]));
  return rmax;
}

ComparisonReport comparison_check(const GridFunction& u, const GridFunction& v,
                                  int m) {
  (void)m;
  if (!same_lattice(*u.dom, *v.dom))
    throw ValidationError("comparison_check: mismatched lattices");
  const double tol_h = 10.0 * u.dom->h * u.dom->h;
  double gap = -1e300, bgap = -1e300;
  const int64_t total = u.dom->total();
  for (int64_t p = 0; p < total; ++p)
    if (u.dom->in_closure(p)) gap = std::max(gap, v[p] - u[p]);
  for (int64_t b : u.dom->boundary) bgap = std::max(bgap, v[b] - u[b]);
  ComparisonReport rep;
  rep.ordered = gap <= tol_h;
  rep.max_violation = std::max(0.0, gap);
  rep.boundary_precondition_ok = bgap <= tol_h;
  rep.boundary_gap = bgap;
  return rep;
}

EnergyReport energy_comparison(const GridFunction& u, const GridFunction& v) {
  const LatticeDomain& d = *u.dom;
  if (!same_lattice(d, *v.dom))
    throw ValidationError("energy_comparison: mismatched lattices");
  const double tol_h = 10.0 * d.h * d.h;
  const int64_t total = d.total();
  for (int64_t p = 0; p < total; ++p)
    if (d.in_closure(p) && u[p] > v[p] + tol_h)
      throw ValidationError("energy_comparison: ordering precondition failed");
  for (int64_t b : d.boundary)
    if (std::fabs(u[b] - v[b]) > 10.0 * d.h)
      throw ValidationError("energy_comparison: boundary values differ");
  double cell = 1.0;
  for (int i = 0; i < 2 * d.n; ++i) cell *= d.h;
  EnergyReport rep;
  for (int64_t p : d.interior) {
    rep.mass_u += laplacian(u, p) * cell;
    rep.mass_v += laplacian(v, p) * cell;
    for (int ax = 0; ax < 2 * d.n; ++ax) {
      double du = (u[p + d.stride[ax]] - u[p]) / d.h;
      double dv = (v[p + d.stride[ax]] - v[p]) / d.h;
      rep.grad_u += du * du * cell;
      rep.grad_v += dv * dv * cell;
    }
  }
  return rep;
}

GridFunction glue_extension(const GridFunction& u, const GridFunction& u_shift,
                            double c0, double nu, double delta) {
  const LatticeDomain& d = *u.dom;
  if (!same_lattice(d, *u_shift.dom))
    throw ValidationError("glue_extension: mismatched lattices");
  if (d.rho_at.empty())
    throw ValidationError("glue_extension: needs a geometric domain");
  if (!(c0 > 0.0) || !(delta > 0.0) || !(nu > 0.0) || !(nu < 1.0))
    throw ValidationError("glue_extension: need c0, delta > 0 and nu in (0,1)");
  const double lift = c0 * std::pow(delta, nu);
  GridFunction out(u.dom);
  const int64_t total = d.total();
  for (int64_t p = 0; p < total; ++p) {
    if (!d.in_closure(p)) continue;
    const double base = u[p] + lift;
    if (d.conservative_dist(p) > delta) {
      if (std::isnan(u_shift[p]))
        throw ValidationError("glue_extension: u_shift missing an inner-region node");
      out[p] = std::max(u_shift[p], base);
    } else {
      out[p] = base;
    }
  }
  return out;
}

void write_residual_history(const std::string& path, const SolveReport& rep) {
  FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw ValidationError("write_residual_history: cannot open " + path);
  std::fprintf(fp, "sweep,residual,max_cone_violation\n");
  for (const auto& row : rep.history)
    std::fprintf(fp, "%d,%.17g,%.17g\n", int(row[0]), row[1], row[2]);
  std::fclose(fp);
}

}  // namespace mhess
