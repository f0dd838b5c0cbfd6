#include "mhess/capacity.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>

#include "mhess/hessian_op.hpp"

namespace mhess {

CompactSet CompactSet::empty(std::shared_ptr<const LatticeDomain> dom) {
  CompactSet e;
  e.dom = std::move(dom);
  e.mask.assign(size_t(e.dom->total()), 0);
  return e;
}

CompactSet CompactSet::from_predicate(
    std::shared_ptr<const LatticeDomain> dom,
    const std::function<bool(const Point&)>& pred) {
  CompactSet e = empty(dom);
  const LatticeDomain& d = *e.dom;
  const int64_t total = d.total();
  for (int64_t p = 0; p < total; ++p)
    if (d.in_closure(p) && pred(d.coords(p))) {
      e.mask[size_t(p)] = 1;
      e.nodes.push_back(p);
    }
  return e;
}

CompactSet CompactSet::closed_ball(std::shared_ptr<const LatticeDomain> dom,
                                   const Point& center, double r) {
  if (!(r > 0.0)) throw ValidationError("CompactSet: radius must be positive");
  const int n = dom->n;
  return from_predicate(std::move(dom), [center, r, n](const Point& z) {
    double s = 0.0;
    for (int i = 0; i < 2 * n; ++i)
      s += (z[size_t(i)] - center[size_t(i)]) * (z[size_t(i)] - center[size_t(i)]);
    return s <= r * r + 1e-12;
  });
}

void CompactSet::validate(bool allow_empty) const {
  if (!dom) throw ValidationError("CompactSet: no domain");
  if (mask.size() != size_t(dom->total()))
    throw ValidationError("CompactSet: mask size mismatch");
  if (!allow_empty && nodes.empty()) throw ValidationError("CompactSet: empty");
  for (int64_t p : nodes)
    if (dom->conservative_dist(p) <= 2.0 * dom->h)
      throw ValidationError("CompactSet: node within 2h of the boundary");
}

namespace {

double obstacle_at(const CompactSet& E, int64_t p) {
  return E.contains(p) ? -1.0 : 0.0;
}

}  // namespace

GridFunction relative_extremal(const CompactSet& E, int m, const SolveConfig& cfg,
                               SolveReport* report) {
  cfg.validate();
  E.validate(true);
  auto dom = E.dom;
  const LatticeDomain& d = *dom;
  if (m > d.n) throw ValidationError("relative_extremal: m exceeds n");
  if (d.rho_at.empty())
    throw ValidationError("relative_extremal: needs a geometric domain");
  SolveReport local;
  SolveReport& rep = report ? *report : local;
  rep = SolveReport{};
  GridFunction v(dom);
  if (E.nodes.empty()) {
    rep.converged = true;
    return v;  // zero on the closure
  }
  const double h2 = d.h * d.h;

  // cascadic warm start on the 2h lattice with the coincident-node obstacle
  bool warm = false;
  if (cfg.coarse_start) {
    try {
      auto cdom = make_domain(d.spec, 2.0 * d.h);
      CompactSet Ec = CompactSet::empty(cdom);
      std::array<int, 2 * kMaxN> idx{};
      const int64_t ctotal = cdom->total();
      for (int64_t q = 0; q < ctotal; ++q) {
        if (!cdom->in_closure(q)) continue;
        if (cdom->conservative_dist(q) <= 2.0 * cdom->h) continue;
        const Point z = cdom->coords(q);
        bool inside = true;
        for (int i = 0; i < 2 * d.n && inside; ++i) {
          idx[size_t(i)] = int(std::lround((z[size_t(i)] - d.origin[i]) / d.h));
          inside = idx[size_t(i)] >= 0 && idx[size_t(i)] < d.dims[i];
        }
        if (!inside) continue;
        if (E.contains(d.flat_index(idx))) {
          Ec.mask[size_t(q)] = 1;
          Ec.nodes.push_back(q);
        }
      }
      SolveConfig ccfg = cfg;
      ccfg.tol = std::max(cfg.tol, 1e-6);
      GridFunction vc = relative_extremal(Ec, m, ccfg);
      const int64_t total = d.total();
      for (int64_t p = 0; p < total; ++p)
        if (d.in_closure(p))
          v[p] = std::min(multilinear_sample(vc, d.coords(p)), obstacle_at(E, p));
      warm = true;
    } catch (const ValidationError&) {
    } catch (const NumericalError&) {
    }
  }
  if (!warm)
    for (int64_t p : d.interior) v[p] = -1.0;
  for (int64_t b : d.boundary) v[b] = 0.0;

  std::vector<int64_t> order;
  if (cfg.order == SweepOrder::lexicographic) {
    order = d.interior;
  } else {
    std::array<int, 2 * kMaxN> idx{};
    for (int pass = 0; pass < 2; ++pass)
      for (int64_t p : d.interior) {
        d.unflatten(p, idx);
        int par = 0;
        for (int i = 0; i < 2 * d.n; ++i) par += idx[size_t(i)];
        if (par % 2 == pass) order.push_back(p);
      }
  }

  const double cnm = hessian_normalization(d.n, m);
  auto diagnose = [&](bool allow_project, double& rmax, double& vmax,
                      int& projected) {
    rmax = 0.0;
    vmax = 0.0;
    projected = 0;
    for (int64_t p : d.interior) {
      EigenvalueVector ev = hessian_eigenvalues(v, p);
      auto sig = elementary_symmetric_all(ev.span(), m);
      const bool contact = v[p] >= obstacle_at(E, p) - 1e-12 && E.contains(p);
      if (!contact) rmax = std::max(rmax, std::fabs(cnm * sig[size_t(m)]));
      vmax = std::max(vmax, gamma_violation(ev.span(), m));
      if (!in_gamma_m_closed(ev.span(), m)) {
        if (cfg.admissibility == Admissibility::reject)
          throw NumericalError("relative_extremal: cone violation at node " +
                               std::to_string(p));
        if (allow_project) {
          v[p] += h2 * cone_exit_shift(ev.span(), m);
          ++projected;
        }
      }
    }
  };

  double umax = 1.0;
  bool converged = false;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    double dmax = 0.0;
    for (int64_t p : order) {
      EigenvalueVector ev = hessian_eigenvalues(v, p);
      const double cstar = v[p] + h2 * cone_exit_shift(ev.span(), m);
      double c = std::min(cstar, obstacle_at(E, p));
      c = v[p] + cfg.damping * (c - v[p]);
      dmax = std::max(dmax, std::fabs(c - v[p]));
      v[p] = c;
      umax = std::max(umax, std::fabs(c));
    }
    rep.sweeps = sweep;
    const bool stalled = dmax <= 1e-15 * umax;
    if (sweep <= 10 || sweep % 5 == 0 || stalled) {
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
      if (stalled) break;
    }
  }
  rep.converged = converged;
  if (!converged)
    throw NumericalError("relative_extremal: no convergence within sweep budget");
  // For m > 1 cone admissibility at the blocky rim of E forces contact
  // neighbors slightly below the floor (a few percent, h-independent); the
  // mass still concentrates on the contact ring.  Coarse sanity bound only.
  for (int64_t p : d.interior) assert(v[p] >= -1.1);
  return v;
}

namespace {

// E plus the one-cell collar (sup-norm index distance 1), interior class only
std::vector<int64_t> integration_set(const CompactSet& E, bool with_collar) {
  const LatticeDomain& d = *E.dom;
  std::vector<char> seen(size_t(d.total()), 0);
  std::vector<int64_t> out;
  for (int64_t p : E.nodes)
    if (!seen[size_t(p)]) {
      seen[size_t(p)] = 1;
      out.push_back(p);
    }
  if (with_collar) {
    std::array<int, 2 * kMaxN> off{};
    for (int64_t p : E.nodes) {
      const int dcount = 2 * d.n;
      for (int i = 0; i < dcount; ++i) off[size_t(i)] = -1;
      while (true) {
        int64_t q = p;
        for (int i = 0; i < dcount; ++i) q += off[size_t(i)] * d.stride[size_t(i)];
        if (q >= 0 && q < d.total() && !seen[size_t(q)] &&
            d.cls[size_t(q)] == NodeClass::interior) {
          seen[size_t(q)] = 1;
          out.push_back(q);
        }
        int ax = 0;
        while (ax < dcount && off[size_t(ax)] == 1) off[size_t(ax++)] = -1;
        if (ax == dcount) break;
        ++off[size_t(ax)];
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double mass_on(const GridFunction& v, const std::vector<int64_t>& set, int m) {
  const LatticeDomain& d = *v.dom;
  const double cell = std::pow(d.h, 2.0 * d.n);
  double s = 0.0;
  for (int64_t p : set)
    if (d.cls[size_t(p)] == NodeClass::interior)
      s += hessian_operator_value(v, p, m) * cell;
  return s;
}

}  // namespace

CapacityEstimate capacity_m(const CompactSet& E, int m, const SolveConfig& cfg) {
  CapacityEstimate est;
  est.extremal = relative_extremal(E, m, cfg);
  if (E.nodes.empty()) return est;
  est.value = mass_on(est.extremal, integration_set(E, true), m);
  // competitor lower bounds, integrated on E itself: scalings s(1+v) carry
  // factor s^m, and the level truncation max(v,-t)/t is admissible as well
  const std::vector<int64_t> eonly = integration_set(E, false);
  const double base = mass_on(est.extremal, eonly, m);
  est.lower_bound = base;
  for (double s : {0.95, 0.9})
    est.lower_bound = std::max(est.lower_bound, std::pow(s, m) * base);
  {
    const double t = 0.9;
    GridFunction w(est.extremal.dom);
    const int64_t total = w.dom->total();
    for (int64_t p = 0; p < total; ++p)
      if (w.dom->in_closure(p)) w[p] = std::max(est.extremal[p], -t);
    est.lower_bound =
        std::max(est.lower_bound, mass_on(w, eonly, m) / std::pow(t, m));
  }
  return est;
}

VolumeCapacityReport volume_capacity_check(
    std::shared_ptr<const LatticeDomain> dom, int m,
    const std::vector<double>& radii, const SolveConfig& cfg,
    double tau_override) {
  if (radii.empty()) throw ValidationError("volume_capacity_check: no radii");
  VolumeCapacityReport rep;
  const LatticeDomain& d = *dom;
  rep.tau = tau_override > 0.0
                ? tau_override
                : (m == d.n ? 2.0 : 0.9 * d.n / double(d.n - m));
  const double cell = std::pow(d.h, 2.0 * d.n);
  for (double r : radii) {
    CompactSet E = CompactSet::closed_ball(dom, Point{}, r);
    E.validate(false);
    CapacityEstimate est = capacity_m(E, m, cfg);
    if (!(est.value > 0.0))
      throw NumericalError("volume_capacity_check: zero capacity for a nonempty set");
    rep.radii.push_back(r);
    rep.volumes.push_back(double(E.nodes.size()) * cell);
    rep.capacities.push_back(est.value);
    rep.ratios.push_back(rep.volumes.back() / std::pow(est.value, rep.tau));
  }
  if (rep.radii.size() >= 2) {
    double mx = 0, my = 0;
    const size_t k = rep.radii.size();
    for (size_t i = 0; i < k; ++i) {
      mx += std::log(rep.capacities[i]);
      my += std::log(rep.volumes[i]);
    }
    mx /= double(k);
    my /= double(k);
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < k; ++i) {
      const double dx = std::log(rep.capacities[i]) - mx;
      sxx += dx * dx;
      sxy += dx * (std::log(rep.volumes[i]) - my);
    }
    rep.tau_fit = sxy / sxx;
    rep.fit_done = true;
  }
  const double rmin = *std::min_element(rep.ratios.begin(), rep.ratios.end());
  const double rmax = *std::max_element(rep.ratios.begin(), rep.ratios.end());
  rep.ratios_bounded = rmax <= 10.0 * rmin;
  return rep;
}

void write_volume_capacity_csv(const std::string& path,
                               const VolumeCapacityReport& rep) {
  FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw ValidationError("write_volume_capacity_csv: cannot open " + path);
  std::fprintf(fp, "r,volume,capacity\n");
  for (size_t i = 0; i < rep.radii.size(); ++i)
    std::fprintf(fp, "%.17g,%.17g,%.17g\n", rep.radii[i], rep.volumes[i],
                 rep.capacities[i]);
  std::fclose(fp);
}

SublevelReport sublevel_capacity_check(const GridFunction& phi,
                                       const GridFunction& psi,
                                       const GridFunction& f, int m, double s,
                                       double t, const SolveConfig& cfg) {
  const LatticeDomain& d = *phi.dom;
  if (!same_lattice(d, *psi.dom) || !same_lattice(d, *f.dom))
    throw ValidationError("sublevel_capacity_check: lattice mismatch");
  if (!(s >= 0.0) || !(t > 0.0))
    throw ValidationError("sublevel_capacity_check: need s >= 0 and t > 0");
  double scale = 1.0 + phi.closure_max_abs() + psi.closure_max_abs();
  for (int64_t b : d.boundary)
    if (phi[b] - psi[b] < -1e-9 * scale)
      throw ValidationError("sublevel_capacity_check: boundary ordering fails");
  SublevelReport rep;
  rep.s = s;
  rep.t = t;
  CompactSet E = CompactSet::empty(phi.dom);
  const int64_t total = d.total();
  for (int64_t p = 0; p < total; ++p) {
    if (!d.in_closure(p)) continue;
    const double gap = phi[p] - psi[p];
    if (gap < -s) ++rep.count_wide;
    if (gap < -(s + t) && d.cls[size_t(p)] == NodeClass::interior &&
        d.conservative_dist(p) > 2.0 * d.h) {
      E.mask[size_t(p)] = 1;
      E.nodes.push_back(p);
      ++rep.count_tight;
    }
  }
  const double cell = std::pow(d.h, 2.0 * d.n);
  for (int64_t p = 0; p < total; ++p)
    if (d.in_closure(p) && phi[p] - psi[p] < -s) rep.rhs += f[p] * cell;
  if (!E.nodes.empty())
    rep.lhs = std::pow(t, m) * capacity_m(E, m, cfg).value;
  return rep;
}

double s_infinity(double B, double g0, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("s_infinity: alpha must be positive");
  if (B < 0.0 || g0 < 0.0)
    throw ValidationError("s_infinity: B and g0 must be nonnegative");
  return 2.0 * B * std::pow(g0, alpha) / (1.0 - std::pow(2.0, -alpha));
}

double certify_iteration_constant(
    const std::vector<std::pair<double, double>>& g_samples, double alpha) {
  if (!(alpha > 0.0))
    throw ValidationError("certify_iteration_constant: alpha must be positive");
  double B = 0.0;
  for (size_t i = 0; i < g_samples.size(); ++i) {
    if (i > 0 && (g_samples[i].first <= g_samples[i - 1].first ||
                  g_samples[i].second > g_samples[i - 1].second + 1e-12))
      throw ValidationError("certify_iteration_constant: samples not decreasing");
    for (size_t j = i + 1; j < g_samples.size(); ++j) {
      const double gi = g_samples[i].second;
      if (gi <= 1e-300) continue;
      const double t = g_samples[j].first - g_samples[i].first;
      B = std::max(B, t * g_samples[j].second / std::pow(gi, 1.0 + alpha));
    }
  }
  return B;
}

IterationBoundReport iteration_bound_check(
    const std::vector<std::pair<double, double>>& g_samples, double B,
    double alpha) {
  if (g_samples.empty())
    throw ValidationError("iteration_bound_check: no samples");
  IterationBoundReport rep;
  rep.B = B;
  rep.alpha = alpha;
  rep.hypothesis_ok = true;
  for (size_t i = 0; i < g_samples.size(); ++i)
    for (size_t j = i + 1; j < g_samples.size(); ++j) {
      const double t = g_samples[j].first - g_samples[i].first;
      const double excess = t * g_samples[j].second -
                            B * std::pow(g_samples[i].second, 1.0 + alpha);
      rep.worst_excess = std::max(rep.worst_excess, excess);
      if (excess > 1e-9 * (1.0 + B)) rep.hypothesis_ok = false;
    }
  rep.s_inf = s_infinity(B, g_samples.front().second, alpha);
  rep.bound_ok = true;
  for (const auto& [s, g] : g_samples)
    if (s >= rep.s_inf - 1e-12 && g > 1e-9) rep.bound_ok = false;
  return rep;
}

StabilityReport stability_ratio(const GridFunction& phi, const GridFunction& psi,
                                const ExponentInputs& inputs, double safety) {
  const LatticeDomain& d = *phi.dom;
  if (!same_lattice(d, *psi.dom))
    throw ValidationError("stability_ratio: lattice mismatch");
  if (!(safety > 0.0) || !(safety < 1.0))
    throw ValidationError("stability_ratio: safety must lie in (0, 1)");
  double scale = 1.0 + phi.closure_max_abs() + psi.closure_max_abs();
  for (int64_t b : d.boundary)
    if (phi[b] - psi[b] < -1e-9 * scale)
      throw ValidationError("stability_ratio: boundary ordering fails");
  StabilityReport rep;
  rep.gamma = safety * gamma_r(inputs);
  const double cell = std::pow(d.h, 2.0 * d.n);
  double acc = 0.0;
  const int64_t total = d.total();
  for (int64_t p = 0; p < total; ++p) {
    if (!d.in_closure(p)) continue;
    const double gap = psi[p] - phi[p];
    if (gap > rep.sup_diff) rep.sup_diff = gap;
    if (gap > 0.0) acc += std::pow(gap, inputs.r) * cell;
  }
  rep.norm_r = std::pow(acc, 1.0 / inputs.r);
  if (rep.norm_r < 1e-14) {
    if (rep.sup_diff > 1e-10)
      throw NumericalError("stability_ratio: positive sup with zero norm");
    rep.ratio = 0.0;
    return rep;
  }
  rep.ratio = rep.sup_diff / std::pow(rep.norm_r, rep.gamma);
  return rep;
}

void write_stability_csv(const std::string& path,
                         const std::vector<double>& epsilons,
                         const std::vector<StabilityReport>& rows) {
  if (epsilons.size() != rows.size())
    throw ValidationError("write_stability_csv: row count mismatch");
  FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw ValidationError("write_stability_csv: cannot open " + path);
  std::fprintf(fp, "epsilon,sup_diff,norm_r,ratio\n");
  for (size_t i = 0; i < rows.size(); ++i)
    std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g\n", epsilons[i], rows[i].sup_diff,
                 rows[i].norm_r, rows[i].ratio);
  std::fclose(fp);
}

double radial_capacity_oracle(int n, int m, double r, double R) {
  if (n < 2 || n > kMaxN || m < 1 || m >= n)
    throw ValidationError("radial_capacity_oracle: needs 1 <= m < n");
  if (!(r > 0.0) || !(r < R))
    throw ValidationError("radial_capacity_oracle: needs 0 < r < R");
  const double q = 2.0 * n / m - 2.0;
  const double pi = 3.14159265358979323846;
  double surf = 2.0;  // S_{2n-1} = 2 pi^n / (n-1)!
  for (int i = 0; i < n; ++i) surf *= pi;
  for (int i = 2; i < n; ++i) surf /= i;
  const double D = std::pow(r, -q) - std::pow(R, -q);
  return 0.5 * surf * (hessian_normalization(n, m) * binomial(n - 1, m - 1) / m) *
         std::pow(0.5 * q, m) / std::pow(D, m);
}

double radial_extremal_profile(int n, int m, double r, double R, double rad) {
  if (n < 1 || n > kMaxN || m < 1 || m > n)
    throw ValidationError("radial_extremal_profile: m out of range");
  if (!(r > 0.0) || !(r < R))
    throw ValidationError("radial_extremal_profile: needs 0 < r < R");
  if (rad <= 1e-12) return -1.0;
  if (m == n)
    return std::max(-1.0, -std::log(R / rad) / std::log(R / r));
  const double q = 2.0 * n / m - 2.0;
  const double D = std::pow(r, -q) - std::pow(R, -q);
  return std::max(-1.0, -(std::pow(rad, -q) - std::pow(R, -q)) / D);
}

}  // namespace mhess
