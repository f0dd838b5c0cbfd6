#include "mhess/regularity.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>

#include "mhess/hessian_op.hpp"

namespace mhess {

std::vector<int64_t> omega_delta_nodes(const LatticeDomain& dom, double delta) {
  std::vector<int64_t> out;
  const int64_t total = dom.total();
  for (int64_t p = 0; p < total; ++p)
    if (dom.in_closure(p) && dom.conservative_dist(p) > delta) out.push_back(p);
  if (out.empty())
    throw ValidationError("omega_delta: no node farther than delta from the boundary");
  return out;
}

std::vector<double> default_delta_ladder(const LatticeDomain& dom) {
  const double h = dom.h, cap = 0.25 * dom.inradius();
  std::vector<double> out;
  for (double k : {4.0, 6.0, 9.0, 13.0, 20.0}) {
    double d = k * h;
    if (d >= 2.0 * h - 1e-12 && d <= cap + 1e-12) out.push_back(d);
  }
  if (out.size() < 4) {
    if (cap <= 2.0 * h * (1.0 + 1e-9))
      throw ValidationError("delta ladder: grid too coarse (inradius/4 <= 2h)");
    out.clear();
    const double ratio = std::pow(cap / (2.0 * h), 1.0 / 3.0);
    double d = 2.0 * h;
    for (int i = 0; i < 4; ++i, d *= ratio) out.push_back(d);
    out[3] = cap;
  }
  return out;
}

namespace {

struct BallOffsets {
  std::vector<int64_t> flat;  // node offsets with |o| h <= delta
  int k = 0;                  // floor(delta / h)
  double t = 0.0;             // fractional part of delta / h
};

BallOffsets ball_offsets(const LatticeDomain& dom, double delta) {
  BallOffsets b;
  const double s = delta / dom.h;
  b.k = int(std::floor(s + 1e-12));
  b.t = s - b.k;
  if (b.t < 1e-12) b.t = 0.0;
  const double s2 = s * s + 1e-12;
  std::array<int, 2 * kMaxN> o{};
  const int d = 2 * dom.n;
  // odometer over [-k, k]^d
  for (int i = 0; i < d; ++i) o[size_t(i)] = -b.k;
  while (true) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += double(o[size_t(i)]) * o[size_t(i)];
    if (r2 <= s2) {
      int64_t f = 0;
      for (int i = 0; i < d; ++i) f += o[size_t(i)] * dom.stride[size_t(i)];
      b.flat.push_back(f);
    }
    int ax = 0;
    while (ax < d && o[size_t(ax)] == b.k) o[size_t(ax++)] = -b.k;
    if (ax == d) break;
    ++o[size_t(ax)];
  }
  return b;
}

double ball_max(const GridFunction& u, const LatticeDomain& dom,
                const BallOffsets& b, int64_t p) {
  const int64_t total = dom.total();
  double mx = -1e300;
  for (int64_t f : b.flat) {
    int64_t q = p + f;
    assert(q >= 0 && q < total);
    (void)total;
    double v = u[q];
    if (v == v && v > mx) mx = v;
  }
  // linearly interpolated ball crossings along the axes; skipped when the
  // outer interpolation node leaves the closure (the inner node still counts)
  if (b.t > 0.0)
    for (int i = 0; i < 2 * dom.n; ++i)
      for (int sgn : {-1, 1}) {
        int64_t qin = p + sgn * b.k * dom.stride[size_t(i)];
        int64_t qout = qin + sgn * dom.stride[size_t(i)];
        if (qout < 0 || qout >= total || !dom.in_closure(qout)) continue;
        double v = (1.0 - b.t) * u[qin] + b.t * u[qout];
        if (v == v && v > mx) mx = v;
      }
  return mx;
}

double ball_mean(const GridFunction& u, const BallOffsets& b, int64_t p) {
  double s = 0.0;
  for (int64_t f : b.flat) s += u[p + f];
  return s / double(b.flat.size());
}

struct LadderFit {
  double slope = 0.0;      // capped at 1
  double r2 = 0.0;         // of the uncapped regression
  double constant = 0.0;   // gap <= constant * delta^slope anchor
  int usable = 0;
};

LadderFit fit_ladder(const std::vector<double>& deltas,
                     const std::vector<double>& gaps) {
  LadderFit fit;
  std::vector<double> lx, ly;
  for (size_t i = 0; i < deltas.size(); ++i)
    if (gaps[i] >= 1e-12) {
      lx.push_back(std::log(deltas[i]));
      ly.push_back(std::log(gaps[i]));
    }
  fit.usable = int(lx.size());
  if (fit.usable < 3) return fit;
  double mx = 0, my = 0;
  for (size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
  mx /= double(lx.size());
  my /= double(lx.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  double slope = sxy / sxx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.slope = std::min(slope, 1.0);
  // constant re-anchored at the capped slope so gap <= constant delta^slope
  double c = -1e300;
  for (size_t i = 0; i < lx.size(); ++i) c = std::max(c, ly[i] - fit.slope * lx[i]);
  fit.constant = std::exp(c);
  return fit;
}

void validate_ladder(const std::vector<double>& deltas, double lo, double hi) {
  if (deltas.empty()) throw ValidationError("delta ladder: empty");
  for (size_t i = 0; i < deltas.size(); ++i) {
    if (deltas[i] < lo - 1e-12 || deltas[i] > hi + 1e-12)
      throw ValidationError("delta ladder: delta outside [2h, inradius/4]");
    if (i > 0 && deltas[i] <= deltas[i - 1])
      throw ValidationError("delta ladder: not strictly increasing");
  }
}

}  // namespace

GridFunction sup_convolution(const GridFunction& u, double delta) {
  const LatticeDomain& dom = *u.dom;
  if (delta < 2.0 * dom.h - 1e-12)
    throw ValidationError("sup_convolution: delta below 2h");
  auto mask = omega_delta_nodes(dom, delta);
  BallOffsets b = ball_offsets(dom, delta);
  GridFunction out(u.dom);
  const int64_t total = dom.total();
  for (int64_t p = 0; p < total; ++p)
    if (dom.in_closure(p)) out[p] = std::nan("");
  for (int64_t p : mask) out[p] = ball_max(u, dom, b, p);
  return out;
}

GridFunction ball_average(const GridFunction& u, double delta) {
  const LatticeDomain& dom = *u.dom;
  if (delta < 2.0 * dom.h - 1e-12)
    throw ValidationError("ball_average: delta below 2h");
  auto mask = omega_delta_nodes(dom, delta);
  BallOffsets b = ball_offsets(dom, delta);
  GridFunction out(u.dom);
  const int64_t total = dom.total();
  for (int64_t p = 0; p < total; ++p)
    if (dom.in_closure(p)) out[p] = std::nan("");
  for (int64_t p : mask) out[p] = ball_mean(u, b, p);
  return out;
}

std::pair<double, double> sobolev_diagnostics(const GridFunction& u) {
  const LatticeDomain& dom = *u.dom;
  const double cell = std::pow(dom.h, 2.0 * dom.n);
  double grad = 0.0;
  const int64_t total = dom.total();
  Point g{};
  for (int64_t p = 0; p < total; ++p) {
    if (!dom.in_closure(p)) continue;
    gradient_lenient(u, p, g);
    double s = 0.0;
    for (int i = 0; i < 2 * dom.n; ++i) s += g[size_t(i)] * g[size_t(i)];
    grad += s * cell;
  }
  double mass = 0.0;
  for (int64_t p : dom.interior) mass += laplacian(u, p) * cell;
  return {grad, mass};
}

HolderReport holder_fit(const GridFunction& u, const std::vector<double>& deltas) {
  const LatticeDomain& dom = *u.dom;
  validate_ladder(deltas, 2.0 * dom.h, 0.25 * dom.inradius());
  HolderReport rep;
  rep.deltas = deltas;
  for (double d : deltas) {
    auto mask = omega_delta_nodes(dom, d);
    GridFunction ud = sup_convolution(u, d);
    GridFunction ua = ball_average(u, d);
    double s1 = 0.0, s2 = 0.0;
    for (int64_t p : mask) {
      s1 = std::max(s1, ud[p] - u[p]);
      s2 = std::max(s2, ua[p] - u[p]);
    }
    rep.sup_maxdiff.push_back(s1);
    rep.sup_avgdiff.push_back(s2);
  }
  LadderFit f1 = fit_ladder(deltas, rep.sup_maxdiff);
  if (f1.usable < 3)
    throw NumericalError("holder_fit: fewer than 3 usable ladder points");
  rep.fitted_alpha = f1.slope;
  rep.r2 = f1.r2;
  rep.A1 = f1.constant;
  LadderFit f2 = fit_ladder(deltas, rep.sup_avgdiff);
  rep.fitted_alpha_avg = f2.usable >= 3 ? f2.slope : 0.0;
  rep.A2 = f2.constant;
  auto [ge, lm] = sobolev_diagnostics(u);
  rep.grad_energy = ge;
  rep.laplacian_mass = lm;
  return rep;
}

void write_holder_csv(const std::string& path, const HolderReport& rep) {
  FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw ValidationError("write_holder_csv: cannot open " + path);
  std::fprintf(fp, "delta,sup_maxdiff,sup_avgdiff\n");
  for (size_t i = 0; i < rep.deltas.size(); ++i)
    std::fprintf(fp, "%.17g,%.17g,%.17g\n", rep.deltas[i], rep.sup_maxdiff[i],
                 rep.sup_avgdiff[i]);
  std::fclose(fp);
}

ExponentInputs ExponentInputs::make(int n, int m, double p, double r, double nu) {
  ExponentInputs in;
  in.n = n;
  in.m = m;
  in.p = p;
  in.q = p / (p - 1.0);
  in.r = r;
  in.nu = nu;
  in.validate();
  return in;
}

void ExponentInputs::validate() const {
  // pure exponent arithmetic: no lattice is involved, so n is not capped
  if (n < 1) throw ValidationError("ExponentInputs: n out of range");
  if (m < 1 || m > n) throw ValidationError("ExponentInputs: m out of range");
  if (!(p > double(n) / m))
    throw ValidationError("ExponentInputs: p must exceed n/m");
  if (std::fabs(q - p / (p - 1.0)) > 1e-9 * (1.0 + q))
    throw ValidationError("ExponentInputs: q is not the conjugate of p");
  if (!(r >= 1.0)) throw ValidationError("ExponentInputs: r must be >= 1");
  if (nu < 0.0 || nu >= 0.5)
    throw ValidationError("ExponentInputs: nu must lie in [0, 1/2)");
}

double gamma_r(const ExponentInputs& in) {
  in.validate();
  const double B =
      in.m * in.q + in.p * in.q * (in.n - in.m) / (in.p - double(in.n) / in.m);
  return in.r / (in.r + B);
}

double predicted_exponent(const ExponentInputs& in, PredictionCase c) {
  ExponentInputs g1 = in, g2 = in;
  g1.r = 1.0;
  g2.r = 2.0;
  switch (c) {
    case PredictionCase::smooth_data_r1: return 2.0 * gamma_r(g1);
    case PredictionCase::smooth_data_r2: return gamma_r(g2);
    case PredictionCase::holder_data_r2: return std::min(in.nu, gamma_r(g2));
    case PredictionCase::holder_data_r1: return std::min(in.nu, 2.0 * gamma_r(g1));
  }
  throw ValidationError("predicted_exponent: unknown case");
}

std::vector<std::pair<std::string, double>> predicted_exponents(
    const ExponentInputs& in) {
  return {
      {"smooth_data_r1", predicted_exponent(in, PredictionCase::smooth_data_r1)},
      {"smooth_data_r2", predicted_exponent(in, PredictionCase::smooth_data_r2)},
      {"holder_data_r2", predicted_exponent(in, PredictionCase::holder_data_r2)},
      {"holder_data_r1", predicted_exponent(in, PredictionCase::holder_data_r1)},
  };
}

GrowthSlopes integrated_growth_check(const GridFunction& u,
                                     const std::vector<double>& deltas) {
  const LatticeDomain& dom = *u.dom;
  validate_ladder(deltas, 2.0 * dom.h, 0.25 * dom.inradius());
  auto [ge, lm] = sobolev_diagnostics(u);
  (void)lm;
  std::vector<double> m2s, m1s, c2s, c1s;
  for (double d : deltas) {
    auto mask = omega_delta_nodes(dom, d);
    GridFunction ud = sup_convolution(u, d);
    GridFunction ua = ball_average(u, d);
    double m2 = 0.0, m1 = 0.0;
    for (int64_t p : mask) {
      double g = ud[p] - u[p];
      m2 += g * g;
      m1 += ua[p] - u[p];
    }
    m2 /= double(mask.size());
    m1 /= double(mask.size());
    m2s.push_back(m2);
    m1s.push_back(std::max(m1, 0.0));
    if (ge > 1e-300) {
      c2s.push_back(m2 / (ge * d * d));
      c1s.push_back(std::max(m1, 0.0) / (ge * d * d));
    }
  }
  GrowthSlopes out;
  LadderFit f2 = fit_ladder(deltas, m2s);
  out.slope_L2 = f2.slope >= 1.0 ? [&] {  // slopes may exceed the Holder cap
    // refit without the cap: reuse raw regression via a direct computation
    double mx = 0, my = 0;
    int cnt = 0;
    std::vector<double> lx, ly;
    for (size_t i = 0; i < deltas.size(); ++i)
      if (m2s[i] >= 1e-12) {
        lx.push_back(std::log(deltas[i]));
        ly.push_back(std::log(m2s[i]));
        ++cnt;
      }
    for (int i = 0; i < cnt; ++i) { mx += lx[size_t(i)]; my += ly[size_t(i)]; }
    mx /= cnt; my /= cnt;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < cnt; ++i) {
      sxx += (lx[size_t(i)] - mx) * (lx[size_t(i)] - mx);
      sxy += (lx[size_t(i)] - mx) * (ly[size_t(i)] - my);
    }
    return sxy / sxx;
  }() : f2.slope;
  bool any1 = false;
  for (double v : m1s) any1 = any1 || v >= 1e-12;
  if (!any1) {
    out.skipped_L1 = true;
  } else {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < deltas.size(); ++i)
      if (m1s[i] >= 1e-12) {
        lx.push_back(std::log(deltas[i]));
        ly.push_back(std::log(m1s[i]));
      }
    if (lx.size() < 3) {
      out.skipped_L1 = true;
    } else {
      double mx = 0, my = 0;
      for (size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
      mx /= double(lx.size());
      my /= double(lx.size());
      double sxx = 0, sxy = 0;
      for (size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
      }
      out.slope_L1 = sxy / sxx;
    }
  }
  auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  out.c_L2 = median(c2s);
  out.c_L1 = median(c1s);
  return out;
}

double grid_holder_norm(const GridFunction& u, double order) {
  if (!(order > 0.0) || order > 1.0)
    throw ValidationError("grid_holder_norm: order must lie in (0, 1]");
  const LatticeDomain& dom = *u.dom;
  std::vector<int64_t> nodes;
  const int64_t total = dom.total();
  for (int64_t p = 0; p < total; ++p)
    if (dom.in_closure(p)) nodes.push_back(p);
  size_t stride = 1;
  while (nodes.size() / stride > 1200) ++stride;
  double sup = 0.0;
  for (int64_t p : nodes) sup = std::max(sup, std::fabs(u[p]));
  double semi = 0.0;
  for (size_t i = 0; i < nodes.size(); i += stride) {
    const Point zi = dom.coords(nodes[i]);
    for (size_t j = i + stride; j < nodes.size(); j += stride) {
      const Point zj = dom.coords(nodes[j]);
      double d2 = 0.0;
      for (int c = 0; c < 2 * dom.n; ++c)
        d2 += (zi[size_t(c)] - zj[size_t(c)]) * (zi[size_t(c)] - zj[size_t(c)]);
      if (d2 < 1e-24) continue;
      semi = std::max(semi, std::fabs(u[nodes[i]] - u[nodes[j]]) /
                                std::pow(d2, 0.5 * order));
    }
  }
  return sup + semi;
}

CollarReport boundary_collar_check(const GridFunction& u,
                                   const GridFunction& h_env,
                                   const GridFunction& b_composite,
                                   const std::vector<double>& deltas, double nu) {
  const LatticeDomain& dom = *u.dom;
  if (!(nu > 0.0) || nu > 1.0)
    throw ValidationError("boundary_collar_check: nu must lie in (0, 1]");
  validate_ladder(deltas, 2.0 * dom.h, 0.25 * dom.inradius());
  const int64_t total = dom.total();
  for (int64_t p = 0; p < total; ++p)
    if (dom.in_closure(p) && b_composite[p] > u[p] + 1e-9)
      throw ValidationError("boundary_collar_check: minorant precondition fails");
  CollarReport rep;
  rep.deltas = deltas;
  rep.c0 = 2.0 * grid_holder_norm(h_env, nu) + grid_holder_norm(b_composite, nu);
  bool ok = true;
  for (double d : deltas) {
    auto mask = omega_delta_nodes(dom, d);
    std::vector<char> inmask(size_t(total), 0);
    for (int64_t p : mask) inmask[size_t(p)] = 1;
    GridFunction ud = sup_convolution(u, d);
    double ratio = 0.0;
    for (int64_t p : mask) {
      bool rim = false;
      for (int i = 0; i < 2 * dom.n && !rim; ++i)
        for (int sgn : {-1, 1}) {
          int64_t q = p + sgn * dom.stride[size_t(i)];
          if (q < 0 || q >= total || !inmask[size_t(q)]) { rim = true; break; }
        }
      if (!rim) continue;
      ratio = std::max(ratio, (ud[p] - u[p]) / std::pow(d, nu));
    }
    rep.ratios.push_back(ratio);
    ok = ok && ratio <= 2.0 * rep.c0 + 1e-12;
  }
  rep.ok = ok;
  return rep;
}

HolderReport radial_holder_fit(int n, double R, const RadialProfile& g,
                               const std::vector<double>& deltas,
                               int r_samples) {
  if (n < 1 || n > kMaxN) throw ValidationError("radial_holder_fit: n out of range");
  if (!(R > 0.0)) throw ValidationError("radial_holder_fit: R must be positive");
  if (r_samples < 16) throw ValidationError("radial_holder_fit: too few samples");
  if (deltas.empty()) throw ValidationError("radial_holder_fit: empty ladder");
  for (size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0) || deltas[i] > 0.25 * R + 1e-12)
      throw ValidationError("radial_holder_fit: delta outside (0, R/4]");
    if (i > 0 && deltas[i] <= deltas[i - 1])
      throw ValidationError("radial_holder_fit: ladder not increasing");
  }
  HolderReport rep;
  rep.deltas = deltas;
  auto uofr = [&](double r) { return g.value_at(r * r); };
  const int Nq = 64;
  for (double d : deltas) {
    // conservative distance (R^2 - r^2)/(2R) > delta
    const double rstar = std::sqrt(std::max(R * R - 2.0 * R * d, 0.0));
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < r_samples; ++i) {
      const double r = rstar * double(i) / double(r_samples - 1);
      s1 = std::max(s1, uofr(r + d) - uofr(r));
      // ball average via the (axial shift x, transverse radius t) reduction:
      // |z + zeta|^2 = (r + x)^2 + t^2, weight t^(2n-2) dt dx
      double num = 0.0, den = 0.0;
      for (int jx = 0; jx < Nq; ++jx) {
        const double x = -d + (2.0 * d) * (jx + 0.5) / Nq;
        const double trad = std::sqrt(std::max(d * d - x * x, 0.0));
        if (trad <= 0.0) continue;
        double inum = 0.0, iden = 0.0;
        for (int jt = 0; jt < Nq; ++jt) {
          const double t = trad * (jt + 0.5) / Nq;
          const double w = std::pow(t, 2.0 * n - 2.0);
          inum += w * uofr(std::sqrt((r + x) * (r + x) + t * t));
          iden += w;
        }
        num += inum * trad;
        den += iden * trad;
      }
      s2 = std::max(s2, num / den - uofr(r));
    }
    rep.sup_maxdiff.push_back(s1);
    rep.sup_avgdiff.push_back(s2);
  }
  LadderFit f1 = fit_ladder(deltas, rep.sup_maxdiff);
  if (f1.usable < 3)
    throw NumericalError("radial_holder_fit: fewer than 3 usable ladder points");
  rep.fitted_alpha = f1.slope;
  rep.r2 = f1.r2;
  rep.A1 = f1.constant;
  LadderFit f2 = fit_ladder(deltas, rep.sup_avgdiff);
  rep.fitted_alpha_avg = f2.usable >= 3 ? f2.slope : 0.0;
  rep.A2 = f2.constant;
  // Sobolev quadratures for the radial profile: grad energy by the shell
  // integral of (2 r g'(r^2))^2, Laplacian mass by the boundary flux.
  const double pi = 3.14159265358979323846;
  double surf = 2.0;  // S_{2n-1} = 2 pi^n / (n-1)!
  for (int i = 0; i < n; ++i) surf *= pi;
  for (int i = 2; i < n; ++i) surf /= i;
  double ge = 0.0;
  const int NE = 4000;
  for (int i = 0; i < NE; ++i) {
    const double r = R * (i + 0.5) / NE;
    const double dr = R / NE;
    const double t = r * r;
    // centered slope of g at t from the profile grid
    double eps = std::max(1e-6 * (1.0 + t), 1e-9);
    double gp = (g.value_at(t + eps) - g.value_at(std::max(t - eps, 0.0))) /
                (eps + std::min(eps, t));
    double gradu = 2.0 * r * gp;
    ge += gradu * gradu * std::pow(r, 2.0 * n - 1.0) * dr;
  }
  rep.grad_energy = surf * ge;
  {
    const double t = R * R;
    const double eps = 1e-5 * t;
    const double gp = (g.value_at(t) - g.value_at(t - eps)) / eps;
    rep.laplacian_mass = surf * std::pow(R, 2.0 * n - 1.0) * (2.0 * R * gp);
  }
  return rep;
}

}  // namespace mhess
