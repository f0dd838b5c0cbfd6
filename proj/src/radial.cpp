#include "mhess/radial.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

namespace mhess {

namespace {

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

}  // namespace

double RadialProfile::gp(int i) const {
  assert(i >= 1 && i + 1 < size());
  const double d1 = t[size_t(i)] - t[size_t(i) - 1];
  const double d2 = t[size_t(i) + 1] - t[size_t(i)];
  const double wl = (g[size_t(i)] - g[size_t(i) - 1]) / d1;
  const double wr = (g[size_t(i) + 1] - g[size_t(i)]) / d2;
  return (d2 * wl + d1 * wr) / (d1 + d2);
}

double RadialProfile::gpp(int i) const {
  assert(i >= 1 && i + 1 < size());
  const double d1 = t[size_t(i)] - t[size_t(i) - 1];
  const double d2 = t[size_t(i) + 1] - t[size_t(i)];
  const double wl = (g[size_t(i)] - g[size_t(i) - 1]) / d1;
  const double wr = (g[size_t(i) + 1] - g[size_t(i)]) / d2;
  return 2.0 * (wr - wl) / (d1 + d2);
}

double RadialProfile::value_at(double tq) const {
  assert(size() >= 2);
  if (tq <= t.front()) return g.front();
  if (tq >= t.back()) return g.back();
  auto it = std::upper_bound(t.begin(), t.end(), tq);
  size_t i = size_t(it - t.begin());  // t[i-1] <= tq < t[i]
  double w = (tq - t[i - 1]) / (t[i] - t[i - 1]);
  return (1.0 - w) * g[i - 1] + w * g[i];
}

bool RadialProfile::admissible(int n, int m, double eps) const {
  for (int i = 1; i + 1 < size(); ++i) {
    EigenvalueVector ev = radial_eigenvalues(gp(i), gpp(i), t[size_t(i)], n);
    double tol = eps >= 0.0 ? eps : gamma_cone_tolerance(ev.span());
    if (gp(i) < -tol) return false;
    if (!in_gamma_m_closed(ev.span(), m, eps)) return false;
  }
  return true;
}

double radial_sigma_m(double gp, double gpp, double t, int n, int m) {
  return hessian_normalization(n, m) *
         (binomial(n - 1, m) * ipow(gp, m) +
          binomial(n - 1, m - 1) * ipow(gp, m - 1) * (gp + t * gpp));
}

EigenvalueVector radial_eigenvalues(double gp, double gpp, double t, int n) {
  EigenvalueVector ev;
  ev.n = n;
  for (int i = 0; i < n - 1; ++i) ev.v[size_t(i)] = gp;
  ev.v[size_t(n) - 1] = gp + t * gpp;
  std::sort(ev.v.begin(), ev.v.begin() + n);
  return ev;
}

namespace {

struct RadialSystem {
  int n, m, N;  // N intervals, knots 0..N, g[N] fixed
  double dt;
  std::vector<double> t, fv;
  double f0root;

  double gp_at(const std::vector<double>& g, int i) const {
    return (g[size_t(i) + 1] - g[size_t(i) - 1]) / (2.0 * dt);
  }
  double gpp_at(const std::vector<double>& g, int i) const {
    return (g[size_t(i) + 1] - 2.0 * g[size_t(i)] + g[size_t(i) - 1]) / (dt * dt);
  }
  // rows 0..N-1; row 0 is the one-sided derivative condition at t = 0
  void residual(const std::vector<double>& g, std::vector<double>& r) const {
    r[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * dt) - f0root;
    for (int i = 1; i < N; ++i)
      r[size_t(i)] =
          radial_sigma_m(gp_at(g, i), gpp_at(g, i), t[size_t(i)], n, m) -
          fv[size_t(i)];
  }
  double rnorm(const std::vector<double>& r) const {
    double mx = 0.0;
    for (double x : r) mx = std::max(mx, std::fabs(x));
    return mx;
  }
};

}  // namespace

RadialProfile radial_solve(int n, int m, double R,
                           const std::function<double(double)>& f_radial,
                           double phi_R, int knots, RadialSolveReport* report) {
  if (n < 1 || n > kMaxN || m < 1 || m > n)
    throw ValidationError("radial_solve: need 1 <= m <= n <= 3");
  if (!(R > 0.0)) throw ValidationError("radial_solve: R must be positive");
  if (knots < 5) throw ValidationError("radial_solve: need at least 5 knots");

  RadialSystem S;
  S.n = n;
  S.m = m;
  S.N = knots - 1;
  S.dt = R * R / S.N;
  S.t.resize(size_t(knots), 0.0);
  S.fv.resize(size_t(knots), 0.0);
  double fmax = 0.0;
  for (int i = 0; i < knots; ++i) {
    S.t[size_t(i)] = S.dt * i;
    double fi = f_radial(S.t[size_t(i)]);
    if (!(fi >= 0.0) || !std::isfinite(fi))
      throw ValidationError("radial_solve: f must be finite and nonnegative");
    S.fv[size_t(i)] = fi;
    fmax = std::max(fmax, fi);
  }
  S.f0root = std::pow(S.fv[0], 1.0 / m);

  const int N = S.N;
  const double dt = S.dt;
  std::vector<double> g(size_t(knots), 0.0);
  const double A = std::pow(fmax, 1.0 / m);
  for (int i = 0; i < knots; ++i)
    g[size_t(i)] = phi_R + A * (S.t[size_t(i)] - R * R);

  const double tol = 1e-9 * (1.0 + fmax);
  std::vector<double> r(size_t(N), 0.0), rn(size_t(N), 0.0);
  std::vector<double> sub(size_t(N), 0.0), diag(size_t(N), 0.0), sup(size_t(N), 0.0),
      rhs(size_t(N), 0.0), dg(size_t(N), 0.0);  // index 1..N-1 used
  S.residual(g, r);
  double res = S.rnorm(r);

  int newton_its = 0;
  bool newton_ok = res <= tol;
  for (int it = 0; it < 120 && !newton_ok; ++it) {
    ++newton_its;
    // Jacobian rows 1..N-1 (tridiagonal); row 0 eliminated:
    //   dg0 = (4 dg1 - dg2 + 2 dt r0) / 3
    const double cnm = hessian_normalization(n, m);
    for (int i = 1; i < N; ++i) {
      const double gp = S.gp_at(g, i), gpp = S.gpp_at(g, i), ti = S.t[size_t(i)];
      const double dF_dgp =
          cnm * (m * binomial(n - 1, m) * ipow(gp, m - 1) +
                 binomial(n - 1, m - 1) *
                     ((m - 1) * ipow(gp, m - 2) * (gp + ti * gpp) + ipow(gp, m - 1)));
      const double dF_dgpp = cnm * binomial(n - 1, m - 1) * ipow(gp, m - 1) * ti;
      sub[size_t(i)] = -dF_dgp / (2.0 * dt) + dF_dgpp / (dt * dt);
      diag[size_t(i)] = -2.0 * dF_dgpp / (dt * dt);
      sup[size_t(i)] = dF_dgp / (2.0 * dt) + dF_dgpp / (dt * dt);
      rhs[size_t(i)] = -r[size_t(i)];
    }
    // fold the eliminated row 0 into row 1
    rhs[1] -= sub[1] * (2.0 * dt * r[0]) / 3.0;
    diag[1] += 4.0 * sub[1] / 3.0;
    sup[1] += -sub[1] / 3.0;
    sub[1] = 0.0;

    // Thomas, with a Levenberg diagonal bump when a pivot degenerates
    bool solved = false;
    double mu = 0.0;
    double dscale = 0.0;
    for (int i = 1; i < N; ++i) dscale = std::max(dscale, std::fabs(diag[size_t(i)]));
    if (dscale == 0.0) dscale = 1.0;
    for (int attempt = 0; attempt < 6 && !solved; ++attempt) {
      std::vector<double> c(size_t(N), 0.0), d(size_t(N), 0.0);
      solved = true;
      // the bump pushes each pivot away from zero with the sign it has
      double piv = diag[1] + ((diag[1] >= 0.0) ? 1.0 : -1.0) * mu * dscale;
      if (std::fabs(piv) < 1e-14 * dscale) { solved = false; }
      else {
        c[1] = sup[1] / piv;
        d[1] = rhs[1] / piv;
        for (int i = 2; i < N && solved; ++i) {
          double base = diag[size_t(i)] +
                        ((diag[size_t(i)] >= 0.0) ? 1.0 : -1.0) * mu * dscale;
          double den = base - sub[size_t(i)] * c[size_t(i) - 1];
          if (std::fabs(den) < 1e-14 * dscale) { solved = false; break; }
          c[size_t(i)] = (i + 1 < N ? sup[size_t(i)] : 0.0) / den;
          d[size_t(i)] = (rhs[size_t(i)] - sub[size_t(i)] * d[size_t(i) - 1]) / den;
        }
      }
      if (solved) {
        dg[size_t(N) - 1] = d[size_t(N) - 1];
        for (int i = N - 2; i >= 1; --i)
          dg[size_t(i)] = d[size_t(i)] - c[size_t(i)] * dg[size_t(i) + 1];
      } else {
        mu = (mu == 0.0) ? 1e-8 : mu * 100.0;
      }
    }
    if (!solved) break;  // to fallback
    dg[0] = (4.0 * dg[1] - dg[2] + 2.0 * dt * r[0]) / 3.0;

    double s = 1.0;
    bool accepted = false;
    std::vector<double> gtry(g);
    for (int back = 0; back < 45; ++back) {
      for (int i = 0; i < N; ++i) gtry[size_t(i)] = g[size_t(i)] + s * dg[size_t(i)];
      S.residual(gtry, rn);
      double resn = S.rnorm(rn);
      if (resn < res * (1.0 - 1e-4 * s) || resn <= tol) {
        g = gtry;
        r = rn;
        res = resn;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;  // to fallback
    if (res <= tol) newton_ok = true;
  }

  int sweeps = 0;
  if (!newton_ok) {
    // Gauss-Seidel: at each knot the density is nonincreasing in g_i (raising
    // g_i lowers g'' and with it the single eigenvalue g' + t g''), vanishing
    // exactly at the cone exit g' + t g'' = -(n-m)/m g'; bisect on [lo, c*].
    for (sweeps = 1; sweeps <= 20000; ++sweeps) {
      for (int i = 1; i < N; ++i) {
        const double gp = S.gp_at(g, i);
        if (!(gp > 0.0)) continue;  // handled by neighbor updates
        const double ti = S.t[size_t(i)];
        const double gsum = g[size_t(i) + 1] + g[size_t(i) - 1];
        double cstar;
        if (m == n) {
          // exit when the single eigenvalue reaches 0: gpp* = -gp/ti (ti > 0)
          cstar = 0.5 * (gsum + gp / ti * dt * dt);
        } else {
          const double xstar = -gp * double(n - m) / double(m);
          const double gpps = (xstar - gp) / ti;
          cstar = 0.5 * (gsum - gpps * dt * dt);
        }
        const double fi = S.fv[size_t(i)];
        if (fi <= 0.0) { g[size_t(i)] = cstar; continue; }
        auto F = [&](double c) {
          return radial_sigma_m(gp, (gsum - 2.0 * c) / (dt * dt), ti, n, m);
        };
        double lo = std::min(g[size_t(i)], cstar);
        double step = 1.0 + std::fabs(lo);
        int guard = 0;
        while (F(lo) < fi && ++guard < 200) { lo -= step; step *= 2.0; }
        double hi = cstar;
        for (int bit = 0; bit < 100; ++bit) {
          double mid = 0.5 * (lo + hi);
          (F(mid) >= fi ? lo : hi) = mid;
        }
        g[size_t(i)] = 0.5 * (lo + hi);
      }
      // boundary derivative row, linear in g0
      g[0] = (4.0 * g[1] - g[2] - 2.0 * dt * S.f0root) / 3.0;
      S.residual(g, r);
      res = S.rnorm(r);
      if (res <= tol) break;
    }
  }

  RadialProfile prof;
  prof.R = R;
  prof.t = S.t;
  prof.g = g;

  // admissibility projection, then hard check
  for (int i = 1; i < N; ++i) {
    EigenvalueVector ev =
        radial_eigenvalues(prof.gp(i), prof.gpp(i), S.t[size_t(i)], n);
    if (in_gamma_m_closed(ev.span(), m)) continue;
    const double gp = prof.gp(i);
    if (gp < 0.0) continue;  // cannot be fixed from the center value
    double lo = prof.g[size_t(i)] - 10.0 * (1.0 + std::fabs(prof.g[size_t(i)]));
    double hi = prof.g[size_t(i)];
    for (int bit = 0; bit < 100; ++bit) {
      double mid = 0.5 * (lo + hi);
      double gpp = (prof.g[size_t(i) + 1] + prof.g[size_t(i) - 1] - 2.0 * mid) /
                   (dt * dt);
      EigenvalueVector e2 = radial_eigenvalues(gp, gpp, S.t[size_t(i)], n);
      (in_gamma_m_closed(e2.span(), m) ? lo : hi) = mid;
    }
    prof.g[size_t(i)] = lo;
  }
  for (int i = 1; i < N; ++i) {
    EigenvalueVector ev =
        radial_eigenvalues(prof.gp(i), prof.gpp(i), S.t[size_t(i)], n);
    double ctol = gamma_cone_tolerance(ev.span());
    if (prof.gp(i) < -ctol || !in_gamma_m_closed(ev.span(), m))
      throw NumericalError("radial_solve: admissibility violation at knot " +
                           std::to_string(i) + " (t = " +
                           std::to_string(S.t[size_t(i)]) + ")");
  }
  S.residual(prof.g, r);
  res = S.rnorm(r);
  if (res > 100.0 * tol)
    throw NumericalError("radial_solve: convergence failure, residual " +
                         std::to_string(res));
  if (report) {
    report->newton_iterations = newton_its;
    report->fallback_sweeps = sweeps;
    report->residual = res;
  }
  return prof;
}

}  // namespace mhess
