#include "mhess/domain.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>

namespace mhess {

DomainSpec DomainSpec::ball(int n, double R) {
  if (n < 1 || n > kMaxN) throw ValidationError("ball: n out of range");
  if (!(R > 0.0)) throw ValidationError("ball: radius must be positive");
  DomainSpec d;
  d.kind = DomainKind::ball;
  d.n = n;
  d.R = R;
  return d;
}

DomainSpec DomainSpec::ellipsoid(int n, std::vector<double> a) {
  if (n < 1 || n > kMaxN) throw ValidationError("ellipsoid: n out of range");
  if (int(a.size()) != n) throw ValidationError("ellipsoid: need n coefficients");
  for (double c : a)
    if (c == 0.0) throw ValidationError("ellipsoid: zero coefficient");
  DomainSpec d;
  d.kind = DomainKind::ellipsoid;
  d.n = n;
  d.a = std::move(a);
  return d;
}

double rho(const DomainSpec& d, const Point& z) {
  switch (d.kind) {
    case DomainKind::ball: {
      double s = 0.0;
      for (int i = 0; i < 2 * d.n; ++i) s += z[i] * z[i];
      return s - d.R * d.R;
    }
    case DomainKind::ellipsoid: {
      double s = 0.0;
      for (int j = 0; j < d.n; ++j)
        s += d.a[j] * (z[2 * j] * z[2 * j] + z[2 * j + 1] * z[2 * j + 1]);
      return s - 1.0;
    }
    default:
      throw ValidationError("rho: bare lattice has no defining function");
  }
}

void rho_gradient(const DomainSpec& d, const Point& z, Point& grad) {
  grad.fill(0.0);
  if (d.kind == DomainKind::ball) {
    for (int i = 0; i < 2 * d.n; ++i) grad[i] = 2.0 * z[i];
  } else if (d.kind == DomainKind::ellipsoid) {
    for (int j = 0; j < d.n; ++j) {
      grad[2 * j] = 2.0 * d.a[j] * z[2 * j];
      grad[2 * j + 1] = 2.0 * d.a[j] * z[2 * j + 1];
    }
  } else {
    throw ValidationError("rho_gradient: bare lattice");
  }
}

std::array<cplx, kMaxN> rho_complex_gradient(const DomainSpec& d, const Point& z) {
  std::array<cplx, kMaxN> g{};
  for (int j = 0; j < d.n; ++j) {
    cplx zbar(z[2 * j], -z[2 * j + 1]);
    g[j] = (d.kind == DomainKind::ball) ? zbar : d.a[j] * zbar;
  }
  return g;
}

HermitianMatrix rho_complex_hessian(const DomainSpec& d, const Point&) {
  HermitianMatrix H(d.n);
  for (int j = 0; j < d.n; ++j)
    H(j, j) = (d.kind == DomainKind::ball) ? 1.0 : d.a[j];
  return H;
}

double rho_gradient_max(const DomainSpec& d) {
  if (d.kind == DomainKind::ball) return 2.0 * d.R;
  // |grad|^2 = 4 sum a_j^2 |z_j|^2 <= 4 max(a_j) on {rho <= 0}
  double amax = 0.0;
  for (double c : d.a) amax = std::max(amax, c);
  return 2.0 * std::sqrt(amax);
}

double axis_extent(const DomainSpec& d, int axis) {
  if (d.kind == DomainKind::ball) return d.R;
  double c = d.a[axis / 2];
  if (c <= 0.0) throw ValidationError("axis_extent: unbounded direction");
  return 1.0 / std::sqrt(c);
}

double rho_nu_value(const DomainSpec& d, const Point& z, double nu) {
  if (nu < 0.0 || nu >= 0.5) throw ValidationError("rho_nu: need 0 <= nu < 1/2");
  return -std::pow(std::fabs(rho(d, z)), 1.0 - nu);
}

HermitianMatrix rho_nu_hessian(const DomainSpec& d, const Point& z, double nu) {
  if (nu < 0.0 || nu >= 0.5) throw ValidationError("rho_nu: need 0 <= nu < 1/2");
  const double r = rho(d, z);
  if (!(r < 0.0)) throw ValidationError("rho_nu_hessian: needs rho < 0");
  const double ar = -r;
  HermitianMatrix H = rho_complex_hessian(d, z);
  HermitianMatrix out((int)d.n);
  auto g = rho_complex_gradient(d, z);
  const double c1 = (1.0 - nu) * std::pow(ar, -nu);
  const double c2 = nu * (1.0 - nu) * std::pow(ar, -1.0 - nu);
  for (int j = 0; j < d.n; ++j)
    for (int k = 0; k < d.n; ++k)
      out(j, k) = c1 * H(j, k) + c2 * g[j] * std::conj(g[k]);
  out.symmetrize();
  return out;
}

int64_t LatticeDomain::total() const {
  int64_t t = 1;
  for (int i = 0; i < 2 * n; ++i) t *= dims[i];
  return t;
}

Point LatticeDomain::coords(int64_t flat) const {
  Point p{};
  for (int i = 2 * n - 1; i >= 0; --i) {
    int64_t q = flat / dims[i];
    p[i] = origin[i] + h * double(flat - q * dims[i]);
    flat = q;
  }
  return p;
}

int64_t LatticeDomain::flat_index(const std::array<int, 2 * kMaxN>& idx) const {
  int64_t f = 0;
  for (int i = 0; i < 2 * n; ++i) f = f * dims[i] + idx[i];
  return f;
}

void LatticeDomain::unflatten(int64_t flat, std::array<int, 2 * kMaxN>& idx) const {
  for (int i = 2 * n - 1; i >= 0; --i) {
    int64_t q = flat / dims[i];
    idx[i] = int(flat - q * dims[i]);
    flat = q;
  }
}

double LatticeDomain::conservative_dist(int64_t flat) const {
  assert(!rho_at.empty());
  return std::max(0.0, -rho_at[flat]) / grad_max;
}

double LatticeDomain::inradius() const {
  double r = axis_extent(spec, 0);
  for (int i = 1; i < 2 * n; ++i) r = std::min(r, axis_extent(spec, i));
  return r;
}

std::vector<std::pair<int, int>> hessian_stencil_pairs(int n) {
  std::vector<std::pair<int, int>> ps;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      ps.emplace_back(2 * j, 2 * k);
      ps.emplace_back(2 * j + 1, 2 * k + 1);
      ps.emplace_back(2 * j, 2 * k + 1);
      ps.emplace_back(2 * j + 1, 2 * k);
    }
  return ps;
}

namespace {

double bisect_rho(const DomainSpec& spec, Point base, int axis, int sign,
                  double h, double s_lo, double s_hi) {
  // rho(base + s*h*sign*e_axis): <= 0 at s_lo, > 0 at s_hi
  auto at = [&](double s) {
    Point p = base;
    p[axis] += s * h * double(sign);
    return rho(spec, p);
  };
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (s_lo + s_hi);
    (at(mid) <= 0.0 ? s_lo : s_hi) = mid;
  }
  return 0.5 * (s_lo + s_hi);
}

}  // namespace

std::shared_ptr<const LatticeDomain> make_domain(const DomainSpec& spec, double h) {
  if (!(h > 0.0)) throw ValidationError("make_domain: h must be positive");
  auto dom = std::make_shared<LatticeDomain>();
  dom->spec = spec;
  dom->n = spec.n;
  dom->h = h;

  double min_width = 1e300;
  for (int i = 0; i < 2 * spec.n; ++i) {
    double ext = axis_extent(spec, i);
    min_width = std::min(min_width, 2.0 * ext);
    int K = int(std::ceil(ext / h - 1e-12)) + 1;
    dom->origin[i] = -K * h;
    dom->dims[i] = 2 * K + 1;
  }
  if (h > min_width / 4.0 + 1e-12)
    throw ValidationError("make_domain: h exceeds a quarter of the domain width");

  int64_t total = 1;
  for (int i = 0; i < 2 * spec.n; ++i) {
    total *= dom->dims[i];
    if (total > (int64_t)4e8)
      throw ValidationError("make_domain: lattice too large at this resolution");
  }
  dom->stride[2 * spec.n - 1] = 1;
  for (int i = 2 * spec.n - 2; i >= 0; --i)
    dom->stride[i] = dom->stride[i + 1] * dom->dims[i + 1];

  dom->cls.assign(size_t(total), NodeClass::exterior);
  dom->rho_at.resize(size_t(total));
  for (int64_t f = 0; f < total; ++f) {
    double r = rho(spec, dom->coords(f));
    dom->rho_at[size_t(f)] = r;
    if (r <= 0.0) dom->cls[size_t(f)] = NodeClass::boundary;  // provisional
  }

  const auto pairs = hessian_stencil_pairs(spec.n);
  std::array<int, 2 * kMaxN> idx{};
  for (int64_t f = 0; f < total; ++f) {
    if (dom->cls[size_t(f)] == NodeClass::exterior) continue;
    if (!(dom->rho_at[size_t(f)] < 0.0)) continue;  // exactly on the surface
    dom->unflatten(f, idx);
    bool ok = true;
    for (int i = 0; i < 2 * spec.n && ok; ++i) {
      if (idx[i] == 0 || idx[i] == dom->dims[i] - 1) { ok = false; break; }
      if (!dom->in_closure(f + dom->stride[i]) ||
          !dom->in_closure(f - dom->stride[i]))
        ok = false;
    }
    for (auto [a, b] : pairs) {
      if (!ok) break;
      if (!dom->in_closure(f + dom->stride[a] + dom->stride[b]) ||
          !dom->in_closure(f + dom->stride[a] - dom->stride[b]) ||
          !dom->in_closure(f - dom->stride[a] + dom->stride[b]) ||
          !dom->in_closure(f - dom->stride[a] - dom->stride[b]))
        ok = false;
    }
    if (ok) dom->cls[size_t(f)] = NodeClass::interior;
  }

  for (int64_t f = 0; f < total; ++f) {
    if (dom->cls[size_t(f)] == NodeClass::interior) dom->interior.push_back(f);
    else if (dom->cls[size_t(f)] == NodeClass::boundary) dom->boundary.push_back(f);
  }
  if (dom->interior.empty())
    throw ValidationError("make_domain: no interior node at this resolution");

  dom->grad_max = rho_gradient_max(spec);

  // fractional boundary distances: nearest crossing of {rho=0} along a grid
  // line through each boundary-adjacent node, searched up to two cells out
  dom->anchors.reserve(dom->boundary.size());
  for (int64_t f : dom->boundary) {
    BoundaryAnchor an;
    an.node = f;
    const Point base = dom->coords(f);
    dom->unflatten(f, idx);
    double best = 1e300;
    for (int axis = 0; axis < 2 * spec.n; ++axis)
      for (int sign : {+1, -1}) {
        if (idx[axis] + sign < 0 || idx[axis] + sign >= dom->dims[axis]) continue;
        int64_t nb = dom->step(f, axis, sign);
        double th = -1.0;
        if (dom->rho_at[size_t(nb)] > 0.0) {
          th = bisect_rho(spec, base, axis, sign, h, 0.0, 1.0);
        } else if (idx[axis] + 2 * sign >= 0 &&
                   idx[axis] + 2 * sign < dom->dims[axis] &&
                   dom->rho_at[size_t(dom->step(nb, axis, sign))] > 0.0) {
          th = bisect_rho(spec, base, axis, sign, h, 1.0, 2.0);
        }
        if (th >= 0.0 && th < best) {
          best = th;
          an.axis = axis;
          an.sign = sign;
          an.theta = th;
          an.xi = base;
          an.xi[axis] += th * h * double(sign);
          int64_t inner = dom->step(f, axis, -sign);
          bool inner_ok = idx[axis] - sign >= 0 &&
                          idx[axis] - sign < dom->dims[axis] &&
                          dom->in_closure(inner);
          an.inner = inner_ok ? inner : -1;
        }
      }
    if (!(best < 1e300)) {
      // no axis crossing within two cells: project along the outward gradient
      Point g;
      rho_gradient(spec, base, g);
      double gn = 0.0;
      for (int i = 0; i < 2 * spec.n; ++i) gn += g[i] * g[i];
      gn = std::sqrt(gn);
      if (gn < 1e-14)
        throw NumericalError("make_domain: boundary anchor search failed");
      double lo = 0.0, hi = h;
      auto at = [&](double t) {
        Point p = base;
        for (int i = 0; i < 2 * spec.n; ++i) p[i] += t * g[i] / gn;
        return rho(spec, p);
      };
      int guard = 0;
      while (at(hi) <= 0.0 && ++guard < 16) hi *= 2.0;
      if (guard >= 16)
        throw NumericalError("make_domain: boundary anchor search failed");
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (at(mid) <= 0.0 ? lo : hi) = mid;
      }
      an.axis = -1;
      an.sign = 0;
      an.theta = 0.5 * (lo + hi) / h;
      an.xi = base;
      for (int i = 0; i < 2 * spec.n; ++i) an.xi[i] += 0.5 * (lo + hi) * g[i] / gn;
      an.inner = -1;
    }
    dom->anchors.push_back(an);
  }
  return dom;
}

PseudoconvexityCertificate certify_pseudoconvexity(const DomainSpec& spec, int m,
                                                   double h_sample) {
  if (m < 1 || m > spec.n)
    throw ValidationError("certify_pseudoconvexity: need 1 <= m <= n");
  PseudoconvexityCertificate cert;
  cert.m = m;
  cert.sigma = 1e300;

  std::vector<Point> samples;
  bool built = false;
  try {
    double hs = h_sample;
    if (hs <= 0.0) {
      double ext = 1e300;
      for (int i = 0; i < 2 * spec.n; ++i)
        ext = std::min(ext, axis_extent(spec, i));
      hs = ext / 3.0;
    }
    auto dom = make_domain(spec, hs);
    for (int64_t f : dom->interior) samples.push_back(dom->coords(f));
    for (int64_t f : dom->boundary) samples.push_back(dom->coords(f));
    for (const auto& an : dom->anchors) samples.push_back(an.xi);
    built = true;
  } catch (const ValidationError&) {
    // unbounded or degenerate region: the Hessian is constant anyway
  }
  if (!built) samples.push_back(Point{});

  for (const Point& z : samples) {
    HermitianMatrix H = rho_complex_hessian(spec, z);
    EigenvalueVector ev = hermitian_eigenvalues(H);
    auto sig = elementary_symmetric_all(ev.span(), m);
    for (int k = 1; k <= m; ++k) {
      double val = hessian_normalization(spec.n, k) * sig[k];
      if (val < cert.sigma) {
        cert.sigma = val;
        cert.worst = z;
      }
    }
  }
  cert.ok = cert.sigma > 0.0;
  return cert;
}

}  // namespace mhess
