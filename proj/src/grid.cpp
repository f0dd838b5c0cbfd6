#include "mhess/grid.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <sstream>

namespace mhess {

GridFunction::GridFunction(std::shared_ptr<const LatticeDomain> d)
    : dom(std::move(d)) {
  const int64_t total = dom->total();
  v.assign(size_t(total), std::numeric_limits<double>::quiet_NaN());
  for (int64_t f = 0; f < total; ++f)
    if (dom->in_closure(f)) v[size_t(f)] = 0.0;
}

double GridFunction::closure_max_abs() const {
  double mx = 0.0;
  const int64_t total = dom->total();
  for (int64_t f = 0; f < total; ++f)
    if (dom->in_closure(f)) mx = std::max(mx, std::fabs(v[size_t(f)]));
  return mx;
}

GridFunction sample_function(std::shared_ptr<const LatticeDomain> dom,
                             const std::function<double(const Point&)>& F) {
  GridFunction g(dom);
  const int64_t total = dom->total();
  for (int64_t f = 0; f < total; ++f)
    if (dom->in_closure(f)) g.v[size_t(f)] = F(dom->coords(f));
  return g;
}

double closure_max_diff(const GridFunction& a, const GridFunction& b) {
  assert(a.v.size() == b.v.size());
  double mx = 0.0;
  const int64_t total = a.dom->total();
  for (int64_t f = 0; f < total; ++f)
    if (a.dom->in_closure(f))
      mx = std::max(mx, std::fabs(a.v[size_t(f)] - b.v[size_t(f)]));
  return mx;
}

bool same_lattice(const LatticeDomain& a, const LatticeDomain& b) {
  if (&a == &b) return true;
  if (a.n != b.n || a.h != b.h) return false;
  for (int i = 0; i < 2 * a.n; ++i)
    if (a.dims[i] != b.dims[i] || a.origin[i] != b.origin[i]) return false;
  return true;
}

double multilinear_sample(const GridFunction& u, const Point& x) {
  const LatticeDomain& d = *u.dom;
  std::array<int, 2 * kMaxN> base{};
  std::array<double, 2 * kMaxN> w{};
  for (int i = 0; i < 2 * d.n; ++i) {
    double r = (x[size_t(i)] - d.origin[i]) / d.h;
    int c = int(std::floor(r));
    c = std::clamp(c, 0, d.dims[i] - 2);
    base[size_t(i)] = c;
    w[size_t(i)] = std::clamp(r - c, 0.0, 1.0);
  }
  double acc = 0.0, wsum = 0.0;
  const int corners = 1 << (2 * d.n);
  for (int mask = 0; mask < corners; ++mask) {
    std::array<int, 2 * kMaxN> idx = base;
    double ww = 1.0;
    for (int i = 0; i < 2 * d.n; ++i) {
      if (mask & (1 << i)) {
        idx[size_t(i)] += 1;
        ww *= w[size_t(i)];
      } else {
        ww *= 1.0 - w[size_t(i)];
      }
    }
    if (ww == 0.0) continue;
    int64_t f = d.flat_index(idx);
    if (!d.in_closure(f)) continue;
    acc += ww * u[f];
    wsum += ww;
  }
  return wsum > 1e-12 ? acc / wsum : 0.0;
}

void write_grid(const std::string& path, const GridFunction& g,
                const std::string& field_name) {
  const LatticeDomain& d = *g.dom;
  FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw ValidationError("write_grid: cannot open " + path);
  std::fprintf(fp, "n=%d\n", d.n);
  std::fprintf(fp, "h=%.17g\n", d.h);
  std::fprintf(fp, "origin=");
  for (int i = 0; i < 2 * d.n; ++i)
    std::fprintf(fp, "%s%.17g", i ? " " : "", d.origin[i]);
  std::fprintf(fp, "\ndims=");
  for (int i = 0; i < 2 * d.n; ++i)
    std::fprintf(fp, "%s%d", i ? " " : "", d.dims[i]);
  std::fprintf(fp, "\nfield=%s\n", field_name.c_str());
  const int64_t total = d.total();
  for (int64_t f = 0; f < total; ++f) {
    double x = g.v[size_t(f)];
    if (std::isnan(x)) std::fprintf(fp, "nan\n");
    else std::fprintf(fp, "%.17g\n", x);
  }
  std::fclose(fp);
}

namespace {

std::string header_value(FILE* fp, const char* key, const std::string& path) {
  char buf[512];
  if (!std::fgets(buf, sizeof buf, fp))
    throw ValidationError("read_grid: truncated header in " + path);
  size_t len = std::strlen(buf);
  while (len && (buf[len - 1] == '\n' || buf[len - 1] == '\r')) buf[--len] = 0;
  const size_t klen = std::strlen(key);
  if (std::strncmp(buf, key, klen) != 0 || buf[klen] != '=')
    throw ValidationError(std::string("read_grid: expected header line ") + key +
                          "=... in " + path);
  return std::string(buf + klen + 1);
}

}  // namespace

GridFunction read_grid(const std::string& path, std::string* field_name) {
  FILE* fp = std::fopen(path.c_str(), "r");
  if (!fp) throw ValidationError("read_grid: cannot open " + path);
  auto dom = std::make_shared<LatticeDomain>();
  try {
    dom->spec.kind = DomainKind::bare;
    {
      std::istringstream is(header_value(fp, "n", path));
      if (!(is >> dom->n) || dom->n < 1 || dom->n > kMaxN)
        throw ValidationError("read_grid: bad n in " + path);
      dom->spec.n = dom->n;
    }
    {
      std::istringstream is(header_value(fp, "h", path));
      if (!(is >> dom->h) || !(dom->h > 0.0))
        throw ValidationError("read_grid: bad h in " + path);
    }
    {
      std::istringstream is(header_value(fp, "origin", path));
      for (int i = 0; i < 2 * dom->n; ++i)
        if (!(is >> dom->origin[i]))
          throw ValidationError("read_grid: bad origin in " + path);
    }
    {
      std::istringstream is(header_value(fp, "dims", path));
      for (int i = 0; i < 2 * dom->n; ++i)
        if (!(is >> dom->dims[i]) || dom->dims[i] < 1)
          throw ValidationError("read_grid: bad dims in " + path);
    }
    std::string fname = header_value(fp, "field", path);
    if (field_name) *field_name = fname;
  } catch (...) {
    std::fclose(fp);
    throw;
  }
  dom->stride[2 * dom->n - 1] = 1;
  for (int i = 2 * dom->n - 2; i >= 0; --i)
    dom->stride[i] = dom->stride[i + 1] * dom->dims[i + 1];
  const int64_t total = dom->total();

  std::vector<double> vals(size_t(total), 0.0);
  char buf[128];
  for (int64_t f = 0; f < total; ++f) {
    if (!std::fgets(buf, sizeof buf, fp)) {
      std::fclose(fp);
      throw ValidationError("read_grid: too few values in " + path);
    }
    vals[size_t(f)] = std::strtod(buf, nullptr);  // parses "nan" as NaN
  }
  std::fclose(fp);

  dom->cls.assign(size_t(total), NodeClass::exterior);
  for (int64_t f = 0; f < total; ++f)
    if (!std::isnan(vals[size_t(f)])) dom->cls[size_t(f)] = NodeClass::boundary;
  const auto pairs = hessian_stencil_pairs(dom->n);
  std::array<int, 2 * kMaxN> idx{};
  for (int64_t f = 0; f < total; ++f) {
    if (dom->cls[size_t(f)] == NodeClass::exterior) continue;
    dom->unflatten(f, idx);
    bool ok = true;
    for (int i = 0; i < 2 * dom->n && ok; ++i) {
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

  GridFunction g;
  g.dom = dom;
  g.v = std::move(vals);
  return g;
}

}  // namespace mhess
