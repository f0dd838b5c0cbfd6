#include "mhess/core_math.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace mhess {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

double hessian_normalization(int n, int m) {
  if (m < 1 || m > n)
    throw std::invalid_argument("hessian_normalization: need 1 <= m <= n");
  return 1.0 / binomial(n, m);
}

double elementary_symmetric(std::span<const double> lambda, int k) {
  if (k < 0) throw std::invalid_argument("elementary_symmetric: k < 0");
  if (k == 0) return 1.0;
  if (k > int(lambda.size())) return 0.0;
  return elementary_symmetric_all(lambda, k)[k];
}

std::vector<double> elementary_symmetric_all(std::span<const double> lambda,
                                             int kmax) {
  // e[k] <- e[k] + x * e[k-1], one element at a time
  std::vector<double> e(size_t(kmax) + 1, 0.0);
  e[0] = 1.0;
  for (size_t i = 0; i < lambda.size(); ++i)
    for (int k = std::min<int>(kmax, int(i) + 1); k >= 1; --k)
      e[k] += lambda[i] * e[k - 1];
  return e;
}

double shifted_sigma(std::span<const double> sig, int n, int k, double s) {
  double acc = 0.0;
  for (int i = 0; i <= k && i < int(sig.size()); ++i)
    acc += sig[i] * binomial(n - i, k - i) * std::pow(-s, k - i);
  return acc;
}

double gamma_cone_tolerance(std::span<const double> lambda) {
  double m = 0.0;
  for (double x : lambda) m = std::max(m, std::fabs(x));
  return 1e-9 * (1.0 + m);
}

bool in_gamma_m(std::span<const double> lambda, int m) {
  if (m < 1 || m > int(lambda.size()))
    throw std::invalid_argument("in_gamma_m: need 1 <= m <= n");
  auto sig = elementary_symmetric_all(lambda, m);
  for (int k = 1; k <= m; ++k)
    if (sig[k] <= 0.0) return false;
  return true;
}

bool in_gamma_m_closed(std::span<const double> lambda, int m, double eps) {
  if (m < 1 || m > int(lambda.size()))
    throw std::invalid_argument("in_gamma_m_closed: need 1 <= m <= n");
  if (eps < 0.0) eps = gamma_cone_tolerance(lambda);
  auto sig = elementary_symmetric_all(lambda, m);
  for (int k = 1; k <= m; ++k)
    if (sig[k] < -eps) return false;
  return true;
}

double gamma_violation(std::span<const double> lambda, int m) {
  auto sig = elementary_symmetric_all(lambda, m);
  double worst = 0.0;
  for (int k = 1; k <= m; ++k) worst = std::max(worst, -sig[k]);
  return worst;
}

double cone_exit_shift(std::span<const double> lambda, int m) {
  const int n = int(lambda.size());
  auto sig = elementary_symmetric_all(lambda, m);
  auto inside = [&](double s) {
    for (int k = 1; k <= m; ++k)
      if (shifted_sigma(sig, n, k, s) < 0.0) return false;
    return true;
  };
  double linf = 0.0;
  for (double x : lambda) linf = std::max(linf, std::fabs(x));
  double lo = -(linf + 1.0);          // lambda + (linf+1)*1 >= 1 componentwise
  double hi = sig[1] / n + 1.0;       // sigma_1 < 0 here
  assert(inside(lo) && !inside(hi));
  for (int it = 0; it < 100; ++it) {
    double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo;
}

HermitianMatrix::HermitianMatrix(int dim) : n(dim) {
  if (dim < 1 || dim > kMaxN)
    throw std::invalid_argument("HermitianMatrix: dim out of range");
}

HermitianMatrix HermitianMatrix::identity(int dim) {
  HermitianMatrix I(dim);
  for (int j = 0; j < dim; ++j) I(j, j) = 1.0;
  return I;
}

double HermitianMatrix::frobenius_norm() const {
  double s = 0.0;
  for (int i = 0; i < n * n; ++i) s += std::norm(a[i]);
  return std::sqrt(s);
}

void HermitianMatrix::symmetrize() {
  for (int j = 0; j < n; ++j) {
    (*this)(j, j) = cplx((*this)(j, j).real(), 0.0);
    for (int k = j + 1; k < n; ++k) (*this)(k, j) = std::conj((*this)(j, k));
  }
}

HermitianMatrix operator+(const HermitianMatrix& A, const HermitianMatrix& B) {
  assert(A.n == B.n);
  HermitianMatrix C(A.n);
  for (int i = 0; i < A.n * A.n; ++i) C.a[i] = A.a[i] + B.a[i];
  return C;
}

HermitianMatrix operator*(double c, const HermitianMatrix& A) {
  HermitianMatrix C(A.n);
  for (int i = 0; i < A.n * A.n; ++i) C.a[i] = c * A.a[i];
  return C;
}

EigenvalueVector hermitian_eigenvalues(const HermitianMatrix& H) {
  const int n = H.n;
  if (n < 1 || n > kMaxN)
    throw std::invalid_argument("hermitian_eigenvalues: dim out of range");
  EigenvalueVector ev;
  ev.n = n;
  if (n == 1) {
    ev.v[0] = H(0, 0).real();
    return ev;
  }

  HermitianMatrix A = H;
  A.symmetrize();
  const double scale = std::max(A.frobenius_norm(), 1e-300);
  const double stop = 1e-15 * scale;

  for (int sweep = 0; sweep < 40; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::abs(A(p, q));
    if (off <= stop) break;

    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double b = std::abs(A(p, q));
        if (b <= 1e-300) continue;
        // de-phase column/row q so A(p,q) becomes real positive
        const cplx ph = A(p, q) / b;  // |ph| = 1
        for (int r = 0; r < n; ++r) {
          A(r, q) *= std::conj(ph);
          A(q, r) *= ph;
        }
        // classical real Jacobi rotation zeroing the (p,q) entry
        const double app = A(p, p).real(), aqq = A(q, q).real();
        const double tau = (aqq - app) / (2.0 * b);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = t * c;
        for (int r = 0; r < n; ++r) {
          const cplx arp = A(r, p), arq = A(r, q);
          A(r, p) = c * arp - s * arq;
          A(r, q) = s * arp + c * arq;
        }
        for (int r = 0; r < n; ++r) {
          const cplx apr = A(p, r), aqr = A(q, r);
          A(p, r) = c * apr - s * aqr;
          A(q, r) = s * apr + c * aqr;
        }
        A(p, q) = A(q, p) = 0.0;
        A(p, p) = cplx(A(p, p).real(), 0.0);
        A(q, q) = cplx(A(q, q).real(), 0.0);
      }
  }

  for (int j = 0; j < n; ++j) ev.v[j] = A(j, j).real();
  std::sort(ev.v.begin(), ev.v.begin() + n);
  return ev;
}

}  // namespace mhess
