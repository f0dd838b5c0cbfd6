#pragma once
// Elementary symmetric polynomials sigma_k, the Garding cones
//   Gamma_m = { lambda in R^n : sigma_1(lambda) > 0, ..., sigma_m(lambda) > 0 },
// small complex Hermitian eigenproblems (n <= 3), and helpers for the
// normalized m-Hessian density  c_nm * sigma_m(eigenvalues),
// c_nm = m!(n-m)!/n!, so that the density of |z|^2 is exactly 1.

#include <array>
#include <complex>
#include <span>
#include <vector>

namespace mhess {

using cplx = std::complex<double>;

inline constexpr int kMaxN = 3;  // complex dimension cap for matrix types

double binomial(int n, int k);

// c_nm = m!(n-m)!/n! = 1/binomial(n,m).  Requires 1 <= m <= n.
double hessian_normalization(int n, int m);

// sigma_k of the entries of lambda; sigma_0 = 1, sigma_k = 0 for k > size.
double elementary_symmetric(std::span<const double> lambda, int k);

// sigma_0..sigma_kmax in one O(n*kmax) pass.
std::vector<double> elementary_symmetric_all(std::span<const double> lambda,
                                             int kmax);

// sigma_k(lambda - s*1) expanded from precomputed sig[i] = sigma_i(lambda):
//   sigma_k(lambda - s*1) = sum_i sig[i] * C(n-i, k-i) * (-s)^(k-i).
double shifted_sigma(std::span<const double> sig, int n, int k, double s);

// Default closed-cone slack: 1e-9 * (1 + max|lambda_i|).
double gamma_cone_tolerance(std::span<const double> lambda);

// Strict cone: sigma_k(lambda) > 0 for k = 1..m.
bool in_gamma_m(std::span<const double> lambda, int m);

// Closed cone with slack eps: sigma_k(lambda) >= -eps for k = 1..m.
// Pass eps < 0 to use gamma_cone_tolerance(lambda).
bool in_gamma_m_closed(std::span<const double> lambda, int m, double eps = -1.0);

// Worst signed violation of the closed-cone conditions: max_k max(0, -sigma_k).
double gamma_violation(std::span<const double> lambda, int m);

// Largest s such that lambda - s*1 stays in the closed cone Gamma_m.
// The admissible set { s : lambda - s*1 in closed Gamma_m } is (-inf, s*].
double cone_exit_shift(std::span<const double> lambda, int m);

struct HermitianMatrix {
  int n = 0;
  std::array<cplx, kMaxN * kMaxN> a{};  // row-major

  HermitianMatrix() = default;
  explicit HermitianMatrix(int dim);

  cplx& operator()(int j, int k) { return a[j * n + k]; }
  const cplx& operator()(int j, int k) const { return a[j * n + k]; }

  static HermitianMatrix identity(int dim);
  double frobenius_norm() const;
  // forces exact conjugate symmetry: keeps upper triangle, mirrors it.
  void symmetrize();
};

HermitianMatrix operator+(const HermitianMatrix& A, const HermitianMatrix& B);
HermitianMatrix operator*(double c, const HermitianMatrix& A);

struct EigenvalueVector {
  int n = 0;
  std::array<double, kMaxN> v{};
  std::span<const double> span() const { return {v.data(), size_t(n)}; }
  double operator[](int i) const { return v[i]; }
};

// All eigenvalues (real), ascending.  Cyclic complex Jacobi iteration;
// backward error below 1e-12 relative to the matrix norm for n <= 3.
EigenvalueVector hermitian_eigenvalues(const HermitianMatrix& H);

}  // namespace mhess
