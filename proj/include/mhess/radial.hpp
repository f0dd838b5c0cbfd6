#pragma once
// Radial reduction u = g(t), t = |z|^2: the complex Hessian of a radial
// function has eigenvalues (g' with multiplicity n-1, g' + t g''), so the
// normalized density is
//   radial_sigma_m(g',g'',t) = c_nm [ C(n-1,m) g'^m + C(n-1,m-1) g'^(m-1)(g'+t g'') ].
// The two-point boundary problem radial_sigma_m = f(t) on (0,R^2), g(R^2)
// given, g'(0) = f(0)^(1/m) (the density formula at t=0 collapses to g'(0)^m),
// is solved by damped Newton on the tridiagonal-coupled centered-difference
// system, with Gauss-Seidel bisection sweeps as a fallback.

#include <functional>
#include <vector>

#include "mhess/core_math.hpp"
#include "mhess/errors.hpp"

namespace mhess {

struct RadialProfile {
  double R = 1.0;          // outer radius (in |z|)
  std::vector<double> t;   // knots in [t_min, R^2], strictly ascending
  std::vector<double> g;   // values at the knots

  int size() const { return int(t.size()); }
  // three-point derivative estimates at interior knots i in [1, size-2]
  double gp(int i) const;
  double gpp(int i) const;
  double value_at(double tq) const;  // linear interpolation, clamped ends
  // g' >= 0 and (g', ..., g', g' + t g'') in closed Gamma_m at interior knots
  bool admissible(int n, int m, double eps = -1.0) const;
};

// the operator density of a radial function; exact, not discretized
double radial_sigma_m(double gp, double gpp, double t, int n, int m);

// eigenvalues (ascending) of the complex Hessian of g(|z|^2)
EigenvalueVector radial_eigenvalues(double gp, double gpp, double t, int n);

struct RadialSolveReport {
  int newton_iterations = 0;
  int fallback_sweeps = 0;
  double residual = 0.0;  // max |radial_sigma_m - f| over interior knots
};

// Solve radial_sigma_m(g',g'',t) = f(t) on [0, R^2] with g(R^2) = phi_R and
// g'(0) = f(0)^(1/m), on `knots` uniform knots.  f must be >= 0 and finite on
// [0, R^2].  Throws NumericalError when admissibility (g' >= 0, cone) cannot
// be restored, reporting the worst knot.
RadialProfile radial_solve(int n, int m, double R,
                           const std::function<double(double)>& f_radial,
                           double phi_R, int knots,
                           RadialSolveReport* report = nullptr);

}  // namespace mhess
