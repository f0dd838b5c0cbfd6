#pragma once
// Regularization operators and Holder-exponent diagnostics: sup-convolutions
// u_delta(z) = sup_{|zeta| <= delta} u(z + zeta), ball averages, log-log
// exponent fits on a delta-ladder over the shrunken domains
// Omega_delta = {dist > delta}, Sobolev quadratures, and the predicted
// exponents gamma_r = r / (r + m q + p q (n-m)/(p - n/m)).

#include <string>
#include <utility>
#include <vector>

#include "mhess/grid.hpp"
#include "mhess/radial.hpp"

namespace mhess {

// in-closure nodes with conservative_dist > delta (empty -> ValidationError)
std::vector<int64_t> omega_delta_nodes(const LatticeDomain& dom, double delta);

// {4h, 6h, 9h, 13h, 20h} clipped to [2h, inradius/4]; falls back to four
// geometric points on [2h, inradius/4] when fewer than four survive
std::vector<double> default_delta_ladder(const LatticeDomain& dom);

// max of u over lattice nodes in the closed delta-ball around each
// Omega_delta node, plus linearly interpolated ball crossings along the axes;
// NaN outside Omega_delta
GridFunction sup_convolution(const GridFunction& u, double delta);

// mean of u over lattice nodes in the closed delta-ball (midpoint cells);
// NaN outside Omega_delta
GridFunction ball_average(const GridFunction& u, double delta);

struct HolderReport {
  std::vector<double> deltas;
  std::vector<double> sup_maxdiff;  // sup over Omega_delta of u_delta - u
  std::vector<double> sup_avgdiff;  // same for the ball average
  double fitted_alpha = 0.0;        // log-log slope of sup_maxdiff, capped at 1
  double fitted_alpha_avg = 0.0;    // slope of sup_avgdiff, capped at 1
  double r2 = 0.0;                  // regression quality of the max-based fit
  double A1 = 0.0;                  // sup_maxdiff <= A1 delta^alpha constant
  double A2 = 0.0;                  // sup_avgdiff constant
  double grad_energy = 0.0;
  double laplacian_mass = 0.0;
  std::vector<std::pair<std::string, double>> predicted;
};

// least-squares exponent fit; drops deltas with gap < 1e-12, needs >= 3 left
HolderReport holder_fit(const GridFunction& u, const std::vector<double>& deltas);

// CSV rows `delta,sup_maxdiff,sup_avgdiff`
void write_holder_csv(const std::string& path, const HolderReport& rep);

// (sum |grad_h u|^2 h^{2n} over in-closure nodes with lenient differences,
//  sum lap_h u h^{2n} over interior nodes)
std::pair<double, double> sobolev_diagnostics(const GridFunction& u);

struct ExponentInputs {
  int n = 2, m = 2;
  double p = 3.0;   // density integrability order, > n/m
  double q = 1.5;   // conjugate p/(p-1)
  double r = 1.0;   // moment order, >= 1
  double nu = 0.0;  // boundary-data Holder order, in [0, 1/2)

  static ExponentInputs make(int n, int m, double p, double r, double nu = 0.0);
  void validate() const;
};

double gamma_r(const ExponentInputs& in);

enum class PredictionCase {
  smooth_data_r1,  // 2 gamma_1
  smooth_data_r2,  // gamma_2
  holder_data_r2,  // min(nu, gamma_2)
  holder_data_r1,  // min(nu, 2 gamma_1)
};

double predicted_exponent(const ExponentInputs& in, PredictionCase c);

// all four predictions keyed by case name, for report serialization
std::vector<std::pair<std::string, double>> predicted_exponents(
    const ExponentInputs& in);

struct GrowthSlopes {
  double slope_L2 = 0.0;  // of the volume-normalized mean (u_delta - u)^2
  double slope_L1 = 0.0;  // of the volume-normalized mean (avg_delta - u)
  double c_L2 = 0.0;      // empirical constant against grad_energy delta^2
  double c_L1 = 0.0;
  bool skipped_L1 = false;  // all averaged gaps below 1e-12 (harmonic case)
};

// slopes of log mean-integral gaps against log delta; the means are taken
// over Omega_delta so the shrinking-volume factor does not contaminate them
GrowthSlopes integrated_growth_check(const GridFunction& u,
                                     const std::vector<double>& deltas);

// Holder norm of a grid function at exponent `order`: sup + sampled
// pairwise difference quotients over in-closure nodes
double grid_holder_norm(const GridFunction& u, double order);

struct CollarReport {
  std::vector<double> deltas;
  std::vector<double> ratios;  // max over the Omega_delta rim of (u_delta-u)/delta^nu
  double c0 = 0.0;             // 2 |h_env|_nu + |b_composite|_nu, measured
  bool ok = false;             // every ratio <= 2 c0
};

// growth of u_delta - u on the inner rim of Omega_delta against c0 delta^nu;
// requires the minorant b_composite <= u nodewise (ValidationError otherwise)
CollarReport boundary_collar_check(const GridFunction& u,
                                   const GridFunction& h_env,
                                   const GridFunction& b_composite,
                                   const std::vector<double>& deltas, double nu);

// Radial fast path on ball(R): u(z) = g(|z|^2) with g nondecreasing, so the
// sup-convolution is g((r+delta)^2) and the ball average reduces to a 2-D
// quadrature in (axial shift, transverse radius).
HolderReport radial_holder_fit(int n, double R, const RadialProfile& g,
                               const std::vector<double>& deltas,
                               int r_samples = 1500);

}  // namespace mhess
