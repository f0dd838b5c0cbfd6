#pragma once
// m-capacity of lattice-representable compacts via relative extremal
// functions: the largest m-subharmonic v <= 0 with v <= -1 on E, capacity as
// the Hessian-measure mass of the extremal on E plus a one-cell collar,
// volume-capacity ratio checks, sublevel-set capacity inequalities, the
// iteration extinction bound s_inf = 2 B g(0)^a / (1 - 2^-a), and stability
// ratios sup(psi - phi) / |(psi - phi)+|_r^gamma.

#include "mhess/regularity.hpp"
#include "mhess/solver.hpp"

namespace mhess {

struct CompactSet {
  std::shared_ptr<const LatticeDomain> dom;
  std::vector<char> mask;       // one flag per lattice node
  std::vector<int64_t> nodes;   // flat indices, ascending

  static CompactSet empty(std::shared_ptr<const LatticeDomain> dom);
  static CompactSet from_predicate(std::shared_ptr<const LatticeDomain> dom,
                                   const std::function<bool(const Point&)>& pred);
  static CompactSet closed_ball(std::shared_ptr<const LatticeDomain> dom,
                                const Point& center, double r);

  bool contains(int64_t f) const { return mask[size_t(f)] != 0; }
  // every node strictly interior with conservative_dist > 2h
  void validate(bool allow_empty = true) const;
};

// Largest grid function with v <= 0, v <= -1 on E, boundary-adjacent nodes
// pinned to 0, and the discrete cone condition off the contact set.  Obstacle
// variant of the Dirichlet sweeps with zero density: each interior update
// takes min(cone-exit value, obstacle).
GridFunction relative_extremal(const CompactSet& E, int m, const SolveConfig& cfg,
                               SolveReport* report = nullptr);

struct CapacityEstimate {
  double value = 0.0;         // extremal mass on E plus a one-cell collar
  double lower_bound = 0.0;   // best admissible competitor, integrated on E only
  GridFunction extremal;
};

CapacityEstimate capacity_m(const CompactSet& E, int m, const SolveConfig& cfg);

struct VolumeCapacityReport {
  std::vector<double> radii, volumes, capacities, ratios;  // ratio = V / cap^tau
  double tau = 0.0;
  double tau_fit = 0.0;    // slope of log V against log cap
  bool fit_done = false;   // needs at least two radii
  bool ratios_bounded = false;  // max/min <= 10
};

// E_r = closed origin-centered balls; tau_override <= 0 picks
// 0.9 n/(n-m), or 2 when m = n (the admissible range is then unbounded)
VolumeCapacityReport volume_capacity_check(std::shared_ptr<const LatticeDomain> dom,
                                           int m, const std::vector<double>& radii,
                                           const SolveConfig& cfg,
                                           double tau_override = -1.0);

void write_volume_capacity_csv(const std::string& path,
                               const VolumeCapacityReport& rep);

struct SublevelReport {
  double s = 0.0, t = 0.0;
  double lhs = 0.0;   // t^m cap_m({phi - psi < -s - t})
  double rhs = 0.0;   // integral of f over {phi - psi < -s}
  int64_t count_tight = 0, count_wide = 0;  // node counts of the two sets
};

// requires phi >= psi on boundary-adjacent nodes (ValidationError otherwise)
SublevelReport sublevel_capacity_check(const GridFunction& phi,
                                       const GridFunction& psi,
                                       const GridFunction& f, int m, double s,
                                       double t, const SolveConfig& cfg);

// 2 B g0^alpha / (1 - 2^-alpha); alpha <= 0 -> ValidationError
double s_infinity(double B, double g0, double alpha);

// smallest B with t g(s+t) <= B g(s)^(1+alpha) across all sample pairs
double certify_iteration_constant(
    const std::vector<std::pair<double, double>>& g_samples, double alpha);

struct IterationBoundReport {
  double B = 0.0, alpha = 0.0, s_inf = 0.0;
  bool hypothesis_ok = false;  // t g(s+t) <= B g(s)^(1+alpha) on sample pairs
  bool bound_ok = false;       // g <= 1e-9 at every sampled s >= s_inf
  double worst_excess = 0.0;   // max hypothesis violation
};

IterationBoundReport iteration_bound_check(
    const std::vector<std::pair<double, double>>& g_samples, double B,
    double alpha);

struct StabilityReport {
  double sup_diff = 0.0;  // max(psi - phi), clamped at 0
  double norm_r = 0.0;    // (sum (psi-phi)+^r h^{2n})^{1/r}
  double gamma = 0.0;     // safety * gamma_r(inputs)
  double ratio = 0.0;     // sup_diff / norm_r^gamma, 0 when both vanish
};

StabilityReport stability_ratio(const GridFunction& phi, const GridFunction& psi,
                                const ExponentInputs& inputs, double safety);

// rows `epsilon,sup_diff,norm_r,ratio`
void write_stability_csv(const std::string& path,
                         const std::vector<double>& epsilons,
                         const std::vector<StabilityReport>& rows);

// Analytic capacity of closed_ball(r) inside ball(R) for 1 <= m < n: the
// radial extremal is max(-1, -(t^(-q/2) - R^-q)/(r^-q - R^-q)), t = |z|^2,
// q = 2n/m - 2, and all of its Hessian mass sits on the sphere |z| = r.
double radial_capacity_oracle(int n, int m, double r, double R);

// the radial extremal profile value at radius `rad` (m = n uses the log form)
double radial_extremal_profile(int n, int m, double r, double R, double rad);

}  // namespace mhess
