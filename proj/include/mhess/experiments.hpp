#pragma once
// Named experiment runner: a JSON config selects one of the experiment
// pipelines (solve, holder, capacity, stability, barriers, verify), runs the
// module stack, writes CSV/grid artifacts plus a deterministic summary.json
// into the output directory, and reports every asserted inequality as a
// Claim carrying the tolerance it was checked at.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mhess/capacity.hpp"
#include "mhess/solver.hpp"

namespace mhess {

struct FSpec {
  enum class Type { constant, radial_poly, boundary_singular };
  Type type = Type::constant;
  double c = 1.0;               // constant value
  std::vector<double> coeffs;   // radial_poly: sum coeffs[k] * (|z|^2)^k
  double nu = 0.4;              // boundary_singular: min(clamp, |rho|^(-m nu))
  double clamp = 1e6;
};

struct PhiSpec {
  enum class Type { constant, re_z1, abs_z1_sq, holder_kink };
  Type type = Type::constant;
  double c = 0.0;      // constant value
  double alpha = 0.5;  // holder_kink: |z - xi0|^alpha, xi0 the +x1 axis pole
};

struct ExperimentConfig {
  std::string experiment = "solve";
  std::string preset;  // informational echo; set by preset_config
  DomainSpec domain = DomainSpec::ball(2, 1.0);
  double h = 0.25;
  bool radial = false;  // 1-D radial pipeline (ball domains, constant phi)
  int knots = 200;      // radial resolution
  int m = 2;
  double p = 3.0, r = 1.0, nu = 0.0;   // exponent inputs
  FSpec f;
  PhiSpec phi;
  SolveConfig solver;
  std::vector<double> radii = {0.15, 0.2, 0.25, 0.3};      // capacity family
  std::vector<double> amplitudes = {0.1, 0.05, 0.025};     // stability family
  std::string out = "out";
  uint64_t seed = 1;

  void validate() const;
};

// fixed configurations for the named pipelines; throws ValidationError on an
// unknown name.  Available: holder_bounded_density, holder_singular_density,
// holder_envelope, stability_family.
ExperimentConfig preset_config(const std::string& name);

ExperimentConfig parse_config_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);  // canonical echo

struct Claim {
  std::string name;
  std::string relation;  // "<=", ">=", "=="
  double value = 0.0;
  double threshold = 0.0;
  double tolerance = 0.0;  // additive slack applied on top of the threshold
  bool pass = false;
};

Claim make_claim(const std::string& name, const std::string& relation,
                 double value, double threshold, double tolerance);

struct ExperimentResult {
  std::vector<Claim> claims;
  std::vector<std::string> artifacts;  // paths relative to the out directory
  bool pass = true;                    // every claim passed
};

// Runs the configured pipeline and writes <out>/summary.json plus artifacts.
// Reruns with the same config are byte-identical except the single-line
// "timestamps" field.  Throws ValidationError / NumericalError per module
// contracts; claim failures are reported, not thrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// point evaluators shared with the tests
std::function<double(const Point&)> make_phi(const PhiSpec& s,
                                             const DomainSpec& d);
std::function<double(const Point&)> make_f_point(const FSpec& s,
                                                 const DomainSpec& d, int m);
// radial density as a function of t = |z|^2 on a ball of radius R
std::function<double(double)> make_f_radial(const FSpec& s, double R, int m);

// full command-line front end (subcommands solve/holder/capacity/stability/
// barriers/verify; flags --config --out --preset --seed); returns the process
// exit code: 0 all claims pass, 1 claim or numerical failure, 2 validation
int run_cli(int argc, const char* const* argv);

}  // namespace mhess
