#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mhess/experiments.hpp"

using namespace mhess;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// the summary is byte-identical across reruns except the timestamps line
std::string strip_timestamps(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.find("\"timestamps\"") == std::string::npos) out += line + "\n";
  return out;
}

}  // namespace

TEST_CASE("claim relations carry their additive tolerance") {
  CHECK(make_claim("a", "<=", 1.0, 1.0, 0.0).pass);
  CHECK(make_claim("a", "<=", 1.05, 1.0, 0.1).pass);
  CHECK_FALSE(make_claim("a", "<=", 1.2, 1.0, 0.1).pass);
  CHECK(make_claim("b", ">=", 0.95, 1.0, 0.1).pass);
  CHECK_FALSE(make_claim("b", ">=", 0.85, 1.0, 0.1).pass);
  CHECK(make_claim("c", "==", 1.0 + 1e-12, 1.0, 1e-9).pass);
  CHECK_FALSE(make_claim("c", "==", 1.1, 1.0, 1e-9).pass);
  CHECK_THROWS_AS(make_claim("d", "<", 0.0, 0.0, 0.0), ValidationError);
}

TEST_CASE("presets are valid and named") {
  for (const char* name : {"holder_bounded_density", "holder_singular_density",
                           "holder_envelope", "stability_family",
                           "capacity_family"}) {
    ExperimentConfig cfg = preset_config(name);
    CHECK(cfg.preset == name);
    CHECK_NOTHROW(cfg.validate());
  }
  CHECK_THROWS_AS(preset_config("nonexistent"), ValidationError);
}

TEST_CASE("config validation rejects inconsistent requests") {
  ExperimentConfig cfg;
  cfg.experiment = "solve";
  CHECK_NOTHROW(cfg.validate());

  ExperimentConfig bad = cfg;
  bad.experiment = "unknown";
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.h = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.m = 3;  // exceeds n = 2
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.radial = true;
  bad.phi.type = PhiSpec::Type::re_z1;  // radial needs constant data
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.f.type = FSpec::Type::boundary_singular;
  bad.f.nu = 0.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.experiment = "capacity";
  bad.radii = {0.2, -0.1};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.experiment = "stability";
  bad.amplitudes.clear();
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.solver.damping = 1.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("config json round trip is byte stable") {
  ExperimentConfig cfg = preset_config("stability_family");
  std::string one = config_to_json(cfg);
  ExperimentConfig back = parse_config_json(one);
  std::string two = config_to_json(back);
  CHECK(one == two);
  CHECK(back.experiment == cfg.experiment);
  CHECK(back.h == cfg.h);
  CHECK(back.m == cfg.m);
  CHECK(back.amplitudes == cfg.amplitudes);
}

TEST_CASE("json parsing merges over defaults and rejects unknown keys") {
  ExperimentConfig cfg = parse_config_json(
      R"({"experiment": "holder", "h": 0.2, "m": 1,
          "f": {"type": "radial_poly", "coeffs": [1.0, 2.0]}})");
  CHECK(cfg.experiment == "holder");
  CHECK(cfg.h == 0.2);
  CHECK(cfg.m == 1);
  CHECK(cfg.f.type == FSpec::Type::radial_poly);
  CHECK((cfg.f.coeffs == std::vector<double>{1.0, 2.0}));
  // untouched fields keep their defaults
  CHECK(cfg.domain.kind == DomainKind::ball);
  CHECK(cfg.solver.tol == 1e-8);

  CHECK_THROWS_AS(parse_config_json(R"({"experimnt": "solve"})"), ValidationError);
  CHECK_THROWS_AS(parse_config_json(R"({"f": {"typ": "constant"}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_config_json(R"({"phi": {"bad": 1}})"), ValidationError);
  CHECK_THROWS_AS(parse_config_json(R"({"solver": {"bad": 1}})"), ValidationError);
  CHECK_THROWS_AS(parse_config_json(R"({"domain": {"bad": 1}})"), ValidationError);
  CHECK_THROWS_AS(parse_config_json(R"({"f": {"type": "no_such"}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_config_json("not json at all"), ValidationError);
}

TEST_CASE("point evaluators implement the declared families") {
  DomainSpec d = DomainSpec::ball(2, 1.0);

  PhiSpec pk;
  pk.type = PhiSpec::Type::holder_kink;
  pk.alpha = 0.5;
  auto phi = make_phi(pk, d);
  Point pole{};
  pole[0] = 1.0;  // +x1 axis pole for the unit ball
  CHECK(phi(pole) == doctest::Approx(0.0).epsilon(1e-12));
  Point z{};
  z[0] = 0.5;
  CHECK(phi(z) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

  PhiSpec pq;
  pq.type = PhiSpec::Type::abs_z1_sq;
  auto phi2 = make_phi(pq, d);
  Point w{};
  w[0] = 0.3;
  w[1] = 0.4;
  w[2] = 0.9;  // |z1|^2 ignores the second coordinate
  CHECK(phi2(w) == doctest::Approx(0.25).epsilon(1e-12));

  FSpec fs;
  fs.type = FSpec::Type::boundary_singular;
  fs.nu = 0.4;
  fs.clamp = 10.0;
  auto f = make_f_point(fs, d, 2);
  Point near_b{};
  near_b[0] = 0.9999;  // |rho| tiny: the clamp engages
  CHECK(f(near_b) == doctest::Approx(10.0).epsilon(1e-12));
  Point mid{};
  mid[0] = 0.5;  // |rho| = 0.75: |rho|^(-m nu) = 0.75^(-0.8)
  CHECK(f(mid) == doctest::Approx(std::pow(0.75, -0.8)).epsilon(1e-12));

  FSpec fp;
  fp.type = FSpec::Type::radial_poly;
  fp.coeffs = {2.0, 0.0, 3.0};  // 2 + 3 t^2
  auto fr = make_f_radial(fp, 1.0, 2);
  CHECK(fr(0.5) == doctest::Approx(2.0 + 3.0 * 0.25).epsilon(1e-12));
}

TEST_CASE("verify experiment reruns byte-identically") {
  ExperimentConfig cfg;
  cfg.experiment = "verify";
  cfg.out = "/tmp/mhess_test_verify";
  std::filesystem::remove_all(cfg.out);
  ExperimentResult res = run_experiment(cfg);
  CHECK(res.pass);
  CHECK(res.claims.size() >= 8);
  for (const Claim& c : res.claims) CHECK(c.pass);
  std::string first = slurp(cfg.out + "/summary.json");
  ExperimentResult res2 = run_experiment(cfg);
  CHECK(res2.pass);
  std::string second = slurp(cfg.out + "/summary.json");
  CHECK(strip_timestamps(first) == strip_timestamps(second));
  CHECK(first.find("\"timestamps\"") != std::string::npos);
}

TEST_CASE("solve experiment on the exact quadratic emits passing claims") {
  ExperimentConfig cfg;
  cfg.experiment = "solve";
  cfg.domain = DomainSpec::ball(2, 1.0);
  cfg.h = 0.25;
  cfg.m = 2;
  cfg.f.type = FSpec::Type::constant;
  cfg.f.c = 1.0;
  cfg.phi.type = PhiSpec::Type::constant;
  cfg.phi.c = 0.0;
  cfg.out = "/tmp/mhess_test_solve";
  std::filesystem::remove_all(cfg.out);
  ExperimentResult res = run_experiment(cfg);
  CHECK(res.pass);
  bool has_exact = false;
  for (const Claim& c : res.claims)
    if (c.name.find("exact_quadratic") != std::string::npos) {
      has_exact = true;
      CHECK(c.pass);
    }
  CHECK(has_exact);
  CHECK(std::filesystem::exists(cfg.out + "/summary.json"));
  CHECK(std::filesystem::exists(cfg.out + "/solution.grid"));

  // the radial pipeline reproduces g(t) = t - 1 for the same data
  ExperimentConfig rad = cfg;
  rad.radial = true;
  rad.knots = 120;
  rad.out = "/tmp/mhess_test_solve_radial";
  std::filesystem::remove_all(rad.out);
  ExperimentResult rres = run_experiment(rad);
  CHECK(rres.pass);
  CHECK(std::filesystem::exists(rad.out + "/radial_profile.csv"));
}

TEST_CASE("cli exit codes distinguish validation, failure, and success") {
  {
    const char* argv[] = {"mhess", "solve", "--config", "/nonexistent.json"};
    CHECK(run_cli(4, argv) == 2);
  }
  {
    // malformed config: unknown key
    std::string path = "/tmp/mhess_test_badkey.json";
    std::ofstream(path) << R"({"experimnt": "solve"})";
    const char* argv[] = {"mhess", "solve", "--config", path.c_str()};
    CHECK(run_cli(4, argv) == 2);
  }
  {
    // starving the solver of sweeps raises a numerical failure
    std::string path = "/tmp/mhess_test_starved.json";
    std::ofstream(path) << R"({"experiment": "solve", "h": 0.25,
        "solver": {"max_sweeps": 1, "coarse_start": false}})";
    const char* argv[] = {"mhess", "solve", "--config", path.c_str(),
                          "--out",  "/tmp/mhess_test_starved_out"};
    CHECK(run_cli(6, argv) == 1);
  }
  {
    const char* argv[] = {"mhess", "verify", "--out", "/tmp/mhess_test_cli_verify"};
    std::filesystem::remove_all("/tmp/mhess_test_cli_verify");
    CHECK(run_cli(4, argv) == 0);
  }
  {
    // the subcommand takes precedence over the config's experiment field
    std::string path = "/tmp/mhess_test_override.json";
    std::ofstream(path) << R"({"experiment": "capacity", "h": 0.25})";
    const char* argv[] = {"mhess", "solve", "--config", path.c_str(),
                          "--out",  "/tmp/mhess_test_override_out"};
    std::filesystem::remove_all("/tmp/mhess_test_override_out");
    CHECK(run_cli(6, argv) == 0);
    std::string summary = slurp("/tmp/mhess_test_override_out/summary.json");
    CHECK(summary.find("\"experiment\": \"solve\"") != std::string::npos);
  }
}
