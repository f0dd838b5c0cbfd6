#include <cmath>

#include "doctest.h"
#include "mhess/regularity.hpp"
#include "mhess/solver.hpp"

using namespace mhess;

namespace {

GridFunction squared_norm(std::shared_ptr<const LatticeDomain> dom) {
  return sample_function(dom, [&](const Point& z) {
    double t = 0.0;
    for (int i = 0; i < 2 * dom->n; ++i) t += z[size_t(i)] * z[size_t(i)];
    return t;
  });
}

}  // namespace

TEST_CASE("stability exponent closed forms") {
  CHECK(gamma_r(ExponentInputs::make(3, 2, 3, 1)) == doctest::Approx(1.0 / 7.0));
  CHECK(gamma_r(ExponentInputs::make(3, 2, 3, 2)) == doctest::Approx(0.25));
  CHECK(gamma_r(ExponentInputs::make(4, 2, 4, 2)) == doctest::Approx(0.2));
}

TEST_CASE("stability exponent grows with the moment order and stays below one") {
  double prev = 0.0;
  for (double r : {1.0, 2.0, 4.0, 8.0, 64.0}) {
    double g = gamma_r(ExponentInputs::make(3, 2, 3, r));
    CHECK(g > prev);
    CHECK(g < 1.0);
    prev = g;
  }
  // r = 2 never doubles the r = 1 exponent
  double g1 = gamma_r(ExponentInputs::make(3, 2, 3, 1));
  double g2 = gamma_r(ExponentInputs::make(3, 2, 3, 2));
  CHECK(g2 < 2.0 * g1);
}

TEST_CASE("predicted exponents cover the four data/moment cases") {
  ExponentInputs in = ExponentInputs::make(3, 2, 3, 2, 0.1);
  double g1 = gamma_r(ExponentInputs::make(3, 2, 3, 1, 0.1));
  double g2 = gamma_r(in);
  CHECK(predicted_exponent(in, PredictionCase::smooth_data_r1) ==
        doctest::Approx(2.0 * g1));
  CHECK(predicted_exponent(in, PredictionCase::smooth_data_r2) ==
        doctest::Approx(g2));
  CHECK(predicted_exponent(in, PredictionCase::holder_data_r2) ==
        doctest::Approx(std::min(0.1, g2)));
  CHECK(predicted_exponent(in, PredictionCase::holder_data_r1) ==
        doctest::Approx(std::min(0.1, 2.0 * g1)));
  auto all = predicted_exponents(in);
  CHECK(all.size() == 4);
}

TEST_CASE("exponent inputs validation") {
  CHECK_THROWS_AS(ExponentInputs::make(2, 1, 1.5, 1), ValidationError);  // p <= n/m
  CHECK_THROWS_AS(ExponentInputs::make(2, 1, 3, 0.5), ValidationError);  // r < 1
  CHECK_THROWS_AS(ExponentInputs::make(2, 1, 3, 1, 0.6), ValidationError);
  CHECK_THROWS_AS(ExponentInputs::make(2, 3, 3, 1), ValidationError);  // m > n
  CHECK_NOTHROW(ExponentInputs::make(4, 2, 4, 2));  // exponent arithmetic only
}

TEST_CASE("shrunken-domain node sets respect the distance bound") {
  auto dom = make_domain(DomainSpec::ball(2, 1.0), 0.0625);
  for (double delta : {0.125, 0.25}) {
    auto nodes = omega_delta_nodes(*dom, delta);
    CHECK(nodes.size() > 0);
    for (int64_t p : nodes) CHECK(dom->conservative_dist(p) > delta);
  }
  CHECK_THROWS_AS(omega_delta_nodes(*dom, 10.0), ValidationError);
}

TEST_CASE("default delta ladder stays inside its stated window") {
  auto dom = make_domain(DomainSpec::ball(2, 1.0), 0.0625);
  auto ladder = default_delta_ladder(*dom);
  CHECK(ladder.size() >= 4);
  for (size_t i = 0; i < ladder.size(); ++i) {
    CHECK(ladder[i] >= 2.0 * dom->h - 1e-12);
    CHECK(ladder[i] <= 0.25 * dom->inradius() + 1e-12);
    if (i > 0) CHECK(ladder[i] > ladder[i - 1]);
  }
}

TEST_CASE("regularization identities on the model functions") {
  // coarse lattice: the lattice-ball sup has a first-order directional
  // quantization deficit for radial functions, so the h^2-level identity is
  // checked at the resolution where it holds with margin
  const double h = 0.125, delta = 0.25;
  auto dom = make_domain(DomainSpec::ball(2, 1.0), h);
  auto nodes = omega_delta_nodes(*dom, delta);

  GridFunction c = sample_function(dom, [](const Point&) { return 3.5; });
  GridFunction uc = sup_convolution(c, delta);
  GridFunction ac = ball_average(c, delta);
  for (int64_t p : nodes) {
    CHECK(uc[p] == doctest::Approx(3.5));
    CHECK(ac[p] == doctest::Approx(3.5));
  }

  GridFunction lin = sample_function(dom, [](const Point& z) { return z[0]; });
  GridFunction ul = sup_convolution(lin, delta);
  GridFunction al = ball_average(lin, delta);
  for (int64_t p : nodes) {
    Point z = dom->coords(p);
    CHECK(std::fabs(ul[p] - (z[0] + delta)) <= 10.0 * h * h);
    CHECK(std::fabs(al[p] - z[0]) <= 10.0 * h * h);
  }

  GridFunction q = squared_norm(dom);
  GridFunction uq = sup_convolution(q, delta);
  GridFunction aq = ball_average(q, delta);
  const double d = 2.0 * dom->n;  // real dimension
  for (int64_t p : nodes) {
    double r = std::sqrt(q[p]);
    CHECK(std::fabs(uq[p] - (r + delta) * (r + delta)) <= 10.0 * h * h);
    CHECK(std::fabs(aq[p] - (q[p] + d / (d + 2.0) * delta * delta)) <=
          10.0 * h * h);
  }
}

TEST_CASE("averages never exceed sup-convolutions") {
  auto dom = make_domain(DomainSpec::ball(2, 1.0), 0.0625);
  GridFunction q = squared_norm(dom);
  GridFunction lin = sample_function(
      dom, [](const Point& z) { return z[0] - 0.3 * z[3]; });
  for (double delta : default_delta_ladder(*dom)) {
    for (const GridFunction* u : {&q, &lin}) {
      GridFunction up = sup_convolution(*u, delta);
      GridFunction av = ball_average(*u, delta);
      for (int64_t p : omega_delta_nodes(*dom, delta))
        CHECK(av[p] <= up[p] + 1e-12);
    }
  }
}

TEST_CASE("sup-convolution grows with the radius") {
  auto dom = make_domain(DomainSpec::ball(2, 1.0), 0.0625);
  GridFunction q = squared_norm(dom);
  GridFunction u1 = sup_convolution(q, 0.125);
  GridFunction u2 = sup_convolution(q, 0.25);
  for (int64_t p : omega_delta_nodes(*dom, 0.25)) CHECK(u1[p] <= u2[p] + 1e-12);
}

TEST_CASE("delta below the two-cell floor is rejected") {
  auto dom = make_domain(DomainSpec::ball(2, 1.0), 0.125);
  GridFunction q = squared_norm(dom);
  CHECK_THROWS_AS(sup_convolution(q, 0.1), ValidationError);
  CHECK_THROWS_AS(ball_average(q, 0.1), ValidationError);
}

TEST_CASE("holder fit recovers the exponent of a half-Holder radial profile") {
  // u = |z|^(1/2): g(t) = t^(1/4) in t = |z|^2
  RadialProfile g;
  g.R = 1.0;
  const int N = 800;
  for (int i = 0; i < N; ++i) {
    double t = double(i) / (N - 1);
    g.t.push_back(t);
    g.g.push_back(std::pow(t, 0.25));
  }
  HolderReport rep = radial_holder_fit(
      3, 1.0, g, {1.0 / 32, 1.0 / 20, 1.0 / 12, 1.0 / 8, 1.0 / 5});
  CHECK(rep.fitted_alpha == doctest::Approx(0.5).epsilon(0.12));
  CHECK(rep.r2 >= 0.99);
  // averaged gaps are weaker, so their fitted rate is at least as large
  CHECK(rep.fitted_alpha_avg >= rep.fitted_alpha - 0.05);
  for (size_t i = 0; i < rep.deltas.size(); ++i) {
    CHECK(rep.sup_maxdiff[i] >= rep.sup_avgdiff[i] - 1e-12);
    CHECK(rep.sup_maxdiff[i] <=
          rep.A1 * std::pow(rep.deltas[i], rep.fitted_alpha) * (1.0 + 1e-9));
  }
}

TEST_CASE("grid holder fit on a Lipschitz cone caps at one") {
  auto dom = make_domain(DomainSpec::ball(2, 1.0), 0.0625);
  GridFunction cone = sample_function(dom, [](const Point& z) {
    double t = 0.0;
    for (int i = 0; i < 4; ++i) t += z[size_t(i)] * z[size_t(i)];
    return std::sqrt(t);
  });
  HolderReport rep = holder_fit(cone, default_delta_ladder(*dom));
  CHECK(rep.fitted_alpha <= 1.0);
  CHECK(rep.fitted_alpha >= 0.8);
  CHECK(rep.A1 > 0.0);
}

TEST_CASE("integrated growth of the squared norm is quadratic in delta") {
  auto dom = make_domain(DomainSpec::ball(2, 1.0), 0.0625);
  GridFunction q = squared_norm(dom);
  GrowthSlopes gs = integrated_growth_check(q, default_delta_ladder(*dom));
  CHECK(gs.slope_L2 == doctest::Approx(2.0).epsilon(0.15));
  CHECK_FALSE(gs.skipped_L1);
  CHECK(gs.c_L2 > 0.0);
}

TEST_CASE("grid holder norm peaks at exponent one for a Lipschitz function") {
  auto dom = make_domain(DomainSpec::ball(2, 1.0), 0.125);
  GridFunction q = squared_norm(dom);
  // |z|^2 has its worst difference quotients at small separations, where
  // |dz|^a >= |dz| for a < 1 shrinks the quotient; pairs beyond unit
  // separation cannot compete because the range of q is only [0, 1]
  CHECK(grid_holder_norm(q, 1.0) >= grid_holder_norm(q, 0.5) - 1e-9);
  CHECK(grid_holder_norm(q, 0.5) > 0.0);
}

TEST_CASE("sobolev diagnostics reproduce exact quadrature identities") {
  auto dom = make_domain(DomainSpec::ball(2, 1.0), 0.0625);
  const double cell = std::pow(dom->h, 4.0);

  // quadratic: discrete Laplacian is exactly 8 at every interior node
  GridFunction q = squared_norm(dom);
  auto [grad_q, mass_q] = sobolev_diagnostics(q);
  CHECK(mass_q ==
        doctest::Approx(8.0 * cell * double(dom->interior.size())).epsilon(1e-9));
  CHECK(grad_q > 0.0);

  // linear: central and one-sided differences are both exact, so each node
  // with at least one axis-0 neighbor contributes exactly c^2; nodes with no
  // neighbor along that axis contribute nothing
  GridFunction lin = sample_function(dom, [](const Point& z) { return 3.0 * z[0]; });
  int64_t contributing = 0;
  for (int64_t p = 0; p < dom->total(); ++p) {
    if (!dom->in_closure(p)) continue;
    std::array<int, 2 * kMaxN> idx{};
    dom->unflatten(p, idx);
    const bool up = idx[0] + 1 < dom->dims[0] && dom->in_closure(p + dom->stride[0]);
    const bool dn = idx[0] - 1 >= 0 && dom->in_closure(p - dom->stride[0]);
    if (up || dn) ++contributing;
  }
  auto [grad_l, mass_l] = sobolev_diagnostics(lin);
  CHECK(grad_l == doctest::Approx(9.0 * cell * double(contributing)).epsilon(1e-9));
  CHECK(mass_l == doctest::Approx(0.0).epsilon(1e-9));
}
