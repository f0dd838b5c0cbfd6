#include <cmath>

#include "doctest.h"
#include "mhess/radial.hpp"

using namespace mhess;

TEST_CASE("radial density of the model quadratic is one") {
  // g(t) = t, so g' = 1, g'' = 0, eigenvalues all one
  for (int n = 1; n <= 3; ++n)
    for (int m = 1; m <= n; ++m)
      CHECK(radial_sigma_m(1.0, 0.0, 0.3, n, m) == doctest::Approx(1.0));
}

TEST_CASE("radial eigenvalues split into transverse and radial parts") {
  // g' = 2, g'' = 5, t = 0.4: eigenvalues (2, ..., 2, 2 + 0.4*5 = 4)
  auto ev = radial_eigenvalues(2.0, 5.0, 0.4, 3);
  CHECK(ev[0] == doctest::Approx(2.0));
  CHECK(ev[1] == doctest::Approx(2.0));
  CHECK(ev[2] == doctest::Approx(4.0));
  // concave-in-t case: radial eigenvalue drops below the transverse one
  auto ec = radial_eigenvalues(2.0, -1.0, 0.4, 2);
  CHECK(ec[0] == doctest::Approx(1.6));
  CHECK(ec[1] == doctest::Approx(2.0));
}

TEST_CASE("radial density formula matches the eigenvalue definition") {
  for (int n = 2; n <= 3; ++n)
    for (int m = 1; m <= n; ++m) {
      double gp = 1.3, gpp = -0.4, t = 0.5;
      auto ev = radial_eigenvalues(gp, gpp, t, n);
      double sig = elementary_symmetric(ev.span(), m);
      CHECK(radial_sigma_m(gp, gpp, t, n, m) ==
            doctest::Approx(hessian_normalization(n, m) * sig));
    }
}

TEST_CASE("constant density one reproduces the linear profile exactly") {
  for (auto [n, m] : {std::pair<int, int>{2, 1}, {2, 2}, {3, 2}, {3, 3}}) {
    RadialSolveReport rep;
    RadialProfile g = radial_solve(n, m, 1.0, [](double) { return 1.0; }, 0.0,
                                   120, &rep);
    CHECK(rep.residual <= 1e-8);
    double err = 0.0;
    for (int i = 0; i < g.size(); ++i)
      err = std::max(err, std::fabs(g.g[size_t(i)] - (g.t[size_t(i)] - 1.0)));
    CHECK(err <= 1e-6);
    CHECK(g.admissible(n, m));
  }
}

TEST_CASE("quartic regression: density (20/3) t^2 gives g = t^2") {
  RadialSolveReport rep;
  RadialProfile g = radial_solve(
      3, 2, 1.0, [](double t) { return 20.0 / 3.0 * t * t; }, 1.0, 200, &rep);
  double err = 0.0;
  for (int i = 0; i < g.size(); ++i)
    err = std::max(err, std::fabs(g.g[size_t(i)] - g.t[size_t(i)] * g.t[size_t(i)]));
  CHECK(err <= 5e-3);
  CHECK(g.admissible(3, 2));
}

TEST_CASE("solutions are monotone with the stated boundary value") {
  RadialProfile g = radial_solve(3, 2, 1.5,
                                 [](double t) { return 1.0 + t; }, 2.0, 150);
  CHECK(g.g.back() == doctest::Approx(2.0));
  for (int i = 1; i < g.size(); ++i) CHECK(g.g[size_t(i)] >= g.g[size_t(i) - 1] - 1e-12);
  CHECK(g.admissible(3, 2));
}

TEST_CASE("profile interpolation clamps the ends") {
  RadialProfile g;
  g.R = 1.0;
  g.t = {0.0, 0.5, 1.0};
  g.g = {-1.0, -0.5, 0.0};
  CHECK(g.value_at(0.25) == doctest::Approx(-0.75));
  CHECK(g.value_at(-1.0) == doctest::Approx(-1.0));
  CHECK(g.value_at(2.0) == doctest::Approx(0.0));
}

TEST_CASE("reruns are bit-identical") {
  auto f = [](double t) { return 0.5 + 2.0 * t; };
  RadialProfile a = radial_solve(3, 2, 1.0, f, 0.0, 100);
  RadialProfile b = radial_solve(3, 2, 1.0, f, 0.0, 100);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) CHECK(a.g[size_t(i)] == b.g[size_t(i)]);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS(radial_solve(3, 4, 1.0, [](double) { return 1.0; }, 0.0, 100));
  CHECK_THROWS(radial_solve(0, 1, 1.0, [](double) { return 1.0; }, 0.0, 100));
  CHECK_THROWS(radial_solve(2, 1, -1.0, [](double) { return 1.0; }, 0.0, 100));
  CHECK_THROWS(radial_solve(2, 1, 1.0, [](double) { return 1.0; }, 0.0, 2));
}
