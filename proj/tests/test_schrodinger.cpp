#include <cmath>

#include "doctest.h"
#include "schropt/optimize.hpp"
#include "support.hpp"

using namespace schropt;

namespace {

const Rectangle kUnit{0.0, 1.0, 0.0, 1.0};
const ScalarFunction kOne = [](Point) { return 1.0; };
const ScalarFunction kZero = [](Point) { return 0.0; };

}  // namespace

TEST_SUITE("schrodinger") {

TEST_CASE("fields validate their input") {
  const Mesh mesh(3, 3, kUnit);
  std::vector<double> u(mesh.num_nodes(), 0.0);
  u[0] = 1.0;  // node 0 is a corner
  CHECK_THROWS_AS(ScalarField(mesh, u), std::invalid_argument);
  CHECK_THROWS_AS(ScalarField(mesh, std::vector<double>(3, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(PotentialField::uniform(mesh, -1.0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(PotentialField::uniform(mesh, 11.0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(PotentialField::uniform(mesh, std::nan(""), 10.0), std::invalid_argument);
  CHECK_NOTHROW(PotentialField::uniform(mesh, 10.0, 10.0));
}

TEST_CASE("state: zero data gives zero state") {
  const Mesh mesh(8, 8, kUnit);
  const auto v = PotentialField::uniform(mesh, 3.0, 1e4);
  const auto u = solve_state(mesh, v, kZero);
  CHECK(u.max_abs() == 0.0);
  CHECK(solve_adjoint(mesh, v, kZero).max_abs() == 0.0);
}

TEST_CASE("state: large potential gives a tiny state") {
  const Mesh mesh(32, 32, kUnit);
  const auto v = PotentialField::uniform(mesh, 1e4, 1e4);
  const auto u = solve_state(mesh, v, kOne);
  // Constant supersolution f/V = 1e-4.
  CHECK(u.max() <= 1.1e-4);
  CHECK(u.min() >= -1e-12);
}

TEST_CASE("state and adjoint are linked by linearity") {
  test::Rng rng(21);
  const Mesh mesh(16, 16, kUnit);
  const auto v = test::random_potential(mesh, 0.0, 100.0, 1e4, rng);
  const auto g = test::random_smooth_function(rng);
  const auto p = solve_adjoint(mesh, v, g, {1e-12});
  const auto u = solve_state(mesh, v, g, {1e-12});
  double worst = 0.0;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) worst = std::max(worst, std::abs(p[i] + u[i]));
  CHECK(worst <= 1e-9 * u.max_abs());
}

TEST_CASE("resolvent is linear") {
  test::Rng rng(22);
  const Mesh mesh(16, 12, kUnit);
  const auto v = test::random_potential(mesh, 0.0, 50.0, 1e4, rng);
  const auto f = test::random_smooth_function(rng);
  const auto g = test::random_smooth_function(rng);
  const double a = 1.7;
  const double b = -0.4;
  const SchrodingerSystem system(mesh, {1e-12});
  const Resolvent r(system, v);
  const auto rf = r.apply(f);
  const auto rg = r.apply(g);
  const auto rfg = r.apply([&](Point x) { return a * f(x) + b * g(x); });
  const double scale = std::max(rf.max_abs(), rg.max_abs());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    CHECK(std::abs(rfg[i] - (a * rf[i] + b * rg[i])) <= 1e-9 * scale);
  }
}

TEST_CASE("maximum principle with lumped mass") {
  test::Rng rng(23);
  const Mesh mesh(20, 20, kUnit);
  for (int trial = 0; trial < 10; ++trial) {
    const auto v = test::random_potential(mesh, 0.0, 1e4, 1e4, rng);
    const auto f = test::random_nonnegative_function(rng);
    CHECK(solve_state(mesh, v, f).min() >= -1e-12);
    CHECK(solve_adjoint(mesh, v, f).max() <= 1e-12);
  }
}

TEST_CASE("cost") {
  const Mesh mesh(8, 8, kUnit);
  CHECK(cost(mesh, kOne, ScalarField::zeros(mesh)) == 0.0);
}

TEST_CASE("cost quadrature integrates a constant nodal field exactly") {
  // Boundary values are part of the quadrature even though ScalarField pins
  // them to zero, so go through integrate_product directly.
  const Mesh mesh(5, 9, Rectangle{0.0, 2.0, 0.0, 0.5});
  const std::vector<double> ones(mesh.num_nodes(), 1.0);
  CHECK(integrate_product(mesh, [](Point) { return 1.0; }, ones) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("Poisson cost matches the Fourier series") {
  const Mesh mesh(128, 128, kUnit);
  const auto v = PotentialField::uniform(mesh, 0.0, 1e4);
  const auto u = solve_state(mesh, v, kOne);
  const double oracle = test::poisson_unit_square_mean(99);
  CHECK(oracle == doctest::Approx(3.51e-2).epsilon(0.01));
  CHECK(cost(mesh, kOne, u) == doctest::Approx(oracle).epsilon(0.01));
}

TEST_CASE("penalized cost") {
  test::Rng rng(24);
  const Mesh mesh(10, 10, kUnit);
  const auto psi = PsiFamily::exponential(0.09);
  const auto v = test::random_potential(mesh, 0.0, 20.0, 1e4, rng);
  const auto u = solve_state(mesh, v, kOne);
  CHECK(penalized_cost(mesh, kOne, u, v, 0.0, psi) == cost(mesh, kOne, u));

  const auto zero_v = PotentialField::uniform(mesh, 0.0, 1e4);
  CHECK(penalized_cost(mesh, kOne, ScalarField::zeros(mesh), zero_v, 1.0, psi) ==
        doctest::Approx(1.0).epsilon(1e-14));

  const double l1 = 0.3;
  const double l2 = 1.25;
  const double diff =
      penalized_cost(mesh, kOne, u, v, l1 + l2, psi) - penalized_cost(mesh, kOne, u, v, l1, psi);
  CHECK(diff == doctest::Approx(l2 * volume(mesh, v, psi)).epsilon(1e-12));
  CHECK_THROWS_AS(penalized_cost(mesh, kOne, u, v, -1.0, psi), std::invalid_argument);
}

TEST_CASE("monotone in the potential for signed-definite data") {
  test::Rng rng(25);
  const Mesh mesh(16, 16, kUnit);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = test::random_nonnegative_function(rng);
    const auto g = test::random_nonnegative_function(rng);
    const auto v1 = test::random_values(mesh.num_triangles(), 0.0, 500.0, rng);
    auto v2 = v1;
    const auto bump = test::random_values(mesh.num_triangles(), 0.0, 500.0, rng);
    for (std::size_t t = 0; t < v2.size(); ++t) v2[t] += bump[t];
    const double c1 = cost(mesh, g, solve_state(mesh, PotentialField(mesh, v1, 1e4), f));
    const double c2 = cost(mesh, g, solve_state(mesh, PotentialField(mesh, v2, 1e4), f));
    CHECK(c1 >= c2 - 1e-10);
  }
}

TEST_CASE("trivial solution beats the empty potential for positive data") {
  const Mesh mesh(16, 16, kUnit);
  const double at_zero = cost(mesh, kOne, solve_state(mesh, PotentialField::uniform(mesh, 0.0, 1e4), kOne));
  const double at_max = cost(mesh, kOne, solve_state(mesh, PotentialField::uniform(mesh, 1e4, 1e4), kOne));
  CHECK(std::abs(at_max) < std::abs(at_zero));
}

TEST_CASE("consistent mass also solves") {
  test::Rng rng(26);
  const Mesh mesh(12, 12, kUnit);
  const auto v = test::random_potential(mesh, 0.0, 100.0, 1e4, rng);
  const auto ul = solve_state(mesh, v, kOne, {1e-12, MassLumping::lumped});
  const auto uc = solve_state(mesh, v, kOne, {1e-12, MassLumping::consistent});
  // Different discretizations of the same operator: close, not equal.
  CHECK(cost(mesh, kOne, uc) == doctest::Approx(cost(mesh, kOne, ul)).epsilon(0.05));
  CHECK(cost(mesh, kOne, uc) != cost(mesh, kOne, ul));
}

}  // TEST_SUITE
