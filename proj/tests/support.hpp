#pragma once

// Random data generators shared by the test binaries.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "schropt/optimize.hpp"

namespace schropt::test {

using Rng = std::mt19937_64;

inline std::vector<double> random_values(std::size_t n, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline PotentialField random_potential(const Mesh& mesh, double lo, double hi, double vmax,
                                       Rng& rng) {
  return PotentialField(mesh, random_values(mesh.num_triangles(), lo, hi, rng), vmax);
}

// c0 + sum_k a_k sin(pi (p_k x + q_k y) + phi_k) with a_k of either sign.
inline ScalarFunction random_smooth_function(Rng& rng, double offset = 0.0) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_real_distribution<double> freq(0.5, 3.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  struct Mode {
    double a, p, q, phi;
  };
  std::vector<Mode> modes;
  for (int k = 0; k < 3; ++k) modes.push_back({amp(rng), freq(rng), freq(rng), phase(rng)});
  return [modes, offset](Point x) {
    double s = offset;
    for (const auto& m : modes) {
      s += m.a * std::sin(std::numbers::pi * (m.p * x.x + m.q * x.y) + m.phi);
    }
    return s;
  };
}

// Sign-mixed on (0,1)^2: a smooth random part plus a linear ramp through zero.
inline ScalarFunction random_sign_mixed_function(Rng& rng) {
  auto smooth = random_smooth_function(rng);
  std::uniform_real_distribution<double> slope(1.0, 3.0);
  const double s = slope(rng);
  return [smooth, s](Point x) { return smooth(x) + s * (x.x - 0.5); };
}

inline ScalarFunction random_nonnegative_function(Rng& rng) {
  auto smooth = random_smooth_function(rng);
  std::uniform_real_distribution<double> base(0.0, 0.5);
  const double b = base(rng);
  return [smooth, b](Point x) {
    const double v = smooth(x);
    return b + v * v;
  };
}

inline ProblemSpec custom_problem(ScalarFunction f, ScalarFunction g, double m, double alpha,
                                  double vmax = 1e4) {
  ProblemSpec spec;
  spec.name = "custom";
  spec.domain = Rectangle{0.0, 1.0, 0.0, 1.0};
  spec.f = {std::move(f), "random"};
  spec.g = {std::move(g), "random"};
  spec.psi = PsiFamily::exponential(alpha);
  spec.m = m;
  spec.vmax = vmax;
  spec.validate();
  return spec;
}

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Truncated double sine series of int u for -Lap u = 1 on the unit square
// (odd m, n <= nmax).
inline double poisson_unit_square_mean(int nmax) {
  const double pi6 = std::pow(std::numbers::pi, 6);
  double s = 0.0;
  for (int m = 1; m <= nmax; m += 2) {
    for (int n = 1; n <= nmax; n += 2) {
      const double mm = m * m;
      const double nn = n * n;
      s += 64.0 / (pi6 * mm * nn * (mm + nn));
    }
  }
  return s;
}

}  // namespace schropt::test
