#pragma once

// Independent oracles and a-posteriori optimality diagnostics.

#include <cstdint>
#include <span>
#include <vector>

#include "schropt/optimize.hpp"

namespace schropt {

// Central differences of the discrete cost in V_T. Every element needs two
// fresh state solves; the default tolerance is far below the optimizer's so
// solver error does not pollute the quotient.
std::vector<double> fd_gradient(const ProblemSpec& spec, const PotentialField& v,
                                std::span<const std::size_t> elements, double h,
                                SolverOptions options = {1e-14, MassLumping::lumped});

struct GradientCheck {
  std::vector<std::size_t> elements;
  std::vector<double> analytic;
  std::vector<double> finite_difference;
  // |G_T - FD_T| / max(|G_T|, |FD_T|), zero when both vanish.
  std::vector<double> relative_error;
  double max_relative_error = 0.0;
};

// Compares cost_gradient against fd_gradient on the given elements.
GradientCheck check_gradient(const ProblemSpec& spec, const PotentialField& v,
                             std::span<const std::size_t> elements, double h,
                             SolverOptions options = {1e-14, MassLumping::lumped});

// `count` distinct triangles without boundary nodes, drawn with a seeded
// generator, in ascending order.
std::vector<std::size_t> sample_interior_elements(const Mesh& mesh, std::size_t count,
                                                  std::uint64_t seed);

struct SelfAdjointCheck {
  double discrepancy;  // |int g R(f) - int f R(g)|
  double scale;        // sqrt(int f R(f) * int g R(g)), bounds both terms
  double relative() const { return scale > 0.0 ? discrepancy / scale : discrepancy; }
};

SelfAdjointCheck check_self_adjoint(const Mesh& mesh, const PotentialField& v,
                                    const ScalarFunction& f, const ScalarFunction& g,
                                    SolverOptions options = {});

struct Lemma1Check {
  double max_product;  // max over centroids of R(g) * R(f)
  double scale;        // ||R(f)||_inf * ||R(g)||_inf
  double relative() const { return scale > 0.0 ? max_product / scale : max_product; }
};

Lemma1Check check_lemma1(const Mesh& mesh, const PotentialField& v, const ScalarFunction& f,
                         const ScalarFunction& g, SolverOptions options = {});

// Costs at s * V_opt for each scale s in (0, 1].
std::vector<double> check_monotone_at_optimum(const ProblemSpec& spec,
                                              const PotentialField& v_opt,
                                              std::span<const double> scales,
                                              SolverOptions options = {});

// Residuals of the first-order conditions of min I(V) + lambda*int Psi(V) over
// the box [0, vmax], measured in gradient density d_T = G_T/|T|:
//   0 < V_T < vmax:  d_T + lambda Psi'(V_T) = 0
//   V_T = 0:         d_T + lambda Psi'(V_T) >= 0
//   V_T = vmax:      d_T + lambda Psi'(V_T) <= 0
// Every raw residual is reported next to `scale` = ||u||_inf ||p||_inf.
struct OptimalityReport {
  double stationarity_residual_interior = 0.0;
  double sign_violation_lower = 0.0;
  double sign_violation_upper = 0.0;
  double lemma1_max = 0.0;
  double constraint_slack = 0.0;
  double lambda = 0.0;
  double scale = 0.0;
  std::size_t interior_elements = 0;
  // Unsaturated case with g >= 0 and lambda = 0: max |u| on {V >= vmax/2} and
  // max u on {V = 0}, centroid values.
  bool unsaturated = false;
  double state_max_abs_high_v = 0.0;
  double state_max_on_free = 0.0;
  double state_max_abs = 0.0;

  double relative(double value) const { return scale > 0.0 ? value / scale : value; }
};

OptimalityReport necessary_conditions(const ProblemSpec& spec, const PotentialField& v,
                                      double lambda, double bisection_tol,
                                      SolverOptions options = {});

// Multiplier consistent with the first-order conditions at V when none was
// recorded: 0 if the constraint has slack, otherwise a least-squares fit on
// interior elements, or the midpoint of the interval allowed by the bound
// elements.
double estimate_multiplier(const ProblemSpec& spec, const PotentialField& v,
                           double bisection_tol, SolverOptions options = {});

}  // namespace schropt
