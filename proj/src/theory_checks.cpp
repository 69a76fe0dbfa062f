#include "schropt/theory_checks.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>

namespace schropt {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool nonnegative_on_quadrature(const Mesh& mesh, const ScalarFunction& g) {
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int a = 0; a < 3; ++a) {
      const Point& p = mesh.node(tri[a]);
      const Point& q = mesh.node(tri[(a + 1) % 3]);
      if (g({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)}) < 0.0) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<double> fd_gradient(const ProblemSpec& spec, const PotentialField& v,
                                std::span<const std::size_t> elements, double h,
                                SolverOptions options) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: h must be > 0");
  const Mesh& mesh = v.mesh();
  for (std::size_t t : elements) {
    if (t >= mesh.num_triangles()) throw std::invalid_argument("fd_gradient: bad element");
    if (!(v[t] - h > 0.0 && v[t] + h < v.vmax())) {
      std::ostringstream os;
      os << "fd_gradient: V_T +- h leaves (0, vmax) at element " << t << " (V_T = " << v[t]
         << ")";
      throw std::invalid_argument(os.str());
    }
  }
  const DiscreteProblem problem(spec, mesh, options);
  const SchrodingerSystem& system = problem.system();
  const auto& red = system.reduction();
  const auto rhs = red.restrict_vector(problem.load_f());
  const auto bg = red.restrict_vector(problem.load_g());
  const auto u0 = solve_spd(system.operator_matrix(v), rhs, options.tolerance);

  // I(V') = b_g . u' with u' = u0 + d and A(V') d = b_f - A(V') u0. Solving for
  // the correction keeps the solver error relative to d rather than to u0.
  std::vector<double> values(v.values().begin(), v.values().end());
  std::vector<double> residual(rhs.size());
  const auto shifted_cost = [&](std::size_t t, double value) {
    values[t] = value;
    const auto a = system.operator_matrix(PotentialField(mesh, values, v.vmax()));
    a.multiply(u0, residual);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = rhs[i] - residual[i];
    const auto d = solve_spd(a, residual, options.tolerance);
    return dot(bg, d);
  };

  std::vector<double> out;
  out.reserve(elements.size());
  for (std::size_t t : elements) {
    const double base = values[t];
    const double plus = shifted_cost(t, base + h);
    const double minus = shifted_cost(t, base - h);
    values[t] = base;
    out.push_back((plus - minus) / (2.0 * h));
  }
  return out;
}

GradientCheck check_gradient(const ProblemSpec& spec, const PotentialField& v,
                             std::span<const std::size_t> elements, double h,
                             SolverOptions options) {
  GradientCheck out;
  out.elements.assign(elements.begin(), elements.end());
  out.finite_difference = fd_gradient(spec, v, elements, h, options);

  const DiscreteProblem problem(spec, v.mesh(), options);
  const Resolvent r(problem.system(), v);
  const auto g = cost_gradient(v.mesh(), problem.state(r), problem.adjoint(r), options.lumping);
  for (std::size_t k = 0; k < elements.size(); ++k) {
    const double a = g[elements[k]];
    const double d = out.finite_difference[k];
    const double denom = std::max(std::abs(a), std::abs(d));
    const double rel = denom > 0.0 ? std::abs(a - d) / denom : 0.0;
    out.analytic.push_back(a);
    out.relative_error.push_back(rel);
    out.max_relative_error = std::max(out.max_relative_error, rel);
  }
  return out;
}

std::vector<std::size_t> sample_interior_elements(const Mesh& mesh, std::size_t count,
                                                  std::uint64_t seed) {
  std::vector<std::size_t> candidates;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    if (!mesh.is_boundary(tri[0]) && !mesh.is_boundary(tri[1]) && !mesh.is_boundary(tri[2])) {
      candidates.push_back(t);
    }
  }
  if (count > candidates.size()) {
    throw std::invalid_argument("sample_interior_elements: not enough interior triangles");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picked;
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(picked), count, rng);
  return picked;
}

SelfAdjointCheck check_self_adjoint(const Mesh& mesh, const PotentialField& v,
                                    const ScalarFunction& f, const ScalarFunction& g,
                                    SolverOptions options) {
  const SchrodingerSystem system(mesh, options);
  const Resolvent r(system, v);
  const auto bf = assemble_load(mesh, f);
  const auto bg = assemble_load(mesh, g);
  const auto rf = r.apply_load(bf);
  const auto rg = r.apply_load(bg);
  const double g_rf = dot(bg, rf.values());
  const double f_rg = dot(bf, rg.values());
  const double scale = std::sqrt(std::abs(dot(bf, rf.values())) * std::abs(dot(bg, rg.values())));
  return {std::abs(g_rf - f_rg), scale};
}

Lemma1Check check_lemma1(const Mesh& mesh, const PotentialField& v, const ScalarFunction& f,
                         const ScalarFunction& g, SolverOptions options) {
  const SchrodingerSystem system(mesh, options);
  const Resolvent r(system, v);
  const auto rf = r.apply(f);
  const auto rg = r.apply(g);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    best = std::max(best, rf.at_centroid(t) * rg.at_centroid(t));
  }
  return {best, rf.max_abs() * rg.max_abs()};
}

std::vector<double> check_monotone_at_optimum(const ProblemSpec& spec,
                                              const PotentialField& v_opt,
                                              std::span<const double> scales,
                                              SolverOptions options) {
  const Mesh& mesh = v_opt.mesh();
  const DiscreteProblem problem(spec, mesh, options);
  std::vector<double> costs;
  costs.reserve(scales.size());
  for (double s : scales) {
    if (!(s > 0.0 && s <= 1.0)) {
      throw std::invalid_argument("check_monotone_at_optimum: scales must lie in (0, 1]");
    }
    std::vector<double> scaled(v_opt.values().begin(), v_opt.values().end());
    for (double& x : scaled) x *= s;
    costs.push_back(problem.cost_at(PotentialField(mesh, std::move(scaled), v_opt.vmax())));
  }
  return costs;
}

namespace {

struct FirstOrderData {
  ScalarField u;
  ScalarField p;
  std::vector<double> density;
};

FirstOrderData first_order_data(const ProblemSpec& spec, const PotentialField& v,
                                SolverOptions options) {
  const Mesh& mesh = v.mesh();
  const DiscreteProblem problem(spec, mesh, options);
  const Resolvent r(problem.system(), v);
  auto u = problem.state(r);
  auto p = problem.adjoint(r);
  const auto g = cost_gradient(mesh, u, p, options.lumping);
  std::vector<double> density(mesh.num_triangles());
  for (std::size_t t = 0; t < density.size(); ++t) density[t] = g[t] / mesh.area(t);
  return {std::move(u), std::move(p), std::move(density)};
}

}  // namespace

OptimalityReport necessary_conditions(const ProblemSpec& spec, const PotentialField& v,
                                      double lambda, double bisection_tol,
                                      SolverOptions options) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("necessary_conditions: lambda must be >= 0");
  const Mesh& mesh = v.mesh();
  const auto data = first_order_data(spec, v, options);

  OptimalityReport report;
  report.lambda = lambda;
  report.constraint_slack = spec.m - volume(mesh, v, spec.psi);
  report.scale = data.u.max_abs() * data.p.max_abs();
  report.state_max_abs = data.u.max_abs();
  report.lemma1_max = -std::numeric_limits<double>::infinity();

  const double vmax = v.vmax();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double vt = v[t];
    const double r = data.density[t] + lambda * spec.psi.derivative(vt);
    if (vt > 0.0 && vt < vmax) {
      ++report.interior_elements;
      report.stationarity_residual_interior =
          std::max(report.stationarity_residual_interior, std::abs(r));
    } else if (vt == 0.0) {
      report.sign_violation_lower = std::max(report.sign_violation_lower, -r);
    } else {
      report.sign_violation_upper = std::max(report.sign_violation_upper, r);
    }
    // R(g) = -p.
    report.lemma1_max =
        std::max(report.lemma1_max, -data.p.at_centroid(t) * data.u.at_centroid(t));
  }

  report.unsaturated = report.constraint_slack > bisection_tol && lambda == 0.0 &&
                       nonnegative_on_quadrature(mesh, spec.g.eval);
  if (report.unsaturated) {
    report.state_max_on_free = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
      const double uc = data.u.at_centroid(t);
      if (v[t] >= 0.5 * vmax) {
        report.state_max_abs_high_v = std::max(report.state_max_abs_high_v, std::abs(uc));
      }
      if (v[t] == 0.0) report.state_max_on_free = std::max(report.state_max_on_free, uc);
    }
    if (!std::isfinite(report.state_max_on_free)) report.state_max_on_free = 0.0;
  }
  return report;
}

double estimate_multiplier(const ProblemSpec& spec, const PotentialField& v,
                           double bisection_tol, SolverOptions options) {
  const Mesh& mesh = v.mesh();
  if (spec.m - volume(mesh, v, spec.psi) > bisection_tol) return 0.0;
  const auto data = first_order_data(spec, v, options);

  double num = 0.0;
  double den = 0.0;
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double slope = -spec.psi.derivative(v[t]);  // > 0
    if (slope == 0.0) continue;
    const double ratio = data.density[t] / slope;
    if (v[t] > 0.0 && v[t] < v.vmax()) {
      num += data.density[t] * slope;
      den += slope * slope;
    } else if (v[t] == 0.0) {
      upper = std::min(upper, ratio);
    } else {
      lower = std::max(lower, ratio);
    }
  }
  if (den > 0.0) return std::max(0.0, num / den);
  if (!std::isfinite(upper)) return lower;
  return std::max(0.0, 0.5 * (lower + upper));
}

}  // namespace schropt
