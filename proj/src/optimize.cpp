#include "schropt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace schropt {

ElementField::ElementField(const Mesh& mesh, std::vector<double> values)
    : mesh_(&mesh), values_(std::move(values)) {
  if (values_.size() != mesh.num_triangles()) {
    throw std::invalid_argument("element field: one value per triangle required");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("element field: non-finite entry");
  }
}

ElementField ElementField::zeros(const Mesh& mesh) {
  return ElementField(mesh, std::vector<double>(mesh.num_triangles(), 0.0));
}

bool ElementField::all_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

double ElementField::density_l2_norm() const {
  double s = 0.0;
  for (std::size_t t = 0; t < values_.size(); ++t) {
    s += values_[t] * values_[t] / mesh_->area(t);
  }
  return std::sqrt(s);
}

void OptimizerConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("optimizer: " + what); };
  if (max_iters < 0) fail("max_iters must be >= 0");
  if (!(cost_tolerance > 0.0)) fail("cost_tolerance must be > 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) fail("armijo_c must lie in (0, 1)");
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) fail("eta0 must be > 0");
  if (!(eta_shrink > 0.0 && eta_shrink < 1.0)) fail("eta_shrink must lie in (0, 1)");
  if (!(bisection_tol > 0.0)) fail("bisection_tol must be > 0");
  if (!(vmax > 0.0) || !std::isfinite(vmax)) fail("vmax must be > 0");
  if (!(solver_tolerance > 0.0 && solver_tolerance < 1.0)) fail("solver_tolerance must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// DiscreteProblem

DiscreteProblem::DiscreteProblem(const ProblemSpec& spec, const Mesh& mesh,
                                 SolverOptions options)
    : spec_(&spec),
      system_(mesh, options),
      load_f_(assemble_load(mesh, spec.f.eval)),
      load_g_(assemble_load(mesh, spec.g.eval)) {
  neg_load_g_.resize(load_g_.size());
  std::transform(load_g_.begin(), load_g_.end(), neg_load_g_.begin(),
                 [](double b) { return -b; });
}

ScalarField DiscreteProblem::state(const Resolvent& r, const ScalarField* guess) const {
  return r.apply_load(load_f_, guess);
}

ScalarField DiscreteProblem::adjoint(const Resolvent& r, const ScalarField* guess) const {
  return r.apply_load(neg_load_g_, guess);
}

double DiscreteProblem::cost_of(const ScalarField& u) const {
  if (&u.mesh() != &mesh()) throw std::invalid_argument("cost: state lives on another mesh");
  double s = 0.0;
  const auto values = u.values();
  for (std::size_t i = 0; i < values.size(); ++i) s += load_g_[i] * values[i];
  return s;
}

double DiscreteProblem::cost_at(const PotentialField& v) const {
  return cost_of(state(Resolvent(system_, v)));
}

// ---------------------------------------------------------------------------
// Gradients and volume

ElementField cost_gradient(const Mesh& mesh, const ScalarField& u, const ScalarField& p,
                           MassLumping lumping) {
  if (&u.mesh() != &mesh || &p.mesh() != &mesh) {
    throw std::invalid_argument("cost gradient: fields live on another mesh");
  }
  std::vector<double> g(mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    double diag = 0.0;
    double su = 0.0;
    double sp = 0.0;
    for (std::size_t a : tri) {
      diag += u[a] * p[a];
      su += u[a];
      sp += p[a];
    }
    const double area = mesh.area(t);
    g[t] = lumping == MassLumping::lumped ? area / 3.0 * diag : area / 12.0 * (diag + su * sp);
  }
  return ElementField(mesh, std::move(g));
}

double volume(const Mesh& mesh, const PotentialField& v, const PsiFamily& psi) {
  if (&v.mesh() != &mesh) throw std::invalid_argument("volume: potential on another mesh");
  double s = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) s += psi.value(v[t]) * mesh.area(t);
  return s;
}

double low_potential_area(const PotentialField& v) {
  const Mesh& mesh = v.mesh();
  double s = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    if (v[t] < 0.5 * v.vmax()) s += mesh.area(t);
  }
  return s;
}

ElementField volume_gradient(const Mesh& mesh, const PotentialField& v, const PsiFamily& psi) {
  if (&v.mesh() != &mesh) throw std::invalid_argument("volume: potential on another mesh");
  std::vector<double> g(mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    g[t] = psi.derivative(v[t]) * mesh.area(t);
  }
  return ElementField(mesh, std::move(g));
}

// ---------------------------------------------------------------------------
// Multiplier projection

namespace {

class ProjectedStep {
 public:
  ProjectedStep(const PotentialField& v, const ElementField& gradient, double eta,
                const PsiFamily& psi)
      : mesh_(&v.mesh()), v_(v), psi_(psi), eta_(eta) {
    const std::size_t n = v.size();
    density_.resize(n);
    slope_.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      density_[t] = gradient[t] / mesh_->area(t);
      slope_[t] = psi.derivative(v[t]);
    }
  }

  std::vector<double> candidate(double lambda) const {
    std::vector<double> out(v_.size());
    const double vmax = v_.vmax();
    for (std::size_t t = 0; t < out.size(); ++t) {
      const double moved = v_[t] - eta_ * (density_[t] + lambda * slope_[t]);
      out[t] = std::clamp(moved, 0.0, vmax);
    }
    return out;
  }

  double volume_of(const std::vector<double>& values) const {
    double s = 0.0;
    for (std::size_t t = 0; t < values.size(); ++t) {
      s += psi_.value(values[t]) * mesh_->area(t);
    }
    return s;
  }

  double initial_bracket() const {
    double scale = 0.0;
    for (std::size_t t = 0; t < slope_.size(); ++t) {
      if (slope_[t] != 0.0) {
        scale = std::max(scale, (std::abs(density_[t]) + v_.vmax() / eta_) /
                                    std::abs(slope_[t]));
      }
    }
    // Start far below the guaranteed bound so bisection stays short.
    scale *= 1e-6;
    return std::isfinite(scale) && scale > 0.0 ? scale : 1.0;
  }

 private:
  const Mesh* mesh_;
  const PotentialField& v_;
  const PsiFamily& psi_;
  double eta_;
  std::vector<double> density_;
  std::vector<double> slope_;
};

}  // namespace

MultiplierUpdate update_with_multiplier(const PotentialField& v, const ElementField& gradient,
                                        double eta, const PsiFamily& psi, double m,
                                        const OptimizerConfig& cfg) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("multiplier update: eta must be positive and finite");
  }
  if (&gradient.mesh() != &v.mesh()) {
    throw std::invalid_argument("multiplier update: gradient on another mesh");
  }
  const Mesh& mesh = v.mesh();
  const ProjectedStep step(v, gradient, eta, psi);

  auto unconstrained = step.candidate(0.0);
  if (step.volume_of(unconstrained) <= m) {
    return {PotentialField(mesh, std::move(unconstrained), v.vmax()), 0.0};
  }

  double lo = 0.0;
  double hi = step.initial_bracket();
  auto cand = step.candidate(hi);
  double vol = step.volume_of(cand);
  int doublings = 0;
  while (vol > m + cfg.bisection_tol) {
    if (++doublings > 60) {
      std::ostringstream os;
      os << "multiplier update: no bracket after 60 doublings (lambda = " << hi
         << ", volume = " << vol << ", m = " << m << ")";
      throw MultiplierFailure(os.str());
    }
    lo = hi;
    hi *= 2.0;
    cand = step.candidate(hi);
    vol = step.volume_of(cand);
  }

  // volume(lambda) is continuous and non-increasing; shrink [lo, hi] until the
  // volume at hi is within tolerance of m.
  for (int it = 0; it < 400 && std::abs(vol - m) > cfg.bisection_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    auto mid_cand = step.candidate(mid);
    const double mid_vol = step.volume_of(mid_cand);
    if (mid_vol > m + cfg.bisection_tol) {
      lo = mid;
    } else {
      hi = mid;
      cand = std::move(mid_cand);
      vol = mid_vol;
    }
  }
  return {PotentialField(mesh, std::move(cand), v.vmax()), hi};
}

// ---------------------------------------------------------------------------
// Line search

LineSearchResult line_search(const DiscreteProblem& problem, const PotentialField& v,
                             const ScalarField& u, double current_cost,
                             const ElementField& gradient, const OptimizerConfig& cfg,
                             std::optional<double> eta_start) {
  const ProblemSpec& spec = problem.spec();
  double eta = eta_start.value_or(cfg.eta0);
  for (int k = 0; k <= kMaxBacktracks; ++k, eta *= cfg.eta_shrink) {
    std::optional<MultiplierUpdate> update;
    try {
      update.emplace(update_with_multiplier(v, gradient, eta, spec.psi, spec.m, cfg));
    } catch (const MultiplierFailure&) {
      continue;
    }
    const auto new_values = update->potential.values();
    double predicted = 0.0;
    bool moved = false;
    for (std::size_t t = 0; t < new_values.size(); ++t) {
      predicted += gradient[t] * (v[t] - new_values[t]);
      moved = moved || new_values[t] != v[t];
    }
    if (!moved) continue;

    const Resolvent resolvent(problem.system(), update->potential);
    ScalarField trial_state = problem.state(resolvent, &u);
    const double trial_cost = problem.cost_of(trial_state);
    if (trial_cost < current_cost && trial_cost <= current_cost - cfg.armijo_c * predicted) {
      return {std::move(update->potential), std::move(trial_state), eta, update->lambda,
              trial_cost, false};
    }
  }
  return {v, u, 0.0, 0.0, current_cost, true};
}

// ---------------------------------------------------------------------------
// Outer loop

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::converged:
      return "converged";
    case StopReason::stalled:
      return "stalled";
    case StopReason::max_iters:
      return "max_iters";
    case StopReason::zero_gradient:
      return "zero_gradient";
  }
  return "unknown";
}

PotentialField initial_potential(const Mesh& mesh, const ProblemSpec& spec,
                                 const OptimizerConfig& cfg) {
  const double vmax = cfg.vmax;
  if (cfg.init == Initialization::random) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(0.0, vmax);
    std::vector<double> values(mesh.num_triangles());
    for (double& v : values) v = dist(rng);
    return PotentialField(mesh, std::move(values), vmax);
  }
  const double fraction = spec.m / mesh.domain().area();
  double level = 0.0;
  if (!(spec.psi.defined_at(0.0) && fraction >= spec.psi.value(0.0))) {
    level = std::clamp(spec.psi.inverse(fraction), 0.0, vmax);
  }
  return PotentialField::uniform(mesh, level, vmax);
}

namespace {

template <typename Fn>
auto at_iteration(int iter, Fn&& fn) {
  try {
    return fn();
  } catch (const SolverFailure& e) {
    std::ostringstream os;
    os << "iteration " << iter << ": " << e.what();
    throw SolverFailure(os.str(), e.residual(), e.iterations());
  } catch (const MultiplierFailure& e) {
    std::ostringstream os;
    os << "iteration " << iter << ": " << e.what();
    throw MultiplierFailure(os.str());
  }
}

}  // namespace

RunResult run(const ProblemSpec& spec, const OptimizerConfig& cfg, const PotentialField& v0) {
  cfg.validate();
  if (cfg.vmax != spec.vmax || v0.vmax() != spec.vmax) {
    throw std::invalid_argument("run: vmax differs between problem, config and V0");
  }
  const Mesh& mesh = v0.mesh();
  const DiscreteProblem problem(spec, mesh, {cfg.solver_tolerance, cfg.lumping()});

  PotentialField v = v0;
  double lambda = 0.0;
  if (volume(mesh, v, spec.psi) > spec.m + cfg.bisection_tol) {
    // Raise V until feasible: a zero-gradient step moves only along -Psi'.
    auto projected = at_iteration(0, [&] {
      return update_with_multiplier(v, ElementField::zeros(mesh), 1.0, spec.psi, spec.m, cfg);
    });
    v = std::move(projected.potential);
    lambda = projected.lambda;
  }

  ScalarField u = at_iteration(0, [&] { return problem.state(Resolvent(problem.system(), v)); });
  double current = problem.cost_of(u);
  std::vector<IterationRecord> history;
  history.push_back({0, current, volume(mesh, v, spec.psi), lambda, 0.0, 0.0});

  ScalarField p = ScalarField::zeros(mesh);
  ElementField gradient = ElementField::zeros(mesh);
  StopReason reason = StopReason::max_iters;
  double eta_start = cfg.eta0;
  int stagnant = 0;

  for (int k = 1;; ++k) {
    p = at_iteration(k, [&] { return problem.adjoint(Resolvent(problem.system(), v), &p); });
    gradient = cost_gradient(mesh, u, p, cfg.lumping());
    history.back().grad_norm = gradient.density_l2_norm();

    if (gradient.all_zero()) {
      reason = StopReason::zero_gradient;
      break;
    }
    if (k > cfg.max_iters) {
      reason = StopReason::max_iters;
      break;
    }

    auto step = at_iteration(k, [&] {
      return line_search(problem, v, u, current, gradient, cfg, eta_start);
    });
    if (step.stalled) {
      reason = StopReason::stalled;
      break;
    }

    const double previous = current;
    v = std::move(step.potential);
    u = std::move(step.state);
    current = step.cost;
    lambda = step.lambda;
    history.push_back({k, current, volume(mesh, v, spec.psi), lambda, step.eta, 0.0});
    // Next search starts one expansion above the accepted step, capped at eta0.
    eta_start = std::min(cfg.eta0, step.eta / cfg.eta_shrink);

    const double decrease = (previous - current) / std::max(std::abs(previous), 1e-300);
    stagnant = decrease < cfg.cost_tolerance ? stagnant + 1 : 0;
    if (stagnant >= 10) {
      p = at_iteration(k, [&] { return problem.adjoint(Resolvent(problem.system(), v), &p); });
      gradient = cost_gradient(mesh, u, p, cfg.lumping());
      history.back().grad_norm = gradient.density_l2_norm();
      reason = StopReason::converged;
      break;
    }
  }

  return {std::move(v), std::move(u), std::move(p), std::move(gradient), lambda,
          std::move(history), reason};
}

}  // namespace schropt
