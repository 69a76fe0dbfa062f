#pragma once

// Adjoint gradient, multiplier-based volume projection, backtracking line
// search and the outer descent loop.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "schropt/fem.hpp"
#include "schropt/problems.hpp"
#include "schropt/schrodinger.hpp"

namespace schropt {

// One finite value per triangle.
class ElementField {
 public:
  ElementField(const Mesh& mesh, std::vector<double> values);
  static ElementField zeros(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t t) const { return values_[t]; }
  std::size_t size() const { return values_.size(); }
  bool all_zero() const;
  // sqrt(sum_T (value_T / |T|)^2 |T|): L2 norm of the per-unit-area density.
  double density_l2_norm() const;

 private:
  const Mesh* mesh_;
  std::vector<double> values_;
};

class MultiplierFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Initialization { uniform, random };

struct OptimizerConfig {
  int max_iters = 2000;
  // Relative cost decrease below which an iteration counts as stagnant; ten
  // stagnant iterations in a row end the run.
  double cost_tolerance = 1e-7;
  double armijo_c = 1e-4;
  double eta0 = 1e12;
  double eta_shrink = 0.5;
  double bisection_tol = 1e-9;
  double vmax = 1e4;
  bool lumped = true;
  double solver_tolerance = 1e-10;
  Initialization init = Initialization::uniform;
  std::uint64_t seed = 0;

  void validate() const;
  MassLumping lumping() const { return lumped ? MassLumping::lumped : MassLumping::consistent; }
};

struct IterationRecord {
  int iter = 0;
  double cost = 0.0;
  double volume = 0.0;
  double lambda = 0.0;
  double eta = 0.0;
  double grad_norm = 0.0;
};

// A ProblemSpec bound to a mesh, with the load vectors of f and g cached.
class DiscreteProblem {
 public:
  DiscreteProblem(const ProblemSpec& spec, const Mesh& mesh, SolverOptions options = {});

  const ProblemSpec& spec() const { return *spec_; }
  const Mesh& mesh() const { return system_.mesh(); }
  const SchrodingerSystem& system() const { return system_; }
  std::span<const double> load_f() const { return load_f_; }
  std::span<const double> load_g() const { return load_g_; }

  ScalarField state(const Resolvent& r, const ScalarField* guess = nullptr) const;
  ScalarField adjoint(const Resolvent& r, const ScalarField* guess = nullptr) const;
  // Integral of g*u; identical to cost(mesh, g, u).
  double cost_of(const ScalarField& u) const;
  double cost_at(const PotentialField& v) const;

 private:
  const ProblemSpec* spec_;
  SchrodingerSystem system_;
  std::vector<double> load_f_;
  std::vector<double> neg_load_g_;
  std::vector<double> load_g_;
};

// G_T = u^T (dM_V / dV_T) p, the exact derivative of the discrete cost with
// respect to the potential on triangle T.
ElementField cost_gradient(const Mesh& mesh, const ScalarField& u, const ScalarField& p,
                           MassLumping lumping = MassLumping::lumped);

double volume(const Mesh& mesh, const PotentialField& v, const PsiFamily& psi);
// |{T : V_T < vmax/2}|, the thresholded occupied area.
double low_potential_area(const PotentialField& v);
ElementField volume_gradient(const Mesh& mesh, const PotentialField& v, const PsiFamily& psi);

struct MultiplierUpdate {
  PotentialField potential;
  double lambda;
};

// clamp(V - eta*(G/|T| + lambda*Psi'(V)), 0, vmax) with the smallest lambda >= 0
// that brings the volume to m (within bisection_tol).
MultiplierUpdate update_with_multiplier(const PotentialField& v, const ElementField& gradient,
                                        double eta, const PsiFamily& psi, double m,
                                        const OptimizerConfig& cfg);

struct LineSearchResult {
  PotentialField potential;
  ScalarField state;
  double eta = 0.0;
  double lambda = 0.0;
  double cost = 0.0;
  bool stalled = false;
};

inline constexpr int kMaxBacktracks = 40;

// Backtracking from eta_start. Accepts the first trial with
// I_new < I and I_new <= I - c * sum_T G_T (V_T - V_new,T).
LineSearchResult line_search(const DiscreteProblem& problem, const PotentialField& v,
                             const ScalarField& u, double current_cost,
                             const ElementField& gradient, const OptimizerConfig& cfg,
                             std::optional<double> eta_start = std::nullopt);

enum class StopReason { converged, stalled, max_iters, zero_gradient };
std::string to_string(StopReason reason);

struct RunResult {
  PotentialField potential;
  ScalarField state;
  ScalarField adjoint;
  ElementField gradient;
  double lambda = 0.0;
  std::vector<IterationRecord> history;
  StopReason reason = StopReason::max_iters;
};

PotentialField initial_potential(const Mesh& mesh, const ProblemSpec& spec,
                                 const OptimizerConfig& cfg);

RunResult run(const ProblemSpec& spec, const OptimizerConfig& cfg, const PotentialField& v0);

}  // namespace schropt
