#pragma once

// Discrete resolvent R_V of -Laplace + V with homogeneous Dirichlet data,
// state/adjoint solves and the cost functional.

#include <span>
#include <vector>

#include "schropt/fem.hpp"
#include "schropt/problems.hpp"

namespace schropt {

// Nodal P1 field; boundary entries are exactly zero.
class ScalarField {
 public:
  ScalarField(const Mesh& mesh, std::vector<double> values);
  static ScalarField zeros(const Mesh& mesh);

  const Mesh& mesh() const { return *mesh_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  double max_abs() const;
  double min() const;
  double max() const;
  // Value of the P1 interpolant at the centroid of triangle t.
  double at_centroid(std::size_t t) const;

 private:
  const Mesh* mesh_;
  std::vector<double> values_;
};

// Piecewise-constant potential, one value per triangle, in [0, vmax].
class PotentialField {
 public:
  PotentialField(const Mesh& mesh, std::vector<double> values, double vmax);
  static PotentialField uniform(const Mesh& mesh, double value, double vmax);

  const Mesh& mesh() const { return *mesh_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t t) const { return values_[t]; }
  std::size_t size() const { return values_.size(); }
  double vmax() const { return vmax_; }

 private:
  const Mesh* mesh_;
  std::vector<double> values_;
  double vmax_;
};

struct SolverOptions {
  double tolerance = 1e-10;
  MassLumping lumping = MassLumping::lumped;
};

// Mesh-level data shared by every solve on that mesh: the reduced stiffness
// matrix and the Dirichlet elimination map.
class SchrodingerSystem {
 public:
  explicit SchrodingerSystem(const Mesh& mesh, SolverOptions options = {});

  const Mesh& mesh() const { return *mesh_; }
  const SolverOptions& options() const { return options_; }
  const DirichletReduction& reduction() const { return reduction_; }
  const SparseSymmetricMatrix& reduced_stiffness() const { return stiffness_; }

  // K + M_V restricted to interior unknowns.
  SparseSymmetricMatrix operator_matrix(const PotentialField& v) const;

 private:
  const Mesh* mesh_;
  SolverOptions options_;
  DirichletReduction reduction_;
  SparseSymmetricMatrix stiffness_;
};

// R_V for one fixed potential.
class Resolvent {
 public:
  Resolvent(const SchrodingerSystem& system, const PotentialField& v);

  // Solves (K + M_V) u = load on interior nodes; `load` spans all nodes.
  ScalarField apply_load(std::span<const double> load, const ScalarField* guess = nullptr) const;
  ScalarField apply(const ScalarFunction& f) const;

  const SparseSymmetricMatrix& matrix() const { return matrix_; }

 private:
  const SchrodingerSystem* system_;
  SparseSymmetricMatrix matrix_;
};

ScalarField solve_state(const Mesh& mesh, const PotentialField& v, const ScalarFunction& f,
                        SolverOptions options = {});
// p with -Laplace p + V p = -g, i.e. p = -R_V(g).
ScalarField solve_adjoint(const Mesh& mesh, const PotentialField& v, const ScalarFunction& g,
                          SolverOptions options = {});

// Integral of g*u with the edge-midpoint rule.
double cost(const Mesh& mesh, const ScalarFunction& g, const ScalarField& u);
// cost + lambda * integral of Psi(V).
double penalized_cost(const Mesh& mesh, const ScalarFunction& g, const ScalarField& u,
                      const PotentialField& v, double lambda, const PsiFamily& psi);

}  // namespace schropt
