#include "schropt/schrodinger.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "schropt/optimize.hpp"

namespace schropt {

ScalarField::ScalarField(const Mesh& mesh, std::vector<double> values)
    : mesh_(&mesh), values_(std::move(values)) {
  if (values_.size() != mesh.num_nodes()) {
    throw std::invalid_argument("scalar field: one value per node required");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (mesh.is_boundary(i) && values_[i] != 0.0) {
      throw std::invalid_argument("scalar field: boundary values must be zero");
    }
  }
}

ScalarField ScalarField::zeros(const Mesh& mesh) {
  return ScalarField(mesh, std::vector<double>(mesh.num_nodes(), 0.0));
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::at_centroid(std::size_t t) const {
  const auto& tri = mesh_->triangle(t);
  return (values_[tri[0]] + values_[tri[1]] + values_[tri[2]]) / 3.0;
}

PotentialField::PotentialField(const Mesh& mesh, std::vector<double> values, double vmax)
    : mesh_(&mesh), values_(std::move(values)), vmax_(vmax) {
  if (!(vmax > 0.0) || !std::isfinite(vmax)) {
    throw std::invalid_argument("potential: vmax must be positive and finite");
  }
  if (values_.size() != mesh.num_triangles()) {
    throw std::invalid_argument("potential: one value per triangle required");
  }
  for (std::size_t t = 0; t < values_.size(); ++t) {
    if (!(values_[t] >= 0.0 && values_[t] <= vmax)) {
      std::ostringstream os;
      os << "potential: value " << values_[t] << " at triangle " << t << " outside [0, "
         << vmax << "]";
      throw std::invalid_argument(os.str());
    }
  }
}

PotentialField PotentialField::uniform(const Mesh& mesh, double value, double vmax) {
  return PotentialField(mesh, std::vector<double>(mesh.num_triangles(), value), vmax);
}

SchrodingerSystem::SchrodingerSystem(const Mesh& mesh, SolverOptions options)
    : mesh_(&mesh),
      options_(options),
      reduction_(mesh),
      stiffness_(reduction_.reduce(assemble_stiffness(mesh))) {}

SparseSymmetricMatrix SchrodingerSystem::operator_matrix(const PotentialField& v) const {
  if (&v.mesh() != mesh_) throw std::invalid_argument("operator: potential on another mesh");
  if (options_.lumping == MassLumping::lumped) {
    std::vector<double> diag(mesh_->num_nodes(), 0.0);
    for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
      const double w = v[t] * mesh_->area(t) / 3.0;
      for (std::size_t a : mesh_->triangle(t)) diag[a] += w;
    }
    return stiffness_.with_added_diagonal(reduction_.restrict_vector(diag));
  }
  return stiffness_.plus(reduction_.reduce(assemble_potential_mass(*mesh_, v.values(),
                                                                   options_.lumping)));
}

Resolvent::Resolvent(const SchrodingerSystem& system, const PotentialField& v)
    : system_(&system), matrix_(system.operator_matrix(v)) {}

ScalarField Resolvent::apply_load(std::span<const double> load, const ScalarField* guess) const {
  const auto& red = system_->reduction();
  const auto rhs = red.restrict_vector(load);
  std::vector<double> x0;
  if (guess != nullptr) x0 = red.restrict_vector(guess->values());
  const auto x = solve_spd(matrix_, rhs, system_->options().tolerance, x0);
  return ScalarField(system_->mesh(), red.extend(x));
}

ScalarField Resolvent::apply(const ScalarFunction& f) const {
  return apply_load(assemble_load(system_->mesh(), f));
}

ScalarField solve_state(const Mesh& mesh, const PotentialField& v, const ScalarFunction& f,
                        SolverOptions options) {
  const SchrodingerSystem system(mesh, options);
  return Resolvent(system, v).apply(f);
}

ScalarField solve_adjoint(const Mesh& mesh, const PotentialField& v, const ScalarFunction& g,
                          SolverOptions options) {
  const SchrodingerSystem system(mesh, options);
  auto load = assemble_load(mesh, g);
  for (double& b : load) b = -b;
  return Resolvent(system, v).apply_load(load);
}

double cost(const Mesh& mesh, const ScalarFunction& g, const ScalarField& u) {
  if (&u.mesh() != &mesh) throw std::invalid_argument("cost: state lives on another mesh");
  return integrate_product(mesh, g, u.values());
}

double penalized_cost(const Mesh& mesh, const ScalarFunction& g, const ScalarField& u,
                      const PotentialField& v, double lambda, const PsiFamily& psi) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("penalized cost: lambda must be >= 0");
  return cost(mesh, g, u) + lambda * volume(mesh, v, psi);
}

}  // namespace schropt
