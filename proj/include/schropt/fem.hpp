#pragma once

// P1/P0 finite elements on a structured triangulation of a rectangle.
//
// Node (i, j) has index j*(nx+1) + i. Cell (i, j) is split along the diagonal
// from its lower-left to its upper-right corner into triangles 2c and 2c+1
// (c = j*nx + i), both oriented counterclockwise.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace schropt {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Rectangle {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
};

using ScalarFunction = std::function<double(Point)>;

class Mesh {
 public:
  using Triangle = std::array<std::size_t, 3>;

  Mesh(int nx, int ny, Rectangle rect);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const Rectangle& domain() const { return rect_; }
  double dx() const { return rect_.width() / nx_; }
  double dy() const { return rect_.height() / ny_; }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<bool>& boundary_mask() const { return boundary_; }
  const std::vector<double>& element_areas() const { return areas_; }

  const Point& node(std::size_t i) const { return nodes_[i]; }
  const Triangle& triangle(std::size_t t) const { return triangles_[t]; }
  bool is_boundary(std::size_t i) const { return boundary_[i]; }
  double area(std::size_t t) const { return areas_[t]; }
  Point centroid(std::size_t t) const;

  std::size_t node_index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_ + 1) +
           static_cast<std::size_t>(i);
  }
  // First of the two triangles of cell (i, j).
  std::size_t cell_triangle(int i, int j) const {
    return 2 * (static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) +
                static_cast<std::size_t>(i));
  }

 private:
  int nx_;
  int ny_;
  Rectangle rect_;
  std::vector<Point> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<bool> boundary_;
  std::vector<double> areas_;
};

Mesh build_structured_mesh(int nx, int ny, Rectangle rect);

// Square sparse matrix in compressed sparse row layout. Symmetric by
// construction for every assembly routine in this library.
class SparseSymmetricMatrix {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseSymmetricMatrix() = default;

  // Duplicate (row, col) pairs are summed in a fixed order, so assembly is
  // deterministic for a fixed triplet sequence.
  static SparseSymmetricMatrix from_triplets(std::size_t n, std::vector<Entry> entries);
  static SparseSymmetricMatrix identity(std::size_t n);

  std::size_t dimension() const { return n_; }
  std::size_t nonzeros() const { return values_.size(); }
  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::size_t>& column_indices() const { return columns_; }
  const std::vector<double>& values() const { return values_; }

  // Zero if (i, j) is not stored.
  double at(std::size_t i, std::size_t j) const;
  std::vector<double> diagonal() const;
  double total() const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;

  // A + diag(d); every diagonal entry must already be stored.
  SparseSymmetricMatrix with_added_diagonal(std::span<const double> d) const;
  // A + B; both operands must have the same dimension.
  SparseSymmetricMatrix plus(const SparseSymmetricMatrix& other) const;
  // Keeps the rows and columns listed in `keep` (ascending), renumbered.
  SparseSymmetricMatrix restrict_to(std::span<const std::size_t> keep) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> columns_;
  std::vector<double> values_;
};

SparseSymmetricMatrix assemble_stiffness(const Mesh& mesh);

enum class MassLumping { lumped, consistent };

// Mass matrix weighted by a piecewise-constant potential (one value per triangle).
SparseSymmetricMatrix assemble_potential_mass(const Mesh& mesh,
                                              std::span<const double> potential,
                                              MassLumping lumping);

// b_i = integral of f * phi_i, edge-midpoint rule on every triangle.
std::vector<double> assemble_load(const Mesh& mesh, const ScalarFunction& f);

// Integral of a function given by its nodal P1 interpolant against g, using the
// same edge-midpoint rule as assemble_load.
double integrate_product(const Mesh& mesh, const ScalarFunction& g,
                         std::span<const double> nodal);

class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

struct SolveStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients. Stops once ||Ax - b|| <= tol*||b||,
// checked on the true residual; the iteration cap is 20*n. A non-empty
// `initial_guess` is used as the starting iterate.
std::vector<double> solve_spd(const SparseSymmetricMatrix& a, std::span<const double> b,
                              double tol, std::span<const double> initial_guess = {},
                              SolveStats* stats = nullptr);

// Maps between all mesh nodes and the interior (non-Dirichlet) unknowns.
class DirichletReduction {
 public:
  explicit DirichletReduction(const Mesh& mesh);

  std::size_t num_unknowns() const { return interior_.size(); }
  std::size_t num_nodes() const { return node_to_unknown_.size(); }
  const std::vector<std::size_t>& interior_nodes() const { return interior_; }

  SparseSymmetricMatrix reduce(const SparseSymmetricMatrix& full) const;
  std::vector<double> restrict_vector(std::span<const double> full) const;
  // Boundary entries are set to exactly zero.
  std::vector<double> extend(std::span<const double> reduced) const;

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> node_to_unknown_;
};

}  // namespace schropt
