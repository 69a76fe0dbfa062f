#include "schropt/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace schropt {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Gradients of the three barycentric coordinates, scaled by 2|T|.
struct TriangleGeometry {
  double area;
  std::array<double, 3> b;  // d/dx * 2|T|
  std::array<double, 3> c;  // d/dy * 2|T|
};

TriangleGeometry geometry(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangle(t);
  const Point& p0 = mesh.node(tri[0]);
  const Point& p1 = mesh.node(tri[1]);
  const Point& p2 = mesh.node(tri[2]);
  TriangleGeometry g{};
  g.b = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
  g.c = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
  g.area = 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
  return g;
}

Point midpoint(const Point& a, const Point& b) {
  return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

}  // namespace

Mesh::Mesh(int nx, int ny, Rectangle rect) : nx_(nx), ny_(ny), rect_(rect) {
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument("mesh: nx and ny must be >= 1");
  }
  if (!(rect.width() > 0.0) || !(rect.height() > 0.0) || !std::isfinite(rect.area())) {
    throw std::invalid_argument("mesh: rectangle must have positive, finite side lengths");
  }
  const double hx = dx();
  const double hy = dy();

  nodes_.reserve(static_cast<std::size_t>(nx + 1) * static_cast<std::size_t>(ny + 1));
  boundary_.reserve(nodes_.capacity());
  for (int j = 0; j <= ny; ++j) {
    // Pin the last row/column to the rectangle edge exactly.
    const double y = (j == ny) ? rect.y_max : rect.y_min + j * hy;
    for (int i = 0; i <= nx; ++i) {
      const double x = (i == nx) ? rect.x_max : rect.x_min + i * hx;
      nodes_.push_back({x, y});
      boundary_.push_back(i == 0 || j == 0 || i == nx || j == ny);
    }
  }

  triangles_.reserve(2 * static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t n00 = node_index(i, j);
      const std::size_t n10 = node_index(i + 1, j);
      const std::size_t n01 = node_index(i, j + 1);
      const std::size_t n11 = node_index(i + 1, j + 1);
      triangles_.push_back({n00, n10, n11});
      triangles_.push_back({n00, n11, n01});
    }
  }

  areas_.resize(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    areas_[t] = geometry(*this, t).area;
  }
}

Point Mesh::centroid(std::size_t t) const {
  const auto& tri = triangles_[t];
  const Point& a = nodes_[tri[0]];
  const Point& b = nodes_[tri[1]];
  const Point& c = nodes_[tri[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

Mesh build_structured_mesh(int nx, int ny, Rectangle rect) { return Mesh(nx, ny, rect); }

// ---------------------------------------------------------------------------
// SparseSymmetricMatrix

SparseSymmetricMatrix SparseSymmetricMatrix::from_triplets(std::size_t n,
                                                           std::vector<Entry> entries) {
  for (const auto& e : entries) {
    if (e.row >= n || e.col >= n) {
      throw std::invalid_argument("sparse matrix: triplet index out of range");
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseSymmetricMatrix m;
  m.n_ = n;
  m.row_offsets_.assign(n + 1, 0);
  for (std::size_t k = 0; k < entries.size();) {
    const std::size_t r = entries[k].row;
    const std::size_t c = entries[k].col;
    double v = 0.0;
    for (; k < entries.size() && entries[k].row == r && entries[k].col == c; ++k) {
      v += entries[k].value;
    }
    // Exact cancellations (e.g. across the right angle of a triangle) are not
    // stored; diagonal entries always are.
    if (v == 0.0 && r != c) continue;
    m.columns_.push_back(c);
    m.values_.push_back(v);
    ++m.row_offsets_[r + 1];
  }
  std::partial_sum(m.row_offsets_.begin(), m.row_offsets_.end(), m.row_offsets_.begin());
  return m;
}

SparseSymmetricMatrix SparseSymmetricMatrix::identity(std::size_t n) {
  std::vector<Entry> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
  return from_triplets(n, std::move(entries));
}

double SparseSymmetricMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto last = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - columns_.begin())];
}

std::vector<double> SparseSymmetricMatrix::diagonal() const {
  std::vector<double> d(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
  return d;
}

double SparseSymmetricMatrix::total() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

void SparseSymmetricMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      s += values_[k] * x[columns_[k]];
    }
    y[i] = s;
  }
}

std::vector<double> SparseSymmetricMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n_);
  multiply(x, y);
  return y;
}

SparseSymmetricMatrix SparseSymmetricMatrix::with_added_diagonal(
    std::span<const double> d) const {
  if (d.size() != n_) throw std::invalid_argument("sparse matrix: diagonal size mismatch");
  SparseSymmetricMatrix m = *this;
  for (std::size_t i = 0; i < n_; ++i) {
    const auto first = m.columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto last = m.columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(first, last, i);
    if (it == last || *it != i) {
      throw std::invalid_argument("sparse matrix: missing diagonal entry");
    }
    m.values_[static_cast<std::size_t>(it - m.columns_.begin())] += d[i];
  }
  return m;
}

SparseSymmetricMatrix SparseSymmetricMatrix::plus(const SparseSymmetricMatrix& other) const {
  if (other.n_ != n_) throw std::invalid_argument("sparse matrix: dimension mismatch");
  std::vector<Entry> entries;
  entries.reserve(nonzeros() + other.nonzeros());
  for (const auto* m : {this, &other}) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t k = m->row_offsets_[i]; k < m->row_offsets_[i + 1]; ++k) {
        entries.push_back({i, m->columns_[k], m->values_[k]});
      }
    }
  }
  return from_triplets(n_, std::move(entries));
}

SparseSymmetricMatrix SparseSymmetricMatrix::restrict_to(
    std::span<const std::size_t> keep) const {
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> map(n_, npos);
  for (std::size_t k = 0; k < keep.size(); ++k) map[keep[k]] = k;

  SparseSymmetricMatrix m;
  m.n_ = keep.size();
  m.row_offsets_.assign(m.n_ + 1, 0);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::size_t i = keep[r];
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const std::size_t c = map[columns_[k]];
      if (c == npos) continue;
      m.columns_.push_back(c);
      m.values_.push_back(values_[k]);
    }
    m.row_offsets_[r + 1] = m.columns_.size();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Assembly

SparseSymmetricMatrix assemble_stiffness(const Mesh& mesh) {
  std::vector<SparseSymmetricMatrix::Entry> entries;
  entries.reserve(9 * mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = geometry(mesh, t);
    const auto& tri = mesh.triangle(t);
    const double scale = 1.0 / (4.0 * g.area);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        entries.push_back({tri[a], tri[b], scale * (g.b[a] * g.b[b] + g.c[a] * g.c[b])});
      }
    }
  }
  return SparseSymmetricMatrix::from_triplets(mesh.num_nodes(), std::move(entries));
}

SparseSymmetricMatrix assemble_potential_mass(const Mesh& mesh,
                                              std::span<const double> potential,
                                              MassLumping lumping) {
  if (potential.size() != mesh.num_triangles()) {
    throw std::invalid_argument("potential mass: one value per triangle required");
  }
  std::vector<SparseSymmetricMatrix::Entry> entries;
  entries.reserve((lumping == MassLumping::lumped ? 3 : 9) * mesh.num_triangles());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double v = potential[t];
    if (!(v >= 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "potential mass: potential must be finite and >= 0 (triangle " << t
         << ", value " << v << ")";
      throw std::invalid_argument(os.str());
    }
    const auto& tri = mesh.triangle(t);
    const double area = mesh.area(t);
    if (lumping == MassLumping::lumped) {
      for (int a = 0; a < 3; ++a) entries.push_back({tri[a], tri[a], v * area / 3.0});
    } else {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          entries.push_back({tri[a], tri[b], v * area / 12.0 * (a == b ? 2.0 : 1.0)});
        }
      }
    }
  }
  return SparseSymmetricMatrix::from_triplets(mesh.num_nodes(), std::move(entries));
}

std::vector<double> assemble_load(const Mesh& mesh, const ScalarFunction& f) {
  std::vector<double> b(mesh.num_nodes(), 0.0);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    const Point& p0 = mesh.node(tri[0]);
    const Point& p1 = mesh.node(tri[1]);
    const Point& p2 = mesh.node(tri[2]);
    // Midpoint of the edge opposite vertex a; phi_a vanishes there and the
    // other two basis functions equal 1/2.
    const double f0 = f(midpoint(p1, p2));
    const double f1 = f(midpoint(p2, p0));
    const double f2 = f(midpoint(p0, p1));
    const double w = mesh.area(t) / 3.0 * 0.5;
    b[tri[0]] += w * (f1 + f2);
    b[tri[1]] += w * (f2 + f0);
    b[tri[2]] += w * (f0 + f1);
  }
  return b;
}

double integrate_product(const Mesh& mesh, const ScalarFunction& g,
                         std::span<const double> nodal) {
  if (nodal.size() != mesh.num_nodes()) {
    throw std::invalid_argument("integrate_product: nodal field size mismatch");
  }
  const auto load = assemble_load(mesh, g);
  return dot(load, nodal);
}

// ---------------------------------------------------------------------------
// Linear solver

std::vector<double> solve_spd(const SparseSymmetricMatrix& a, std::span<const double> b,
                              double tol, std::span<const double> initial_guess,
                              SolveStats* stats) {
  const std::size_t n = a.dimension();
  if (b.size() != n) throw std::invalid_argument("solve_spd: right-hand side size mismatch");
  if (!initial_guess.empty() && initial_guess.size() != n) {
    throw std::invalid_argument("solve_spd: initial guess size mismatch");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("solve_spd: tolerance must be positive");

  std::vector<double> x(n, 0.0);
  if (!initial_guess.empty()) std::copy(initial_guess.begin(), initial_guess.end(), x.begin());

  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    if (stats) *stats = {0, 0.0};
    return x;
  }

  auto inv_diag = a.diagonal();
  for (auto& d : inv_diag) {
    if (!(d > 0.0)) throw std::invalid_argument("solve_spd: non-positive diagonal entry");
    d = 1.0 / d;
  }

  std::vector<double> r(n), z(n), p(n), ap(n);
  const double target = tol * bnorm;
  const std::size_t max_iters = 20 * std::max<std::size_t>(n, 1);
  constexpr int max_restarts = 8;
  std::size_t it = 0;
  double rnorm = 0.0;
  // The recursive residual drifts from b - Ax near machine precision, so
  // convergence is always confirmed on the true residual and CG restarts from
  // the current iterate if the two disagree.
  for (int restart = 0;; ++restart) {
    a.multiply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    rnorm = norm2(r);
    if (rnorm <= target) break;
    if (it >= max_iters || restart > max_restarts) {
      std::ostringstream os;
      os << "solve_spd: no convergence after " << it << " iterations, relative residual "
         << rnorm / bnorm << " > " << tol;
      throw SolverFailure(os.str(), rnorm / bnorm, it);
    }
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = inv_diag[i] * r[i];
      rz += r[i] * z[i];
    }
    p = z;
    const double target_sq = target * target;
    while (it < max_iters) {
      a.multiply(p, ap);
      const double pap = dot(p, ap);
      if (!(pap > 0.0)) break;
      const double step = rz / pap;
      double rr = 0.0;
      double rz_next = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += step * p[i];
        r[i] -= step * ap[i];
        z[i] = inv_diag[i] * r[i];
        rr += r[i] * r[i];
        rz_next += r[i] * z[i];
      }
      ++it;
      if (rr <= target_sq) break;
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }
  if (stats) *stats = {it, rnorm / bnorm};
  return x;
}

// ---------------------------------------------------------------------------
// Dirichlet elimination

DirichletReduction::DirichletReduction(const Mesh& mesh)
    : node_to_unknown_(mesh.num_nodes(), npos) {
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    if (!mesh.is_boundary(i)) {
      node_to_unknown_[i] = interior_.size();
      interior_.push_back(i);
    }
  }
}

SparseSymmetricMatrix DirichletReduction::reduce(const SparseSymmetricMatrix& full) const {
  if (full.dimension() != num_nodes()) {
    throw std::invalid_argument("dirichlet reduction: matrix dimension mismatch");
  }
  return full.restrict_to(interior_);
}

std::vector<double> DirichletReduction::restrict_vector(std::span<const double> full) const {
  if (full.size() != num_nodes()) {
    throw std::invalid_argument("dirichlet reduction: vector size mismatch");
  }
  std::vector<double> r(interior_.size());
  for (std::size_t k = 0; k < interior_.size(); ++k) r[k] = full[interior_[k]];
  return r;
}

std::vector<double> DirichletReduction::extend(std::span<const double> reduced) const {
  if (reduced.size() != interior_.size()) {
    throw std::invalid_argument("dirichlet reduction: reduced vector size mismatch");
  }
  std::vector<double> full(num_nodes(), 0.0);
  for (std::size_t k = 0; k < interior_.size(); ++k) full[interior_[k]] = reduced[k];
  return full;
}

}  // namespace schropt
