#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "schropt/fem.hpp"

namespace schropt {

// Constraint profile Psi: strictly decreasing, Psi(0) "free", Psi(inf) "excluded".
//   exponential: Psi(s) = exp(-alpha s)
//   power:       Psi(s) = s^(-q)
class PsiFamily {
 public:
  enum class Kind { exponential, power };

  static PsiFamily exponential(double alpha);
  static PsiFamily power(double q);

  Kind kind() const { return kind_; }
  double parameter() const { return parameter_; }
  std::string describe() const;

  double value(double s) const;
  double derivative(double s) const;
  double inverse(double t) const;
  // True when value(s) is defined (power family excludes s <= 0).
  bool defined_at(double s) const;

  // Sampled check that Psi is strictly decreasing on [lo, hi] (lo > 0 for power).
  bool check_strictly_decreasing(double lo, double hi, int samples = 200) const;
  // Exponent p > 1 for which s -> Psi^{-1}(s^p) is convex.
  double convexity_witness() const;
  // Second-difference check of that convexity on a sample grid.
  bool check_convexity(int samples = 200) const;

 private:
  PsiFamily(Kind kind, double parameter) : kind_(kind), parameter_(parameter) {}
  Kind kind_;
  double parameter_;
};

double psi_eval(const PsiFamily& psi, double s);
double psi_prime(const PsiFamily& psi, double s);
double psi_inverse(const PsiFamily& psi, double t);

// Axis-aligned closed rectangle [x0, x1] x [y0, y1].
struct Box {
  double x0, x1, y0, y1;
  bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  double area() const { return (x1 - x0) * (y1 - y0); }
};

// Union of a horizontal and a vertical arm.
struct CrossGeometry {
  Box horizontal{0.10, 0.85, 0.45, 0.59};
  Box vertical{0.40, 0.60, 0.10, 0.90};

  bool contains(Point p) const { return horizontal.contains(p) || vertical.contains(p); }
  double area() const;
  void validate() const;
};

// Piecewise-constant data: `inside` on a region, `outside` elsewhere. The
// region is either the half-plane a*x + b*y >= c or a union of boxes.
class RegionFunction {
 public:
  static RegionFunction constant(double value);
  static RegionFunction half_plane(double a, double b, double c, double inside, double outside);
  static RegionFunction boxes(std::vector<Box> boxes, double inside, double outside);

  double operator()(Point p) const;
  bool in_region(Point p) const;
  const std::string& description() const { return description_; }

 private:
  enum class Shape { everywhere, half_plane, boxes };
  Shape shape_ = Shape::everywhere;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0;
  std::vector<Box> boxes_;
  double inside_ = 0.0;
  double outside_ = 0.0;
  std::string description_;
};

struct DataFunction {
  ScalarFunction eval;
  std::string description;

  double operator()(Point p) const { return eval(p); }
};

struct ProblemSpec {
  std::string name;
  Rectangle domain{};
  DataFunction f;
  DataFunction g;
  PsiFamily psi = PsiFamily::exponential(3e-4);
  double m = 0.2;
  double vmax = 1e4;
  std::optional<CrossGeometry> cross;
  // m >= Psi(0)|D|: every potential is admissible.
  bool constraint_vacuous = false;

  // Throws std::invalid_argument if the admissible class is empty.
  void validate();
};

struct ProblemOverrides {
  std::optional<double> m;
  std::optional<double> alpha;
  std::optional<double> power_q;  // switches to the power family
  std::optional<double> vmax;
  std::optional<CrossGeometry> cross;
};

std::vector<std::string> builtin_problem_names();
ProblemSpec builtin_problem(const std::string& name, const ProblemOverrides& overrides = {});

}  // namespace schropt
