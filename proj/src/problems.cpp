#include "schropt/problems.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace schropt {

// ---------------------------------------------------------------------------
// PsiFamily

PsiFamily PsiFamily::exponential(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("psi: exponential family needs alpha > 0");
  }
  return PsiFamily(Kind::exponential, alpha);
}

PsiFamily PsiFamily::power(double q) {
  if (!(q > 0.0) || !std::isfinite(q)) {
    throw std::invalid_argument("psi: power family needs q > 0");
  }
  return PsiFamily(Kind::power, q);
}

std::string PsiFamily::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (kind_ == Kind::exponential) {
    os << "exp(-" << parameter_ << "*s)";
  } else {
    os << "s^(-" << parameter_ << ")";
  }
  return os.str();
}

bool PsiFamily::defined_at(double s) const {
  if (std::isnan(s)) return false;
  return kind_ == Kind::exponential ? s >= 0.0 : s > 0.0;
}

double PsiFamily::value(double s) const {
  if (!defined_at(s)) {
    std::ostringstream os;
    os << "psi: " << describe() << " undefined at s = " << s;
    throw std::invalid_argument(os.str());
  }
  return kind_ == Kind::exponential ? std::exp(-parameter_ * s) : std::pow(s, -parameter_);
}

double PsiFamily::derivative(double s) const {
  if (!defined_at(s)) {
    std::ostringstream os;
    os << "psi': " << describe() << " undefined at s = " << s;
    throw std::invalid_argument(os.str());
  }
  if (kind_ == Kind::exponential) return -parameter_ * std::exp(-parameter_ * s);
  return -parameter_ * std::pow(s, -parameter_ - 1.0);
}

double PsiFamily::inverse(double t) const {
  const bool ok = kind_ == Kind::exponential ? (t > 0.0 && t <= 1.0) : (t > 0.0);
  if (!ok || !std::isfinite(t)) {
    std::ostringstream os;
    os << "psi inverse: " << describe() << " has no preimage for t = " << t;
    throw std::invalid_argument(os.str());
  }
  if (kind_ == Kind::exponential) return -std::log(t) / parameter_;
  return std::pow(t, -1.0 / parameter_);
}

bool PsiFamily::check_strictly_decreasing(double lo, double hi, int samples) const {
  if (!(hi > lo) || samples < 2 || !defined_at(lo)) return false;
  double prev = value(lo);
  for (int k = 1; k <= samples; ++k) {
    const double s = lo + (hi - lo) * k / samples;
    const double v = value(s);
    if (!(v < prev)) return false;
    prev = v;
  }
  return true;
}

double PsiFamily::convexity_witness() const {
  return kind_ == Kind::exponential ? 2.0 : 1.0 + parameter_;
}

bool PsiFamily::check_convexity(int samples) const {
  const double p = convexity_witness();
  // s ranges over (0, Psi(0)^{1/p}); for the power family Psi(0) is infinite.
  const double hi = kind_ == Kind::exponential ? 1.0 : 4.0;
  const double lo = hi / samples;
  const double h = (hi - lo) / samples;
  auto phi = [&](double s) { return inverse(std::pow(s, p)); };
  for (int k = 1; k < samples; ++k) {
    const double s = lo + k * h;
    const double second = phi(s - h) - 2.0 * phi(s) + phi(s + h);
    const double scale = std::abs(phi(s - h)) + 2.0 * std::abs(phi(s)) + std::abs(phi(s + h));
    if (second < -1e-12 * scale) return false;
  }
  return p > 1.0;
}

double psi_eval(const PsiFamily& psi, double s) { return psi.value(s); }
double psi_prime(const PsiFamily& psi, double s) { return psi.derivative(s); }
double psi_inverse(const PsiFamily& psi, double t) { return psi.inverse(t); }

// ---------------------------------------------------------------------------
// Data functions

double CrossGeometry::area() const {
  const double ox = std::max(0.0, std::min(horizontal.x1, vertical.x1) -
                                      std::max(horizontal.x0, vertical.x0));
  const double oy = std::max(0.0, std::min(horizontal.y1, vertical.y1) -
                                      std::max(horizontal.y0, vertical.y0));
  return horizontal.area() + vertical.area() - ox * oy;
}

void CrossGeometry::validate() const {
  for (const Box& b : {horizontal, vertical}) {
    if (!(b.x0 < b.x1) || !(b.y0 < b.y1) || b.x0 < 0.0 || b.y0 < 0.0 || b.x1 > 1.0 ||
        b.y1 > 1.0) {
      throw std::invalid_argument("cross: arms must be non-degenerate boxes inside (0,1)^2");
    }
  }
  // The arms must actually cross.
  if (!(vertical.x0 >= horizontal.x0 && vertical.x1 <= horizontal.x1 &&
        horizontal.y0 >= vertical.y0 && horizontal.y1 <= vertical.y1)) {
    throw std::invalid_argument("cross: vertical arm must cut through the horizontal arm");
  }
}

RegionFunction RegionFunction::constant(double value) {
  RegionFunction r;
  r.inside_ = r.outside_ = value;
  std::ostringstream os;
  os.precision(17);
  os << value;
  r.description_ = os.str();
  return r;
}

RegionFunction RegionFunction::half_plane(double a, double b, double c, double inside,
                                          double outside) {
  RegionFunction r;
  r.shape_ = Shape::half_plane;
  r.a_ = a;
  r.b_ = b;
  r.c_ = c;
  r.inside_ = inside;
  r.outside_ = outside;
  std::ostringstream os;
  os.precision(17);
  os << inside << " if " << a << "*x + " << b << "*y >= " << c << ", else " << outside;
  r.description_ = os.str();
  return r;
}

RegionFunction RegionFunction::boxes(std::vector<Box> boxes, double inside, double outside) {
  RegionFunction r;
  r.shape_ = Shape::boxes;
  r.boxes_ = std::move(boxes);
  r.inside_ = inside;
  r.outside_ = outside;
  std::ostringstream os;
  os.precision(17);
  os << inside << " on";
  for (const Box& b : r.boxes_) {
    os << " [" << b.x0 << "," << b.x1 << "]x[" << b.y0 << "," << b.y1 << "]";
  }
  os << ", else " << outside;
  r.description_ = os.str();
  return r;
}

bool RegionFunction::in_region(Point p) const {
  switch (shape_) {
    case Shape::everywhere:
      return true;
    case Shape::half_plane:
      return a_ * p.x + b_ * p.y >= c_;
    case Shape::boxes:
      for (const Box& b : boxes_) {
        if (b.contains(p)) return true;
      }
      return false;
  }
  return false;
}

double RegionFunction::operator()(Point p) const { return in_region(p) ? inside_ : outside_; }

namespace {

DataFunction from_region(RegionFunction r) {
  std::string d = r.description();
  return {[r = std::move(r)](Point p) { return r(p); }, std::move(d)};
}

}  // namespace

// ---------------------------------------------------------------------------
// ProblemSpec

void ProblemSpec::validate() {
  if (!(domain.area() > 0.0)) throw std::invalid_argument("problem: degenerate domain");
  if (!(vmax > 0.0) || !std::isfinite(vmax)) {
    throw std::invalid_argument("problem: vmax must be positive and finite");
  }
  if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("problem: m must be > 0");
  if (!f.eval || !g.eval) throw std::invalid_argument("problem: f and g must be set");
  const double area = domain.area();
  if (psi.value(vmax) * area > m) {
    std::ostringstream os;
    os << "problem: admissible class is empty, Psi(vmax)*|D| = " << psi.value(vmax) * area
       << " > m = " << m;
    throw std::invalid_argument(os.str());
  }
  constraint_vacuous = psi.defined_at(0.0) && m >= psi.value(0.0) * area;
}

std::vector<std::string> builtin_problem_names() {
  return {"example1", "example2", "example3", "example4", "positive"};
}

ProblemSpec builtin_problem(const std::string& name, const ProblemOverrides& overrides) {
  ProblemSpec spec;
  spec.name = name;
  spec.domain = Rectangle{0.0, 1.0, 0.0, 1.0};
  spec.g = from_region(RegionFunction::constant(1.0));
  double alpha = 3e-4;

  if (name == "example1") {
    spec.f = {[](Point p) { return -(1.0 + 10.0 * p.x); }, "-(1+10*x)"};
    spec.m = 0.2;
  } else if (name == "example2") {
    // y - 1.4x >= 0.3 -> -1
    spec.f = from_region(RegionFunction::half_plane(-1.4, 1.0, 0.3, -1.0, 1.0));
    spec.m = 0.45;
  } else if (name == "example3" || name == "example4") {
    const CrossGeometry cross = overrides.cross.value_or(CrossGeometry{});
    cross.validate();
    spec.cross = cross;
    const double inside = name == "example3" ? 1.0 : -1.0;
    spec.f = from_region(
        RegionFunction::boxes({cross.horizontal, cross.vertical}, inside, -inside));
    spec.m = name == "example3" ? 0.45 : 0.5;
  } else if (name == "positive") {
    // f, g >= 0: the optimum is the trivial V = vmax everywhere.
    spec.f = from_region(RegionFunction::constant(1.0));
    spec.m = 0.2;
  } else {
    std::ostringstream os;
    os << "unknown problem '" << name << "' (known:";
    for (const auto& n : builtin_problem_names()) os << ' ' << n;
    os << ')';
    throw std::invalid_argument(os.str());
  }
  if (overrides.cross && !spec.cross) {
    throw std::invalid_argument("problem: cross geometry only applies to example3/example4");
  }

  if (overrides.m) spec.m = *overrides.m;
  if (overrides.alpha) alpha = *overrides.alpha;
  if (overrides.vmax) spec.vmax = *overrides.vmax;
  if (overrides.power_q && overrides.alpha) {
    throw std::invalid_argument("problem: alpha and power_q are mutually exclusive");
  }
  spec.psi = overrides.power_q ? PsiFamily::power(*overrides.power_q)
                               : PsiFamily::exponential(alpha);
  spec.validate();
  return spec;
}

}  // namespace schropt
