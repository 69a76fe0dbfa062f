#include "schropt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace schropt {

namespace {

using json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Binary mode everywhere so line endings are LF on every platform.
std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return in;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

long long parse_integer(std::string_view text) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw std::invalid_argument("not a boolean: '" + std::string(text) + "'");
}

int parse_cells(std::string_view text) {
  const long long n = parse_integer(text);
  if (n < 1) throw std::invalid_argument("must be >= 1");
  if (n > 100000) throw std::invalid_argument("must be <= 100000");
  return static_cast<int>(n);
}

// Handlers for `section.key`.
using Setter = std::function<void(RunConfig&, std::string_view)>;

Setter set_double(double OptimizerConfig::*field) {
  return [field](RunConfig& c, std::string_view v) { c.optimizer.*field = parse_double(v); };
}

Setter set_cross(bool horizontal, double Box::*field) {
  return [horizontal, field](RunConfig& c, std::string_view v) {
    if (!c.overrides.cross) c.overrides.cross = CrossGeometry{};
    Box& box = horizontal ? c.overrides.cross->horizontal : c.overrides.cross->vertical;
    box.*field = parse_double(v);
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    t["problem.name"] = [](RunConfig& c, std::string_view v) { c.problem = std::string(v); };
    t["problem.m"] = [](RunConfig& c, std::string_view v) { c.overrides.m = parse_double(v); };
    t["problem.alpha"] = [](RunConfig& c, std::string_view v) {
      c.overrides.alpha = parse_double(v);
    };
    t["problem.q"] = [](RunConfig& c, std::string_view v) {
      c.overrides.power_q = parse_double(v);
    };
    t["problem.vmax"] = [](RunConfig& c, std::string_view v) {
      c.overrides.vmax = parse_double(v);
    };
    const std::pair<const char*, double Box::*> coords[] = {
        {"x0", &Box::x0}, {"x1", &Box::x1}, {"y0", &Box::y0}, {"y1", &Box::y1}};
    for (const auto& [name, field] : coords) {
      t[std::string("problem.cross_h_") + name] = set_cross(true, field);
      t[std::string("problem.cross_v_") + name] = set_cross(false, field);
    }

    t["mesh.nx"] = [](RunConfig& c, std::string_view v) { c.nx = parse_cells(v); };
    t["mesh.ny"] = [](RunConfig& c, std::string_view v) { c.ny = parse_cells(v); };

    t["optimizer.max_iters"] = [](RunConfig& c, std::string_view v) {
      const long long n = parse_integer(v);
      if (n < 0 || n > 100000000) throw std::invalid_argument("must be in [0, 1e8]");
      c.optimizer.max_iters = static_cast<int>(n);
    };
    t["optimizer.cost_tolerance"] = set_double(&OptimizerConfig::cost_tolerance);
    t["optimizer.armijo_c"] = set_double(&OptimizerConfig::armijo_c);
    t["optimizer.eta0"] = set_double(&OptimizerConfig::eta0);
    t["optimizer.eta_shrink"] = set_double(&OptimizerConfig::eta_shrink);
    t["optimizer.bisection_tol"] = set_double(&OptimizerConfig::bisection_tol);
    t["optimizer.solver_tolerance"] = set_double(&OptimizerConfig::solver_tolerance);
    t["optimizer.mass"] = [](RunConfig& c, std::string_view v) {
      if (v == "lumped") {
        c.optimizer.lumped = true;
      } else if (v == "consistent") {
        c.optimizer.lumped = false;
      } else {
        throw std::invalid_argument("expected 'lumped' or 'consistent'");
      }
    };
    t["optimizer.init"] = [](RunConfig& c, std::string_view v) {
      if (v == "uniform") {
        c.optimizer.init = Initialization::uniform;
      } else if (v == "random") {
        c.optimizer.init = Initialization::random;
      } else {
        throw std::invalid_argument("expected 'uniform' or 'random'");
      }
    };
    t["optimizer.seed"] = [](RunConfig& c, std::string_view v) {
      const long long s = parse_integer(v);
      if (s < 0) throw std::invalid_argument("seed must be >= 0");
      c.optimizer.seed = static_cast<std::uint64_t>(s);
    };

    t["output.dir"] = [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); };
    t["output.csv"] = [](RunConfig& c, std::string_view v) { c.outputs.csv = parse_bool(v); };
    t["output.vtk"] = [](RunConfig& c, std::string_view v) { c.outputs.vtk = parse_bool(v); };
    t["output.pgm"] = [](RunConfig& c, std::string_view v) { c.outputs.pgm = parse_bool(v); };
    t["output.report"] = [](RunConfig& c, std::string_view v) {
      c.outputs.report = parse_bool(v);
    };
    return t;
  }();
  return table;
}

json box_json(const Box& b) {
  return json{{"x0", b.x0}, {"x1", b.x1}, {"y0", b.y0}, {"y1", b.y1}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ProblemSpec RunConfig::problem_spec() const {
  ProblemOverrides o = overrides;
  if (!o.vmax) o.vmax = optimizer.vmax;
  return builtin_problem(problem, o);
}

Mesh RunConfig::mesh(const ProblemSpec& spec) const { return Mesh(nx, ny, spec.domain); }

void RunConfig::validate() const {
  if (nx < 1) throw ConfigError("mesh.nx: must be >= 1");
  if (ny < 1) throw ConfigError("mesh.ny: must be >= 1");
  if (output_dir.empty()) throw ConfigError("output.dir: must not be empty");
  optimizer.validate();
  (void)problem_spec();
}

RunConfig parse_config_text(std::string_view text, std::string_view source) {
  RunConfig config;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    config.output_dir = env;
  }

  const auto fail = [&](std::size_t line, const std::string& msg) {
    std::ostringstream os;
    os << source << ':' << line << ": " << msg;
    throw ConfigError(os.str());
  };

  std::string section;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "problem" && section != "mesh" && section != "optimizer" &&
          section != "output") {
        fail(line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) fail(line_no, "key '" + key + "' outside of any section");
    if (key.empty()) fail(line_no, "empty key");
    const std::string full = section + "." + key;

    const auto& table = setters();
    const auto it = table.find(full);
    if (it == table.end()) fail(line_no, "unknown key '" + full + "'");
    if (const auto prev = seen.find(full); prev != seen.end()) {
      fail(line_no, "duplicate key '" + full + "' (first set on line " +
                        std::to_string(prev->second) + ")");
    }
    seen[full] = line_no;
    if (value.empty()) fail(line_no, full + ": missing value");
    try {
      it->second(config, value);
    } catch (const std::invalid_argument& e) {
      fail(line_no, full + ": " + e.what());
    }
  }

  try {
    config.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  if (!config.overrides.vmax) config.overrides.vmax = config.optimizer.vmax;
  config.optimizer.vmax = *config.overrides.vmax;
  return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

// ---------------------------------------------------------------------------
// Numbers

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return v;
}

// ---------------------------------------------------------------------------
// CSV

void write_history_csv(std::span<const IterationRecord> records,
                       const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "iter,cost,volume,lambda,eta,grad_norm\n";
  for (const auto& r : records) {
    out << r.iter << ',' << format_double(r.cost) << ',' << format_double(r.volume) << ','
        << format_double(r.lambda) << ',' << format_double(r.eta) << ','
        << format_double(r.grad_norm) << '\n';
  }
  check_written(out, path);
}

std::vector<IterationRecord> read_history_csv(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::string line;
  if (!std::getline(in, line) || line != "iter,cost,volume,lambda,eta,grad_norm") {
    throw std::runtime_error("'" + path.string() + "': bad history header");
  }
  std::vector<IterationRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    for (std::size_t c; (c = rest.find(',')) != std::string_view::npos;) {
      cols.push_back(rest.substr(0, c));
      rest.remove_prefix(c + 1);
    }
    cols.push_back(rest);
    if (cols.size() != 6) {
      throw std::runtime_error("'" + path.string() + "':" + std::to_string(line_no) +
                               ": expected 6 columns");
    }
    IterationRecord r;
    r.iter = static_cast<int>(parse_integer(cols[0]));
    r.cost = parse_double(cols[1]);
    r.volume = parse_double(cols[2]);
    r.lambda = parse_double(cols[3]);
    r.eta = parse_double(cols[4]);
    r.grad_norm = parse_double(cols[5]);
    records.push_back(r);
  }
  return records;
}

// ---------------------------------------------------------------------------
// VTK

void write_vtk(const Mesh& mesh, const ScalarField& u, const ScalarField& p,
               const PotentialField& v, const std::filesystem::path& path) {
  if (&u.mesh() != &mesh || &p.mesh() != &mesh || &v.mesh() != &mesh) {
    throw std::invalid_argument("write_vtk: fields live on another mesh");
  }
  auto out = open_for_write(path);
  const std::size_t nn = mesh.num_nodes();
  const std::size_t nt = mesh.num_triangles();
  out << "# vtk DataFile Version 3.0\n"
      << "schropt fields\n"
      << "ASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nn << " double\n";
  for (const auto& x : mesh.nodes()) {
    out << format_double(x.x) << ' ' << format_double(x.y) << " 0\n";
  }
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& tri : mesh.triangles()) {
    out << "3 " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
  }
  out << "CELL_TYPES " << nt << '\n';
  for (std::size_t t = 0; t < nt; ++t) out << "5\n";

  out << "POINT_DATA " << nn << '\n';
  for (const auto& [name, field] : {std::pair{"state", &u}, std::pair{"adjoint", &p}}) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : field->values()) out << format_double(x) << '\n';
  }
  out << "CELL_DATA " << nt << '\n';
  out << "SCALARS potential double 1\nLOOKUP_TABLE default\n";
  for (double x : v.values()) out << format_double(x) << '\n';
  check_written(out, path);
}

PotentialField read_vtk_potential(const Mesh& mesh, double vmax,
                                  const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::string line;
  bool in_cells = false;
  while (std::getline(in, line)) {
    if (line.rfind("CELL_DATA", 0) == 0) {
      in_cells = true;
    } else if (in_cells && line.rfind("SCALARS potential", 0) == 0) {
      std::getline(in, line);  // LOOKUP_TABLE
      std::vector<double> values;
      values.reserve(mesh.num_triangles());
      std::string tok;
      while (values.size() < mesh.num_triangles() && in >> tok) {
        values.push_back(parse_double(tok));
      }
      if (values.size() != mesh.num_triangles()) {
        throw std::invalid_argument("'" + path.string() + "': potential has " +
                                    std::to_string(values.size()) + " values, mesh has " +
                                    std::to_string(mesh.num_triangles()) + " triangles");
      }
      return PotentialField(mesh, std::move(values), vmax);
    }
  }
  throw std::invalid_argument("'" + path.string() + "': no CELL_DATA 'potential' array");
}

// ---------------------------------------------------------------------------
// PGM

void write_potential_pgm(const Mesh& mesh, const PotentialField& v, double vmax,
                         const std::filesystem::path& path) {
  if (!(vmax > 0.0)) throw std::invalid_argument("write_potential_pgm: vmax must be > 0");
  const int nx = mesh.nx();
  const int ny = mesh.ny();
  std::string raster;
  raster.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int j = ny - 1; j >= 0; --j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t t = mesh.cell_triangle(i, j);
      const double mean = 0.5 * (v[t] + v[t + 1]);
      const double level = std::clamp(mean / vmax, 0.0, 1.0);
      raster.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * level))));
    }
  }
  auto out = open_for_write(path);
  out << "P5\n" << nx << ' ' << ny << "\n255\n";
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  check_written(out, path);
}

// ---------------------------------------------------------------------------
// Raw potential

void write_potential_raw(const PotentialField& v, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (double x : v.values()) out << format_double(x) << '\n';
  check_written(out, path);
}

PotentialField read_potential_raw(const Mesh& mesh, double vmax,
                                  const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::vector<double> values;
  std::string tok;
  while (in >> tok) values.push_back(parse_double(tok));
  if (values.size() != mesh.num_triangles()) {
    throw std::invalid_argument("'" + path.string() + "': " + std::to_string(values.size()) +
                                " values for " + std::to_string(mesh.num_triangles()) +
                                " triangles");
  }
  return PotentialField(mesh, std::move(values), vmax);
}

PotentialField read_potential(const Mesh& mesh, double vmax, const std::filesystem::path& path) {
  if (path.extension() == ".vtk") return read_vtk_potential(mesh, vmax, path);
  return read_potential_raw(mesh, vmax, path);
}

// ---------------------------------------------------------------------------
// Reports

RunSummary summarize(const ProblemSpec& spec, const RunResult& result,
                     const OptimizerConfig& cfg) {
  RunSummary s;
  s.stop_reason = to_string(result.reason);
  s.iterations = result.history.empty() ? 0 : result.history.back().iter;
  s.initial_cost = result.history.empty() ? 0.0 : result.history.front().cost;
  s.final_cost = result.history.empty() ? 0.0 : result.history.back().cost;
  const Mesh& mesh = result.potential.mesh();
  s.constraint_value = volume(mesh, result.potential, spec.psi);
  s.thresholded_area = low_potential_area(result.potential);
  s.lambda = result.lambda;
  s.optimality = necessary_conditions(spec, result.potential, result.lambda, cfg.bisection_tol,
                                      {cfg.solver_tolerance, cfg.lumping()});
  s.lemma1_relative = s.optimality.relative(s.optimality.lemma1_max);
  return s;
}

std::string optimality_json(const OptimalityReport& r) {
  json j;
  j["lambda"] = r.lambda;
  j["constraint_slack"] = r.constraint_slack;
  j["scale"] = r.scale;
  j["interior_elements"] = r.interior_elements;
  j["stationarity_residual_interior"] = r.stationarity_residual_interior;
  j["stationarity_relative"] = r.relative(r.stationarity_residual_interior);
  j["sign_violation_lower"] = r.sign_violation_lower;
  j["sign_violation_upper"] = r.sign_violation_upper;
  j["lemma1_max"] = r.lemma1_max;
  j["lemma1_relative"] = r.relative(r.lemma1_max);
  j["unsaturated"] = r.unsaturated;
  j["state_max_abs"] = r.state_max_abs;
  if (r.unsaturated) {
    j["state_max_abs_high_v"] = r.state_max_abs_high_v;
    j["state_max_on_free"] = r.state_max_on_free;
  }
  return j.dump(2) + "\n";
}

std::string report_json(const RunSummary& s) {
  json j;
  j["stop_reason"] = s.stop_reason;
  j["iterations"] = s.iterations;
  j["initial_cost"] = s.initial_cost;
  j["final_cost"] = s.final_cost;
  j["occupied_volume"] = {{"constraint_value", s.constraint_value},
                          {"thresholded_area", s.thresholded_area}};
  j["lambda"] = s.lambda;
  j["optimality"] = json::parse(optimality_json(s.optimality));
  return j.dump(2) + "\n";
}

std::string metadata_json(const RunConfig& c, const ProblemSpec& spec, const Mesh& mesh) {
  json j;
  json problem;
  problem["name"] = spec.name;
  problem["f"] = spec.f.description;
  problem["g"] = spec.g.description;
  problem["psi"] = spec.psi.describe();
  problem["psi_family"] = spec.psi.kind() == PsiFamily::Kind::exponential ? "exponential" : "power";
  problem["psi_parameter"] = spec.psi.parameter();
  problem["m"] = spec.m;
  problem["vmax"] = spec.vmax;
  problem["constraint_vacuous"] = spec.constraint_vacuous;
  problem["domain"] = {{"x_min", spec.domain.x_min},
                       {"x_max", spec.domain.x_max},
                       {"y_min", spec.domain.y_min},
                       {"y_max", spec.domain.y_max}};
  if (spec.cross) {
    problem["cross"] = {{"horizontal", box_json(spec.cross->horizontal)},
                        {"vertical", box_json(spec.cross->vertical)},
                        {"area", spec.cross->area()}};
  } else {
    problem["cross"] = nullptr;
  }
  j["problem"] = problem;
  j["mesh"] = {{"nx", mesh.nx()},
               {"ny", mesh.ny()},
               {"nodes", mesh.num_nodes()},
               {"triangles", mesh.num_triangles()},
               {"diagonal", "lower-left to upper-right"}};
  const auto& o = c.optimizer;
  j["optimizer"] = {{"max_iters", o.max_iters},
                    {"cost_tolerance", o.cost_tolerance},
                    {"armijo_c", o.armijo_c},
                    {"eta0", o.eta0},
                    {"eta_shrink", o.eta_shrink},
                    {"bisection_tol", o.bisection_tol},
                    {"vmax", o.vmax},
                    {"mass", o.lumped ? "lumped" : "consistent"},
                    {"solver_tolerance", o.solver_tolerance},
                    {"init", o.init == Initialization::uniform ? "uniform" : "random"},
                    {"seed", o.seed}};
  j["discretization"] = {{"state_adjoint", "P1"},
                         {"potential", "P0"},
                         {"quadrature", "edge midpoints"},
                         {"solver", "Jacobi-preconditioned CG"}};
  j["output"] = {{"csv", c.outputs.csv},
                 {"vtk", c.outputs.vtk},
                 {"pgm", c.outputs.pgm},
                 {"report", c.outputs.report}};
  return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  auto out = open_for_write(path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  check_written(out, path);
}

}  // namespace schropt
