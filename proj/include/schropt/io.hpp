#pragma once

// Run configuration and the on-disk artifacts of a run.
//
// Config files are INI-like:
//
//   [problem]   name, m, alpha, q, vmax,
//               cross_h_x0 .. cross_h_y1, cross_v_x0 .. cross_v_y1
//   [mesh]      nx, ny
//   [optimizer] max_iters, cost_tolerance, armijo_c, eta0, eta_shrink,
//               bisection_tol, mass (lumped|consistent), solver_tolerance,
//               init (uniform|random), seed
//   [output]    dir, csv, vtk, pgm, report
//
// '#' starts a comment. Unknown sections and keys are errors.

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "schropt/optimize.hpp"
#include "schropt/theory_checks.hpp"

namespace schropt {

// Used as the output directory when the config does not name one.
inline constexpr const char* kOutputDirEnv = "SCHROPT_OUTPUT_DIR";
inline constexpr const char* kDefaultOutputDir = "schropt_output";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OutputToggles {
  bool csv = true;
  bool vtk = true;
  bool pgm = true;
  bool report = true;
};

struct RunConfig {
  std::string problem = "example1";
  ProblemOverrides overrides;
  int nx = 100;
  int ny = 100;
  OptimizerConfig optimizer;
  std::filesystem::path output_dir = kDefaultOutputDir;
  OutputToggles outputs;

  // Resolves the builtin problem; keeps optimizer.vmax in step with it.
  ProblemSpec problem_spec() const;
  Mesh mesh(const ProblemSpec& spec) const;
  void validate() const;
};

RunConfig parse_config(const std::filesystem::path& path);
// `source` only labels error messages.
RunConfig parse_config_text(std::string_view text, std::string_view source = "<config>");

// Shortest decimal string that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

void write_history_csv(std::span<const IterationRecord> records,
                       const std::filesystem::path& path);
std::vector<IterationRecord> read_history_csv(const std::filesystem::path& path);

void write_vtk(const Mesh& mesh, const ScalarField& u, const ScalarField& p,
               const PotentialField& v, const std::filesystem::path& path);
// Reads the `potential` cell array of a file written by write_vtk.
PotentialField read_vtk_potential(const Mesh& mesh, double vmax,
                                  const std::filesystem::path& path);

void write_potential_pgm(const Mesh& mesh, const PotentialField& v, double vmax,
                         const std::filesystem::path& path);

// One value per line, triangle order.
void write_potential_raw(const PotentialField& v, const std::filesystem::path& path);
PotentialField read_potential_raw(const Mesh& mesh, double vmax,
                                  const std::filesystem::path& path);
// Dispatches on the extension: .vtk, anything else raw.
PotentialField read_potential(const Mesh& mesh, double vmax, const std::filesystem::path& path);

struct RunSummary {
  std::string stop_reason;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double constraint_value = 0.0;  // sum_T Psi(V_T)|T|
  double thresholded_area = 0.0;  // |{V_T < vmax/2}|
  double lambda = 0.0;
  double lemma1_relative = 0.0;
  OptimalityReport optimality;
};

RunSummary summarize(const ProblemSpec& spec, const RunResult& result,
                     const OptimizerConfig& cfg);

std::string report_json(const RunSummary& summary);
std::string optimality_json(const OptimalityReport& report);
// Every effective parameter of the run, cross geometry included.
std::string metadata_json(const RunConfig& config, const ProblemSpec& spec, const Mesh& mesh);

void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace schropt
