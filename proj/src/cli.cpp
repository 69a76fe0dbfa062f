#include "schropt/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "schropt/io.hpp"

namespace schropt {

namespace {

namespace fs = std::filesystem;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

int cmd_run(const std::string& config_path, const std::string& output_override,
            std::ostream& out) {
  RunConfig config = parse_config(config_path);
  if (!output_override.empty()) config.output_dir = output_override;
  const ProblemSpec spec = config.problem_spec();
  const Mesh mesh = config.mesh(spec);
  ensure_directory(config.output_dir);
  write_text_file(config.output_dir / "run_metadata.json", metadata_json(config, spec, mesh));

  const auto start = std::chrono::steady_clock::now();
  const auto v0 = initial_potential(mesh, spec, config.optimizer);
  const RunResult result = run(spec, config.optimizer, v0);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path& dir = config.output_dir;
  write_potential_raw(result.potential, dir / "potential.txt");
  if (config.outputs.csv) write_history_csv(result.history, dir / "history.csv");
  if (config.outputs.vtk) {
    write_vtk(mesh, result.state, result.adjoint, result.potential, dir / "fields.vtk");
  }
  if (config.outputs.pgm) {
    write_potential_pgm(mesh, result.potential, spec.vmax, dir / "potential.pgm");
  }
  const RunSummary summary = summarize(spec, result, config.optimizer);
  if (config.outputs.report) write_text_file(dir / "report.json", report_json(summary));

  out << "problem: " << spec.name << " (" << mesh.nx() << "x" << mesh.ny() << ")\n"
      << "stop: " << summary.stop_reason << " after " << summary.iterations << " iterations ("
      << format_double(std::round(seconds * 10.0) / 10.0) << " s)\n"
      << "cost: " << format_double(summary.initial_cost) << " -> "
      << format_double(summary.final_cost) << '\n'
      << "constraint value: " << format_double(summary.constraint_value) << " (m = "
      << format_double(spec.m) << ")\n"
      << "thresholded area: " << format_double(summary.thresholded_area) << '\n'
      << "lambda: " << format_double(summary.lambda) << '\n'
      << "stationarity (relative): "
      << format_double(summary.optimality.relative(
             summary.optimality.stationarity_residual_interior))
      << '\n'
      << "lemma1 max (relative): " << format_double(summary.lemma1_relative) << '\n'
      << "output: " << dir.string() << '\n';
  return kExitOk;
}

int cmd_check_gradient(const std::string& config_path, std::size_t count, double h,
                       double tolerance, std::optional<std::uint64_t> seed, std::ostream& out) {
  const RunConfig config = parse_config(config_path);
  const ProblemSpec spec = config.problem_spec();
  const Mesh mesh = config.mesh(spec);
  const std::uint64_t s = seed.value_or(config.optimizer.seed);

  // Random potential around the uniform feasible level, kept clear of the box
  // bounds so V_T +- h stays admissible.
  OptimizerConfig base = config.optimizer;
  base.init = Initialization::uniform;
  const double level = initial_potential(mesh, spec, base)[0];
  const double centre = std::clamp(level, 0.05 * spec.vmax, 0.5 * spec.vmax);
  std::mt19937_64 rng(s);
  std::uniform_real_distribution<double> dist(0.5 * centre, 1.5 * centre);
  std::vector<double> values(mesh.num_triangles());
  for (double& v : values) v = dist(rng);
  const PotentialField v(mesh, std::move(values), spec.vmax);

  const auto elements = sample_interior_elements(mesh, count, s + 1);
  const auto check = check_gradient(spec, v, elements, h, {1e-14, config.optimizer.lumping()});
  out << "element,analytic,finite_difference,relative_error\n";
  for (std::size_t k = 0; k < elements.size(); ++k) {
    out << elements[k] << ',' << format_double(check.analytic[k]) << ','
        << format_double(check.finite_difference[k]) << ','
        << format_double(check.relative_error[k]) << '\n';
  }
  out << "max relative error: " << format_double(check.max_relative_error) << '\n';
  if (!(check.max_relative_error <= tolerance)) {
    throw SolverFailure("gradient check: max relative error " +
                            format_double(check.max_relative_error) + " exceeds " +
                            format_double(tolerance),
                        check.max_relative_error, 0);
  }
  return kExitOk;
}

int cmd_diagnose(const std::string& config_path, const std::string& potential_path,
                 std::optional<double> lambda, std::ostream& out) {
  const RunConfig config = parse_config(config_path);
  const ProblemSpec spec = config.problem_spec();
  const Mesh mesh = config.mesh(spec);
  if (!fs::exists(potential_path)) throw IoError("no such file '" + potential_path + "'");
  const PotentialField v = read_potential(mesh, spec.vmax, potential_path);
  const SolverOptions options{config.optimizer.solver_tolerance, config.optimizer.lumping()};
  const double lam = lambda.value_or(
      estimate_multiplier(spec, v, config.optimizer.bisection_tol, options));
  const auto report = necessary_conditions(spec, v, lam, config.optimizer.bisection_tol, options);
  out << optimality_json(report);
  return kExitOk;
}

int cmd_mesh_info(const std::string& config_path, std::ostream& out) {
  const RunConfig config = parse_config(config_path);
  const ProblemSpec spec = config.problem_spec();
  const Mesh mesh = config.mesh(spec);
  const auto& areas = mesh.element_areas();
  const auto [amin, amax] = std::minmax_element(areas.begin(), areas.end());
  double total = 0.0;
  for (double a : areas) total += a;
  std::size_t boundary = 0;
  for (bool b : mesh.boundary_mask()) boundary += b ? 1 : 0;
  out << "nx: " << mesh.nx() << '\n'
      << "ny: " << mesh.ny() << '\n'
      << "nodes: " << mesh.num_nodes() << '\n'
      << "triangles: " << mesh.num_triangles() << '\n'
      << "boundary nodes: " << boundary << '\n'
      << "interior nodes: " << mesh.num_nodes() - boundary << '\n'
      << "dx: " << format_double(mesh.dx()) << '\n'
      << "dy: " << format_double(mesh.dy()) << '\n'
      << "element area min: " << format_double(*amin) << '\n'
      << "element area max: " << format_double(*amax) << '\n'
      << "total area: " << format_double(total) << '\n';
  if (spec.cross) out << "cross area: " << format_double(spec.cross->area()) << '\n';
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal potentials for -Lap u + V u = f under an integral constraint on V",
               "schropt"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  auto* run_cmd = app.add_subcommand("run", "optimize and write csv/vtk/pgm/report");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("-o,--output-dir", output_dir, "overrides [output] dir");

  std::size_t fd_count = 20;
  double fd_h = 1e-4;
  double fd_tol = 1e-6;
  std::optional<std::uint64_t> fd_seed;
  auto* grad_cmd =
      app.add_subcommand("check-gradient", "adjoint gradient vs central differences");
  grad_cmd->add_option("config", config_path, "config file")->required();
  grad_cmd->add_option("-n,--elements", fd_count, "number of sampled elements")
      ->capture_default_str();
  grad_cmd->add_option("--step", fd_h, "difference step h")->capture_default_str();
  grad_cmd->add_option("--tolerance", fd_tol, "maximum relative error")->capture_default_str();
  grad_cmd->add_option("--seed", fd_seed, "defaults to [optimizer] seed");

  std::string potential_path;
  std::optional<double> lambda;
  auto* diag_cmd =
      app.add_subcommand("diagnose", "first-order optimality report for a saved potential");
  diag_cmd->add_option("config", config_path, "config file")->required();
  diag_cmd->add_option("potential", potential_path, ".vtk file or raw value list")->required();
  diag_cmd->add_option("--lambda", lambda, "multiplier; estimated when omitted");

  auto* mesh_cmd = app.add_subcommand("mesh-info", "mesh counts and areas");
  mesh_cmd->add_option("config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error[validation]: " << e.what() << '\n' << app.help();
    return kExitValidation;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, output_dir, out);
    if (grad_cmd->parsed()) {
      if (fd_count == 0) throw std::invalid_argument("--elements must be >= 1");
      if (!(fd_h > 0.0)) throw std::invalid_argument("--step must be > 0");
      return cmd_check_gradient(config_path, fd_count, fd_h, fd_tol, fd_seed, out);
    }
    if (diag_cmd->parsed()) {
      if (lambda && !(*lambda >= 0.0)) throw std::invalid_argument("--lambda must be >= 0");
      return cmd_diagnose(config_path, potential_path, lambda, out);
    }
    return cmd_mesh_info(config_path, out);
  } catch (const SolverFailure& e) {
    err << "error[numerical]: " << e.what() << " (residual " << format_double(e.residual())
        << ")\n";
    return kExitNumerical;
  } catch (const MultiplierFailure& e) {
    err << "error[numerical]: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error[validation]: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error[io]: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace schropt
