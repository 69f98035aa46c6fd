/*
 Copyright 2026 The covsteer Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


// covsteer command line: reference, solve, simulate, compare-mass, census.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "covsteer/artifacts.hpp"
#include "covsteer/error.hpp"
#include "covsteer/initializer.hpp"
#include "covsteer/monte_carlo.hpp"
#include "covsteer/scenario.hpp"
#include "covsteer/steering.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace covsteer {
namespace {

// COVSTEER_LOG: quiet | info (default) | debug.
enum class Verbosity { kQuiet, kInfo, kDebug };

Verbosity verbosity() {
  const char* v = std::getenv("COVSTEER_LOG");
  if (!v || std::string(v) == "info") return Verbosity::kInfo;
  if (std::string(v) == "quiet") return Verbosity::kQuiet;
  if (std::string(v) == "debug") return Verbosity::kDebug;
  throw Error(ErrorCategory::kInvalidArgument,
              fmt::format("COVSTEER_LOG must be quiet, info or debug (got '{}')", v));
}

void info(const std::string& line) {
  if (verbosity() != Verbosity::kQuiet) std::cerr << line << "\n";
}

struct ScenarioOptions {
  std::string scenario_path;
  std::string preset_name;
  std::string mass_stochastic;  // on | off | empty
  std::string terminal_cov;     // upper-bound | equality | empty
  int max_iters = 0;
};

void add_scenario_options(CLI::App* app, ScenarioOptions& o) {
  auto* s = app->add_option("--scenario", o.scenario_path, "scenario file");
  auto* p = app->add_option("--preset", o.preset_name, "bundled preset")
                ->check(CLI::IsMember(preset_names()));
  s->excludes(p);
  app->add_option("--mass-stochastic", o.mass_stochastic, "steer mass as a random state")
      ->check(CLI::IsMember({"on", "off"}));
  app->add_option("--terminal-cov", o.terminal_cov, "terminal covariance constraint")
      ->check(CLI::IsMember({"upper-bound", "equality"}));
  app->add_option("--max-iters", o.max_iters, "SCP iteration limit")->check(CLI::PositiveNumber);
}

Scenario load(const ScenarioOptions& o) {
  if (o.scenario_path.empty() == o.preset_name.empty()) {
    throw Error(ErrorCategory::kInvalidArgument, "give exactly one of --scenario or --preset");
  }
  Scenario s = o.preset_name.empty() ? load_scenario(o.scenario_path) : preset(o.preset_name);
  if (!o.mass_stochastic.empty()) s.solver.mass_stochastic = o.mass_stochastic == "on";
  if (!o.terminal_cov.empty()) s.solver.terminal_mode = parse_terminal_mode(o.terminal_cov);
  if (o.max_iters > 0) s.solver.max_iterations = o.max_iters;
  if (verbosity() == Verbosity::kDebug) s.solver.conic.verbose = true;
  s.validate();
  return s;
}

class Output {
 public:
  explicit Output(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCategory::kIo, "cannot create " + dir + ": " + ec.message());
  }
  void text(const std::string& name, const std::string& content) {
    write_file_atomic((dir_ / name).string(), content);
    files_.push_back(name);
  }
  void table(const Table& t) { text(t.name + ".tsv", format_table(t)); }
  void manifest(json m) {
    m["files"] = files_;
    write_file_atomic((dir_ / "manifest.json").string(), m.dump(2) + "\n");
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

json header(const std::string& command, const Scenario& s) {
  return {{"tool", "covsteer"}, {"command", command}, {"scenario", s.name},
          {"dimension", s.spatial}, {"segments", s.segments},
          {"mass_stochastic", s.solver.mass_stochastic},
          {"terminal_covariance", std::string(to_string(s.solver.terminal_mode))}};
}

ReferenceTrajectory reference_for(const Scenario& s, const std::string& path) {
  if (!path.empty()) return load_reference(path);
  info("building the deterministic reference");
  return solve_reference(s);
}

json metrics_json(const SolutionMetrics& m) {
  return {{"iterations", m.iterations},
          {"final_mass_kg", m.final_mass},
          {"final_mass_std_kg", m.final_mass_std},
          {"peak_position_trace_km2", m.peak_position_trace},
          {"peak_thrust_N", m.peak_thrust}};
}

// Solves and writes every solution artifact into `out`.
ScaledSolution solve_into(const Scenario& scenario, const ReferenceTrajectory& ref, Output& out,
                          double ellipse_scale) {
  info(fmt::format("solving {} ({} segments, mass {})", scenario.name, scenario.segments,
                   scenario.solver.mass_stochastic ? "stochastic" : "known"));
  std::ostringstream log;
  std::ostream* sink = verbosity() == Verbosity::kQuiet ? static_cast<std::ostream*>(&log) : &std::cerr;
  const ScaledSolution solved = solve_scenario(scenario, ref, sink);
  std::string iterations = log_header() + "\n";
  for (const IterationRecord& r : solved.solution.history) iterations += format_record(r) + "\n";
  out.text("scenario.scn", write_scenario(scenario));
  out.text("reference.txt", format_reference(ref));
  out.text("iterations.tsv", iterations);
  const SolutionTables t = solution_tables(solved);
  for (const Table* tab : {&t.nodes, &t.nominal, &t.covariance, &t.feedforward, &t.gains}) out.table(*tab);
  out.table(ellipse_table(solved, "position", 0.95, ellipse_scale));
  out.table(ellipse_table(solved, "velocity", 0.95, ellipse_scale));
  return solved;
}

json certification_json(const Scenario& scenario, const ScaledSolution& solved) {
  const Certification c = certify_scenario(scenario, solved);
  return {{"schur_min_eig", c.schur_min_eig},   {"recursion_residual", c.recursion_residual},
          {"control_slack", c.control_slack},   {"tau_slack", c.tau_slack},
          {"terminal_slack", c.terminal_slack}, {"zeta_max", c.zeta_max}};
}

struct SimulationOptions {
  int samples = 1000;
  std::uint64_t seed = 7;
  int substeps = 20;
  bool no_clip = false;
  std::string scheme = "split-rk4";
  bool dump_samples = false;
};

void add_simulation_options(CLI::App* app, SimulationOptions& o) {
  app->add_option("--samples", o.samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--substeps", o.substeps, "integration substeps per segment")
      ->check(CLI::PositiveNumber);
  app->add_flag("--no-clip", o.no_clip, "do not saturate commanded thrust at u_max");
  app->add_option("--scheme", o.scheme, "SDE scheme")
      ->check(CLI::IsMember({"split-rk4", "euler-maruyama"}));
  app->add_flag("--dump-samples", o.dump_samples, "also write every sample state");
}

json simulate_into(const ScaledSolution& solved, const SimulationOptions& o, Output& out) {
  const MonteCarloConfig cfg{.samples = o.samples,
                             .seed = o.seed,
                             .substeps = o.substeps,
                             .clip = !o.no_clip,
                             .scheme = parse_sde_scheme(o.scheme)};
  info(fmt::format("simulating {} samples (seed {})", o.samples, o.seed));
  const ClosedLoopSystem sys = closed_loop_system(solved);
  const Ensemble e = simulate_closed_loop(sys, cfg);
  const EnsembleStats st = ensemble_stats(e, sys.mass_index);
  const Coverage cov = coverage_check(e, solved.solution.iterate.mean, solved.solution.iterate.P,
                                      solved.spatial, 0.95);
  const std::vector<double> sat = control_satisfaction(e, sys.u_max);
  out.table(ensemble_summary(solved, e, st, cov, sat));
  if (o.dump_samples) out.table(sample_table(solved, e));
  double worst_sat = 1.0;
  for (double v : sat) worst_sat = std::min(worst_sat, v);
  return {{"samples", o.samples},
          {"seed", o.seed},
          {"substeps", o.substeps},
          {"scheme", o.scheme},
          {"clip", !o.no_clip},
          {"flagged", e.flagged_count},
          {"clip_events", e.clip_count},
          {"terminal_inside_position", cov.position.back()},
          {"terminal_inside_velocity", cov.velocity.back()},
          {"min_control_within_bound", worst_sat},
          {"terminal_mass_std_kg", st.mass_std.back() * solved.scales.mass}};
}

int run(int argc, char** argv) {
  CLI::App app{"Robust low-thrust transfer design by covariance steering"};
  app.require_subcommand(1);
  std::string out_dir = ".";
  std::string reference_path;
  double ellipse_scale = 1.0;

  ScenarioOptions ref_opts;
  auto* reference = app.add_subcommand("reference", "solve and save the deterministic reference");
  add_scenario_options(reference, ref_opts);
  reference->add_option("--out", out_dir, "output directory");

  ScenarioOptions solve_opts;
  auto* solve = app.add_subcommand("solve", "covariance steering by sequential convex programming");
  add_scenario_options(solve, solve_opts);
  solve->add_option("--out", out_dir, "output directory");
  solve->add_option("--reference", reference_path, "saved reference trajectory");
  solve->add_option("--ellipse-scale", ellipse_scale, "display scale of ellipse offsets")
      ->check(CLI::PositiveNumber);

  SimulationOptions sim_opts;
  std::string solution_dir;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo validation of a saved solution");
  simulate->add_option("--solution", solution_dir, "directory written by solve")->required();
  simulate->add_option("--out", out_dir, "output directory (default: the solution directory)");
  add_simulation_options(simulate, sim_opts);

  ScenarioOptions cmp_opts;
  SimulationOptions cmp_sim;
  cmp_sim.samples = 0;
  auto* compare = app.add_subcommand("compare-mass", "solve with stochastic and known mass");
  add_scenario_options(compare, cmp_opts);
  compare->add_option("--out", out_dir, "output directory");
  compare->add_option("--reference", reference_path, "saved reference trajectory");
  add_simulation_options(compare, cmp_sim);
  compare->get_option("--samples")->check(CLI::NonNegativeNumber);

  ScenarioOptions census_opts;
  auto* census_cmd = app.add_subcommand("census", "print subproblem sizes");
  add_scenario_options(census_cmd, census_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::kInvalidArgument);
  }

  if (*reference) {
    const Scenario s = load(ref_opts);
    info("building the deterministic reference");
    const ReferenceTrajectory ref = solve_reference(s);
    Output out(out_dir);
    out.text("reference.txt", format_reference(ref));
    json m = header("reference", s);
    m["final_mass_kg"] = ref.nodes.back()(2 * s.spatial);
    out.manifest(m);
    std::cout << fmt::format("reference final mass {:.6f} kg\n", ref.nodes.back()(2 * s.spatial));
  } else if (*solve) {
    const Scenario s = load(solve_opts);
    const ReferenceTrajectory ref = reference_for(s, reference_path);
    Output out(out_dir);
    const ScaledSolution solved = solve_into(s, ref, out, ellipse_scale);
    const SolutionMetrics metrics = solution_metrics(solved);
    json m = header("solve", s);
    m["converged"] = solved.solution.converged;
    m["seconds"] = solved.solution.seconds;
    m["metrics"] = metrics_json(metrics);
    m["certification"] = certification_json(s, solved);
    out.manifest(m);
    std::cout << fmt::format("converged in {} iterations, final mean mass {:.6f} kg", metrics.iterations,
                             metrics.final_mass);
    if (solved.mass_stochastic) std::cout << fmt::format(", terminal mass std {:.6f} kg", metrics.final_mass_std);
    std::cout << "\n";
  } else if (*simulate) {
    const Output in(solution_dir);
    const Scenario s = load_scenario(in.path("scenario.scn"));
    const auto table = [&](const char* name) {
      return parse_table(read_text_file(in.path(std::string(name) + ".tsv")), in.path(name));
    };
    const ScaledSolution solved = solution_from_tables(
        {table("nodes"), table("nominal"), table("covariance"), table("feedforward"), table("gains")}, s);
    Output out(app.got_subcommand(simulate) && simulate->count("--out") ? out_dir : solution_dir);
    json m = header("simulate", s);
    m["monte_carlo"] = simulate_into(solved, sim_opts, out);
    out.manifest(m);
    std::cout << fmt::format("terminal inside-fraction position {:.4f}, velocity {:.4f}\n",
                             m["monte_carlo"]["terminal_inside_position"].get<double>(),
                             m["monte_carlo"]["terminal_inside_velocity"].get<double>());
  } else if (*compare) {
    Scenario s = load(cmp_opts);
    const ReferenceTrajectory ref = reference_for(s, reference_path);
    Output out(out_dir);
    Table t;
    t.name = "compare-mass";
    t.columns = {{"mass_stochastic", "-"},       {"iterations", "-"}, {"final_mass", "kg"},
                 {"peak_position_trace", "km^2"}, {"peak_thrust", "N"}};
    json m = header("compare-mass", s);
    SolutionMetrics legs[2];
    for (int stochastic : {1, 0}) {
      s.solver.mass_stochastic = stochastic == 1;
      const std::string name = stochastic ? "stochastic" : "deterministic";
      Output leg(out.path(name));
      const ScaledSolution solved = solve_into(s, ref, leg, 1.0);
      const SolutionMetrics mt = solution_metrics(solved);
      json lm = header("solve", s);
      lm["metrics"] = metrics_json(mt);
      if (cmp_sim.samples > 0) lm["monte_carlo"] = simulate_into(solved, cmp_sim, leg);
      leg.manifest(lm);
      m[name] = lm["metrics"];
      legs[stochastic] = mt;
      t.rows.push_back({static_cast<double>(stochastic), static_cast<double>(mt.iterations),
                        mt.final_mass, mt.peak_position_trace, mt.peak_thrust});
    }
    out.table(t);
    const double trace_ratio = legs[1].peak_position_trace / legs[0].peak_position_trace;
    const double thrust_ratio = legs[1].peak_thrust / legs[0].peak_thrust;
    m["peak_position_trace_ratio"] = trace_ratio;
    m["peak_thrust_ratio"] = thrust_ratio;
    out.manifest(m);
    std::cout << fmt::format("peak position trace ratio {:.4f} ({:+.2f}%), peak thrust ratio {:.4f} ({:+.2f}%)\n",
                             trace_ratio, 100.0 * (trace_ratio - 1.0), thrust_ratio,
                             100.0 * (thrust_ratio - 1.0));
  } else if (*census_cmd) {
    const Scenario s = load(census_opts);
    const SubproblemCensus c = scenario_census(s);
    std::cout << fmt::format(
        "variables\t{}\nequalities\t{}\nnonnegative_rows\t{}\nsoc_blocks\t{}\npsd_blocks\t{}\ncone_rows\t{}\n",
        c.variables, c.equalities, c.nonnegative_rows, c.soc_blocks, c.psd_blocks, c.cone_rows);
  }
  return 0;
}

}  // namespace
}  // namespace covsteer

int main(int argc, char** argv) {
  try {
    return covsteer::run(argc, argv);
  } catch (const covsteer::Error& e) {
    std::cerr << "error: " << covsteer::category_name(e.category()) << ": " << e.what() << "\n";
    return covsteer::exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 70;
  }
}
