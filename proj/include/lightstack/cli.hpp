#pragma once

// Command-line front end. `run` is kept in a header so tests can drive it
// in-process; tools/lightstack.cpp is a thin main().

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "lightstack/io.hpp"

namespace lightstack::cli {

inline constexpr const char* kToolName = "lightstack";
inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kSuccess = 0, kValidationError = 1, kNotConverged = 2 };

namespace detail {

using io::json;
namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> grid;
  std::optional<double> tol;
  std::optional<std::size_t> max_steps;
  std::size_t threads = 0;
  // scenario / sweep resolution
  std::optional<std::size_t> nx, ny;
  std::optional<std::size_t> chains, clouds;
  std::string scenario;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Session {
 public:
  Session(std::string subcommand, const Flags& flags) : flags_(flags) {
    manifest_["tool"] = kToolName;
    manifest_["version"] = kVersion;
    manifest_["subcommand"] = std::move(subcommand);
    manifest_["config_path"] = flags.config;
    manifest_["output_directory"] = flags.out;
    manifest_["timestamp"] = utc_timestamp();
    manifest_["threads"] = worker_count(flags.threads);
    manifest_["outputs"] = json::array();
  }

  json& manifest() { return manifest_; }

  fs::path path(const std::string& name) {
    fs::create_directories(flags_.out);
    manifest_["outputs"].push_back(name);
    return fs::path(flags_.out) / name;
  }

  template <class Writer>
  void csv(const std::string& name, Writer&& writer) {
    io::write_file(path(name), std::forward<Writer>(writer));
  }

  void json_file(const std::string& name, const json& doc) { io::write_text(path(name), doc.dump(2) + "\n"); }

  void finish() {
    fs::create_directories(flags_.out);
    io::write_text(fs::path(flags_.out) / "manifest.json", manifest_.dump(2) + "\n");
  }

 private:
  const Flags& flags_;
  json manifest_;
};

/// Loads the config and applies the command-line overrides.
inline io::Config load_config(const Flags& flags, bool require_stack = true) {
  io::Config cfg;
  if (!flags.config.empty()) {
    cfg = io::parse_config(io::load_json(flags.config), require_stack);
  } else if (require_stack) {
    throw Error(ErrorCode::InvalidConfig, "at --config: a configuration file is required");
  }
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.grid) cfg.grid_points_per_wavelength = *flags.grid;
  if (cfg.grid_points_per_wavelength == 0)
    throw Error(ErrorCode::InvalidConfig, "at grid_points_per_wavelength: must be positive");
  if (require_stack) {
    cfg.stack = validate_stack(cfg.stack);
    for (std::size_t j : cfg.frozen)
      if (j >= cfg.stack.size()) throw Error(ErrorCode::IndexOutOfRange, "at frozen: index " + std::to_string(j));
  }
  return cfg;
}

inline void echo_config(json& manifest, const io::Config& cfg) {
  const json s = io::stack_json(cfg.stack);
  manifest["scatterers"] = s["scatterers"];
  manifest["pump"] = s["pump"];
  manifest["frozen"] = cfg.frozen;
  manifest["seed"] = cfg.seed;
  manifest["grid_points_per_wavelength"] = cfg.grid_points_per_wavelength;
}

/// Samples one wavelength beyond each outer scatterer.
inline std::vector<ProfileSample> default_profile(const FieldSolution& sol, std::size_t per_wavelength) {
  const double lo = sol.stack.position(0) - kWavelength;
  const double hi = sol.stack.position(sol.stack.size() - 1) + kWavelength;
  const auto points = static_cast<std::size_t>(std::ceil((hi - lo) / kWavelength * per_wavelength)) + 1;
  return intensity_profile(sol, lo, hi, points);
}

inline bool identical_mobile(const Stack& stack, const std::vector<std::size_t>& mobile) {
  if (mobile.size() < 2) return false;
  for (std::size_t j : mobile)
    if (stack.scatterers[j].lambda_param != stack.scatterers[mobile[0]].lambda_param) return false;
  return true;
}

inline json slab_json(const SlabAnalysis& a) {
  json slabs = json::array();
  for (const auto& s : a.slabs)
    slabs.push_back({{"first", s.first}, {"last", s.last}, {"mean_spacing", s.mean_spacing},
                     {"decay_rate", s.decay_rate}, {"decay_r2", s.decay_r2}});
  json doc = {{"slabs", slabs}, {"has_core", a.has_core}, {"mid_gap_intensity", a.mid_gap_intensity},
              {"decays_outward", a.decays_outward}, {"has_slab_structure", a.has_slab_structure()}};
  if (a.has_core) {
    doc["core_first"] = a.core_first;
    doc["core_last"] = a.core_last;
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_solve(const Flags& flags) {
  const io::Config cfg = load_config(flags);
  Session session("solve", flags);
  echo_config(session.manifest(), cfg);
  const FieldSolution sol = solve(cfg.stack);
  const auto profile = default_profile(sol, cfg.grid_points_per_wavelength);
  session.csv("profile.csv", [&](std::ostream& os) { io::write_profile_csv(os, profile); });
  session.finish();
  return kSuccess;
}

inline int cmd_forces(const Flags& flags) {
  const io::Config cfg = load_config(flags);
  Session session("forces", flags);
  echo_config(session.manifest(), cfg);
  const ForceReport report = force_vector(cfg.stack);
  session.csv("forces.csv", [&](std::ostream& os) { io::write_forces_csv(os, report); });
  session.json_file("summary.json", {{"momentum_residual", report.momentum_residual},
                                     {"max_abs_force", report.max_abs_force()},
                                     {"incoming_momentum_flux", incoming_momentum_flux(report.solution)}});
  session.finish();
  return kSuccess;
}

inline int write_equilibrium(Session& session, const io::Config& cfg, const Equilibrium& eq) {
  session.json_file("equilibrium.json", io::to_json(eq));
  const ForceReport report = force_vector(eq.stack);
  session.csv("forces.csv", [&](std::ostream& os) { io::write_forces_csv(os, report); });
  const auto profile = default_profile(report.solution, cfg.grid_points_per_wavelength);
  session.csv("profile.csv", [&](std::ostream& os) { io::write_profile_csv(os, profile); });
  if (identical_mobile(eq.stack, eq.mobile)) {
    const LatticeReport lr = lattice_report(eq);
    session.csv("lattice.csv", [&](std::ostream& os) { io::write_lattice_csv(os, lr); });
  }
  session.finish();
  return eq.converged ? kSuccess : kNotConverged;
}

inline int cmd_relax(const Flags& flags) {
  const io::Config cfg = load_config(flags);
  RelaxOptions options = io::read_relax(cfg.relax);
  if (flags.tol) options.tol = *flags.tol;
  if (flags.max_steps) options.max_steps = *flags.max_steps;
  Session session("relax", flags);
  echo_config(session.manifest(), cfg);
  session.manifest()["relax"] = io::to_json(options);
  return write_equilibrium(session, cfg, relax(cfg.stack, cfg.frozen, options));
}

inline int cmd_equilibrate(const Flags& flags) {
  const io::Config cfg = load_config(flags);
  NewtonOptions options = io::read_newton(cfg.newton);
  if (flags.tol) options.tol = *flags.tol;
  if (flags.max_steps) options.max_iterations = *flags.max_steps;
  Session session("equilibrate", flags);
  echo_config(session.manifest(), cfg);
  session.manifest()["newton"] = io::to_json(options);
  return write_equilibrium(session, cfg, find_equilibrium(cfg.stack, cfg.frozen, options));
}

inline void write_minimization(Session& session, const MinimizationResult& r, std::size_t per_wavelength) {
  session.csv("trace.csv", [&](std::ostream& os) { io::write_trace_csv(os, r); });
  session.csv("final.csv", [&](std::ostream& os) { io::write_final_csv(os, r); });
  const ForceReport report = force_vector(r.final_stack);
  session.csv("forces.csv", [&](std::ostream& os) { io::write_forces_csv(os, report); });
  const auto profile = default_profile(report.solution, per_wavelength);
  session.csv("profile.csv", [&](std::ostream& os) { io::write_profile_csv(os, profile); });
}

inline int cmd_minimize(const Flags& flags) {
  const io::Config cfg = load_config(flags);
  AnnealSchedule schedule = io::read_anneal(cfg.anneal, cfg.seed);
  if (flags.max_steps) schedule.sweeps = *flags.max_steps;
  schedule.validate();
  Session session("minimize", flags);
  echo_config(session.manifest(), cfg);
  session.manifest()["anneal"] = io::to_json(schedule);
  const MinimizationResult r = anneal(cfg.stack, schedule, cfg.frozen);
  write_minimization(session, r, cfg.grid_points_per_wavelength);
  session.json_file("summary.json", {{"initial_energy", r.initial_energy},
                                     {"final_energy", r.final_energy},
                                     {"accepted_moves", r.accepted_moves},
                                     {"bookkeeping_error", r.bookkeeping_error},
                                     {"slab_analysis", slab_json(slab_analysis(r))}});
  session.finish();
  return kSuccess;
}

inline json contour_json(const SweepGrid& g) {
  const ContourSummary c = contour_summary(g);
  return {{"f0", g.f0}, {"resonance_length", g.resonance_length}, {"cells", c.cells},
          {"fraction_above_10", c.fraction(c.above_10)}, {"fraction_below_0.1", c.fraction(c.below_tenth)},
          {"fraction_below_0.001", c.fraction(c.below_1000th)}, {"min", c.min_value}, {"max", c.max_value},
          {"finite_mirror_standin", g.finite_mirror_standin}};
}

inline std::pair<CavitySpec, BeamSplitterSpec> sweep_specs(const Flags& flags, const io::Config& cfg) {
  auto [cavity, bs] = io::read_sweep(cfg.sweep);
  if (flags.nx) bs.n_positions = *flags.nx;
  if (flags.ny) cavity.n_lengths = *flags.ny;
  return {cavity, bs};
}

inline int cmd_sweep(const Flags& flags) {
  const io::Config cfg = load_config(flags, false);
  const auto [cavity, bs] = sweep_specs(flags, cfg);
  Session session("sweep", flags);
  session.manifest()["sweep"] = io::to_json(cavity, bs);
  const SweepGrid grid = force_map(cavity, bs, flags.threads);
  session.csv("grid.csv", [&](std::ostream& os) { io::write_grid_csv(os, grid); });
  session.json_file("summary.json", contour_json(grid));
  session.finish();
  return kSuccess;
}

inline int scenario_fig1(const Flags& flags, const io::Config& cfg) {
  Fig1Options options;
  options.schedule = io::read_anneal(cfg.anneal, cfg.seed);
  if (flags.max_steps) options.schedule.sweeps = *flags.max_steps;
  if (flags.chains) options.chains = *flags.chains;
  if (flags.clouds) options.n_clouds = *flags.clouds;
  options.threads = flags.threads;
  options.schedule.validate();
  if (options.chains == 0 || options.n_clouds < 2)
    throw Error(ErrorCode::InvalidArgument, "at --chains/--clouds: need at least one chain and two clouds");

  Session session("scenario fig1", flags);
  json& m = session.manifest();
  m["scenario"] = "fig1";
  m["seed"] = cfg.seed;
  m["grid_points_per_wavelength"] = cfg.grid_points_per_wavelength;
  m["anneal"] = io::to_json(options.schedule);
  m["chains"] = options.chains;
  m["n_clouds"] = options.n_clouds;
  m["cloud_lambda"] = options.lambda_param;

  const Fig1Result r = lightstack::scenario_fig1(cfg.seed, options);
  write_minimization(session, r.best, cfg.grid_points_per_wavelength);
  session.json_file("summary.json", {{"initial_spacing", r.initial_spacing},
                                     {"initial_energy", r.best.initial_energy},
                                     {"final_energy", r.best.final_energy},
                                     {"energy_ratio", r.energy_ratio},
                                     {"peak_intensity", r.peak_intensity},
                                     {"best_chain", r.best_chain},
                                     {"chain_final_energies", r.chain_final_energies},
                                     {"bookkeeping_error", r.best.bookkeeping_error},
                                     {"slab_analysis", slab_json(r.slabs)}});
  session.finish();
  return kSuccess;
}

inline int scenario_fig2(const Flags& flags, const io::Config& cfg) {
  Fig2Options options;
  if (flags.tol) options.newton_tol = *flags.tol;
  Session session("scenario fig2", flags);
  json& m = session.manifest();
  m["scenario"] = "fig2";
  m["grid_points_per_wavelength"] = cfg.grid_points_per_wavelength;
  m["mirror_lambda"] = options.mirror_lambda;
  m["cavity_length"] = options.cavity_length;
  m["atom_lambda"] = options.atom_lambda;
  m["scan_points"] = options.scan_points;
  m["newton_tol"] = options.newton_tol;

  const Fig2Result r = lightstack::scenario_fig2(options);
  session.csv("energy_scan.csv", [&](std::ostream& os) { io::write_energy_scan_csv(os, r.energy_scan); });
  const auto min_profile = default_profile(solve(r.energy_minimum), cfg.grid_points_per_wavelength);
  session.csv("profile_energy_minimum.csv", [&](std::ostream& os) { io::write_profile_csv(os, min_profile); });
  const auto eq_profile = default_profile(solve(r.equilibrium.stack), cfg.grid_points_per_wavelength);
  session.csv("profile_equilibrium.csv", [&](std::ostream& os) { io::write_profile_csv(os, eq_profile); });
  session.json_file("equilibrium.json", io::to_json(r.equilibrium));
  session.json_file("summary.json",
                    {{"energy_minimum_position", r.energy_minimum_position},
                     {"energy_minimum_energy", r.energy_minimum_energy},
                     {"energy_minimum_gradient", r.energy_minimum_gradient},
                     {"energy_minimum_force", r.energy_minimum_force},
                     {"energy_minimum_peak", r.energy_minimum_peak},
                     {"free_space_peak", r.free_space_peak},
                     {"energy_minimum_peak_over_free_space", r.energy_minimum_peak / r.free_space_peak},
                     {"equilibrium_position", r.equilibrium.stack.position(1)},
                     {"equilibrium_residual", r.equilibrium.residual},
                     {"equilibrium_stability", to_string(r.equilibrium.stability.stability)},
                     {"equilibrium_peak", r.equilibrium_peak},
                     // "Free-space value" read both as one beam and as the standing-wave peak.
                     {"equilibrium_peak_below_single_beam", r.equilibrium_peak < 1.0},
                     {"equilibrium_peak_below_standing_wave", r.equilibrium_peak < r.free_space_peak},
                     {"antinode_distance", r.antinode_distance}});
  session.finish();
  return r.equilibrium.converged ? kSuccess : kNotConverged;
}

inline int scenario_fig3(const Flags& flags, const io::Config& cfg) {
  Fig3Options options;
  std::tie(options.cavity, options.bs) = sweep_specs(flags, cfg);
  options.threads = flags.threads;
  Session session("scenario fig3", flags);
  session.manifest()["scenario"] = "fig3";
  session.manifest()["sweep"] = io::to_json(options.cavity, options.bs);

  const Fig3Result r = lightstack::scenario_fig3(options);
  session.csv("grid.csv", [&](std::ostream& os) { io::write_grid_csv(os, r.grid); });
  json summary = contour_json(r.grid);
  std::size_t good = 0;
  for (const auto& row : r.rows) good += row.single_stable_per_window;
  summary["rows"] = r.rows.size();
  summary["rows_single_stable_per_window"] = good;
  session.json_file("summary.json", summary);
  session.finish();
  return kSuccess;
}

inline int cmd_scenario(const Flags& flags) {
  const io::Config cfg = load_config(flags, false);
  if (flags.scenario == "fig1") return scenario_fig1(flags, cfg);
  if (flags.scenario == "fig2") return scenario_fig2(flags, cfg);
  if (flags.scenario == "fig3") return scenario_fig3(flags, cfg);
  throw Error(ErrorCode::InvalidArgument, "at scenario: unknown name " + flags.scenario);
}

}  // namespace detail

/// Runs the tool. args[0] is the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using detail::Flags;
  Flags flags;
  CLI::App app{"Light-induced forces on 1D stacks of thin scatterers", kToolName};
  app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", flags.config, "Configuration file (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", flags.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", flags.seed, "Random seed override");
    sub->add_option("--grid", flags.grid, "Profile samples per wavelength");
    sub->add_option("--tol", flags.tol, "Convergence tolerance on max |F|");
    sub->add_option("--max-steps", flags.max_steps, "Step / iteration / sweep limit");
    sub->add_option("--threads", flags.threads, "Worker cap (0: LIGHTSTACK_THREADS or all cores)");
  };

  std::vector<std::pair<CLI::App*, int (*)(const Flags&)>> commands;
  auto add = [&](const char* name, const char* help, int (*fn)(const Flags&), bool config_required) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, config_required);
    commands.emplace_back(sub, fn);
    return sub;
  };
  add("solve", "Field intensity profile", detail::cmd_solve, true);
  add("forces", "Per-scatterer forces and energies", detail::cmd_forces, true);
  add("relax", "Overdamped relaxation to a force-free state", detail::cmd_relax, true);
  add("equilibrate", "Newton search for a force-free state", detail::cmd_equilibrate, true);
  add("minimize", "Simulated annealing of the dipole energy", detail::cmd_minimize, true);
  for (CLI::App* sub : {add("sweep", "Force map of a beam splitter inside a cavity", detail::cmd_sweep, false),
                        add("scenario", "Reproduce a reference scenario", detail::cmd_scenario, false)}) {
    sub->add_option("--nx", flags.nx, "Beam-splitter positions");
    sub->add_option("--ny", flags.ny, "Cavity lengths");
  }
  CLI::App* scenario = commands.back().first;
  scenario->add_option("name", flags.scenario, "fig1 | fig2 | fig3")->required()->check(CLI::IsMember({"fig1", "fig2", "fig3"}));
  scenario->add_option("--chains", flags.chains, "Independent annealing chains (fig1)");
  scenario->add_option("--clouds", flags.clouds, "Number of clouds (fig1)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kValidationError;
  }

  try {
    for (const auto& [sub, fn] : commands)
      if (sub->parsed()) return fn(flags);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kValidationError;
  } catch (const nlohmann::json::exception& e) {
    err << "InvalidConfig " << e.what() << "\n";
    return kValidationError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "InvalidArgument " << e.what() << "\n";
    return kValidationError;
  }
  return kValidationError;
}

inline int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace lightstack::cli
