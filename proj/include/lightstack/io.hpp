#pragma once

// Configuration documents (JSON) and CSV / JSON writers.

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lightstack/core.hpp"
#include "lightstack/equilibria.hpp"
#include "lightstack/forces.hpp"
#include "lightstack/montecarlo.hpp"
#include "lightstack/sweeps.hpp"

namespace lightstack::io {

using json = nlohmann::json;

/// Shortest-round-trip is not needed for diffing; %.17g always round-trips.
inline std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Config {
  Stack stack;
  std::vector<std::size_t> frozen;
  std::size_t grid_points_per_wavelength = 256;
  std::uint64_t seed = 0;
  std::optional<json> anneal;
  std::optional<json> relax;
  std::optional<json> newton;
  std::optional<json> sweep;
};

namespace detail {

[[noreturn]] inline void bad_field(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, "at " + field + ": " + why);
}

inline double number(const json& j, const std::string& field) {
  if (!j.is_number()) bad_field(field, "expected a number");
  return j.get<double>();
}

inline cplx complex_value(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) bad_field(field, "expected [re, im]");
  return {number(j[0], field + "[0]"), number(j[1], field + "[1]")};
}

inline json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

template <class T>
T unsigned_value(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 0) bad_field(field, "expected a non-negative integer");
  return static_cast<T>(j.get<unsigned long long>());
}

}  // namespace detail

/// Parses a configuration document. Unknown keys are ignored so a manifest
/// can be fed back as configuration.
inline Config parse_config(const json& doc, bool require_stack = true) {
  using detail::bad_field;
  Config cfg;
  if (!doc.is_object()) bad_field("<root>", "expected an object");

  if (doc.contains("scatterers")) {
    const json& list = doc["scatterers"];
    if (!list.is_array()) bad_field("scatterers", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = "scatterers[" + std::to_string(i) + "]";
      const json& s = list[i];
      if (!s.is_object() || !s.contains("position") || !s.contains("lambda"))
        bad_field(at, "expected {position, lambda}");
      const cplx lambda = detail::complex_value(s["lambda"], at + ".lambda");
      if (lambda.imag() != 0.0)
        throw Error(ErrorCode::ComplexPolarizability, "at " + at + ".lambda: only real polarizability is supported");
      cfg.stack.scatterers.push_back({detail::number(s["position"], at + ".position"), lambda.real()});
    }
  } else if (require_stack) {
    bad_field("scatterers", "missing");
  }

  if (doc.contains("pump")) {
    const json& p = doc["pump"];
    if (!p.is_object()) bad_field("pump", "expected {left, right}");
    cfg.stack.pump.left = p.contains("left") ? detail::complex_value(p["left"], "pump.left") : cplx{};
    cfg.stack.pump.right = p.contains("right") ? detail::complex_value(p["right"], "pump.right") : cplx{};
  } else if (require_stack) {
    bad_field("pump", "missing");
  }

  if (doc.contains("grid_points_per_wavelength"))
    cfg.grid_points_per_wavelength =
        detail::unsigned_value<std::size_t>(doc["grid_points_per_wavelength"], "grid_points_per_wavelength");
  if (doc.contains("seed")) cfg.seed = detail::unsigned_value<std::uint64_t>(doc["seed"], "seed");
  if (doc.contains("frozen")) {
    const json& f = doc["frozen"];
    if (!f.is_array()) bad_field("frozen", "expected a list of indices");
    for (std::size_t i = 0; i < f.size(); ++i)
      cfg.frozen.push_back(detail::unsigned_value<std::size_t>(f[i], "frozen[" + std::to_string(i) + "]"));
  }
  for (auto [key, slot] : {std::pair{"anneal", &cfg.anneal}, std::pair{"relax", &cfg.relax},
                           std::pair{"newton", &cfg.newton}, std::pair{"sweep", &cfg.sweep}}) {
    if (doc.contains(key)) {
      if (!doc[key].is_object()) bad_field(key, "expected an object");
      *slot = doc[key];
    }
  }
  return cfg;
}

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, "in " + path.string() + ": " + e.what());
  }
}

inline json stack_json(const Stack& stack) {
  json list = json::array();
  for (const auto& s : stack.scatterers) list.push_back({{"position", s.position}, {"lambda", s.lambda_param}});
  return {{"scatterers", list},
          {"pump", {{"left", detail::complex_json(stack.pump.left)}, {"right", detail::complex_json(stack.pump.right)}}}};
}

// Option blocks. Each reader starts from the module defaults and returns the
// resolved values so they can be echoed into the manifest.

inline AnnealSchedule read_anneal(const std::optional<json>& j, std::uint64_t seed) {
  AnnealSchedule a;
  a.seed = seed;
  if (!j) return a;
  if (j->contains("initial_temperature"))
    a.initial_temperature = detail::number((*j)["initial_temperature"], "anneal.initial_temperature");
  if (j->contains("cooling_factor")) a.cooling_factor = detail::number((*j)["cooling_factor"], "anneal.cooling_factor");
  if (j->contains("sweeps")) a.sweeps = detail::unsigned_value<std::size_t>((*j)["sweeps"], "anneal.sweeps");
  if (j->contains("move_scale")) a.move_scale = detail::number((*j)["move_scale"], "anneal.move_scale");
  return a;
}

inline json to_json(const AnnealSchedule& a) {
  json j = {{"cooling_factor", a.cooling_factor}, {"sweeps", a.sweeps}, {"move_scale", a.move_scale}};
  if (a.initial_temperature) j["initial_temperature"] = *a.initial_temperature;
  return j;
}

inline RelaxOptions read_relax(const std::optional<json>& j) {
  RelaxOptions r;
  if (!j) return r;
  if (j->contains("dt")) r.dt = detail::number((*j)["dt"], "relax.dt");
  if (j->contains("max_steps")) r.max_steps = detail::unsigned_value<std::size_t>((*j)["max_steps"], "relax.max_steps");
  if (j->contains("tol")) r.tol = detail::number((*j)["tol"], "relax.tol");
  if (j->contains("max_displacement")) r.max_displacement = detail::number((*j)["max_displacement"], "relax.max_displacement");
  if (j->contains("step_tolerance")) r.step_tolerance = detail::number((*j)["step_tolerance"], "relax.step_tolerance");
  return r;
}

inline json to_json(const RelaxOptions& r) {
  return {{"dt", r.dt}, {"max_steps", r.max_steps}, {"tol", r.tol}, {"max_displacement", r.max_displacement},
          {"step_tolerance", r.step_tolerance}};
}

inline NewtonOptions read_newton(const std::optional<json>& j) {
  NewtonOptions n;
  if (!j) return n;
  if (j->contains("tol")) n.tol = detail::number((*j)["tol"], "newton.tol");
  if (j->contains("max_iterations"))
    n.max_iterations = detail::unsigned_value<std::size_t>((*j)["max_iterations"], "newton.max_iterations");
  if (j->contains("jacobian_step")) n.jacobian_step = detail::number((*j)["jacobian_step"], "newton.jacobian_step");
  if (j->contains("max_displacement")) n.max_displacement = detail::number((*j)["max_displacement"], "newton.max_displacement");
  return n;
}

inline json to_json(const NewtonOptions& n) {
  return {{"tol", n.tol}, {"max_iterations", n.max_iterations}, {"jacobian_step", n.jacobian_step},
          {"max_displacement", n.max_displacement}};
}

inline std::pair<CavitySpec, BeamSplitterSpec> read_sweep(const std::optional<json>& j) {
  CavitySpec c;
  BeamSplitterSpec b;
  if (!j) return {c, b};
  auto num = [&](const char* key, double& out) {
    if (j->contains(key)) out = detail::number((*j)[key], std::string("sweep.") + key);
  };
  auto count = [&](const char* key, std::size_t& out) {
    if (j->contains(key)) out = detail::unsigned_value<std::size_t>((*j)[key], std::string("sweep.") + key);
  };
  num("mirror_lambda", c.mirror_lambda);
  num("length_min", c.length_min);
  num("length_max", c.length_max);
  count("n_lengths", c.n_lengths);
  num("bs_lambda", b.lambda_param);
  num("z_min", b.z_min);
  num("z_max", b.z_max);
  count("n_positions", b.n_positions);
  if (j->contains("mirrors")) c.mirrors = (*j)["mirrors"].get<bool>();
  return {c, b};
}

inline json to_json(const CavitySpec& c, const BeamSplitterSpec& b) {
  return {{"mirror_lambda", c.mirror_lambda}, {"length_min", c.length_min}, {"length_max", c.length_max},
          {"n_lengths", c.n_lengths}, {"mirrors", c.mirrors}, {"bs_lambda", b.lambda_param},
          {"z_min", b.z_min}, {"z_max", b.z_max}, {"n_positions", b.n_positions}};
}

// ---------------------------------------------------------------------------
// Writers

inline void write_profile_csv(std::ostream& os, const std::vector<ProfileSample>& samples) {
  os << "z,intensity\n";
  for (const auto& s : samples) os << real(s.z) << ',' << real(s.intensity) << '\n';
}

inline void write_forces_csv(std::ostream& os, const ForceReport& report) {
  os << "index,position,lambda,force_eq6,force_eq5,energy\n";
  const Stack& st = report.solution.stack;
  for (std::size_t j = 0; j < report.per_scatterer.size(); ++j) {
    const auto& f = report.per_scatterer[j];
    os << j << ',' << real(st.position(j)) << ',' << real(st.scatterers[j].lambda_param) << ','
       << real(f.force_eq6) << ',' << real(f.force_eq5) << ',' << real(f.energy) << '\n';
  }
}

inline void write_trace_csv(std::ostream& os, const MinimizationResult& r) {
  os << "sweep,energy,acceptance_rate\n";
  for (const auto& t : r.trace) os << t.sweep << ',' << real(t.energy) << ',' << real(t.acceptance_rate) << '\n';
}

/// One row per cloud; `gap` is the distance to the previous cloud (0 for the first).
inline void write_final_csv(std::ostream& os, const MinimizationResult& r) {
  os << "j,position,gap,intensity\n";
  const Stack& st = r.final_stack;
  for (std::size_t j = 0; j < st.size(); ++j) {
    const double gap = j ? st.position(j) - st.position(j - 1) : 0.0;
    os << j << ',' << real(st.position(j)) << ',' << real(gap) << ',' << real(r.intensities_at_clouds[j]) << '\n';
  }
}

/// `j` indexes the mobile clouds; `gap` is measured to the previous one.
inline void write_lattice_csv(std::ostream& os, const LatticeReport& lr) {
  os << "j,gap,chi\n";
  for (std::size_t j = 0; j < lr.phase_slip.size(); ++j)
    os << j << ',' << real(j ? lr.spacings[j - 1] : 0.0) << ',' << real(lr.phase_slip[j]) << '\n';
}

inline void write_grid_csv(std::ostream& os, const SweepGrid& g) {
  os << "z_a,L,force_over_F0\n";
  for (std::size_t iy = 0; iy < g.y_axis.size(); ++iy)
    for (std::size_t ix = 0; ix < g.x_axis.size(); ++ix)
      os << real(g.x_axis[ix]) << ',' << real(g.y_axis[iy]) << ',' << real(g.at(iy, ix)) << '\n';
}

inline void write_energy_scan_csv(std::ostream& os, const std::vector<EnergyScanPoint>& scan) {
  os << "z,energy,peak_intensity\n";
  for (const auto& p : scan) os << real(p.z) << ',' << real(p.energy) << ',' << real(p.peak_intensity) << '\n';
}

inline json to_json(const Equilibrium& eq) {
  json positions = json::array();
  for (const auto& s : eq.stack.scatterers) positions.push_back(s.position);
  auto eigen_list = [](const std::vector<cplx>& v) {
    json out = json::array();
    for (const cplx& c : v) out.push_back(detail::complex_json(c));
    return out;
  };
  json doc = stack_json(eq.stack);
  doc["positions"] = positions;
  doc["mobile"] = eq.mobile;
  doc["residual"] = eq.residual;
  doc["converged"] = eq.converged;
  doc["iterations"] = eq.iterations;
  doc["stability"] = to_string(eq.stability.stability);
  doc["eigenvalues"] = eigen_list(eq.stability.eigenvalues);
  doc["reduced_eigenvalues"] = eigen_list(eq.stability.reduced_eigenvalues);
  doc["envelope_flatness"] = eq.envelope_flatness;
  return doc;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << text;
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  writer(out);
}

}  // namespace lightstack::io
