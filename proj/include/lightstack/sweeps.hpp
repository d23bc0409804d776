#pragma once

// Force maps over (beam-splitter position x cavity length) and the three
// reproduction scenarios: Monte-Carlo self-organized cavity, single atom in a
// symmetrically pumped cavity, and the force map of a Lambda = 1 beam
// splitter inside a left-pumped cavity.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "lightstack/equilibria.hpp"
#include "lightstack/field_solver.hpp"
#include "lightstack/forces.hpp"
#include "lightstack/montecarlo.hpp"
#include "lightstack/parallel.hpp"

namespace lightstack {

/// Radiation-pressure force on a lone scatterer under a unit left pump.
inline double free_space_force(double lambda_param) {
  return lambda_param * lambda_param / (1.0 + lambda_param * lambda_param);
}

/// Empty-cavity resonance length closest to `near` for two identical mirrors
/// (round-trip phase 2kL + 2 arg r = 0 mod 2 pi).
inline double cavity_resonance_length(double mirror_lambda, double near) {
  const double arg_r = std::arg(bs_coefficients(mirror_lambda).r);
  const double m = std::round((kWavenumber * near + arg_r) / std::numbers::pi);
  return (std::numbers::pi * m - arg_r) / kWavenumber;
}

struct CavitySpec {
  double mirror_lambda = 10.0;
  double length_min = 2.5;
  double length_max = 3.5;
  std::size_t n_lengths = 256;
  /// Without mirrors the map reduces to the isolated beam splitter.
  bool mirrors = true;
};

struct BeamSplitterSpec {
  double lambda_param = 1.0;
  double z_min = 0.02;
  double z_max = 2.48;
  std::size_t n_positions = 512;
};

inline std::vector<double> linear_axis(double lo, double hi, std::size_t n) {
  std::vector<double> axis(n);
  for (std::size_t i = 0; i < n; ++i)
    axis[i] = n == 1 ? lo : (i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  return axis;
}

struct SweepGrid {
  std::vector<double> x_axis;  // beam-splitter positions
  std::vector<double> y_axis;  // cavity lengths
  std::vector<double> values;  // force / F0, row-major over (y, x)
  double f0 = 1.0;
  double resonance_length = 0.0;
  bool finite_mirror_standin = true;

  double at(std::size_t iy, std::size_t ix) const { return values[iy * x_axis.size() + ix]; }
  double detuning(std::size_t iy) const { return kWavenumber * (y_axis[iy] - resonance_length); }
};

/// Signed force on the beam splitter at every (z_a, L), left pump of unit
/// amplitude, mirrors at 0 and L.
inline SweepGrid force_map(const CavitySpec& cavity, const BeamSplitterSpec& bs, std::size_t threads = 0) {
  if (cavity.mirrors && !(bs.z_min > 0.0 && bs.z_max < cavity.length_min))
    throw Error(ErrorCode::InvalidArgument, "beam-splitter positions must lie strictly inside every cavity");
  if (bs.n_positions < 2 || cavity.n_lengths < 1) throw Error(ErrorCode::InvalidArgument, "grid too small");

  SweepGrid grid;
  grid.x_axis = linear_axis(bs.z_min, bs.z_max, bs.n_positions);
  grid.y_axis = linear_axis(cavity.length_min, cavity.length_max, cavity.n_lengths);
  grid.f0 = free_space_force(bs.lambda_param);
  grid.resonance_length =
      cavity_resonance_length(cavity.mirror_lambda, 0.5 * (cavity.length_min + cavity.length_max));
  grid.finite_mirror_standin = cavity.mirrors;
  grid.values.assign(grid.x_axis.size() * grid.y_axis.size(), 0.0);

  const std::size_t nx = grid.x_axis.size();
  parallel_for(grid.y_axis.size(), worker_count(threads), [&](std::size_t iy) {
    Stack stack;
    stack.pump = Pump::left_only();
    const std::size_t bs_index = cavity.mirrors ? 1 : 0;
    if (cavity.mirrors) {
      stack.scatterers = {{0.0, cavity.mirror_lambda}, {0.0, bs.lambda_param}, {grid.y_axis[iy], cavity.mirror_lambda}};
    } else {
      stack.scatterers = {{0.0, bs.lambda_param}};
    }
    for (std::size_t ix = 0; ix < nx; ++ix) {
      stack.scatterers[bs_index].position = grid.x_axis[ix];
      grid.values[iy * nx + ix] = force_eq6(solve(stack), bs_index) / grid.f0;
    }
  });
  return grid;
}

struct ForceZero {
  double position;
  bool stable;  // force decreases through zero
};

/// Sign changes of one grid row, located by linear interpolation.
inline std::vector<ForceZero> row_zeros(const SweepGrid& grid, std::size_t iy) {
  std::vector<ForceZero> zeros;
  const std::size_t nx = grid.x_axis.size();
  for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
    const double a = grid.at(iy, ix);
    const double b = grid.at(iy, ix + 1);
    if ((a > 0.0) == (b > 0.0)) continue;
    const double xa = grid.x_axis[ix], xb = grid.x_axis[ix + 1];
    const double z = (a == b) ? xa : xa + (xb - xa) * a / (a - b);
    zeros.push_back({z, b < a});
  }
  return zeros;
}

struct WindowCount {
  double start;
  std::size_t zeros = 0;
  std::size_t stable = 0;
};

/// Zero counts in consecutive half-wavelength windows that fit inside the
/// row's position axis. The windows are anchored in the middle of the widest
/// zero-free stretch (taken modulo lambda/2) so that no window edge sits on a
/// zero; with a lambda/2-periodic row every window then sees one full period.
inline std::vector<WindowCount> half_wavelength_windows(const SweepGrid& grid, std::size_t iy) {
  std::vector<WindowCount> windows;
  const double half = 0.5 * kWavelength;
  const double lo = grid.x_axis.front(), hi = grid.x_axis.back();
  const std::vector<ForceZero> zeros = row_zeros(grid, iy);

  double origin = lo;
  if (!zeros.empty()) {
    std::vector<double> phase;
    for (const ForceZero& z : zeros) phase.push_back(modulo_half_wavelength(z.position));
    std::sort(phase.begin(), phase.end());
    double widest = -1.0, anchor = 0.0;
    for (std::size_t i = 0; i < phase.size(); ++i) {
      const double next = i + 1 < phase.size() ? phase[i + 1] : phase.front() + half;
      if (next - phase[i] > widest) {
        widest = next - phase[i];
        anchor = phase[i] + 0.5 * widest;
      }
    }
    origin = lo + modulo_half_wavelength(anchor - lo);
  }

  for (double start = origin; start + half <= hi + 1e-12; start += half) windows.push_back({start});
  for (const ForceZero& z : zeros) {
    if (z.position < origin) continue;
    const auto w = static_cast<std::size_t>(std::floor((z.position - origin) / half));
    if (w < windows.size()) {
      ++windows[w].zeros;
      if (z.stable) ++windows[w].stable;
    }
  }
  return windows;
}

struct ContourSummary {
  std::size_t cells = 0;
  std::size_t above_10 = 0;        // |F| > 10 F0   (solid)
  std::size_t below_tenth = 0;     // |F| < F0/10   (dashed)
  std::size_t below_1000th = 0;    // |F| < F0/1000 (dotted)
  double min_value = 0.0;
  double max_value = 0.0;

  double fraction(std::size_t count) const { return cells ? static_cast<double>(count) / cells : 0.0; }
};

inline ContourSummary contour_summary(const SweepGrid& grid) {
  ContourSummary s;
  s.cells = grid.values.size();
  if (grid.values.empty()) return s;
  s.min_value = *std::min_element(grid.values.begin(), grid.values.end());
  s.max_value = *std::max_element(grid.values.begin(), grid.values.end());
  for (double v : grid.values) {
    const double a = std::abs(v);
    if (a > 10.0) ++s.above_10;
    if (a < 0.1) ++s.below_tenth;
    if (a < 1e-3) ++s.below_1000th;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Scenario: Monte-Carlo minimization of the dipole energy in free space.

struct Fig1Options {
  std::size_t n_clouds = 100;
  double lambda_param = 0.1;
  std::size_t chains = 4;
  AnnealSchedule schedule;  // seed of chain c is schedule.seed + c
  std::size_t threads = 0;
};

struct Fig1Result {
  double initial_spacing = 0.0;
  MinimizationResult best;
  std::size_t best_chain = 0;
  std::vector<double> chain_final_energies;
  SlabAnalysis slabs;
  ForceReport forces;
  double energy_ratio = 0.0;   // final / initial
  double peak_intensity = 0.0; // interior, per-beam units
};

/// Lattice constant of identical clouds under symmetric drive, (pi - 2 atan Lambda)/(2 pi).
inline double symmetric_lattice_constant(double lambda_param) {
  return lattice_constant_from_phase_slip(2.0 * std::atan(lambda_param));
}

inline Fig1Result scenario_fig1(std::uint64_t seed, const Fig1Options& options = {}) {
  Fig1Result out;
  out.initial_spacing = symmetric_lattice_constant(options.lambda_param);
  const Stack start = regular_lattice(options.n_clouds, out.initial_spacing, options.lambda_param,
                                      Pump::phase_matched(options.n_clouds));

  std::vector<MinimizationResult> chains(options.chains);
  parallel_for(options.chains, worker_count(options.threads), [&](std::size_t c) {
    AnnealSchedule schedule = options.schedule;
    schedule.seed = seed + c;
    chains[c] = anneal(start, schedule);
  });

  for (std::size_t c = 0; c < chains.size(); ++c) {
    out.chain_final_energies.push_back(chains[c].final_energy);
    if (chains[c].final_energy < chains[out.best_chain].final_energy) out.best_chain = c;
  }
  out.best = std::move(chains[out.best_chain]);
  out.slabs = slab_analysis(out.best);
  out.forces = force_vector(out.best.final_stack);
  out.energy_ratio = out.best.final_energy / out.best.initial_energy;
  out.peak_intensity = peak_interior_intensity(out.forces.solution);
  return out;
}

// ---------------------------------------------------------------------------
// Scenario: one weak cloud between two strong mirrors, symmetric drive.

struct Fig2Options {
  double mirror_lambda = 10.0;
  double cavity_length = 1.501;
  double atom_lambda = 0.1;
  std::size_t scan_points = 15001;
  double newton_tol = 1e-12;
};

struct EnergyScanPoint {
  double z;
  double energy;
  double peak_intensity;
};

struct Fig2Result {
  std::vector<EnergyScanPoint> energy_scan;
  Stack energy_minimum;
  double energy_minimum_position = 0.0;
  double energy_minimum_energy = 0.0;
  double energy_minimum_gradient = 0.0;  // dU/dz at the minimum
  double energy_minimum_force = 0.0;
  double energy_minimum_peak = 0.0;      // per-beam units
  Equilibrium equilibrium;
  double equilibrium_peak = 0.0;         // per-beam units
  double antinode_distance = 0.0;
  /// Peak of the undisturbed free-space standing wave, (|E_l| + |E_r|)^2.
  double free_space_peak = 0.0;
};

/// Distance from z to the nearest maximum of |E|^2 in the given region's pattern.
inline double distance_to_antinode(const RegionAmplitudes& region, double z) {
  const double spacing = 0.5 * kWavelength;
  const double first = region.reference_point - std::arg(region.rightward * std::conj(region.leftward)) / (2.0 * kWavenumber);
  const double offset = std::remainder(z - first, spacing);
  return std::abs(offset);
}

inline Fig2Result scenario_fig2(const Fig2Options& options = {}) {
  Fig2Result out;
  Stack stack;
  stack.pump = Pump::symmetric();
  stack.scatterers = {{0.0, options.mirror_lambda}, {0.5 * options.cavity_length, options.atom_lambda},
                      {options.cavity_length, options.mirror_lambda}};
  const std::size_t atom = 1;
  const std::array<std::size_t, 1> mobile{atom};
  const std::array<std::size_t, 2> frozen{0, 2};
  out.free_space_peak = std::pow(std::abs(stack.pump.left) + std::abs(stack.pump.right), 2);

  auto energy_at = [&](double z) {
    Stack s = stack;
    s.scatterers[atom].position = z;
    return dipole_energy(solve(s), mobile);
  };

  // (a) dense scan, then refine the minimum as the root of dU/dz.
  const double margin = 1e-3;
  const auto axis = linear_axis(margin, options.cavity_length - margin, options.scan_points);
  std::size_t best = 0;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    Stack s = stack;
    s.scatterers[atom].position = axis[i];
    const FieldSolution sol = solve(s);
    out.energy_scan.push_back({axis[i], dipole_energy(sol, mobile), peak_interior_intensity(sol)});
    if (out.energy_scan[i].energy < out.energy_scan[best].energy) best = i;
  }
  const double h = kDefaultJacobianStep;
  auto gradient = [&](double z) { return (energy_at(z + h) - energy_at(z - h)) / (2.0 * h); };
  double lo = axis[best > 0 ? best - 1 : 0];
  double hi = axis[std::min(best + 1, axis.size() - 1)];
  double z_min = axis[best];
  if (gradient(lo) < 0.0 && gradient(hi) > 0.0) {
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (gradient(mid) < 0.0 ? lo : hi) = mid;
    }
    z_min = 0.5 * (lo + hi);
  }
  out.energy_minimum = stack;
  out.energy_minimum.scatterers[atom].position = z_min;
  const FieldSolution min_sol = solve(out.energy_minimum);
  out.energy_minimum_position = z_min;
  out.energy_minimum_energy = dipole_energy(min_sol, mobile);
  out.energy_minimum_gradient = gradient(z_min);
  out.energy_minimum_force = force_eq6(min_sol, atom);
  out.energy_minimum_peak = peak_interior_intensity(min_sol);

  // (b) force-free position from the midpoint guess.
  NewtonOptions newton;
  newton.tol = options.newton_tol;
  out.equilibrium = find_equilibrium(stack, frozen, newton);
  const FieldSolution eq_sol = solve(out.equilibrium.stack);
  out.equilibrium_peak = peak_interior_intensity(eq_sol);
  const double z_eq = out.equilibrium.stack.position(atom);
  // Antinode of the mode function: the cavity pattern with the atom removed.
  Stack empty = stack;
  empty.scatterers.erase(empty.scatterers.begin() + static_cast<std::ptrdiff_t>(atom));
  out.antinode_distance = distance_to_antinode(solve(empty).regions[1], z_eq);
  return out;
}

// ---------------------------------------------------------------------------
// Scenario: force map of a Lambda = 1 beam splitter in a left-pumped cavity.

struct Fig3Options {
  CavitySpec cavity;
  BeamSplitterSpec bs;
  std::size_t threads = 0;
};

struct RowCheck {
  std::size_t row = 0;
  std::vector<ForceZero> zeros;
  std::vector<WindowCount> windows;
  /// Each window holds exactly two zeros, one of them stable.
  bool single_stable_per_window = false;
};

struct Fig3Result {
  SweepGrid grid;
  ContourSummary contours;
  std::vector<RowCheck> rows;

  bool all_rows_single_stable() const {
    return std::all_of(rows.begin(), rows.end(), [](const RowCheck& r) { return r.single_stable_per_window; });
  }
};

inline Fig3Result scenario_fig3(const Fig3Options& options = {}) {
  Fig3Result out;
  out.grid = force_map(options.cavity, options.bs, options.threads);
  out.contours = contour_summary(out.grid);
  for (std::size_t iy = 0; iy < out.grid.y_axis.size(); ++iy) {
    RowCheck row;
    row.row = iy;
    row.zeros = row_zeros(out.grid, iy);
    row.windows = half_wavelength_windows(out.grid, iy);
    row.single_stable_per_window = !row.windows.empty() &&
        std::all_of(row.windows.begin(), row.windows.end(),
                    [](const WindowCount& w) { return w.zeros == 2 && w.stable == 1; });
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace lightstack
