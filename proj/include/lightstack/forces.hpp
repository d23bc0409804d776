#pragma once

// Light-induced force on each scatterer by two independent routes, dipole
// energy, and the finite-difference force Jacobian.
//
// Amplitude route:  F_j = 1/2 (|A|^2 + |B|^2 - |C|^2 - |D|^2)
// Gradient route:   F_j = Lambda/(4k) (d|E|^2/dz(z_j-) + d|E|^2/dz(z_j+))
// Positive force points towards +z.

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lightstack/field_solver.hpp"

namespace lightstack {

namespace detail {

inline void check_index(const FieldSolution& sol, std::size_t j) {
  if (j >= sol.scatterer_count())
    throw Error(ErrorCode::IndexOutOfRange,
                "scatterer " + std::to_string(j) + " of " + std::to_string(sol.scatterer_count()));
}

inline double intensity_slope(const RegionAmplitudes& region, double z) {
  return 2.0 * std::real(std::conj(region.field(z)) * region.gradient(z));
}

}  // namespace detail

inline double force_eq6(const FieldSolution& sol, std::size_t j) {
  detail::check_index(sol, j);
  const auto& left = sol.regions[j];
  const auto& right = sol.regions[j + 1];
  return 0.5 * (std::norm(left.rightward) + std::norm(left.leftward) - std::norm(right.rightward) -
                std::norm(right.leftward));
}

inline double force_eq5(const FieldSolution& sol, std::size_t j) {
  detail::check_index(sol, j);
  const auto& s = sol.stack.scatterers[j];
  const double slope_left = detail::intensity_slope(sol.regions[j], s.position);
  const double slope_right = detail::intensity_slope(sol.regions[j + 1], s.position);
  return s.lambda_param / (4.0 * kWavenumber) * (slope_left + slope_right);
}

/// Net momentum flux carried into the stack by the outer plane waves.
inline double incoming_momentum_flux(const FieldSolution& sol) {
  const auto& first = sol.regions.front();
  const auto& last = sol.regions.back();
  return 0.5 * (std::norm(first.rightward) + std::norm(first.leftward) - std::norm(last.rightward) -
                std::norm(last.leftward));
}

/// Dipole energy of one cloud, -(Lambda/2k)|E(z_j)|^2 per unit area.
inline double dipole_energy_at(const FieldSolution& sol, std::size_t j) {
  detail::check_index(sol, j);
  const auto& s = sol.stack.scatterers[j];
  return -s.lambda_param / (2.0 * kWavenumber) * std::norm(sol.regions[j + 1].field(s.position));
}

struct EnergyReport {
  double total = 0.0;
  std::vector<double> per_scatterer;
};

inline EnergyReport dipole_energy(const FieldSolution& sol) {
  EnergyReport report;
  report.per_scatterer.reserve(sol.scatterer_count());
  for (std::size_t j = 0; j < sol.scatterer_count(); ++j) report.per_scatterer.push_back(dipole_energy_at(sol, j));
  report.total = std::accumulate(report.per_scatterer.begin(), report.per_scatterer.end(), 0.0);
  return report;
}

/// Energy summed over the given scatterers only (e.g. the mobile clouds).
inline double dipole_energy(const FieldSolution& sol, std::span<const std::size_t> indices) {
  double total = 0.0;
  for (std::size_t j : indices) total += dipole_energy_at(sol, j);
  return total;
}

struct ScattererForce {
  double force_eq6 = 0.0;
  double force_eq5 = 0.0;
  double energy = 0.0;
};

struct ForceReport {
  FieldSolution solution;
  std::vector<ScattererForce> per_scatterer;
  double momentum_residual = 0.0;

  double max_abs_force() const {
    double m = 0.0;
    for (const auto& f : per_scatterer) m = std::max(m, std::abs(f.force_eq6));
    return m;
  }
};

inline ForceReport force_vector(const Stack& stack) {
  ForceReport report;
  report.solution = solve(stack);
  const auto& sol = report.solution;
  double sum = 0.0;
  for (std::size_t j = 0; j < sol.scatterer_count(); ++j) {
    ScattererForce f{force_eq6(sol, j), force_eq5(sol, j), dipole_energy_at(sol, j)};
    sum += f.force_eq6;
    report.per_scatterer.push_back(f);
  }
  report.momentum_residual = sum - incoming_momentum_flux(sol);
  return report;
}

/// Amplitude-route forces on the listed scatterers.
inline Eigen::VectorXd forces_on(const Stack& stack, std::span<const std::size_t> indices) {
  const FieldSolution sol = solve(stack);
  Eigen::VectorXd f(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t m = 0; m < indices.size(); ++m) f[static_cast<Eigen::Index>(m)] = force_eq6(sol, indices[m]);
  return f;
}

inline constexpr double kDefaultJacobianStep = 1e-6;

/// Central-difference matrix J(m, n) = dF_{indices[m]} / dz_{indices[n]}.
inline Eigen::MatrixXd force_jacobian(const Stack& stack, std::span<const std::size_t> indices,
                                      double step = kDefaultJacobianStep) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  for (std::size_t col : indices) {
    const double lo = col > 0 ? stack.position(col) - stack.position(col - 1) : INFINITY;
    const double hi = col + 1 < stack.size() ? stack.position(col + 1) - stack.position(col) : INFINITY;
    if (step + kMinimumGap >= std::min(lo, hi))
      throw Error(ErrorCode::StepCausesCrossing, "at index " + std::to_string(col));
  }

  Eigen::MatrixXd jac(n, n);
  Stack probe = stack;
  for (Eigen::Index c = 0; c < n; ++c) {
    const std::size_t col = indices[static_cast<std::size_t>(c)];
    const double z = stack.position(col);
    probe.scatterers[col].position = z + step;
    const Eigen::VectorXd plus = forces_on(probe, indices);
    probe.scatterers[col].position = z - step;
    const Eigen::VectorXd minus = forces_on(probe, indices);
    probe.scatterers[col].position = z;
    jac.col(c) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

/// Jacobian over every scatterer.
inline Eigen::MatrixXd force_jacobian(const Stack& stack, double step = kDefaultJacobianStep) {
  std::vector<std::size_t> all(stack.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return force_jacobian(stack, all, step);
}

}  // namespace lightstack
