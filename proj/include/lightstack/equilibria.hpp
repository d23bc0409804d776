#pragma once

// Force-free configurations: overdamped relaxation, Newton root finding,
// linear stability, and the steady-state structure checks (flat envelope,
// perfect lattice, phase slip).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "lightstack/field_solver.hpp"
#include "lightstack/forces.hpp"
#include "lightstack/montecarlo.hpp"

namespace lightstack {

enum class Stability { stable, unstable, marginal };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
  }
  return "unknown";
}

inline constexpr double kStabilityThreshold = 1e-8;

struct StabilityReport {
  Stability stability = Stability::marginal;
  /// Eigenvalues of the force Jacobian over the mobile coordinates.
  std::vector<cplx> eigenvalues;
  /// Eigenvalues after removing the rigid-translation mode (equal to
  /// `eigenvalues` when some scatterer is frozen).
  std::vector<cplx> reduced_eigenvalues;
};

struct Equilibrium {
  Stack stack;
  std::vector<std::size_t> mobile;
  double residual = 0.0;  // max |F| over mobile scatterers
  bool converged = false;
  std::size_t iterations = 0;
  StabilityReport stability;
  double envelope_flatness = 0.0;
};

/// Spread (max - min) of |R_j| plus spread of |L_j| over regions [first, last].
inline double envelope_spread(const FieldSolution& sol, std::size_t first, std::size_t last) {
  double r_min = INFINITY, r_max = 0.0, l_min = INFINITY, l_max = 0.0;
  for (std::size_t j = first; j <= last && j < sol.regions.size(); ++j) {
    const double r = std::abs(sol.regions[j].rightward);
    const double l = std::abs(sol.regions[j].leftward);
    r_min = std::min(r_min, r);
    r_max = std::max(r_max, r);
    l_min = std::min(l_min, l);
    l_max = std::max(l_max, l);
  }
  if (r_min > r_max) return 0.0;
  return (r_max - r_min) + (l_max - l_min);
}

/// Deviation of the interior wave magnitudes from the incoming pump
/// magnitudes; zero when every scatterer passes light unattenuated.
inline double envelope_flatness(const FieldSolution& sol) {
  const double r_in = std::abs(sol.regions.front().rightward);
  const double l_in = std::abs(sol.regions.back().leftward);
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < sol.regions.size(); ++j) {
    worst = std::max(worst, std::abs(std::abs(sol.regions[j].rightward) - r_in) +
                                std::abs(std::abs(sol.regions[j].leftward) - l_in));
  }
  return worst;
}

namespace detail {

/// Envelope spread over each run of consecutive mobile scatterers: all
/// regions touching a force-free scatterer must share |R| and |L|.
inline double mobile_envelope_flatness(const FieldSolution& sol, std::span<const std::size_t> mobile) {
  double worst = 0.0;
  std::size_t k = 0;
  while (k < mobile.size()) {
    std::size_t end = k;
    while (end + 1 < mobile.size() && mobile[end + 1] == mobile[end] + 1) ++end;
    worst = std::max(worst, envelope_spread(sol, mobile[k], mobile[end] + 1));
    k = end + 1;
  }
  return worst;
}

inline double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline bool positions_ordered(const Stack& stack) {
  for (std::size_t j = 1; j < stack.size(); ++j)
    if (stack.position(j) - stack.position(j - 1) < kMinimumGap) return false;
  return true;
}

inline Stack displaced(const Stack& stack, std::span<const std::size_t> mobile, const Eigen::VectorXd& dz) {
  Stack out = stack;
  for (std::size_t m = 0; m < mobile.size(); ++m)
    out.scatterers[mobile[m]].position += dz[static_cast<Eigen::Index>(m)];
  return out;
}

/// Largest usable difference step; zero once two scatterers have merged.
inline double safe_jacobian_step(const Stack& stack, double step) {
  double min_gap = INFINITY;
  for (double g : spacings(stack)) min_gap = std::min(min_gap, g);
  return std::min(step, 0.25 * (min_gap - kMinimumGap));
}

}  // namespace detail

/// Eigen-analysis of the force Jacobian at `stack` over the mobile set.
/// With nothing frozen the stack is translation invariant, and the uniform
/// shift is projected out before classifying.
inline StabilityReport classify_stability(const Stack& stack, std::span<const std::size_t> mobile,
                                          double step = kDefaultJacobianStep) {
  StabilityReport report;
  const double h = detail::safe_jacobian_step(stack, step);
  if (mobile.empty() || !(h > 0.0)) return report;
  const Eigen::MatrixXd jac = force_jacobian(stack, mobile, h);
  const auto n = jac.rows();

  Eigen::EigenSolver<Eigen::MatrixXd> full(jac, false);
  for (Eigen::Index i = 0; i < n; ++i) report.eigenvalues.push_back(full.eigenvalues()[i]);

  const bool translation_invariant = mobile.size() == stack.size();
  if (translation_invariant) {
    if (n == 1) return report;  // a lone free scatterer only has the neutral mode
    // Orthonormal basis of the complement of (1, ..., 1) via Householder QR.
    Eigen::MatrixXd u = Eigen::MatrixXd::Ones(n, 1) / std::sqrt(static_cast<double>(n));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(u);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd basis = q.rightCols(n - 1);
    const Eigen::MatrixXd reduced = basis.transpose() * jac * basis;
    Eigen::EigenSolver<Eigen::MatrixXd> es(reduced, false);
    for (Eigen::Index i = 0; i < reduced.rows(); ++i) report.reduced_eigenvalues.push_back(es.eigenvalues()[i]);
  } else {
    report.reduced_eigenvalues = report.eigenvalues;
  }

  bool all_negative = true, any_positive = false;
  for (const cplx& ev : report.reduced_eigenvalues) {
    if (!(ev.real() < -kStabilityThreshold)) all_negative = false;
    if (ev.real() > kStabilityThreshold) any_positive = true;
  }
  report.stability = all_negative ? Stability::stable : any_positive ? Stability::unstable : Stability::marginal;
  return report;
}

inline StabilityReport classify_stability(const Equilibrium& eq) { return classify_stability(eq.stack, eq.mobile); }

namespace detail {

inline Equilibrium finish(Stack stack, std::vector<std::size_t> mobile, double residual, bool converged,
                          std::size_t iterations) {
  Equilibrium eq;
  eq.stack = std::move(stack);
  eq.mobile = std::move(mobile);
  eq.residual = residual;
  eq.converged = converged;
  eq.iterations = iterations;
  eq.envelope_flatness = mobile_envelope_flatness(solve(eq.stack), eq.mobile);
  eq.stability = classify_stability(eq.stack, eq.mobile);
  return eq;
}

}  // namespace detail

struct RelaxOptions {
  double dt = 1e-2;
  std::size_t max_steps = 200000;
  double tol = 1e-10;
  /// Largest single-step displacement of any scatterer.
  double max_displacement = 0.01;
  /// Local error allowed per step, relative to the step length.
  double step_tolerance = 0.2;
};

/// Overdamped flow dz_j/dt = F_j for the mobile scatterers, integrated with
/// Heun steps; the Euler/Heun difference sets the next step size. Steps that
/// would bring two scatterers within kMinimumGap are retried at half size.
inline Equilibrium relax(const Stack& start, std::span<const std::size_t> frozen, const RelaxOptions& options = {}) {
  std::vector<std::size_t> mobile = mobile_indices(start.size(), frozen);
  Stack current = start;
  Eigen::VectorXd force = forces_on(current, mobile);
  double residual = detail::max_abs(force);
  double dt = options.dt;
  std::size_t step = 0;

  for (; step < options.max_steps && residual >= options.tol; ++step) {
    double h = dt;
    if (residual * h > options.max_displacement) h = options.max_displacement / residual;
    const Stack euler = detail::displaced(current, mobile, h * force);
    if (!detail::positions_ordered(euler)) {
      dt = 0.5 * h;
      continue;
    }
    const Eigen::VectorXd predicted = forces_on(euler, mobile);
    Stack heun = detail::displaced(current, mobile, 0.5 * h * (force + predicted));
    if (!detail::positions_ordered(heun)) {
      dt = 0.5 * h;
      continue;
    }
    const double error = 0.5 * h * detail::max_abs(predicted - force);
    const double allowed = options.step_tolerance * h * residual + 1e-15;
    const double factor = error > 0.0 ? 0.9 * std::sqrt(allowed / error) : 2.0;
    if (error <= allowed) {
      current = std::move(heun);
      force = forces_on(current, mobile);
      residual = detail::max_abs(force);
      dt = h * std::clamp(factor, 1.0, 2.0);
    } else {
      dt = h * std::clamp(factor, 0.1, 0.9);
    }
  }
  const bool converged = residual < options.tol;
  return detail::finish(std::move(current), std::move(mobile), residual, converged, step);
}

/// Relative singular-value cutoff for the minimum-norm Newton solve.
inline constexpr double kRankThreshold = 1e-8;

struct NewtonOptions {
  double tol = 1e-12;
  std::size_t max_iterations = 100;
  double jacobian_step = kDefaultJacobianStep;
  /// Largest Newton displacement of any scatterer per iteration.
  double max_displacement = 0.05;
};

/// Newton iteration on the mobile force vector with backtracking. Rank
/// deficiency from translation symmetry is handled by a minimum-norm solve.
/// When backtracking fails the iterate is advanced by a short relaxation.
inline Equilibrium find_equilibrium(const Stack& start, std::span<const std::size_t> frozen,
                                    const NewtonOptions& options = {}) {
  std::vector<std::size_t> mobile = mobile_indices(start.size(), frozen);
  Stack current = start;
  Eigen::VectorXd force = forces_on(current, mobile);
  double residual = detail::max_abs(force);
  std::size_t iteration = 0;

  // Roundoff floor: below this no Newton step can make further progress.
  std::size_t stalled = 0;
  for (; iteration < options.max_iterations && residual >= options.tol && stalled < 3; ++iteration) {
    const double h = detail::safe_jacobian_step(current, options.jacobian_step);
    if (!(h > 0.0)) break;
    const Eigen::MatrixXd jac = force_jacobian(current, mobile, h);
    // Near-null directions (the rigid translation of a free stack) are
    // dropped; left in, they dominate the step and the clamp below.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(kRankThreshold);
    cod.compute(jac);
    Eigen::VectorXd delta = cod.solve(-force);
    const double biggest = detail::max_abs(delta);
    if (!std::isfinite(biggest)) break;
    if (biggest > options.max_displacement) delta *= options.max_displacement / biggest;

    bool improved = false;
    double alpha = 1.0;
    for (int attempt = 0; attempt < 12; ++attempt, alpha *= 0.5) {
      Stack trial = detail::displaced(current, mobile, alpha * delta);
      if (!detail::positions_ordered(trial)) continue;
      const Eigen::VectorXd trial_force = forces_on(trial, mobile);
      if (trial_force.norm() < force.norm()) {
        current = std::move(trial);
        force = trial_force;
        residual = detail::max_abs(force);
        improved = true;
        break;
      }
    }
    if (improved) {
      stalled = 0;
      continue;
    }
    ++stalled;
    RelaxOptions nudge;
    nudge.max_steps = 200;
    nudge.tol = options.tol;
    const Equilibrium relaxed = relax(current, frozen, nudge);
    if (relaxed.residual < residual) {
      current = relaxed.stack;
      force = forces_on(current, mobile);
      residual = detail::max_abs(force);
      stalled = 0;
    }
  }
  const bool converged = residual < options.tol;
  return detail::finish(std::move(current), std::move(mobile), residual, converged, iteration);
}

struct LatticeReport {
  std::vector<double> spacings;    // gaps between consecutive mobile clouds
  std::vector<double> phase_slip;  // chi for each mobile cloud
  double mean_phase_slip = 0.0;
  double predicted_constant = 0.0;  // (pi - chi) / (2 pi)
};

/// Phase of the standing-wave pattern |E|^2 ~ cos(2kz - Phi) in a region.
inline double pattern_phase(const RegionAmplitudes& region) {
  return 2.0 * kWavenumber * region.reference_point - std::arg(region.rightward * std::conj(region.leftward));
}

/// Lattice constant implied by a phase slip chi: (pi - chi) / (2 pi).
inline double lattice_constant_from_phase_slip(double chi) {
  return kWavelength * (std::numbers::pi - chi) / (2.0 * std::numbers::pi);
}

/// Reduces a length to [0, lambda/2).
inline double modulo_half_wavelength(double length) {
  const double half = 0.5 * kWavelength;
  double r = std::fmod(length, half);
  if (r < 0.0) r += half;
  return r;
}

/// Distance between two lengths on the circle of circumference lambda/2.
inline double half_wavelength_distance(double a, double b) {
  const double diff = modulo_half_wavelength(a - b);
  return std::min(diff, 0.5 * kWavelength - diff);
}

inline LatticeReport lattice_report(const Stack& stack, std::span<const std::size_t> mobile) {
  if (mobile.empty()) throw Error(ErrorCode::NotIdenticalClouds, "no mobile clouds");
  const double lambda0 = stack.scatterers[mobile.front()].lambda_param;
  for (std::size_t j : mobile)
    if (stack.scatterers[j].lambda_param != lambda0)
      throw Error(ErrorCode::NotIdenticalClouds, "at index " + std::to_string(j));

  const FieldSolution sol = solve(stack);
  LatticeReport report;
  for (std::size_t m = 1; m < mobile.size(); ++m)
    report.spacings.push_back(stack.position(mobile[m]) - stack.position(mobile[m - 1]));

  // The pattern's phase jumps by psi across a cloud; in field-phase terms
  // chi = -psi/2, taken modulo pi into (-pi/2, pi/2].
  double sum = 0.0;
  for (std::size_t j : mobile) {
    const double psi = pattern_phase(sol.regions[j + 1]) - pattern_phase(sol.regions[j]);
    double chi = std::remainder(-0.5 * psi, std::numbers::pi);
    if (chi <= -0.5 * std::numbers::pi) chi += std::numbers::pi;
    report.phase_slip.push_back(chi);
    sum += chi;
  }
  report.mean_phase_slip = sum / static_cast<double>(mobile.size());
  report.predicted_constant = lattice_constant_from_phase_slip(report.mean_phase_slip);
  return report;
}

inline LatticeReport lattice_report(const Equilibrium& eq) { return lattice_report(eq.stack, eq.mobile); }

}  // namespace lightstack
