#pragma once

// Stochastic minimization of the total dipole energy over cloud positions.
//
// Single-cloud Gaussian moves with Metropolis acceptance and geometric
// cooling. The field is re-solved exactly after every trial move. Moves that
// would reorder clouds or bring two within kMinimumGap are rejected.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "lightstack/field_solver.hpp"
#include "lightstack/forces.hpp"

namespace lightstack {

struct AnnealSchedule {
  /// Unset means 10 * |initial energy| / (number of mobile clouds).
  std::optional<double> initial_temperature;
  double cooling_factor = 0.999;
  std::size_t sweeps = 20000;
  double move_scale = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(cooling_factor > 0.0 && cooling_factor < 1.0))
      throw Error(ErrorCode::InvalidArgument, "cooling_factor must lie in (0, 1)");
    if (!(move_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "move_scale must be positive");
    if (initial_temperature && !(*initial_temperature >= 0.0))
      throw Error(ErrorCode::InvalidArgument, "initial_temperature must be non-negative");
  }
};

struct SweepRecord {
  std::size_t sweep;
  double energy;
  double acceptance_rate;
};

struct MinimizationResult {
  Stack final_stack;       // lowest-energy configuration visited
  std::vector<SweepRecord> trace;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  std::vector<double> local_spacings;
  std::vector<double> intensities_at_clouds;
  std::vector<std::size_t> mobile;
  /// Largest |tracked - recomputed| energy seen at the periodic spot checks.
  double bookkeeping_error = 0.0;
  std::size_t accepted_moves = 0;
};

/// Reusable energy evaluator. Propagates the two basis solutions through the
/// stack in one pass, then combines them once the reflected amplitude is known.
class EnergyEvaluator {
 public:
  explicit EnergyEvaluator(std::vector<std::size_t> mobile) : mobile_(std::move(mobile)) {}

  double operator()(const Stack& stack) {
    const std::size_t n = stack.size();
    field_r_.resize(n);
    field_l_.resize(n);
    WavePair u{1.0, 0.0};
    WavePair v{0.0, 1.0};
    for (std::size_t j = 0; j < n; ++j) {
      if (j > 0) {
        const Mat2 p = propagation_matrix(stack.position(j) - stack.position(j - 1));
        u = p * u;
        v = p * v;
      }
      const Mat2 m = bs_transfer_matrix(stack.scatterers[j].lambda_param);
      u = m * u;
      v = m * v;
      field_r_[j] = u.rightward + u.leftward;
      field_l_[j] = v.rightward + v.leftward;
    }
    const cplx r0 = stack.pump.left;
    const cplx l0 = (stack.pump.right - u.leftward * r0) / v.leftward;
    double total = 0.0;
    for (std::size_t j : mobile_) {
      const double intensity = std::norm(r0 * field_r_[j] + l0 * field_l_[j]);
      total -= stack.scatterers[j].lambda_param / (2.0 * kWavenumber) * intensity;
    }
    return total;
  }

 private:
  std::vector<std::size_t> mobile_;
  std::vector<cplx> field_r_;
  std::vector<cplx> field_l_;
};

namespace detail {

inline void fill_observables(MinimizationResult& result) {
  const FieldSolution sol = solve(result.final_stack);
  result.local_spacings = spacings(result.final_stack);
  result.intensities_at_clouds.clear();
  for (std::size_t j = 0; j < sol.scatterer_count(); ++j)
    result.intensities_at_clouds.push_back(std::norm(sol.regions[j + 1].field(sol.stack.position(j))));
}

inline bool move_keeps_order(const Stack& stack, std::size_t j, double z) {
  if (j > 0 && z - stack.position(j - 1) < kMinimumGap) return false;
  if (j + 1 < stack.size() && stack.position(j + 1) - z < kMinimumGap) return false;
  return true;
}

inline constexpr std::size_t kSpotCheckInterval = 100;

inline MinimizationResult run_chain(const Stack& start, const AnnealSchedule& schedule,
                                    std::span<const std::size_t> frozen, bool greedy) {
  schedule.validate();
  MinimizationResult result;
  result.mobile = mobile_indices(start.size(), frozen);
  EnergyEvaluator energy_of(result.mobile);

  Stack current = start;
  double energy = energy_of(current);
  result.initial_energy = energy;
  result.final_stack = current;
  result.final_energy = energy;

  double temperature = 0.0;
  if (!greedy) {
    temperature = schedule.initial_temperature.value_or(
        result.mobile.empty() ? 0.0 : 10.0 * std::abs(energy) / static_cast<double>(result.mobile.size()));
  }

  std::mt19937_64 rng(schedule.seed);
  std::normal_distribution<double> displacement(0.0, schedule.move_scale);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, result.mobile.empty() ? 0 : result.mobile.size() - 1);

  for (std::size_t sweep = 0; sweep < schedule.sweeps && !result.mobile.empty(); ++sweep) {
    std::size_t accepted = 0;
    for (std::size_t move = 0; move < result.mobile.size(); ++move) {
      const std::size_t j = result.mobile[pick(rng)];
      const double old_z = current.scatterers[j].position;
      const double new_z = old_z + displacement(rng);
      // Draw the acceptance variate unconditionally so the stream does not
      // depend on which branch is taken.
      const double u = uniform(rng);
      if (!move_keeps_order(current, j, new_z)) continue;

      current.scatterers[j].position = new_z;
      const double delta = energy_of(current) - energy;
      const bool accept = delta <= 0.0 || (temperature > 0.0 && u < std::exp(-delta / temperature));
      if (greedy ? delta < 0.0 : accept) {
        energy += delta;
        ++accepted;
        ++result.accepted_moves;
        if (result.accepted_moves % kSpotCheckInterval == 0) {
          const double full = dipole_energy(solve(current), result.mobile);
          result.bookkeeping_error =
              std::max(result.bookkeeping_error, std::abs(full - energy) / (1.0 + std::abs(full)));
        }
        if (energy < result.final_energy) {
          result.final_energy = energy;
          result.final_stack = current;
        }
      } else {
        current.scatterers[j].position = old_z;
      }
    }
    result.trace.push_back({sweep, energy,
                            static_cast<double>(accepted) / static_cast<double>(result.mobile.size())});
    temperature *= schedule.cooling_factor;
  }

  // Report the recomputed energy of the best configuration, not the running sum.
  result.final_energy = dipole_energy(solve(result.final_stack), result.mobile);
  fill_observables(result);
  return result;
}

}  // namespace detail

/// Simulated annealing of the dipole energy of the mobile clouds.
inline MinimizationResult anneal(const Stack& stack, const AnnealSchedule& schedule,
                                 std::span<const std::size_t> frozen = {}) {
  return detail::run_chain(stack, schedule, frozen, false);
}

/// Zero-temperature limit: only strictly energy-lowering moves are kept.
inline MinimizationResult greedy_descent(const Stack& stack, double move_scale, std::size_t max_sweeps,
                                         std::span<const std::size_t> frozen = {}, std::uint64_t seed = 0) {
  AnnealSchedule schedule;
  schedule.move_scale = move_scale;
  schedule.sweeps = max_sweeps;
  schedule.seed = seed;
  return detail::run_chain(stack, schedule, frozen, true);
}

struct Slab {
  std::size_t first = 0;  // cloud indices, inclusive
  std::size_t last = 0;
  double mean_spacing = 0.0;
  /// Least-squares fit ln|E(z_j)|^2 = a + rate * z_j over the slab.
  double decay_rate = 0.0;
  double decay_r2 = 0.0;
};

struct SlabAnalysis {
  std::vector<Slab> slabs;
  bool has_core = false;  // high-intensity run of clouds between slabs
  std::size_t core_first = 0;
  std::size_t core_last = 0;
  /// Peak |E|^2 in the regions between the innermost slab edges.
  double mid_gap_intensity = 0.0;
  /// Every slab fits an exponential with R^2 above kSlabDecayR2 whose
  /// intensity grows towards the middle.
  bool decays_outward = false;

  bool has_slab_structure() const { return slabs.size() >= 2; }
};

/// Gaps wider than this separate slabs.
inline constexpr double kSlabGapThreshold = kWavelength;
/// Intensity contrast (max/min over clouds) above which a bright core is split off.
inline constexpr double kCoreContrast = 10.0;
/// Clouds brighter than this fraction of the brightest belong to the core.
inline constexpr double kCoreFraction = 0.5;
inline constexpr double kSlabDecayR2 = 0.9;

namespace detail {

inline void fit_log_intensity(const Stack& stack, std::span<const double> intensity, Slab& slab) {
  const std::size_t n = slab.last - slab.first + 1;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t j = slab.first; j <= slab.last; ++j) {
    const double x = stack.position(j);
    const double y = std::log(intensity[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double nn = static_cast<double>(n);
  const double cov = sxy - sx * sy / nn;
  const double var_x = sxx - sx * sx / nn;
  const double var_y = syy - sy * sy / nn;
  slab.decay_rate = var_x > 0 ? cov / var_x : 0.0;
  slab.decay_r2 = (var_x > 0 && var_y > 0) ? cov * cov / (var_x * var_y) : 0.0;
}

}  // namespace detail

/// Splits a configuration into slabs. Wide gaps always separate slabs; when
/// the intensity at the clouds has strong contrast, the bright run around the
/// brightest cloud is taken as the trapped-light core and the clouds on
/// either side of it form the mirror slabs.
inline SlabAnalysis slab_analysis(const Stack& stack) {
  SlabAnalysis out;
  const std::size_t n = stack.size();
  if (n == 0) return out;
  const FieldSolution sol = solve(stack);
  std::vector<double> intensity(n);
  for (std::size_t j = 0; j < n; ++j) intensity[j] = std::norm(sol.regions[j + 1].field(stack.position(j)));

  std::vector<bool> boundary_after(n, false);  // split between j and j+1
  for (std::size_t j = 0; j + 1 < n; ++j)
    boundary_after[j] = stack.position(j + 1) - stack.position(j) > kSlabGapThreshold;

  const auto [lo_it, hi_it] = std::minmax_element(intensity.begin(), intensity.end());
  std::vector<bool> in_core(n, false);
  if (*lo_it > 0 && *hi_it / *lo_it >= kCoreContrast) {
    const std::size_t peak = static_cast<std::size_t>(hi_it - intensity.begin());
    std::size_t a = peak, b = peak;
    while (a > 0 && !boundary_after[a - 1] && intensity[a - 1] >= kCoreFraction * *hi_it) --a;
    while (b + 1 < n && !boundary_after[b] && intensity[b + 1] >= kCoreFraction * *hi_it) ++b;
    for (std::size_t j = a; j <= b; ++j) in_core[j] = true;
    out.has_core = true;
    out.core_first = a;
    out.core_last = b;
  }

  std::size_t j = 0;
  while (j < n) {
    if (in_core[j]) {
      ++j;
      continue;
    }
    Slab slab;
    slab.first = j;
    while (j + 1 < n && !in_core[j + 1] && !boundary_after[j]) ++j;
    slab.last = j;
    ++j;
    if (slab.last == slab.first) continue;  // a lone cloud is not a slab
    slab.mean_spacing =
        (stack.position(slab.last) - stack.position(slab.first)) / static_cast<double>(slab.last - slab.first);
    detail::fit_log_intensity(stack, intensity, slab);
    out.slabs.push_back(slab);
  }

  if (out.slabs.size() >= 2) {
    // Innermost pair: the slabs adjacent to the core, or to the widest gap.
    std::size_t left = 0;
    if (out.has_core) {
      for (std::size_t s = 0; s < out.slabs.size(); ++s)
        if (out.slabs[s].last < out.core_first) left = s;
    } else {
      double widest = -1.0;
      for (std::size_t s = 0; s + 1 < out.slabs.size(); ++s) {
        const double gap = stack.position(out.slabs[s + 1].first) - stack.position(out.slabs[s].last);
        if (gap > widest) {
          widest = gap;
          left = s;
        }
      }
    }
    const std::size_t right = std::min(left + 1, out.slabs.size() - 1);
    for (std::size_t r = out.slabs[left].last + 1; r <= out.slabs[right].first; ++r)
      out.mid_gap_intensity = std::max(out.mid_gap_intensity, sol.regions[r].peak_intensity());

    out.decays_outward = true;
    for (std::size_t s = 0; s < out.slabs.size(); ++s) {
      const bool towards_middle = s <= left ? out.slabs[s].decay_rate > 0 : out.slabs[s].decay_rate < 0;
      if (out.slabs[s].decay_r2 <= kSlabDecayR2 || !towards_middle) out.decays_outward = false;
    }
  }
  return out;
}

inline SlabAnalysis slab_analysis(const MinimizationResult& result) { return slab_analysis(result.final_stack); }

}  // namespace lightstack
