#include <gtest/gtest.h>

#include <random>

#include "lightstack/montecarlo.hpp"
#include "lightstack/sweeps.hpp"

using namespace lightstack;

namespace {

const std::vector<std::size_t> kMirrors{0, 2};

Stack atom_cavity(double atom_z) { return validate_stack({{{0.0, 10.0}, {atom_z, 0.1}, {1.501, 10.0}}, Pump::symmetric()}); }

double atom_energy(double z) {
  return dipole_energy(solve(atom_cavity(z)), std::vector<std::size_t>{1});
}

AnnealSchedule short_schedule(std::uint64_t seed, std::size_t sweeps = 400) {
  AnnealSchedule s;
  s.seed = seed;
  s.sweeps = sweeps;
  s.cooling_factor = 0.99;
  return s;
}

Stack small_chain() { return regular_lattice(20, symmetric_lattice_constant(0.1), 0.1, Pump::phase_matched(20)); }

}  // namespace

TEST(Schedule, Validation) {
  AnnealSchedule s;
  EXPECT_NO_THROW(s.validate());
  s.cooling_factor = 1.0;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.move_scale = 0.0;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.initial_temperature = -1.0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Anneal, DeterministicForSeed) {
  const MinimizationResult a = anneal(small_chain(), short_schedule(3));
  const MinimizationResult b = anneal(small_chain(), short_schedule(3));
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].energy, b.trace[i].energy);
    EXPECT_EQ(a.trace[i].acceptance_rate, b.trace[i].acceptance_rate);
  }
  EXPECT_EQ(a.final_stack, b.final_stack);
  const MinimizationResult c = anneal(small_chain(), short_schedule(4));
  EXPECT_NE(a.final_stack, c.final_stack);
}

TEST(Anneal, LowersEnergyAndKeepsBookkeeping) {
  const MinimizationResult r = anneal(small_chain(), short_schedule(1, 1500));
  EXPECT_LT(r.final_energy, r.initial_energy);
  EXPECT_LT(r.bookkeeping_error, 1e-10);
  EXPECT_GT(r.accepted_moves, 100u);
  EXPECT_EQ(r.trace.size(), 1500u);
  EXPECT_EQ(r.local_spacings.size(), 19u);
  EXPECT_EQ(r.intensities_at_clouds.size(), 20u);
  EXPECT_NEAR(r.final_energy, dipole_energy(solve(r.final_stack)).total, 1e-12 * std::abs(r.final_energy));
}

TEST(Anneal, PreservesOrderAndFrozenClouds) {
  Stack s = small_chain();
  const std::vector<std::size_t> frozen{0, 7, 19};
  AnnealSchedule schedule = short_schedule(9, 300);
  schedule.move_scale = 0.3;  // large moves provoke attempted crossings
  const MinimizationResult r = anneal(s, schedule, frozen);
  for (std::size_t j = 1; j < s.size(); ++j) EXPECT_GT(r.final_stack.position(j), r.final_stack.position(j - 1));
  for (std::size_t j : frozen) EXPECT_EQ(r.final_stack.position(j), s.position(j));
  for (std::size_t j = 0; j < s.size(); ++j) EXPECT_EQ(r.final_stack.scatterers[j].lambda_param, 0.1);
}

TEST(Anneal, MinimumIsNotAForceFreeState) {
  const MinimizationResult r = anneal(small_chain(), short_schedule(2, 2000));
  const ForceReport forces = force_vector(r.final_stack);
  EXPECT_GT(forces.max_abs_force(), 1e3 * 1e-12);
  EXPECT_GT(forces.max_abs_force(), 1e-3);
}

TEST(Greedy, MonotoneTrace) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> gap(0.1, 0.9);
  for (int trial = 0; trial < 10; ++trial) {
    Stack s;
    s.pump = {1.0, cplx(0.3, -0.4)};
    double z = 0.0;
    for (int j = 0; j < 8; ++j, z += gap(rng)) s.scatterers.push_back({z, 0.05 + 0.1 * j});
    s = validate_stack(s);
    const MinimizationResult r = greedy_descent(s, 0.02, 200, {}, trial);
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i].energy, r.trace[i - 1].energy);
    EXPECT_LE(r.final_energy, r.initial_energy + 1e-12);
  }
}

TEST(Greedy, FindsOffAntinodeEnergyMinimum) {
  const MinimizationResult r = greedy_descent(atom_cavity(0.6), 2e-3, 2000, kMirrors, 5);
  const double z = r.final_stack.position(1);
  EXPECT_NEAR(z, 0.6206, 1e-3);
  EXPECT_GT(std::abs(z - 0.7505), 0.1);
  // Local-minimum probe at ten move widths.
  const double u = atom_energy(z);
  EXPECT_GT(atom_energy(z + 0.02), u);
  EXPECT_GT(atom_energy(z - 0.02), u);
}

TEST(Greedy, StaysPutAtMinimum) {
  const Fig2Result fig2 = scenario_fig2();
  const MinimizationResult r = greedy_descent(fig2.energy_minimum, 1e-4, 100, kMirrors, 1);
  EXPECT_NEAR(r.final_energy, r.initial_energy, 1e-12);
  for (const auto& t : r.trace) EXPECT_NEAR(t.energy, r.initial_energy, 1e-12);
}

TEST(Slabs, RegularLatticeIsOneSlab) {
  const Stack s = regular_lattice(30, 0.47, 0.1, Pump::phase_matched(30));
  const SlabAnalysis a = slab_analysis(s);
  ASSERT_EQ(a.slabs.size(), 1u);
  EXPECT_FALSE(a.has_slab_structure());
  EXPECT_EQ(a.slabs[0].first, 0u);
  EXPECT_EQ(a.slabs[0].last, 29u);
  EXPECT_NEAR(a.slabs[0].mean_spacing, 0.47, 1e-12);
}

TEST(Slabs, GapSplitsSlabs) {
  Stack s = regular_lattice(10, 0.47, 0.1, Pump::phase_matched(20));
  const Stack right = regular_lattice(10, 0.47, 0.1, Pump{}, 10 * 0.47 + 2.0);
  s.scatterers.insert(s.scatterers.end(), right.scatterers.begin(), right.scatterers.end());
  const SlabAnalysis a = slab_analysis(validate_stack(s));
  ASSERT_EQ(a.slabs.size(), 2u);
  EXPECT_TRUE(a.has_slab_structure());
  EXPECT_EQ(a.slabs[0].last, 9u);
  EXPECT_EQ(a.slabs[1].first, 10u);
}
