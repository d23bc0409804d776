#include <gtest/gtest.h>

#include <cmath>

#include "lightstack/sweeps.hpp"

using namespace lightstack;

namespace {

Fig3Options coarse(std::size_t nx, std::size_t ny) {
  Fig3Options o;
  o.bs.n_positions = nx;
  o.cavity.n_lengths = ny;
  return o;
}

}  // namespace

TEST(Sweeps, FreeSpaceForceAndResonance) {
  EXPECT_DOUBLE_EQ(free_space_force(1.0), 0.5);
  EXPECT_NEAR(free_space_force(10.0), 100.0 / 101.0, 1e-15);
  const double L = cavity_resonance_length(10.0, 3.0);
  const Transmission t = stack_transmission(validate_stack({{{0.0, 10.0}, {L, 10.0}}, Pump{}}));
  EXPECT_NEAR(t.transmitted, 1.0, 1e-10);
  EXPECT_NEAR(L, 3.0, 0.25);
}

TEST(Sweeps, IsolatedBeamSplitterNormalization) {
  CavitySpec cavity;
  cavity.mirrors = false;
  cavity.n_lengths = 4;
  for (double lambda : {0.3, 1.0, 4.0}) {
    BeamSplitterSpec bs;
    bs.lambda_param = lambda;
    bs.n_positions = 64;
    const SweepGrid g = force_map(cavity, bs, 1);
    for (double v : g.values) EXPECT_NEAR(v, 1.0, 1e-12);
  }
}

TEST(Sweeps, GridIsIndependentOfThreadCount) {
  const Fig3Options o = coarse(200, 37);
  const SweepGrid a = force_map(o.cavity, o.bs, 1);
  const SweepGrid b = force_map(o.cavity, o.bs, 3);
  const SweepGrid c = force_map(o.cavity, o.bs, 8);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.values, c.values);
  for (double v : a.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Sweeps, RejectsBeamSplitterOutsideCavity) {
  CavitySpec cavity;
  BeamSplitterSpec bs;
  bs.z_max = 2.6;
  EXPECT_THROW(force_map(cavity, bs), Error);
  bs.z_max = 2.4;
  bs.z_min = 0.0;
  EXPECT_THROW(force_map(cavity, bs), Error);
}

TEST(Sweeps, ResonantRowHasLargeForces) {
  const Fig3Result r = scenario_fig3(coarse(256, 64));
  std::size_t nearest = 0;
  for (std::size_t iy = 0; iy < r.grid.y_axis.size(); ++iy)
    if (std::abs(r.grid.detuning(iy)) < std::abs(r.grid.detuning(nearest))) nearest = iy;
  double row_max = 0.0;
  for (std::size_t ix = 0; ix < r.grid.x_axis.size(); ++ix) row_max = std::max(row_max, std::abs(r.grid.at(nearest, ix)));
  EXPECT_GT(row_max, 10.0);
  EXPECT_LT(r.contours.fraction(r.contours.above_10), 0.05);
  EXPECT_TRUE(r.all_rows_single_stable());
}

TEST(Sweeps, ForceIsHalfWavelengthPeriodic) {
  BeamSplitterSpec bs;
  bs.n_positions = 2;
  CavitySpec cavity;
  cavity.n_lengths = 5;
  bs.z_min = 0.3;
  bs.z_max = 0.8;
  const SweepGrid g = force_map(cavity, bs, 1);
  for (std::size_t iy = 0; iy < g.y_axis.size(); ++iy) EXPECT_NEAR(g.at(iy, 0), g.at(iy, 1), 1e-8 * (1 + std::abs(g.at(iy, 0))));
}

TEST(Sweeps, TransparentBeamSplitterFeelsLittleForceOffResonance) {
  Fig3Options o = coarse(128, 32);
  o.bs.lambda_param = 1e-4;
  const SweepGrid g = force_map(o.cavity, o.bs, 1);
  const double unit = free_space_force(1.0);
  for (std::size_t iy = 0; iy < g.y_axis.size(); ++iy) {
    if (std::abs(g.y_axis[iy] - g.resonance_length) < 0.05) continue;
    for (std::size_t ix = 0; ix < g.x_axis.size(); ++ix) EXPECT_LT(std::abs(g.at(iy, ix)) * g.f0, 1e-2 * unit);
  }
}

TEST(Sweeps, ContourClassesConvergeWithResolution) {
  const Fig3Result base = scenario_fig3(coarse(256, 128));
  const Fig3Result fine = scenario_fig3(coarse(512, 256));
  auto close = [](double a, double b) { return std::abs(a - b) <= 0.1 * std::max(a, b); };
  const auto& c = base.contours;
  const auto& f = fine.contours;
  EXPECT_TRUE(close(c.fraction(c.above_10), f.fraction(f.above_10)));
  EXPECT_TRUE(close(c.fraction(c.below_tenth), f.fraction(f.below_tenth)));
  EXPECT_TRUE(close(c.fraction(c.below_1000th), f.fraction(f.below_1000th)));
}

TEST(Sweeps, RowWindowsOnSyntheticRow) {
  SweepGrid g;
  g.x_axis = linear_axis(0.0, 1.6, 801);
  g.y_axis = {1.0};
  for (double x : g.x_axis) g.values.push_back(std::sin(4.0 * std::numbers::pi * x + 0.3));
  const auto zeros = row_zeros(g, 0);
  EXPECT_EQ(zeros.size(), 6u);
  const auto windows = half_wavelength_windows(g, 0);
  // Windows anchored mid-way between zeros: [0.10, 0.60), [0.60, 1.10), [1.10, 1.60).
  ASSERT_EQ(windows.size(), 2u);
  for (const auto& w : windows) {
    EXPECT_EQ(w.zeros, 2u);
    EXPECT_EQ(w.stable, 1u);
  }
}

TEST(Scenario, AtomInCavityNumbers) {
  const Fig2Result r = scenario_fig2();
  EXPECT_NEAR(r.energy_minimum_position, 0.6206, 1e-3);
  const double ratio = r.energy_minimum_peak / r.free_space_peak;
  EXPECT_GE(ratio, 250.0);
  EXPECT_LE(ratio, 1000.0);
  EXPECT_TRUE(r.equilibrium.converged);
  EXPECT_LT(r.antinode_distance, 0.01);
  EXPECT_LT(r.equilibrium_peak, r.free_space_peak);
  EXPECT_EQ(r.equilibrium.stability.stability, Stability::stable);
  EXPECT_EQ(r.energy_scan.size(), 15001u);
}

TEST(Scenario, ChainMinimizationIsThreadIndependent) {
  Fig1Options o;
  o.n_clouds = 16;
  o.chains = 3;
  o.schedule.sweeps = 200;
  o.threads = 1;
  const Fig1Result a = scenario_fig1(5, o);
  o.threads = 3;
  const Fig1Result b = scenario_fig1(5, o);
  EXPECT_EQ(a.chain_final_energies, b.chain_final_energies);
  EXPECT_EQ(a.best.final_stack, b.best.final_stack);
  EXPECT_NEAR(a.initial_spacing, 0.46827, 1e-5);
  EXPECT_LE(a.best.final_energy, a.best.initial_energy);
  for (double e : a.chain_final_energies) EXPECT_GE(e, a.best.final_energy);
}
