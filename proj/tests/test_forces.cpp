#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"
#include "lightstack/forces.hpp"
#include "lightstack/sweeps.hpp"
#include "oracles.hpp"

using namespace lightstack;

namespace {

Stack single(double lambda, Pump pump) { return validate_stack({{{0.0, lambda}}, pump}); }

double relative_jacobian_asymmetry(const Eigen::MatrixXd& j) {
  return std::abs(j(0, 1) - j(1, 0)) / j.cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Force, SingleBeamSplitterExamples) {
  const FieldSolution left = solve(single(1.0, Pump::left_only()));
  EXPECT_NEAR(force_eq6(left, 0), 0.5, 1e-15);
  EXPECT_NEAR(force_eq5(left, 0), 0.5, 1e-14);

  for (double l : {-2.0, -0.3, 0.1, 1.0, 10.0}) {
    const FieldSolution sol = solve(single(l, Pump::left_only()));
    EXPECT_NEAR(force_eq6(sol, 0), l * l / (1 + l * l), 1e-14);
    EXPECT_NEAR(force_eq5(sol, 0), l * l / (1 + l * l), 1e-12);

    const FieldSolution antinode = solve(single(l, Pump::symmetric()));
    EXPECT_NEAR(force_eq6(antinode, 0), 0.0, 1e-14);
    EXPECT_NEAR(force_eq5(antinode, 0), 0.0, 1e-14);

    const FieldSolution node = solve(single(l, Pump{1.0, -1.0}));
    EXPECT_NEAR(force_eq6(node, 0), 0.0, 1e-14);
    EXPECT_NEAR(force_eq5(node, 0), 0.0, 1e-14);
  }
}

TEST(Force, LinearInLambdaWhenTransparent) {
  const Pump pump{1.0, cplx(0.0, 1.0)};
  const double f1 = force_eq6(solve(single(1e-6, pump)), 0);
  const double f2 = force_eq6(solve(single(2e-6, pump)), 0);
  EXPECT_GT(std::abs(f1), 0.0);
  EXPECT_NEAR(f2 / f1, 2.0, 1e-4);
}

TEST(Force, IndexOutOfRange) {
  const FieldSolution sol = solve(single(1.0, Pump{}));
  EXPECT_THROW(force_eq6(sol, 1), Error);
  EXPECT_THROW(force_eq5(sol, 3), Error);
}

TEST(Force, RandomizedRoutesAgreeAndMatchOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const Stack s = gen::random_stack(rng);
    const ForceReport report = force_vector(s);
    const double scale = 1.0 + report.max_abs_force();
    for (const auto& f : report.per_scatterer) EXPECT_LT(std::abs(f.force_eq5 - f.force_eq6), 1e-8 * scale);
    double sum_abs = 0.0;
    for (const auto& f : report.per_scatterer) sum_abs += std::abs(f.force_eq6);
    EXPECT_LT(std::abs(report.momentum_residual), 1e-10 * (1 + sum_abs));

    if (trial % 10 == 0 && s.size() <= 3) {
      std::vector<oracle::Scatterer> os;
      for (const auto& sc : s.scatterers) os.push_back({sc.position, sc.lambda_param});
      const auto fields = oracle::dense_solve(os, s.pump.left, s.pump.right);
      for (std::size_t j = 0; j < s.size(); ++j) {
        EXPECT_NEAR(report.per_scatterer[j].force_eq6, oracle::stress_force(fields, j), 1e-9 * scale);
        EXPECT_NEAR(report.per_scatterer[j].force_eq5, oracle::gradient_force(os, fields, j), 1e-4 * scale);
      }
    }
  }
}

TEST(Force, GlobalPhaseInvariance) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    Stack s = gen::random_stack(rng);
    const ForceReport a = force_vector(s);
    const cplx phase = std::polar(1.0, 0.1 + trial * 0.37);
    s.pump.left *= phase;
    s.pump.right *= phase;
    const ForceReport b = force_vector(s);
    for (std::size_t j = 0; j < s.size(); ++j)
      EXPECT_NEAR(a.per_scatterer[j].force_eq6, b.per_scatterer[j].force_eq6, 1e-12 * (1 + a.max_abs_force()));
  }
}

TEST(Force, MirrorSymmetricStackGivesAntisymmetricForces) {
  const Stack s = validate_stack({{{0.0, 0.7}, {0.31, 0.2}, {0.55, 1.3}, {0.79, 0.2}, {1.10, 0.7}}, Pump::symmetric()});
  const ForceReport report = force_vector(s);
  for (std::size_t j = 0; j < s.size(); ++j)
    EXPECT_NEAR(report.per_scatterer[j].force_eq6, -report.per_scatterer[s.size() - 1 - j].force_eq6, 1e-10);
}

TEST(Force, LeftOnlyMomentumBookkeeping) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    Stack s = gen::random_stack(rng);
    s.pump = Pump::left_only();
    const ForceReport report = force_vector(s);
    double sum = 0.0;
    for (const auto& f : report.per_scatterer) sum += f.force_eq6;
    const Transmission tr = stack_transmission(s);
    EXPECT_NEAR(sum, 0.5 * (1.0 + tr.reflected - tr.transmitted), 1e-10);
    EXPECT_GE(sum, -1e-12);
  }
}

TEST(Energy, AntinodeAndNode) {
  // The self-consistent field at a lone cloud under symmetric drive is
  // 1 + r + t = 2/(1 - i Lambda), so |E|^2 = 4/(1 + Lambda^2).
  const double lambda = 0.1;
  const EnergyReport antinode = dipole_energy(solve(single(lambda, Pump::symmetric())));
  EXPECT_NEAR(antinode.total, -lambda / (2.0 * kWavenumber) * 4.0 / (1.0 + lambda * lambda), 1e-15);
  // Weak-cloud limit against the unperturbed standing wave, -(Lambda/2k) * 4.
  const double weak = 1e-6;
  EXPECT_NEAR(dipole_energy(solve(single(weak, Pump::symmetric()))).total / weak, -4.0 / (2.0 * kWavenumber), 1e-10);
  EXPECT_NEAR(-lambda / (2.0 * kWavenumber) * 4.0, -0.03183, 1e-5);
  EXPECT_NEAR(dipole_energy(solve(single(lambda, Pump{1.0, -1.0}))).total, 0.0, 1e-15);

  std::mt19937_64 rng(9);
  const Stack s = gen::random_stack(rng);
  const EnergyReport r = dipole_energy(solve(s));
  double sum = 0.0;
  for (double u : r.per_scatterer) sum += u;
  EXPECT_DOUBLE_EQ(r.total, sum);
}

TEST(Jacobian, AsymmetricPumpBreaksReciprocity) {
  const Stack s = validate_stack({{{0.0, 0.5}, {0.3, 0.5}}, Pump{1.0, 0.5}});
  EXPECT_GT(relative_jacobian_asymmetry(force_jacobian(s)), 0.01);
}

TEST(Jacobian, SingleScattererMatchesDerivative) {
  const Stack s = validate_stack({{{0.0, 10.0}, {0.37, 1.0}, {1.2, 10.0}}, Pump::left_only()});
  const std::vector<std::size_t> mobile{1};
  const Eigen::MatrixXd j = force_jacobian(s, mobile);
  ASSERT_EQ(j.rows(), 1);
  auto f = [&](double z) {
    Stack t = s;
    t.scatterers[1].position = z;
    return force_eq6(solve(t), 1);
  };
  const double h = 1e-5;
  const double richardson = (8 * (f(0.37 + h) - f(0.37 - h)) - (f(0.37 + 2 * h) - f(0.37 - 2 * h))) / (12 * h);
  EXPECT_NEAR(j(0, 0), richardson, 1e-5 * std::abs(richardson));
}

TEST(Jacobian, StepHalvingConverges) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Stack s = gen::random_stack(rng, 6);
    const Eigen::MatrixXd a = force_jacobian(s, 1e-6);
    const Eigen::MatrixXd b = force_jacobian(s, 5e-7);
    const double scale = a.cwiseAbs().maxCoeff();
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-4 * scale + 1e-8);
  }
}

TEST(Jacobian, RejectsCrossingStep) {
  const Stack s = validate_stack({{{0.0, 0.5}, {1e-3, 0.5}}, Pump{}});
  EXPECT_THROW(force_jacobian(s, 2e-3), Error);
  EXPECT_NO_THROW(force_jacobian(s, 1e-4));
}

TEST(EnergyVersusForce, MinimumOfEnergyIsNotForceFree) {
  const Fig2Result r = scenario_fig2();
  EXPECT_LT(std::abs(r.energy_minimum_gradient), 1e-6);
  EXPECT_GT(std::abs(r.energy_minimum_force), 1e-3);
}
