#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "plastdam/presets.hpp"

using namespace plastdam;

namespace {

Mat2 sym(double a, double b, double c) {
  Mat2 m;
  m << a, b, b, c;
  return m;
}

struct Sample {
  Mat2 e, pi_prev;
  double zeta;
};

Sample random_sample(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Strains from well inside the elastic range up to far past yield.
  const double scale = std::pow(10.0, -5.0 + 3.0 * u(rng));
  Sample s;
  s.e = sym(scale * g(rng), scale * g(rng), scale * g(rng));
  const double ps = u(rng) < 0.3 ? 0.0 : scale * u(rng);
  s.pi_prev = oracle::deviatoric(ps * g(rng), ps * g(rng));
  s.zeta = u(rng) < 0.2 ? (u(rng) < 0.5 ? 0.0 : 1.0) : u(rng);
  return s;
}

}  // namespace

TEST(Lame, IntactModuliExact) {
  const Lame l = lame_from_young_poisson(27e9, 0.2);
  EXPECT_EQ(l.lambda, 7.5e9);
  EXPECT_EQ(l.mu, 11.25e9);
}

TEST(Lame, ScaledModuli) {
  // E/1e7 with nu = 0.2: lambda = 2700*0.2/(1.2*0.6), mu = 2700/2.4
  const Lame l = lame_from_young_poisson(27e9 / 1e7, 0.2);
  EXPECT_NEAR(l.lambda, 750.0, 1e-9);
  EXPECT_NEAR(l.mu, 2700.0 / 2.4, 1e-9);
}

TEST(Lame, ZeroPoisson) {
  const Lame l = lame_from_young_poisson(1.0, 0.0);
  EXPECT_EQ(l.lambda, 0.0);
  EXPECT_EQ(l.mu, 0.5);
}

TEST(Lame, RejectsIncompressibleAndBadInput) {
  EXPECT_THROW(lame_from_young_poisson(1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(lame_from_young_poisson(-1.0, 0.2), std::invalid_argument);
  EXPECT_THROW(lame_from_young_poisson(1.0, -1.0), std::invalid_argument);
}

TEST(Params, PresetValidatesAndBadOnesThrow) {
  MaterialParams p = presets::material();
  EXPECT_NO_THROW(p.validate());
  EXPECT_DOUBLE_EQ(p.hardening, 1.35e9);
  EXPECT_DOUBLE_EQ(p.b, 1.2e9);
  p.b = 0.5 * p.a;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = presets::material();
  p.mu0 = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Stress, IntactUniaxialStrain) {
  const MaterialParams p = presets::material();
  const Mat2 s = stress(sym(1e-3, 0.0, 0.0), 1.0, p);
  // Scalar hand evaluation: sxx = (lambda + 2 mu) e, syy = lambda e.
  const double lam = 27e9 * 0.2 / (1.2 * 0.6), mu = 27e9 / 2.4;
  EXPECT_NEAR(s(0, 0), (lam + 2.0 * mu) * 1e-3, 1e-3);
  EXPECT_NEAR(s(1, 1), lam * 1e-3, 1e-3);
  EXPECT_NEAR(s(0, 0), 30.0e6, 1e-3);
  EXPECT_NEAR(s(1, 1), 7.5e6, 1e-3);
  EXPECT_EQ(s(0, 1), 0.0);
}

TEST(Stress, ZeroStrainAndAffinityInDamage) {
  const MaterialParams p = presets::material();
  EXPECT_EQ(stress(Mat2::Zero(), 0.37, p).norm(), 0.0);
  const Mat2 e = sym(2e-4, -1e-4, 3e-5);
  const Mat2 mid = stress(e, 0.5, p);
  const Mat2 avg = 0.5 * (stress(e, 0.0, p) + stress(e, 1.0, p));
  EXPECT_LE((mid - avg).norm(), 1e-9 * avg.norm());
}

TEST(Stress, RejectsDamageOutsideRange) {
  const MaterialParams p = presets::material();
  EXPECT_THROW(stress(Mat2::Zero(), 1.5, p), std::domain_error);
  EXPECT_THROW(stress(Mat2::Zero(), -0.1, p), std::domain_error);
}

TEST(Stress, PositiveDefiniteLowerBound) {
  const MaterialParams p = presets::material();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 500; ++i) {
    const Mat2 e = sym(g(rng), g(rng), g(rng));
    const double z = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    EXPECT_GE(ddot(stress(e, z, p), e), 2.0 * p.mu0 * ddot(e, e) * (1.0 - 1e-12));
  }
}

TEST(Dissipation, Densities) {
  const MaterialParams p = presets::material();
  EXPECT_EQ(plastic_dissipation_density(Mat2::Zero(), p), 0.0);
  EXPECT_EQ(damage_dissipation_density(0.0, p), 0.0);
  EXPECT_NEAR(damage_dissipation_density(-0.1, p), 120.0, 1e-12);
  EXPECT_NEAR(damage_dissipation_density(0.1, p), 0.1 * p.b, 1e-3);
  const Mat2 d = oracle::deviatoric(1e-3, -2e-3);
  EXPECT_NEAR(plastic_dissipation_density(2.0 * d, p), 2.0 * plastic_dissipation_density(d, p), 1e-9);
  EXPECT_NEAR(damage_dissipation_density(-0.2, p), 2.0 * damage_dissipation_density(-0.1, p), 1e-9);
  EXPECT_NEAR(damage_dissipation_density(0.2, p), 2.0 * damage_dissipation_density(0.1, p), 1e-3);
}

TEST(StoredEnergy, SimpleStates) {
  const MaterialParams p = presets::material();
  EXPECT_EQ(stored_energy_density(Mat2::Zero(), Mat2::Zero(), 1.0, Vec2::Zero(), p), 0.0);
  const Mat2 pi = oracle::deviatoric(1e-3, 5e-4);
  EXPECT_NEAR(stored_energy_density(pi, pi, 0.6, Vec2::Zero(), p), 0.5 * p.hardening * ddot(pi, pi), 1e-9);
  EXPECT_NEAR(stored_energy_density(Mat2::Zero(), Mat2::Zero(), 1.0, Vec2(3.0, 4.0), p), 0.5 * p.kappa2 * 25.0,
              1e-15);
}

TEST(StoredEnergy, ConvexInStrainAndPlasticStrain) {
  const MaterialParams p = presets::material();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1e-3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double z = u(rng);
    const Mat2 e1 = sym(g(rng), g(rng), g(rng)), e2 = sym(g(rng), g(rng), g(rng));
    const Mat2 p1 = oracle::deviatoric(g(rng), g(rng)), p2 = oracle::deviatoric(g(rng), g(rng));
    const double f1 = stored_energy_density(e1, p1, z, Vec2::Zero(), p);
    const double f2 = stored_energy_density(e2, p2, z, Vec2::Zero(), p);
    const double fm = stored_energy_density(0.5 * (e1 + e2), 0.5 * (p1 + p2), z, Vec2::Zero(), p);
    ASSERT_LE(fm, 0.5 * (f1 + f2) * (1.0 + 1e-12) + 1e-300);
  }
}

TEST(StoredEnergy, RejectsNonDeviatoricPlasticStrain) {
  const MaterialParams p = presets::material();
  EXPECT_THROW(stored_energy_density(Mat2::Zero(), Mat2::Identity(), 1.0, Vec2::Zero(), p), std::domain_error);
}

TEST(DrivingDensity, Nonnegative) {
  const MaterialParams p = presets::material();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int i = 0; i < 500; ++i) EXPECT_GE(damage_driving_density(sym(g(rng), g(rng), g(rng)), p), 0.0);
}

TEST(ReturnMap, ZeroState) {
  const MaterialParams p = presets::material();
  const ReturnMapResult r = return_map(Mat2::Zero(), Mat2::Zero(), 1.0, p);
  EXPECT_EQ(r.pi.norm(), 0.0);
  EXPECT_EQ(r.dissipated, 0.0);
}

TEST(ReturnMap, TieAtYieldStaysElastic) {
  MaterialParams p = presets::material();
  // Choose sigma_y so that |s_trial| equals it exactly.
  p.sigma_y = tnorm(plastic_driving_stress(sym(1e-4, 0.0, -1e-4), Mat2::Zero(), 1.0, p));
  const ReturnMapResult r = return_map(sym(1e-4, 0.0, -1e-4), Mat2::Zero(), 1.0, p);
  EXPECT_EQ(r.pi.norm(), 0.0);
  EXPECT_EQ(r.dissipated, 0.0);
}

TEST(ReturnMap, RejectsTracefulPreviousStrain) {
  const MaterialParams p = presets::material();
  EXPECT_THROW(return_map(Mat2::Zero(), Mat2::Identity(), 1.0, p), std::domain_error);
}

TEST(ReturnMap, MatchesBruteForceMinimizer) {
  const MaterialParams p = presets::material();
  std::mt19937_64 rng(20240917);
  int plastic = 0;
  for (int s = 0; s < 1000; ++s) {
    const Sample smp = random_sample(rng);
    const ReturnMapResult r = return_map(smp.e, smp.pi_prev, smp.zeta, p);
    const double mine = oracle::elementwise_objective(r.pi, smp.e, smp.pi_prev, smp.zeta, p);
    const oracle::BruteForceResult ref = oracle::brute_force_return_map(smp.e, smp.pi_prev, smp.zeta, p);
    const double gap = (mine - ref.objective) / std::max(std::abs(ref.objective), 1e-300);
    ASSERT_LE(gap, 1e-8) << "sample " << s;
    ASSERT_GE(gap, -1e-8) << "oracle worse than closed form, sample " << s;
    // (i) trace free, (ii) consistency, (iii) local energy decrease
    EXPECT_NEAR(r.pi.trace(), 0.0, 1e-18);
    EXPECT_LE(tnorm(plastic_driving_stress(smp.e, r.pi, smp.zeta, p)), p.sigma_y * (1.0 + 1e-8));
    EXPECT_LE(mine, oracle::elementwise_objective(smp.pi_prev, smp.e, smp.pi_prev, smp.zeta, p));
    EXPECT_NEAR(r.dissipated, p.sigma_y * tnorm(r.pi - smp.pi_prev), 1e-12 * p.sigma_y);
    if (r.pi != smp.pi_prev) ++plastic;
  }
  // Both branches must be exercised.
  EXPECT_GT(plastic, 100);
  EXPECT_LT(plastic, 900);
}

TEST(ReturnMap, ObjectiveHelperAgreesWithOracleObjective) {
  const MaterialParams p = presets::material();
  std::mt19937_64 rng(1);
  for (int s = 0; s < 100; ++s) {
    const Sample smp = random_sample(rng);
    const Mat2 pi = oracle::deviatoric(1e-4, -3e-4);
    EXPECT_NEAR(return_map_objective(pi, smp.e, smp.pi_prev, smp.zeta, p),
                oracle::elementwise_objective(pi, smp.e, smp.pi_prev, smp.zeta, p),
                1e-9 * std::abs(oracle::elementwise_objective(pi, smp.e, smp.pi_prev, smp.zeta, p)) + 1e-12);
  }
}
