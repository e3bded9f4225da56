#include <cmath>

#include <gtest/gtest.h>

#include "posedmp/stability.hpp"

using namespace posedmp;

namespace {

StabilityScenario scenario(CouplingCase c) {
  StabilityScenario sc;
  sc.coupling = c;
  sc.seed = 5;
  return sc;
}

double rate_fd(double (*V)(const CoupledSystem&, const CoupledState&),
                    const CoupledSystem& sys, const CoupledState& s) {
  // Forward differences at h and 2h combined to second order.
  const double h = 1e-5;
  const double v0 = V(sys, s);
  const double d1 = (V(sys, coupled_step(sys, s, 0.0, h)) - v0) / h;
  const double d2 = (V(sys, coupled_step(sys, s, 0.0, 2.0 * h)) - v0) / (2.0 * h);
  return 2.0 * d1 - d2;
}

class CaseTest : public ::testing::TestWithParam<CouplingCase> {};

}  // namespace

TEST(CouplingCase, ParsesNames) {
  EXPECT_EQ(coupling_case_from_string("I"), CouplingCase::CaseI);
  EXPECT_EQ(coupling_case_from_string("case2"), CouplingCase::CaseII);
  EXPECT_EQ(coupling_case_from_string("III"), CouplingCase::CaseIII);
  EXPECT_EQ(coupling_case_from_string("none"), CouplingCase::Uncoupled);
  EXPECT_THROW(coupling_case_from_string("IV"), std::invalid_argument);
  EXPECT_EQ(coupling_case_from_string(to_string(CouplingCase::CaseII)), CouplingCase::CaseII);
}

TEST_P(CaseTest, ClosedFormRatesMatchFiniteDifferences) {
  for (std::size_t i = 0; i < 10; ++i) {
    const auto [sys, s] = sample_trial(scenario(GetParam()), i);
    const double fp = rate_fd(&lyapunov_position, sys, s);
    const double fq = rate_fd(&lyapunov_orientation, sys, s);
    EXPECT_NEAR(lyapunov_position_rate(sys, s), fp, 1e-6 * (1.0 + std::abs(fp)));
    EXPECT_NEAR(lyapunov_orientation_rate(sys, s), fq, 1e-6 * (1.0 + std::abs(fq)));
    EXPECT_LE(lyapunov_position_rate(sys, s), 1e-12);
  }
}

TEST_P(CaseTest, GoalsAreAFixedPoint) {
  auto [sys, s] = sample_trial(scenario(GetParam()), 3);
  s.p_r = sys.right.position.goal;
  s.p_l = sys.left.position.goal;
  s.q_r = sys.right.orientation.goal;
  s.q_l = sys.left.orientation.goal;
  s.v_r = s.v_l = s.w_r = s.w_l = Vec3::Zero();
  const CoupledState n = coupled_step(sys, s, 0.0, 1e-3);
  EXPECT_LT((n.p_r - s.p_r).norm() + (n.p_l - s.p_l).norm(), 1e-12);
  EXPECT_LT(qerr(n.q_r, s.q_r).norm() + qerr(n.q_l, s.q_l).norm(), 1e-12);
  EXPECT_LT(n.v_r.norm() + n.w_l.norm(), 1e-12);
}

TEST_P(CaseTest, PreconditionsHoldForSampledTrials) {
  const auto [sys, s] = sample_trial(scenario(GetParam()), 0);
  const Preconditions pre = preconditions(sys);
  EXPECT_TRUE(pre.ok()) << pre.describe();
  EXPECT_LT(lyapunov_orientation(sys, s), 4.0);
}

TEST_P(CaseTest, SmallVerificationPasses) {
  StabilityScenario sc = scenario(GetParam());
  sc.trials = 4;
  sc.threads = 2;
  const StabilityReport r = verify_stability(sc);
  EXPECT_TRUE(r.passed());
  EXPECT_TRUE(r.violations.empty());
  EXPECT_EQ(r.trials.size(), 4u);
  EXPECT_NO_THROW(throw_if_unstable(r));
}

INSTANTIATE_TEST_SUITE_P(Coupling, CaseTest,
                         ::testing::Values(CouplingCase::CaseI, CouplingCase::CaseII,
                                           CouplingCase::CaseIII));

TEST(Coupling, ForceSymmetries) {
  for (CouplingCase c : {CouplingCase::CaseI, CouplingCase::CaseII, CouplingCase::CaseIII}) {
    auto [sys, s] = sample_trial(scenario(c), 7);
    s.rel.v = Vec3(0.1, -0.2, 0.05);
    s.rel.w = Vec3(-0.3, 0.1, 0.2);
    const CouplingForces f = coupling_eval(sys, s);
    const UnitQuaternion qlr = s.q_lr();
    if (c == CouplingCase::CaseI) {
      EXPECT_LT((f.fv_lr + f.fv_rl).norm(), 1e-14);
    } else {
      EXPECT_LT((f.fp_lr + f.fp_rl).norm(), 1e-14);
      EXPECT_LT((f.fq_lr + rotate(qlr, f.fq_rl)).norm(), 1e-14);
    }
    if (c == CouplingCase::CaseIII) {
      EXPECT_LT((f.fw_lr + rotate(qlr, f.fw_rl)).norm(), 1e-14);
    }
  }
}

TEST(Coupling, UncoupledArmsIgnoreEachOther) {
  auto [sys, s] = sample_trial(scenario(CouplingCase::CaseI), 2);
  sys.coupling = CouplingCase::Uncoupled;
  CoupledState other = s;
  other.p_l += Vec3(0.2, 0.1, 0.0);
  other.q_l = qmul(qexp(Vec3(0.1, 0.0, 0.2)), other.q_l);
  const CoupledState a = coupled_step(sys, s, 0.0, 1e-3);
  const CoupledState b = coupled_step(sys, other, 0.0, 1e-3);
  EXPECT_EQ(a.p_r, b.p_r);
  EXPECT_EQ(a.q_r.coeffs(), b.q_r.coeffs());
}

TEST(Coupling, RelativePrimitiveNeverSeesTheArms) {
  auto [sys, s] = sample_trial(scenario(CouplingCase::CaseIII), 4);
  s.rel.p += Vec3(0.1, 0, 0);
  CoupledState other = s;
  other.p_r += Vec3(0.3, 0.3, 0.3);
  const CoupledState a = coupled_step(sys, s, 0.0, 1e-3);
  const CoupledState b = coupled_step(sys, other, 0.0, 1e-3);
  EXPECT_EQ(a.rel.p, b.rel.p);
  EXPECT_EQ(a.rel.v, b.rel.v);
}

TEST(Coupling, InconsistentGoalsAreFlagged) {
  auto [sys, s] = sample_trial(scenario(CouplingCase::CaseII), 1);
  sys.relative.position.goal += Vec3(0.05, 0, 0);
  const Preconditions pre = preconditions(sys);
  EXPECT_NEAR(pre.consistency_p, 0.05, 1e-12);
  EXPECT_FALSE(pre.ok());
}

TEST(Coupling, MismatchedStiffnessLeavesResidual) {
  StabilityScenario sc = scenario(CouplingCase::CaseI);
  sc.kf_ratio = 2.0;
  const auto [sys, s] = sample_trial(sc, 0);
  const Preconditions pre = preconditions(sys);
  EXPECT_FALSE(pre.stiffness_matched);
  EXPECT_GT(std::abs(stiffness_residual(sys, s)), 0.0);
  const auto [matched, s2] = sample_trial(scenario(CouplingCase::CaseI), 0);
  EXPECT_NEAR(stiffness_residual(matched, s2), 0.0, 1e-15);
}

TEST(Coupling, AnisotropicStiffnessIsFlagged) {
  auto [sys, s] = sample_trial(scenario(CouplingCase::CaseIII), 0);
  sys.K.x() *= 2.0;
  sys.Kf = sys.K;
  EXPECT_FALSE(preconditions(sys).isotropic);
}

TEST(Coupling, NegativeDampingIsFlagged) {
  StabilityScenario sc = scenario(CouplingCase::CaseI);
  sc.coupling_damping_diag = Vec3(1.0, -1.0, 1.0);
  sc.trials = 1;
  sc.horizon = 0.01;
  const StabilityReport r = verify_stability(sc);
  EXPECT_FALSE(r.pre.coupling_gains_positive);
  EXPECT_FALSE(r.passed());
}

TEST(Coupling, WeightedCandidateDiffersFromCorrected) {
  // The weight-2 relative terms add a rate the forces do not cancel.
  const auto [sys, s] = sample_trial(scenario(CouplingCase::CaseI), 9);
  const double corrected = rate_fd(&lyapunov_orientation, sys, s);
  const double weighted = rate_fd(&lyapunov_orientation_weighted, sys, s);
  EXPECT_GT(std::abs(weighted - corrected), 1e-6);
}

TEST(Coupling, RolloutConvergesToArmGoals) {
  const auto [sys, s] = sample_trial(scenario(CouplingCase::CaseII), 6);
  const std::vector<CoupledState> r = coupled_rollout(sys, s, 20.0, 1e-2);
  const CoupledState& end = r.back();
  EXPECT_LT((end.p_r - sys.right.position.goal).norm(), 1e-3);
  EXPECT_LT(qerr(sys.left.orientation.goal, end.q_l).norm(), 1e-3);
}
