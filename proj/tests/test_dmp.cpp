#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "posedmp/errors.hpp"
#include "posedmp/pipeline.hpp"
#include "support.hpp"

using namespace posedmp;
using posedmp::testing::random_quaternion;
using posedmp::testing::random_vec;

namespace {

OrientationDmp plain_orientation(const UnitQuaternion& start, const UnitQuaternion& goal,
                                 double k = 10.0) {
  OrientationDmp d;
  d.gains = DmpGains::critically_damped(k);
  d.start = start;
  d.goal = goal;
  d.duration = 1.0;
  d.clock.gamma = default_gamma(1.0);
  d.kernels = make_phase_kernels(10, d.clock.gamma, d.duration);
  return d;
}

PoseTrajectory line_demo() {
  return min_jerk_pose({Vec3(0, 0, 0), UnitQuaternion(1, 0, 0, 0)},
                       {Vec3(0.4, -0.2, 0.3), UnitQuaternion(0.8, 0.3, -0.4, 0.3)}, 2.0, 0.01);
}

}  // namespace

TEST(Kernels, PhaseCentersSpanTheMotion) {
  const double gamma = default_gamma(2.0);
  const KernelBank k = make_phase_kernels(15, gamma, 2.0);
  EXPECT_NO_THROW(k.validate());
  EXPECT_NEAR(k.centers.back(), 1.0, 1e-15);
  EXPECT_NEAR(k.centers.front(), 0.01, 1e-12);
}

TEST(Kernels, TimeKernelsCrossAtHalf) {
  const KernelBank k = make_time_kernels(11);
  const double mid = 0.5 * (k.centers[3] + k.centers[4]);
  const Eigen::VectorXd psi = kernel_activations(k, mid);
  EXPECT_NEAR(psi[3], 0.5, 1e-12);
  EXPECT_NEAR(psi[4], 0.5, 1e-12);
}

TEST(Kernels, ForcingScalesWithPhase) {
  KernelBank k = make_phase_kernels(5, 1.0, 3.0);
  k.weights.setOnes();
  // Normalized activations sum to one, so unit weights give exactly h.
  EXPECT_NEAR(forcing_eval(k, 0.4, 0.0).value.x(), 0.4, 1e-12);
  EXPECT_EQ(forcing_eval(k, 0.0, 0.0).value, Vec3::Zero());
}

TEST(Kernels, ValidateRejectsBrokenBanks) {
  KernelBank k = make_time_kernels(4);
  k.widths[2] = 0.0;
  EXPECT_THROW(k.validate(), std::invalid_argument);
  EXPECT_THROW(make_time_kernels(1), std::invalid_argument);
}

TEST(Gains, ValidateRejectsNonPositive) {
  DmpGains g = DmpGains::critically_damped(4.0);
  EXPECT_NO_THROW(g.validate());
  EXPECT_DOUBLE_EQ(g.D.x(), 4.0);
  g.K.y() = 0.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(OrientationDmp, ZeroForcingConvergesFromQuarterTurn) {
  const OrientationDmp d = plain_orientation(UnitQuaternion(1, 0, 0, 0), UnitQuaternion(0, 1, 0, 0));
  const PoseTrajectory r = rollout(d, 10.0, 0.001, Integrator::RK4);
  EXPECT_LT(qerr(d.goal, r.samples.back().q).norm(), 1e-3);
}

TEST(OrientationDmp, LyapunovNonIncreasingOnceDecayed) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const UnitQuaternion g = random_quaternion(rng);
    OrientationDmp d = plain_orientation(align_to(random_quaternion(rng), g), g,
                                         std::uniform_real_distribution<double>(1, 50)(rng));
    OrientationState s{d.start, random_vec(rng, 0.5)};
    double v = orientation_lyapunov(d, s);
    for (int k = 0; k < 2000; ++k) {
      s = orientation_step_rk4(d, s, 1e3, 1e-3);  // h(1e3) underflows to 0
      const double next = orientation_lyapunov(d, s);
      ASSERT_LE(next - v, 1e-9 * (1.0 + std::abs(v)));
      v = next;
    }
  }
}

TEST(PositionDmp, ZeroForcingStartsAtRestAndEndsAtGoal) {
  PositionDmp d;
  d.start = Vec3(1, 2, 3);
  d.goal = Vec3(-1, 0, 0.5);
  d.clock.gamma = default_gamma(1.0);
  d.kernels = make_phase_kernels(8, d.clock.gamma, 1.0);
  // With h = 1 the start term cancels the spring, so nothing moves at t = 0.
  EXPECT_LT(position_accel(d, {d.start, Vec3::Zero()}, 1.0).norm(), 1e-14);
  const PoseTrajectory r = rollout(d, 8.0, 0.001);
  EXPECT_LT((r.samples.back().p - d.goal).norm(), 1e-3);
}

TEST(Training, ReproducesDemonstration) {
  const PoseTrajectory demo = line_demo();
  TrainOptions opt;
  opt.kernels = 25;
  const PoseDmp d = train_pose(demo, opt);
  const PoseTrajectory r = rollout(d, demo.duration(), demo.dt);
  const auto [ep, eq] = reproduction_rmse(r, demo);
  EXPECT_LT(ep, 0.01 * 0.583);
  EXPECT_LT(eq, 0.01);
  EXPECT_LT((r.samples.back().p - d.position.goal).norm(), 0.02);
}

TEST(Training, TauSlowsTheSamePath) {
  const PoseTrajectory demo = line_demo();
  TrainOptions opt;
  const PoseDmp fast = train_pose(demo, opt);
  PoseDmp slow = fast;
  slow.position.tau = slow.orientation.tau = 2.0;
  const PoseTrajectory a = rollout(fast, 2.0, 0.001, Integrator::RK4);
  const PoseTrajectory b = rollout(slow, 4.0, 0.001, Integrator::RK4);
  for (std::size_t k = 0; k < a.size(); k += 100) {
    EXPECT_LT((a.samples[k].p - b.samples[2 * k].p).norm(), 1e-9);
    EXPECT_LT(qerr(a.samples[k].q, b.samples[2 * k].q).norm(), 1e-9);
  }
}

TEST(Training, EndpointsComeFromDemo) {
  const PoseTrajectory demo = line_demo();
  const PoseDmp d = train_pose(demo, TrainOptions{});
  EXPECT_EQ(d.position.start, demo.samples.front().p);
  EXPECT_EQ(d.position.goal, demo.samples.back().p);
  EXPECT_GT(d.orientation.goal.dot(d.orientation.start), 0.0);
}

TEST(Training, RejectsShortDemos) {
  PoseTrajectory demo = line_demo();
  demo.samples.resize(5);
  TrainOptions opt;
  opt.kernels = 15;
  EXPECT_THROW(train_pose(demo, opt), InsufficientData);
}

TEST(Training, TimeModelsRefuseStandaloneRollout) {
  TrainOptions opt;
  opt.form = KernelForm::TimeKernels;
  const PoseDmp d = train_pose(line_demo(), opt);
  EXPECT_THROW(rollout(d, 1.0, 0.01), std::invalid_argument);
}
