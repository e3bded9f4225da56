#include <cmath>

#include <gtest/gtest.h>

#include "posedmp/clock.hpp"

using namespace posedmp;

TEST(ExpClock, ReachesOnePercentAtNominalEnd) {
  for (double T : {0.5, 1.0, 5.0, 12.0}) {
    const ExpClock c{1.0, default_gamma(T)};
    EXPECT_NEAR(c.phase_at(T), 0.01, 1e-14);
    EXPECT_DOUBLE_EQ(c.phase_at(0.0), 1.0);
  }
}

TEST(ExpClock, TauStretchesTime) {
  const ExpClock slow{2.0, 0.9};
  const ExpClock fast{1.0, 0.9};
  EXPECT_NEAR(slow.phase_at(4.0), fast.phase_at(2.0), 1e-15);
}

TEST(ExpClock, ElapsedInvertsPhase) {
  const ExpClock c{1.5, 0.7};
  for (double t : {0.0, 0.3, 2.0, 9.0}) {
    EXPECT_NEAR(c.elapsed(c.phase_at(t)), t, 1e-12);
  }
}

TEST(ExpClock, StepMatchesClosedForm) {
  ExpClock c{1.0, 0.8};
  for (int k = 0; k < 1000; ++k) c = exp_clock_step(c, 0.01);
  EXPECT_NEAR(c.t, 10.0, 1e-10);
  EXPECT_NEAR(c.h, std::exp(-8.0), 1e-12);
}

TEST(ExpClock, MonotoneDecay) {
  const ExpClock c{1.0, default_gamma(3.0)};
  double prev = 2.0;
  for (int k = 0; k <= 600; ++k) {
    const double h = c.phase_at(0.01 * k);
    EXPECT_LT(h, prev);
    EXPECT_GT(h, 0.0);
    prev = h;
  }
}

TEST(SigmoidClock, HalfAtNominalEnd) {
  const SigmoidClock c{1.0, 5.0, 0.01, 1.0};
  EXPECT_DOUBLE_EQ(sigmoid_clock_eval(c, 5.0), 0.5);
  EXPECT_GT(sigmoid_clock_eval(c, 4.9), 1.0 - 1e-4);
  EXPECT_LT(sigmoid_clock_eval(c, 5.1), 1e-4);
}

TEST(SigmoidClock, NoOverflowFarFromTransition) {
  const SigmoidClock c{1.0, 1.0, 1e-4, 1.0};
  EXPECT_EQ(sigmoid_clock_eval(c, -100.0), 1.0);
  EXPECT_EQ(sigmoid_clock_eval(c, 100.0), 0.0);
}

TEST(SigmoidClock, TauShiftsTransition) {
  const SigmoidClock c{1.0, 2.0, 0.01, 3.0};
  EXPECT_DOUBLE_EQ(sigmoid_clock_eval(c, 6.0), 0.5);
}

TEST(SigmoidClock, RateMatchesFiniteDifference) {
  const SigmoidClock c{2.0, 1.0, 0.05, 1.0};
  for (double t : {0.8, 0.95, 1.0, 1.03}) {
    const double h = 1e-6;
    const double fd = (sigmoid_clock_eval(c, t + h) - sigmoid_clock_eval(c, t - h)) / (2 * h);
    EXPECT_NEAR(sigmoid_clock_rate(c, t), fd, 1e-6 * (1.0 + std::abs(fd)));
  }
}

TEST(SigmoidClock, SampleIncrementIsRateTimesStep) {
  const SigmoidClock c{1.0, 1.0, 0.01, 1.0};
  for (double t : {0.97, 1.0, 1.02}) {
    EXPECT_NEAR(sigmoid_clock_sample_increment(c, t), c.dt * sigmoid_clock_rate(c, t), 1e-15);
  }
}
