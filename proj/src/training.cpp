#include <algorithm>
#include <cmath>

#include "posedmp/dmp.hpp"
#include "posedmp/errors.hpp"

namespace posedmp {

namespace {

struct DemoTiming {
  double duration;  // nominal T, the demo lasts tau T
  std::vector<double> t;
};

DemoTiming demo_timing(const PoseTrajectory& demo, const TrainOptions& opt) {
  if (demo.size() < std::max<std::size_t>(opt.kernels, 2)) {
    throw InsufficientData("demonstration has " + std::to_string(demo.size()) +
                           " samples, need at least " +
                           std::to_string(std::max<std::size_t>(opt.kernels, 2)));
  }
  if (opt.kernels < 2) throw InsufficientData("need at least 2 kernels");
  if (!(opt.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  opt.gains.validate();
  DemoTiming timing;
  const double t0 = demo.samples.front().t;
  for (const PoseSample& s : demo.samples) timing.t.push_back(s.t - t0);
  timing.duration = timing.t.back() / opt.tau;
  if (!(timing.duration > 0.0)) throw InsufficientData("demonstration has zero duration");
  return timing;
}

KernelBank make_bank(const TrainOptions& opt, double gamma, double duration) {
  return opt.form == KernelForm::PhaseKernels
             ? make_phase_kernels(opt.kernels, gamma, duration)
             : make_time_kernels(opt.kernels);
}

/// Phase and kernel input at each demo time.
void phases_and_inputs(const TrainOptions& opt, const ClockParams& clock,
                       const DemoTiming& timing, std::vector<double>& phases,
                       std::vector<double>& inputs) {
  phases.clear();
  inputs.clear();
  if (opt.form == KernelForm::PhaseKernels) {
    const ExpClock c{opt.tau, clock.gamma, 1.0, 0.0};
    for (double t : timing.t) {
      phases.push_back(c.phase_at(t));
      inputs.push_back(phases.back());
    }
  } else {
    const SigmoidClock c{clock.alpha_h, timing.duration, clock.dt, opt.tau};
    for (double t : timing.t) {
      phases.push_back(sigmoid_clock_eval(c, t));
      inputs.push_back(t / (opt.tau * timing.duration));
    }
  }
}

ClockParams clock_for(const PoseTrajectory& demo, const TrainOptions& opt,
                      double duration) {
  ClockParams c;
  c.gamma = default_gamma(duration);
  c.alpha_h = opt.alpha_h;
  c.dt = demo.dt;
  return c;
}

}  // namespace

WeightMatrix fit_weights(const KernelBank& bank,
                         const std::vector<double>& inputs,
                         const std::vector<double>& phases,
                         const std::vector<Vec3>& targets,
                         FitDiagnostics* diag) {
  const auto n = static_cast<Eigen::Index>(bank.size());
  WeightMatrix w = WeightMatrix::Zero(3, n);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(n);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Eigen::VectorXd psi = kernel_activations(bank, inputs[t]);
    const double h = phases[t];
    w += targets[t] * (psi * h).transpose();
    den += psi * (h * h);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (den[i] < kSingularKernelWeight) {
      w.col(i).setZero();
      if (diag) diag->singular_kernels.push_back(static_cast<std::size_t>(i));
    } else {
      w.col(i) /= den[i] + kRegularizer;
    }
  }
  return w;
}

PositionDmp train_position(const PoseTrajectory& demo, const TrainOptions& opt,
                           FitDiagnostics* diag) {
  const DemoTiming timing = demo_timing(demo, opt);
  PositionDmp d;
  d.gains = opt.gains;
  d.tau = opt.tau;
  d.duration = timing.duration;
  d.clock = clock_for(demo, opt, timing.duration);
  d.start = demo.samples.front().p;
  d.goal = demo.samples.back().p;
  d.kernels = make_bank(opt, d.clock.gamma, d.duration);

  std::vector<double> phases, inputs;
  phases_and_inputs(opt, d.clock, timing, phases, inputs);
  const double tau = opt.tau;
  std::vector<Vec3> targets;
  targets.reserve(demo.size());
  for (std::size_t k = 0; k < demo.size(); ++k) {
    const PoseSample& s = demo.samples[k];
    const Vec3 dyn = (tau * tau * s.a + tau * d.gains.D.cwiseProduct(s.v))
                         .cwiseQuotient(d.gains.K);
    if (opt.form == KernelForm::PhaseKernels && opt.moving_target) {
      const double g = 1.0 - phases[k];
      targets.push_back((tau * tau * s.a + tau * g * d.gains.D.cwiseProduct(s.v))
                            .cwiseQuotient(d.gains.K) -
                        (d.goal - s.p) * g);
    } else if (opt.form == KernelForm::PhaseKernels) {
      targets.push_back(dyn + (s.p - d.goal) + (d.goal - d.start) * phases[k]);
    } else {
      const double frac = std::min(inputs[k], 1.0);
      const Vec3 moving = d.start + (d.goal - d.start) * frac;
      targets.push_back(dyn - (moving - s.p));
    }
  }
  d.kernels.weights = fit_weights(d.kernels, inputs, phases, targets, diag);
  return d;
}

OrientationDmp train_orientation(const PoseTrajectory& demo,
                                 const TrainOptions& opt,
                                 FitDiagnostics* diag) {
  const DemoTiming timing = demo_timing(demo, opt);
  OrientationDmp d;
  d.gains = opt.gains;
  d.tau = opt.tau;
  d.duration = timing.duration;
  d.clock = clock_for(demo, opt, timing.duration);

  // Sign-continuous copy so the goal lands on the start's hemisphere.
  std::vector<UnitQuaternion> qs;
  qs.reserve(demo.size());
  for (const PoseSample& s : demo.samples) {
    qs.push_back(qs.empty() ? s.q : align_to(s.q, qs.back()));
  }
  d.start = qs.front();
  d.goal = align_to(qs.back(), d.start);
  d.kernels = make_bank(opt, d.clock.gamma, d.duration);

  std::vector<double> phases, inputs;
  phases_and_inputs(opt, d.clock, timing, phases, inputs);
  const double tau = opt.tau;
  const Vec3 d0 = qerr(d.goal, d.start);
  const Vec3 sweep = qlog(qmul(d.goal, conj(d.start)));
  std::vector<Vec3> targets;
  targets.reserve(demo.size());
  for (std::size_t k = 0; k < demo.size(); ++k) {
    const PoseSample& s = demo.samples[k];
    const Vec3 dyn = (tau * tau * s.wdot + tau * d.gains.D.cwiseProduct(s.w))
                         .cwiseQuotient(d.gains.K);
    if (opt.form == KernelForm::PhaseKernels && opt.moving_target) {
      const double g = 1.0 - phases[k];
      targets.push_back((tau * tau * s.wdot + tau * g * d.gains.D.cwiseProduct(s.w))
                            .cwiseQuotient(d.gains.K) -
                        qerr(d.goal, qs[k]) * g);
    } else if (opt.form == KernelForm::PhaseKernels) {
      targets.push_back(dyn - qerr(d.goal, qs[k]) + d0 * phases[k]);
    } else {
      const double frac = std::min(inputs[k], 1.0);
      const UnitQuaternion moving = qmul(qexp(frac * sweep), d.start);
      targets.push_back(dyn - qerr(moving, qs[k]));
    }
  }
  d.kernels.weights = fit_weights(d.kernels, inputs, phases, targets, diag);
  return d;
}

PoseDmp train_pose(const PoseTrajectory& demo, const TrainOptions& opt,
                   FitDiagnostics* diag) {
  PoseDmp d;
  d.position = train_position(demo, opt, diag);
  d.orientation = train_orientation(demo, opt, diag);
  return d;
}

}  // namespace posedmp
