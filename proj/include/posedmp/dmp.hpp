#pragma once

#include <cstddef>
#include <vector>

#include "posedmp/clock.hpp"
#include "posedmp/kernels.hpp"
#include "posedmp/quaternion.hpp"

namespace posedmp {

/// Diagonal stiffness and damping.
struct DmpGains {
  Vec3 K = Vec3::Constant(10.0);
  Vec3 D = Vec3::Constant(2.0 * 3.1622776601683795);

  static DmpGains critically_damped(double k);
  static DmpGains critically_damped(const Vec3& k);
  /// Throws std::invalid_argument unless every entry is finite and positive.
  void validate() const;
};

/// gamma drives the exponential clock; alpha_h and dt the sigmoid one.
struct ClockParams {
  double gamma = 1.0;
  double alpha_h = 1.0;
  double dt = 0.01;
};

struct PositionDmp {
  DmpGains gains;
  KernelBank kernels;
  Vec3 goal = Vec3::Zero();
  Vec3 start = Vec3::Zero();
  double tau = 1.0;
  double duration = 1.0;
  ClockParams clock;
};

struct OrientationDmp {
  DmpGains gains;
  KernelBank kernels;
  UnitQuaternion goal;
  UnitQuaternion start;
  double tau = 1.0;
  double duration = 1.0;
  ClockParams clock;
};

struct PoseDmp {
  PositionDmp position;
  OrientationDmp orientation;
};

/// Velocities are the scaled quantities of the equations, v = tau p_dot and
/// w = tau * (world angular velocity).
struct PositionState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

struct OrientationState {
  UnitQuaternion q;
  Vec3 w = Vec3::Zero();
};

/// One trajectory row. Velocities and accelerations are true time
/// derivatives, not the scaled DMP states.
struct PoseSample {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
  UnitQuaternion q;
  Vec3 w = Vec3::Zero();
  Vec3 wdot = Vec3::Zero();
  double h = 0.0;
};

struct PoseTrajectory {
  double dt = 0.01;
  std::vector<PoseSample> samples;

  std::size_t size() const { return samples.size(); }
  double duration() const {
    return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
  }
};

enum class Integrator { Euler, RK4 };

ExpClock exp_clock_of(const PositionDmp& d);
ExpClock exp_clock_of(const OrientationDmp& d);

/// tau v_dot for the given phase. Phase-kernel models only; time-kernel
/// models are driven by the kernel-stack merge.
Vec3 position_accel(const PositionDmp& d, const PositionState& s, double h,
                    bool* degenerate = nullptr);
/// tau w_dot for the given phase.
Vec3 orientation_accel(const OrientationDmp& d, const OrientationState& s,
                       double h, bool* degenerate = nullptr);

/// Explicit Euler step at phase h.
PositionState position_step(const PositionDmp& d, const PositionState& s,
                            double h, double dt);
OrientationState orientation_step(const OrientationDmp& d,
                                  const OrientationState& s, double h,
                                  double dt);

/// Classical Runge-Kutta step from time t; the phase is re-evaluated at the
/// stage times. The quaternion is integrated in R^4 and renormalized.
PositionState position_step_rk4(const PositionDmp& d, const PositionState& s,
                                 double t, double dt);
OrientationState orientation_step_rk4(const OrientationDmp& d,
                                      const OrientationState& s, double t,
                                      double dt);

/// Fixed-step rollouts starting at the model's start with zero velocity.
PoseTrajectory rollout(const PositionDmp& d, double duration, double dt,
                       Integrator integ = Integrator::Euler);
PoseTrajectory rollout(const OrientationDmp& d, double duration, double dt,
                       Integrator integ = Integrator::Euler);
PoseTrajectory rollout(const PoseDmp& d, double duration, double dt,
                       Integrator integ = Integrator::Euler);

/// V = V_e(g, q) + 1/2 w^T K^-1 w for the single orientation primitive.
double orientation_lyapunov(const OrientationDmp& d, const OrientationState& s);

// Training ------------------------------------------------------------------

struct FitDiagnostics {
  std::vector<std::size_t> singular_kernels;
  bool degenerate = false;
};

struct TrainOptions {
  std::size_t kernels = 15;
  DmpGains gains;
  double tau = 1.0;
  KernelForm form = KernelForm::PhaseKernels;
  double alpha_h = 1.0;
  // Fit phase-kernel targets to the moving-target dynamics with a fixed goal
  // instead of the standard transformation system.
  bool moving_target = false;
};

constexpr double kRegularizer = 1e-8;
constexpr double kSingularKernelWeight = 1e-9;

/// Requires demo.size() >= kernels and derivatives present in the samples.
PositionDmp train_position(const PoseTrajectory& demo, const TrainOptions& opt,
                           FitDiagnostics* diag = nullptr);
OrientationDmp train_orientation(const PoseTrajectory& demo,
                                 const TrainOptions& opt,
                                 FitDiagnostics* diag = nullptr);
PoseDmp train_pose(const PoseTrajectory& demo, const TrainOptions& opt,
                   FitDiagnostics* diag = nullptr);

/// Per-kernel weighted least squares on precomputed targets.
WeightMatrix fit_weights(const KernelBank& bank,
                         const std::vector<double>& inputs,
                         const std::vector<double>& phases,
                         const std::vector<Vec3>& targets,
                         FitDiagnostics* diag);

}  // namespace posedmp
