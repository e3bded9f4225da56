#include "posedmp/dmp.hpp"

#include <cmath>
#include <stdexcept>

namespace posedmp {

namespace {

void require_phase_kernels(const KernelBank& k) {
  if (k.size() != 0 && k.form != KernelForm::PhaseKernels) {
    throw std::invalid_argument(
        "time-kernel models run through the kernel-stack merge");
  }
}

std::size_t step_count(double duration, double dt) {
  if (!(dt > 0.0) || !(duration > 0.0)) {
    throw std::invalid_argument("duration and dt must be positive");
  }
  return static_cast<std::size_t>(std::llround(duration / dt));
}

struct OriDeriv {
  Vec4 qdot;
  Vec3 wdot;
};

OriDeriv ori_deriv(const OrientationDmp& d, const Vec4& q, const Vec3& w,
                   double h) {
  const OrientationState s{UnitQuaternion(q), w};
  return {propagate(s.q, w / d.tau), orientation_accel(d, s, h) / d.tau};
}

}  // namespace

DmpGains DmpGains::critically_damped(double k) {
  return critically_damped(Vec3::Constant(k));
}

DmpGains DmpGains::critically_damped(const Vec3& k) {
  DmpGains g;
  g.K = k;
  g.D = 2.0 * k.cwiseSqrt();
  return g;
}

void DmpGains::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(std::isfinite(K[i]) && K[i] > 0.0 && std::isfinite(D[i]) && D[i] > 0.0)) {
      throw std::invalid_argument("gains must be finite and positive");
    }
  }
}

ExpClock exp_clock_of(const PositionDmp& d) {
  return ExpClock{d.tau, d.clock.gamma, 1.0, 0.0};
}

ExpClock exp_clock_of(const OrientationDmp& d) {
  return ExpClock{d.tau, d.clock.gamma, 1.0, 0.0};
}

Vec3 position_accel(const PositionDmp& d, const PositionState& s, double h,
                    bool* degenerate) {
  require_phase_kernels(d.kernels);
  const ForcingValue f = forcing_eval(d.kernels, h, 0.0);
  if (degenerate) *degenerate = f.degenerate;
  const Vec3 spring = (d.goal - s.p) - (d.goal - d.start) * h + f.value;
  return d.gains.K.cwiseProduct(spring) - d.gains.D.cwiseProduct(s.v);
}

Vec3 orientation_accel(const OrientationDmp& d, const OrientationState& s,
                       double h, bool* degenerate) {
  require_phase_kernels(d.kernels);
  const ForcingValue f = forcing_eval(d.kernels, h, 0.0);
  if (degenerate) *degenerate = f.degenerate;
  const Vec3 spring = qerr(d.goal, s.q) - qerr(d.goal, d.start) * h + f.value;
  return d.gains.K.cwiseProduct(spring) - d.gains.D.cwiseProduct(s.w);
}

PositionState position_step(const PositionDmp& d, const PositionState& s,
                            double h, double dt) {
  const Vec3 vdot = position_accel(d, s, h) / d.tau;
  return {s.p + dt * s.v / d.tau, s.v + dt * vdot};
}

OrientationState orientation_step(const OrientationDmp& d,
                                  const OrientationState& s, double h,
                                  double dt) {
  const Vec3 wdot = orientation_accel(d, s, h) / d.tau;
  return {integrate_step(s.q, s.w / d.tau, dt), s.w + dt * wdot};
}

PositionState position_step_rk4(const PositionDmp& d, const PositionState& s,
                                 double t, double dt) {
  const ExpClock c = exp_clock_of(d);
  auto f = [&](const PositionState& x, double time) {
    return PositionState{x.v / d.tau,
                         position_accel(d, x, c.phase_at(time)) / d.tau};
  };
  auto add = [](const PositionState& x, const PositionState& k, double a) {
    return PositionState{x.p + a * k.p, x.v + a * k.v};
  };
  const PositionState k1 = f(s, t);
  const PositionState k2 = f(add(s, k1, dt / 2), t + dt / 2);
  const PositionState k3 = f(add(s, k2, dt / 2), t + dt / 2);
  const PositionState k4 = f(add(s, k3, dt), t + dt);
  return {s.p + dt / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p),
          s.v + dt / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v)};
}

OrientationState orientation_step_rk4(const OrientationDmp& d,
                                      const OrientationState& s, double t,
                                      double dt) {
  const ExpClock c = exp_clock_of(d);
  const Vec4 q0 = s.q.coeffs();
  const OriDeriv k1 = ori_deriv(d, q0, s.w, c.phase_at(t));
  const OriDeriv k2 = ori_deriv(d, q0 + dt / 2 * k1.qdot, s.w + dt / 2 * k1.wdot,
                                c.phase_at(t + dt / 2));
  const OriDeriv k3 = ori_deriv(d, q0 + dt / 2 * k2.qdot, s.w + dt / 2 * k2.wdot,
                                c.phase_at(t + dt / 2));
  const OriDeriv k4 = ori_deriv(d, q0 + dt * k3.qdot, s.w + dt * k3.wdot,
                                c.phase_at(t + dt));
  const Vec4 q = q0 + dt / 6 * (k1.qdot + 2 * k2.qdot + 2 * k3.qdot + k4.qdot);
  const Vec3 w = s.w + dt / 6 * (k1.wdot + 2 * k2.wdot + 2 * k3.wdot + k4.wdot);
  return {UnitQuaternion(q), w};
}

PoseTrajectory rollout(const PositionDmp& d, double duration, double dt,
                       Integrator integ) {
  PoseDmp pose;
  pose.position = d;
  pose.orientation.tau = d.tau;
  pose.orientation.clock = d.clock;
  return rollout(pose, duration, dt, integ);
}

PoseTrajectory rollout(const OrientationDmp& d, double duration, double dt,
                       Integrator integ) {
  PoseDmp pose;
  pose.orientation = d;
  pose.position.tau = d.tau;
  pose.position.clock = d.clock;
  return rollout(pose, duration, dt, integ);
}

PoseTrajectory rollout(const PoseDmp& d, double duration, double dt,
                       Integrator integ) {
  const std::size_t n = step_count(duration, dt);
  const PositionDmp& pd = d.position;
  const OrientationDmp& od = d.orientation;
  const ExpClock pc = exp_clock_of(pd);
  const ExpClock oc = exp_clock_of(od);

  PoseTrajectory traj;
  traj.dt = dt;
  traj.samples.reserve(n + 1);
  PositionState ps{pd.start, Vec3::Zero()};
  OrientationState os{od.start, Vec3::Zero()};
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double hp = pc.phase_at(t);
    const double ho = oc.phase_at(t);
    PoseSample s;
    s.t = t;
    s.p = ps.p;
    s.v = ps.v / pd.tau;
    s.a = position_accel(pd, ps, hp) / (pd.tau * pd.tau);
    s.q = os.q;
    s.w = os.w / od.tau;
    s.wdot = orientation_accel(od, os, ho) / (od.tau * od.tau);
    s.h = ho;
    traj.samples.push_back(s);
    if (k == n) break;
    if (integ == Integrator::Euler) {
      ps = position_step(pd, ps, hp, dt);
      os = orientation_step(od, os, ho, dt);
    } else {
      ps = position_step_rk4(pd, ps, t, dt);
      os = orientation_step_rk4(od, os, t, dt);
    }
  }
  return traj;
}

double orientation_lyapunov(const OrientationDmp& d, const OrientationState& s) {
  return v_e(d.goal, s.q) + 0.5 * s.w.dot(s.w.cwiseQuotient(d.gains.K));
}

}  // namespace posedmp
