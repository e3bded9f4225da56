#pragma once

namespace posedmp {

/// Exponential phase, tau h_dot = -gamma h. Evaluated in closed form from t.
struct ExpClock {
  double tau = 1.0;
  double gamma = 1.0;
  double h = 1.0;
  double t = 0.0;

  double phase_at(double time) const;
  /// Time that produced phase h, -tau ln(h) / gamma.
  double elapsed(double phase) const;
};

ExpClock exp_clock_step(const ExpClock& c, double dt);

/// Decay rate that brings the phase to 0.01 at t = tau T.
double default_gamma(double duration);

struct SigmoidClock {
  double alpha_h = 1.0;
  double T = 1.0;
  double dt = 0.01;
  double tau = 1.0;
};

/// h(t) = 1 / (1 + exp((alpha_h / dt) (t - tau T))).
double sigmoid_clock_eval(const SigmoidClock& c, double t);
/// Continuous-time derivative of the closed form.
double sigmoid_clock_rate(const SigmoidClock& c, double t);
/// The rate written per sample, -alpha_h h (1 - h); equals dt times the
/// continuous rate.
double sigmoid_clock_sample_increment(const SigmoidClock& c, double t);

}  // namespace posedmp
