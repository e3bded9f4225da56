#include "posedmp/clock.hpp"

#include <cmath>

namespace posedmp {

double ExpClock::phase_at(double time) const {
  return std::exp(-gamma * time / tau);
}

double ExpClock::elapsed(double phase) const {
  return -tau * std::log(phase) / gamma;
}

ExpClock exp_clock_step(const ExpClock& c, double dt) {
  ExpClock next = c;
  next.t = c.t + dt;
  next.h = c.phase_at(next.t);
  return next;
}

double default_gamma(double duration) { return std::log(100.0) / duration; }

double sigmoid_clock_eval(const SigmoidClock& c, double t) {
  const double x = (c.alpha_h / c.dt) * (t - c.tau * c.T);
  // Split on the sign of x so exp never overflows.
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

double sigmoid_clock_rate(const SigmoidClock& c, double t) {
  const double h = sigmoid_clock_eval(c, t);
  return -(c.alpha_h / c.dt) * h * (1.0 - h);
}

double sigmoid_clock_sample_increment(const SigmoidClock& c, double t) {
  const double h = sigmoid_clock_eval(c, t);
  return -c.alpha_h * h * (1.0 - h);
}

}  // namespace posedmp
