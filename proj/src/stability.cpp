#include "posedmp/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

namespace posedmp {

namespace {

/// Largest number of violations kept per trial and monitor.
constexpr std::size_t kViolationsKept = 3;
constexpr int kMaxRedraws = 1000;

struct Sampler {
  std::mt19937_64 rng;
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  Vec3 box(double half) { return {uniform(-half, half), uniform(-half, half), uniform(-half, half)}; }
  Vec3 direction() {
    std::normal_distribution<double> n;
    Vec3 d(n(rng), n(rng), n(rng));
    while (d.norm() < 1e-6) d = Vec3(n(rng), n(rng), n(rng));
    return d.normalized();
  }
  UnitQuaternion quaternion() {
    std::normal_distribution<double> n;
    Vec4 c(n(rng), n(rng), n(rng), n(rng));
    while (c.norm() < 1e-6) c = Vec4(n(rng), n(rng), n(rng), n(rng));
    return UnitQuaternion(c);
  }
};

PoseDmp at_rest(const Vec3& p, const UnitQuaternion& q, double tau) {
  PoseDmp m;
  m.position.goal = m.position.start = p;
  m.orientation.goal = m.orientation.start = q;
  m.position.tau = m.orientation.tau = tau;
  return m;
}

double arm_distance_p(const CoupledSystem& sys, const CoupledState& s) {
  return std::max((sys.right.position.goal - s.p_r).norm(),
                  (sys.left.position.goal - s.p_l).norm());
}

double arm_distance_q(const CoupledSystem& sys, const CoupledState& s) {
  return std::max(orientation_distance(sys.right.orientation.goal, s.q_r),
                  orientation_distance(sys.left.orientation.goal, s.q_l));
}

bool same_relative(const RelativeState& a, const RelativeState& b) {
  return a.p == b.p && a.v == b.v && a.q.coeffs() == b.q.coeffs() && a.w == b.w;
}

/// |x_dot| at the arm goals with the relative primitive at rest on its goal.
double equilibrium_rate(const CoupledSystem& sys, double dt) {
  CoupledState s;
  s.p_r = sys.right.position.goal;
  s.p_l = sys.left.position.goal;
  s.q_r = sys.right.orientation.goal;
  s.q_l = sys.left.orientation.goal;
  s.rel.p = sys.relative.position.goal;
  s.rel.q = sys.relative.orientation.goal;
  CoupledSystem decayed = sys;
  decayed.decayed_clock = true;
  const CoupledState n = coupled_step(decayed, s, 0.0, dt, Integrator::Euler);
  const double d = (n.p_r - s.p_r).norm() + (n.p_l - s.p_l).norm() +
                   (n.v_r - s.v_r).norm() + (n.v_l - s.v_l).norm() +
                   orientation_distance(n.q_r, s.q_r) + orientation_distance(n.q_l, s.q_l) +
                   (n.w_r - s.w_r).norm() + (n.w_l - s.w_l).norm();
  return d / dt;
}

struct TrialResult {
  TrialReport report;
  std::vector<Violation> violations;
  Preconditions pre;
  double equilibrium = 0.0;
};

TrialResult run_trial(const StabilityScenario& sc, std::size_t index) {
  auto [sys, s0] = sample_trial(sc, index);
  TrialResult out;
  out.pre = preconditions(sys);
  out.equilibrium = equilibrium_rate(sys, sc.dt);
  TrialReport& r = out.report;
  r.index = index;
  r.V0_p = lyapunov_position(sys, s0);
  r.V0_q = lyapunov_orientation(sys, s0);
  r.vdot_p_min = r.vdot_q_min = INFINITY;
  r.vdot_p_max = r.vdot_q_max = -INFINITY;

  CoupledSystem ablated = sys;
  ablated.coupling = CouplingCase::Uncoupled;

  const auto steps = static_cast<std::size_t>(std::llround(sc.horizon * sc.tau / sc.dt));
  CoupledState s = s0;
  CoupledState a = s0;
  double Vp = r.V0_p, Vq = r.V0_q;
  std::size_t kept_p = 0, kept_q = 0;
  auto check = [&](const char* which, double before, double after, std::size_t k,
                   const CoupledState& st, std::size_t& kept) {
    if (after - before > kLyapunovSlack * (1.0 + std::abs(before)) && kept < kViolationsKept) {
      out.violations.push_back({index, k, static_cast<double>(k) * sc.dt, which, before, after, st});
      ++kept;
    }
  };
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    const CoupledState n = coupled_step(sys, s, t, sc.dt);
    a = coupled_step(ablated, a, t, sc.dt);
    if (!same_relative(n.rel, a.rel)) r.ablation_identical = false;
    const double Vp1 = lyapunov_position(sys, n);
    const double Vq1 = lyapunov_orientation(sys, n);
    r.vdot_p_min = std::min(r.vdot_p_min, (Vp1 - Vp) / sc.dt);
    r.vdot_p_max = std::max(r.vdot_p_max, (Vp1 - Vp) / sc.dt);
    r.vdot_q_min = std::min(r.vdot_q_min, (Vq1 - Vq) / sc.dt);
    r.vdot_q_max = std::max(r.vdot_q_max, (Vq1 - Vq) / sc.dt);
    check("position", Vp, Vp1, k + 1, n, kept_p);
    check("orientation", Vq, Vq1, k + 1, n, kept_q);
    r.max_stiffness_residual =
        std::max(r.max_stiffness_residual, std::abs(stiffness_residual(sys, n)));
    if (arm_distance_p(sys, n) >= sc.tolerance || arm_distance_q(sys, n) >= sc.tolerance) {
      r.convergence_time = t + sc.dt;
    }
    s = n;
    Vp = Vp1;
    Vq = Vq1;
  }
  r.final_dist_p = arm_distance_p(sys, s);
  r.final_dist_q = arm_distance_q(sys, s);
  r.converged = r.final_dist_p < sc.tolerance && r.final_dist_q < sc.tolerance;
  return out;
}

}  // namespace

StabilityViolation::StabilityViolation(Violation v)
    : std::runtime_error(v.which + " Lyapunov function increased in trial " +
                         std::to_string(v.trial) + " at step " + std::to_string(v.step) +
                         " (" + std::to_string(v.V_before) + " -> " +
                         std::to_string(v.V_after) + ")"),
      v_(std::move(v)) {}

std::pair<CoupledSystem, CoupledState> sample_trial(const StabilityScenario& sc,
                                                    std::size_t index) {
  Sampler rnd{std::mt19937_64(sc.seed + index)};
  const double k = rnd.uniform(sc.stiffness.lo, sc.stiffness.hi);
  CoupledSystem sys;
  sys.coupling = sc.coupling;
  sys.decayed_clock = true;
  sys.K = Vec3::Constant(k);
  sys.D = Vec3::Constant(2.0 * std::sqrt(k));
  sys.Kf = sc.kf_ratio * sys.K;
  sys.Df = sc.coupling_damping_diag
               ? *sc.coupling_damping_diag
               : Vec3(rnd.uniform(sc.coupling_damping.lo, sc.coupling_damping.hi),
                      rnd.uniform(sc.coupling_damping.lo, sc.coupling_damping.hi),
                      rnd.uniform(sc.coupling_damping.lo, sc.coupling_damping.hi));

  const Vec3 gpr = sc.goal_p_r ? *sc.goal_p_r : rnd.box(0.5);
  const Vec3 gpl = sc.goal_p_l ? *sc.goal_p_l : rnd.box(0.5);
  const UnitQuaternion gqr = sc.goal_q_r ? *sc.goal_q_r : rnd.quaternion();
  const UnitQuaternion gql = sc.goal_q_l ? *sc.goal_q_l : rnd.quaternion();
  const Vec3 gprel = sc.goal_p_rel ? *sc.goal_p_rel : Vec3(gpr - gpl);
  const UnitQuaternion gqrel = sc.goal_q_rel ? *sc.goal_q_rel : qmul(gqr, conj(gql));
  sys.right = at_rest(gpr, gqr, sc.tau);
  sys.left = at_rest(gpl, gql, sc.tau);
  sys.relative = at_rest(gprel, gqrel, sc.tau);

  CoupledState s;
  s.rel.p = gprel;
  s.rel.q = gqrel;
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    s.p_r = gpr + rnd.box(sc.spread_p);
    s.p_l = gpl + rnd.box(sc.spread_p);
    s.v_r = rnd.box(sc.spread_v);
    s.v_l = rnd.box(sc.spread_v);
    s.q_r = qmul(qexp(rnd.uniform(0.0, sc.spread_q) * rnd.direction()), gqr);
    s.q_l = qmul(qexp(rnd.uniform(0.0, sc.spread_q) * rnd.direction()), gql);
    s.w_r = rnd.box(sc.spread_w);
    s.w_l = rnd.box(sc.spread_w);
    // The orientation arguments hold on the sublevel set V^q < 4.
    if (lyapunov_orientation(sys, s) < 4.0) break;
  }
  return {sys, s};
}

StabilityReport verify_stability(const StabilityScenario& sc) {
  if (!(sc.dt > 0.0) || !(sc.horizon > 0.0) || !(sc.tau > 0.0)) {
    throw std::invalid_argument("dt, horizon and tau must be positive");
  }
  std::vector<TrialResult> results(sc.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < sc.trials; i = next++) results[i] = run_trial(sc, i);
  };
  std::size_t n = sc.threads ? sc.threads : std::max(1u, std::thread::hardware_concurrency());
  n = std::min(n, std::max<std::size_t>(sc.trials, 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  StabilityReport rep;
  rep.coupling = sc.coupling;
  for (const TrialResult& r : results) {
    rep.trials.push_back(r.report);
    rep.violations.insert(rep.violations.end(), r.violations.begin(), r.violations.end());
    if (!r.report.converged) ++rep.non_converged;
    if (!r.report.ablation_identical) rep.ablation_ok = false;
    rep.equilibrium_residual = std::max(rep.equilibrium_residual, r.equilibrium);
    rep.pre.gains_positive = rep.pre.gains_positive && r.pre.gains_positive;
    rep.pre.coupling_gains_positive =
        rep.pre.coupling_gains_positive && r.pre.coupling_gains_positive;
    rep.pre.stiffness_matched = rep.pre.stiffness_matched && r.pre.stiffness_matched;
    rep.pre.isotropic = rep.pre.isotropic && r.pre.isotropic;
    rep.pre.consistency_p = std::max(rep.pre.consistency_p, r.pre.consistency_p);
    rep.pre.consistency_q = std::max(rep.pre.consistency_q, r.pre.consistency_q);
  }
  return rep;
}

void throw_if_unstable(const StabilityReport& report) {
  if (!report.violations.empty()) throw StabilityViolation(report.violations.front());
}

}  // namespace posedmp
