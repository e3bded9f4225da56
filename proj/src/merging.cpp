#include "posedmp/merging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "posedmp/errors.hpp"

namespace posedmp {

namespace {

/// True (unscaled) state carried across primitives.
struct Carry {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  UnitQuaternion q;
  Vec3 w = Vec3::Zero();
};

void require_form(const PoseDmp& m, KernelForm form, const char* strategy) {
  const bool ok = (m.position.kernels.size() == 0 || m.position.kernels.form == form) &&
                  (m.orientation.kernels.size() == 0 || m.orientation.kernels.form == form);
  if (!ok) {
    throw InvalidPlan(std::string("strategy ") + strategy +
                      " cannot use models with this kernel form");
  }
}

/// Prepares primitive l to start from the carried state.
PoseDmp start_from(const Primitive& prim, const Carry& c, bool restart) {
  PoseDmp d = prim.model;
  if (restart) {
    d.position.start = c.p;
    d.orientation.start = c.q;
  }
  d.orientation.goal = align_to(d.orientation.goal, d.orientation.start);
  return d;
}

void record(MergeResult& res, const PoseSample& s, bool replace_last) {
  if (replace_last) {
    res.traj.samples.back() = s;
  } else {
    res.traj.samples.push_back(s);
  }
}

Handoff make_handoff(const MergeResult& res, const Carry& before) {
  Handoff h;
  h.index = res.traj.size() - 1;
  h.time = res.traj.samples.back().t;
  h.v_before = before.v;
  h.w_before = before.w;
  return h;
}

double goal_distance_p(const PoseDmp& d, const Vec3& p) { return (d.position.goal - p).norm(); }
double goal_distance_q(const PoseDmp& d, const UnitQuaternion& q) {
  return orientation_distance(d.orientation.goal, q);
}

/// Goals of the kernel-stack sweep; each window starts where the last ended.
struct Waypoints {
  std::vector<Vec3> p;            // L + 1 entries
  std::vector<UnitQuaternion> q;  // L + 1 entries, sign-continuous
  std::vector<double> edges;      // window edges in seconds, L + 1 entries
};

Waypoints waypoints(const MergePlan& plan) {
  Waypoints w;
  const double tau = plan.primitives.front().model.position.tau;
  w.p.push_back(plan.primitives.front().model.position.start);
  w.q.push_back(plan.primitives.front().model.orientation.start);
  w.edges.push_back(0.0);
  double sum = 0.0;
  for (const Primitive& prim : plan.primitives) {
    w.p.push_back(prim.model.position.goal);
    w.q.push_back(align_to(prim.model.orientation.goal, w.q.back()));
    sum += prim.duration;
    w.edges.push_back(tau * sum);
  }
  return w;
}

/// Window index containing t and the fraction travelled, clamped to [0, 1].
std::pair<std::size_t, double> window_at(const Waypoints& w, double t) {
  const std::size_t L = w.edges.size() - 1;
  if (t <= 0.0) return {0, 0.0};
  for (std::size_t l = 0; l < L; ++l) {
    if (t < w.edges[l + 1]) {
      return {l, (t - w.edges[l]) / (w.edges[l + 1] - w.edges[l])};
    }
  }
  return {L - 1, 1.0};
}

KernelBank merge_banks(const std::vector<const KernelBank*>& banks,
                       const std::vector<double>& offsets,
                       const std::vector<double>& scales,
                       std::vector<std::size_t>* owner,
                       const std::vector<std::size_t>& ids) {
  struct Entry {
    double c, w;
    Vec3 weight;
    std::size_t owner;
  };
  std::vector<Entry> entries;
  for (std::size_t b = 0; b < banks.size(); ++b) {
    const KernelBank& k = *banks[b];
    for (std::size_t i = 0; i < k.size(); ++i) {
      entries.push_back({offsets[b] + scales[b] * k.centers[i], scales[b] * k.widths[i],
                         k.weights.col(static_cast<Eigen::Index>(i)), ids[b]});
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.c < b.c; });
  KernelBank out;
  out.form = KernelForm::TimeKernels;
  out.weights.resize(3, static_cast<Eigen::Index>(entries.size()));
  if (owner) owner->clear();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out.centers.push_back(entries[i].c);
    out.widths.push_back(entries[i].w);
    out.weights.col(static_cast<Eigen::Index>(i)) = entries[i].weight;
    if (owner) owner->push_back(entries[i].owner);
  }
  return out;
}

}  // namespace

void MergePlan::validate() const {
  if (primitives.empty()) throw InvalidPlan("plan has no primitives");
  for (const Primitive& p : primitives) {
    if (!(p.duration > 0.0) || !std::isfinite(p.duration)) {
      throw InvalidPlan("primitive durations must be positive");
    }
    p.model.position.gains.validate();
    p.model.orientation.gains.validate();
  }
  switch (strategy) {
    case Strategy::Switch:
      if (!(switching.dist_threshold_p > 0.0) || !(switching.dist_threshold_q > 0.0) ||
          (switching.vel_threshold && !(*switching.vel_threshold > 0.0))) {
        throw InvalidPlan("switch thresholds must be positive");
      }
      for (const Primitive& p : primitives) require_form(p.model, KernelForm::PhaseKernels, "switch");
      break;
    case Strategy::MovingTarget:
      if (moving_target.v_d.size() > primitives.size() ||
          moving_target.w_d.size() > primitives.size()) {
        throw InvalidPlan("more crossing velocities than primitives");
      }
      for (const Primitive& p : primitives) {
        require_form(p.model, KernelForm::PhaseKernels, "moving-target");
      }
      break;
    case Strategy::KernelStack: {
      if (!(kernel_stack.alpha_h > 0.0)) throw InvalidPlan("alpha_h must be positive");
      const PoseDmp& first = primitives.front().model;
      for (const Primitive& p : primitives) {
        require_form(p.model, KernelForm::TimeKernels, "kernel-stack");
        if (p.model.position.gains.K != first.position.gains.K ||
            p.model.position.gains.D != first.position.gains.D ||
            p.model.orientation.gains.K != first.orientation.gains.K ||
            p.model.orientation.gains.D != first.orientation.gains.D ||
            p.model.position.tau != first.position.tau ||
            p.model.orientation.tau != first.position.tau) {
          throw InvalidPlan("kernel-stack primitives must share gains and tau");
        }
      }
      break;
    }
  }
}

double MergePlan::total_duration() const {
  return std::accumulate(primitives.begin(), primitives.end(), 0.0,
                         [](double s, const Primitive& p) { return s + p.duration; });
}

MergeResult merge_switch(const MergePlan& plan, double dt) {
  plan.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  MergeResult res;
  res.traj.dt = dt;
  const std::size_t L = plan.primitives.size();
  Carry c;
  c.p = plan.primitives.front().model.position.start;
  c.q = plan.primitives.front().model.orientation.start;
  double t0 = 0.0;

  for (std::size_t l = 0; l < L; ++l) {
    const Primitive& prim = plan.primitives[l];
    const PoseDmp d = start_from(prim, c, l > 0);
    const PositionDmp& pd = d.position;
    const OrientationDmp& od = d.orientation;
    const ExpClock pc = exp_clock_of(pd);
    const ExpClock oc = exp_clock_of(od);
    PositionState ps{c.p, c.v * pd.tau};
    OrientationState os{c.q, c.w * od.tau};
    const bool last = l + 1 == L;
    const double limit = kStallFactor * prim.duration * pd.tau;
    bool moved = false;
    for (std::size_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * dt;
      const double hp = pc.phase_at(t);
      const double ho = oc.phase_at(t);
      PoseSample s;
      s.t = t0 + t;
      s.p = ps.p;
      s.v = ps.v / pd.tau;
      s.a = position_accel(pd, ps, hp) / (pd.tau * pd.tau);
      s.q = os.q;
      s.w = os.w / od.tau;
      s.wdot = orientation_accel(od, os, ho) / (od.tau * od.tau);
      s.h = ho;
      record(res, s, k == 0 && l > 0);
      if (k == 0 && l > 0) {
        res.handoffs.back().v_after = s.v;
        res.handoffs.back().w_after = s.w;
      }

      bool done = false;
      if (last) {
        done = goal_distance_p(d, s.p) < kConvergenceDistance &&
               goal_distance_q(d, s.q) < kConvergenceDistance;
      } else if (plan.switching.vel_threshold) {
        const double speed = std::max(s.v.norm(), s.w.norm());
        moved = moved || speed > *plan.switching.vel_threshold;
        done = moved && speed < *plan.switching.vel_threshold;
      } else {
        done = goal_distance_p(d, s.p) < plan.switching.dist_threshold_p &&
               goal_distance_q(d, s.q) < plan.switching.dist_threshold_q;
      }
      if (done) {
        c = {s.p, s.v, s.q, s.w};
        if (!last) res.handoffs.push_back(make_handoff(res, c));
        t0 = s.t;
        break;
      }
      if (t > limit) throw StallError(l, t);
      ps = position_step(pd, ps, hp, dt);
      os = orientation_step(od, os, ho, dt);
    }
  }
  return res;
}

Vec3 moving_target_position(const Vec3& goal, const Vec3& v_d, double T,
                            const ExpClock& clock, double h) {
  return goal - T * v_d + v_d * clock.elapsed(h);
}

UnitQuaternion moving_target_quaternion(const UnitQuaternion& goal,
                                        const Vec3& w_d, double T,
                                        const ExpClock& clock, double h) {
  const UnitQuaternion initial = qmul(qexp(-0.5 * T * w_d), goal);
  return qmul(qexp(0.5 * clock.elapsed(h) * w_d), initial);
}

MergeResult merge_moving_target(const MergePlan& plan, double dt) {
  plan.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  MergeResult res;
  res.traj.dt = dt;
  const std::size_t L = plan.primitives.size();
  Carry c;
  c.p = plan.primitives.front().model.position.start;
  c.q = plan.primitives.front().model.orientation.start;
  double t0 = 0.0;

  for (std::size_t l = 0; l < L; ++l) {
    const Primitive& prim = plan.primitives[l];
    const PoseDmp d = start_from(prim, c, l > 0);
    const PositionDmp& pd = d.position;
    const OrientationDmp& od = d.orientation;
    const ExpClock pc = exp_clock_of(pd);
    const ExpClock oc = exp_clock_of(od);
    const bool last = l + 1 == L;
    const Vec3 v_d = !last && l < plan.moving_target.v_d.size() ? plan.moving_target.v_d[l]
                                                               : Vec3::Zero();
    const Vec3 w_d = !last && l < plan.moving_target.w_d.size() ? plan.moving_target.w_d[l]
                                                               : Vec3::Zero();
    const double T = prim.duration;
    const auto steps = static_cast<std::size_t>(std::llround(T / dt));
    const double limit = kStallFactor * T * pd.tau;

    auto accel_p = [&](const PositionState& x, double h) {
      const Vec3 pm = moving_target_position(pd.goal, v_d, T, pc, h);
      const Vec3 f = forcing_eval(pd.kernels, h, 0.0).value;
      return Vec3(pd.gains.K.cwiseProduct((pm - x.p) * (1.0 - h) + f) +
                  pd.gains.D.cwiseProduct(v_d - x.v) * (1.0 - h));
    };
    auto accel_q = [&](const OrientationState& x, double h) {
      const UnitQuaternion qm =
          align_to(moving_target_quaternion(od.goal, w_d, T, oc, h), x.q);
      const Vec3 f = forcing_eval(od.kernels, h, 0.0).value;
      return Vec3(od.gains.K.cwiseProduct(qerr(qm, x.q) * (1.0 - h) + f) +
                  od.gains.D.cwiseProduct(w_d - x.w) * (1.0 - h));
    };

    PositionState ps{c.p, c.v * pd.tau};
    OrientationState os{c.q, c.w * od.tau};
    for (std::size_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * dt;
      const double hp = pc.phase_at(t);
      const double ho = oc.phase_at(t);
      const Vec3 ap = accel_p(ps, hp) / pd.tau;
      const Vec3 aq = accel_q(os, ho) / od.tau;
      PoseSample s;
      s.t = t0 + t;
      s.p = ps.p;
      s.v = ps.v / pd.tau;
      s.a = ap / pd.tau;
      s.q = os.q;
      s.w = os.w / od.tau;
      s.wdot = aq / od.tau;
      s.h = ho;
      record(res, s, k == 0 && l > 0);
      if (k == 0 && l > 0) {
        res.handoffs.back().v_after = s.v;
        res.handoffs.back().w_after = s.w;
      }
      const bool done = last ? goal_distance_p(d, s.p) < kConvergenceDistance &&
                                   goal_distance_q(d, s.q) < kConvergenceDistance
                             : k == steps;
      if (done) {
        c = {s.p, s.v, s.q, s.w};
        if (!last) res.handoffs.push_back(make_handoff(res, c));
        t0 = s.t;
        break;
      }
      if (t > limit) throw StallError(l, t);
      ps = {ps.p + dt * ps.v / pd.tau, ps.v + dt * ap};
      os = {integrate_step(os.q, os.w / od.tau, dt), os.w + dt * aq};
    }
  }
  return res;
}

StackedKernels stack_kernels(const MergePlan& plan) {
  std::vector<std::size_t> all(plan.primitives.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return stack_kernels(plan, all);
}

StackedKernels stack_kernels(const MergePlan& plan,
                             const std::vector<std::size_t>& subset) {
  StackedKernels out;
  out.total_duration = plan.total_duration();
  const double T = out.total_duration;
  std::vector<double> offsets, scales;
  std::vector<const KernelBank*> pos, ori;
  double before = 0.0;
  std::size_t next = 0;
  for (std::size_t l = 0; l < plan.primitives.size(); ++l) {
    const Primitive& prim = plan.primitives[l];
    if (next < subset.size() && subset[next] == l) {
      offsets.push_back(before / T);
      scales.push_back(prim.duration / T);
      pos.push_back(&prim.model.position.kernels);
      ori.push_back(&prim.model.orientation.kernels);
      ++next;
    }
    before += prim.duration;
  }
  out.position = merge_banks(pos, offsets, scales, &out.owner, subset);
  out.orientation = merge_banks(ori, offsets, scales, nullptr, subset);
  return out;
}

Vec3 delayed_goal_position(const MergePlan& plan, double t) {
  const Waypoints w = waypoints(plan);
  const auto [l, frac] = window_at(w, t);
  if (frac >= 1.0) return w.p[l + 1];
  return w.p[l] + (w.p[l + 1] - w.p[l]) * frac;
}

UnitQuaternion delayed_goal_quaternion(const MergePlan& plan, double t) {
  const Waypoints w = waypoints(plan);
  const auto [l, frac] = window_at(w, t);
  if (frac >= 1.0) return w.q[l + 1];
  const Vec3 r = qlog(qmul(w.q[l + 1], conj(w.q[l])));
  return qmul(qexp(frac * r), w.q[l]);
}

MergeResult merge_kernel_stack(const MergePlan& plan, double dt) {
  plan.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const std::size_t L = plan.primitives.size();
  const PoseDmp& first = plan.primitives.front().model;
  const double tau = first.position.tau;
  const DmpGains gp = first.position.gains;
  const DmpGains go = first.orientation.gains;
  const StackedKernels full = stack_kernels(plan);
  const double T = full.total_duration;
  const SigmoidClock clock{plan.kernel_stack.alpha_h, T, dt, tau};
  const Waypoints w = waypoints(plan);

  // Neighbouring pairs for the windowed mode; pair j covers primitives j, j+1.
  std::vector<StackedKernels> pairs;
  std::vector<double> advance_at;
  if (plan.kernel_stack.windowed && L > 2) {
    for (std::size_t j = 0; j + 1 < L; ++j) {
      pairs.push_back(stack_kernels(plan, {j, j + 1}));
      // Move on once the middle of window j + 1 is passed.
      advance_at.push_back(0.5 * (w.edges[j + 1] + w.edges[j + 2]));
    }
  }

  MergeResult res;
  res.traj.dt = dt;
  Vec3 p = w.p.front(), v = Vec3::Zero();
  UnitQuaternion q = w.q.front();
  Vec3 om = Vec3::Zero();
  const double limit = tau * T + kStallFactor * tau * T;
  std::size_t active = 0;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double h = sigmoid_clock_eval(clock, t);
    const double s = t / (tau * T);
    const StackedKernels* bank = &full;
    if (!pairs.empty()) {
      while (active + 1 < pairs.size() && t >= advance_at[active]) ++active;
      bank = &pairs[active];
    }
    const ForcingValue fp = forcing_eval(bank->position, h, s);
    const ForcingValue fq = forcing_eval(bank->orientation, h, s);
    if (fp.degenerate || fq.degenerate) ++res.degenerate_steps;
    const Vec3 pm = delayed_goal_position(plan, t);
    const UnitQuaternion qm = align_to(delayed_goal_quaternion(plan, t), q);
    const Vec3 ap = (gp.K.cwiseProduct(pm - p + fp.value) - gp.D.cwiseProduct(v)) / tau;
    const Vec3 aq =
        (go.K.cwiseProduct(qerr(qm, q) + fq.value) - go.D.cwiseProduct(om)) / tau;

    PoseSample smp;
    smp.t = t;
    smp.p = p;
    smp.v = v / tau;
    smp.a = ap / tau;
    smp.q = q;
    smp.w = om / tau;
    smp.wdot = aq / tau;
    smp.h = h;
    res.traj.samples.push_back(smp);

    const bool done = h < kStackPhaseEnd &&
                      (w.p.back() - p).norm() < kConvergenceDistance &&
                      orientation_distance(w.q.back(), q) < kConvergenceDistance;
    if (done) break;
    if (t > limit) throw StallError(L - 1, t);
    p += dt * v / tau;
    v += dt * ap;
    q = integrate_step(q, om / tau, dt);
    om += dt * aq;
  }
  return res;
}

MergeResult merge(const MergePlan& plan, double dt) {
  switch (plan.strategy) {
    case Strategy::Switch: return merge_switch(plan, dt);
    case Strategy::MovingTarget: return merge_moving_target(plan, dt);
    case Strategy::KernelStack: return merge_kernel_stack(plan, dt);
  }
  throw InvalidPlan("unknown strategy");
}

double max_acc_jump(const PoseTrajectory& traj) {
  double m = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const PoseSample& a = traj.samples[k - 1];
    const PoseSample& b = traj.samples[k];
    m = std::max({m, (b.a - a.a).norm(), (b.wdot - a.wdot).norm()});
  }
  return m;
}

double median_acc_change(const PoseTrajectory& traj) {
  std::vector<double> d;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const PoseSample& a = traj.samples[k - 1];
    const PoseSample& b = traj.samples[k];
    d.push_back(std::max((b.a - a.a).norm(), (b.wdot - a.wdot).norm()));
  }
  if (d.empty()) return 0.0;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

MergeMetrics compute_metrics(const MergeResult& result, const MergePlan& plan,
                             const PoseTrajectory* demo) {
  MergeMetrics m;
  const PoseTrajectory& traj = result.traj;
  m.duration = traj.duration();
  for (const Handoff& h : result.handoffs) {
    m.max_vel_jump = std::max({m.max_vel_jump, (h.v_after - h.v_before).norm(),
                               (h.w_after - h.w_before).norm()});
  }
  m.max_acc_jump = max_acc_jump(traj);
  for (std::size_t l = 0; l + 1 < plan.primitives.size(); ++l) {
    const PoseDmp& d = plan.primitives[l].model;
    double bp = INFINITY, bq = INFINITY;
    for (const PoseSample& s : traj.samples) {
      bp = std::min(bp, (d.position.goal - s.p).norm());
      bq = std::min(bq, orientation_distance(d.orientation.goal, s.q));
    }
    m.via_distances_p.push_back(bp);
    m.via_distances_q.push_back(bq);
  }
  if (demo && !demo->samples.empty()) {
    // Each primitive is compared with its own demo segment in local time, so
    // an early switch does not show up as a time shift against later segments.
    double ep = 0.0, eo = 0.0;
    const double last = static_cast<double>(demo->size() - 1);
    std::size_t l = 0;
    double start = traj.samples.front().t, offset = 0.0;
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
      while (l < result.handoffs.size() && result.handoffs[l].index <= k) {
        offset += plan.primitives[l].duration;
        start = result.handoffs[l].time;
        ++l;
      }
      const PoseSample& s = traj.samples[k];
      const bool final = l >= result.handoffs.size();
      const double end = final ? last
                               : std::round((offset + plan.primitives[l].duration) / demo->dt);
      const double idx = std::round((offset + s.t - start) / demo->dt);
      const PoseSample& ref =
          demo->samples[static_cast<std::size_t>(std::clamp(idx, 0.0, std::min(end, last)))];
      ep = std::max(ep, (ref.p - s.p).norm());
      eo = std::max(eo, orientation_distance(ref.q, s.q));
    }
    m.e_p_max = ep;
    m.e_o_max = eo;
  }
  return m;
}

}  // namespace posedmp
