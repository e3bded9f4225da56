#include "posedmp/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "posedmp/errors.hpp"

namespace posedmp {

PoseTrajectory min_jerk_path(const std::vector<Pose>& waypoints,
                             const std::vector<double>& durations, double dt) {
  if (waypoints.size() < 2 || durations.size() + 1 != waypoints.size()) {
    throw std::invalid_argument("need one duration per leg");
  }
  std::vector<PoseTrajectory> legs;
  Pose from = waypoints.front();
  for (std::size_t i = 0; i < durations.size(); ++i) {
    Pose to = waypoints[i + 1];
    to.q = align_to(to.q, from.q);
    legs.push_back(min_jerk_pose(from, to, durations[i], dt));
    from = to;
  }
  return concatenate(legs);
}

std::pair<double, double> reproduction_rmse(const PoseTrajectory& a,
                                            const PoseTrajectory& ref) {
  const std::size_t n = std::min(a.size(), ref.size());
  if (n == 0) return {0.0, 0.0};
  double sp = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sp += (a.samples[k].p - ref.samples[k].p).squaredNorm();
    const double e = orientation_distance(a.samples[k].q, ref.samples[k].q);
    sq += e * e;
  }
  return {std::sqrt(sp / static_cast<double>(n)), std::sqrt(sq / static_cast<double>(n))};
}

ModelFile train_segments(const PoseTrajectory& demo, const TrainOptions& opt,
                         double rest_threshold, std::vector<SegmentFit>* fits) {
  ModelFile model;
  for (const Segment& seg : segment_zero_velocity(demo, rest_threshold)) {
    const PoseTrajectory part = slice(demo, seg);
    TrainOptions phase_opt = opt;
    phase_opt.form = KernelForm::PhaseKernels;
    TrainOptions moving_opt = phase_opt;
    moving_opt.moving_target = true;
    TrainOptions time_opt = opt;
    time_opt.form = KernelForm::TimeKernels;
    ModelSegment ms;
    ms.duration = part.duration();
    ms.phase = train_pose(part, phase_opt);
    ms.moving = train_pose(part, moving_opt);
    ms.time = train_pose(part, time_opt);
    if (fits) {
      const PoseTrajectory r = rollout(ms.phase, part.duration(), part.dt);
      const auto [ep, eq] = reproduction_rmse(r, part);
      fits->push_back({seg, ep, eq});
    }
    model.segments.push_back(ms);
  }
  return model;
}

MergePlan make_plan(const ModelFile& model, Strategy strategy, double tau) {
  MergePlan plan;
  plan.strategy = strategy;
  for (const ModelSegment& s : model.segments) {
    Primitive p;
    switch (strategy) {
      case Strategy::Switch: p.model = s.phase; break;
      case Strategy::MovingTarget: p.model = s.moving; break;
      case Strategy::KernelStack: p.model = s.time; break;
    }
    if (tau > 0.0) p.model.position.tau = p.model.orientation.tau = tau;
    p.duration = p.model.position.duration;
    plan.primitives.push_back(p);
  }
  return plan;
}

}  // namespace posedmp
