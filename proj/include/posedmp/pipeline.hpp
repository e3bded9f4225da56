#pragma once

#include <vector>

#include "posedmp/merging.hpp"
#include "posedmp/serialization.hpp"
#include "posedmp/traj_io.hpp"

namespace posedmp {

/// Minimum-jerk path through the waypoints, durations[i] seconds per leg.
PoseTrajectory min_jerk_path(const std::vector<Pose>& waypoints,
                             const std::vector<double>& durations, double dt);

struct SegmentFit {
  Segment segment;
  double rmse_p = 0.0;  // phase model rollout against the segment
  double rmse_q = 0.0;
};

/// Segments the demo at rest periods and trains every segment with phase
/// and time kernels. `fits` receives the per-segment reproduction errors.
ModelFile train_segments(const PoseTrajectory& demo, const TrainOptions& opt,
                         double rest_threshold,
                         std::vector<SegmentFit>* fits = nullptr);

/// Plan over every segment, picking the kernel form the strategy needs.
/// A positive tau overrides the trained one.
MergePlan make_plan(const ModelFile& model, Strategy strategy, double tau = 0.0);

/// RMS of |p - p_ref| and |qerr| over the common samples.
std::pair<double, double> reproduction_rmse(const PoseTrajectory& a,
                                            const PoseTrajectory& ref);

}  // namespace posedmp
