#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "posedmp/dmp.hpp"

namespace posedmp {

struct Pose {
  Vec3 p = Vec3::Zero();
  UnitQuaternion q;
};

struct Segment {
  std::size_t start_index = 0;
  std::size_t end_index = 0;
  Pose goal;
};

enum class TrajFormat { Csv, Json };

/// Column order of exported trajectories.
extern const std::vector<std::string> kTrajectoryColumns;

/// Quaternion rows whose norm deviates from 1 by more than this are rejected.
constexpr double kUnitNormTolerance = 1e-3;
constexpr double kSamplingTolerance = 1e-6;

/// Reads CSV (default) or JSON (".json" extension). Required columns are
/// t, px, py, pz, qw, qx, qy, qz; any of v, a, w, dw, h may follow as whole
/// groups. Quaternions are normalized and made sign-continuous; missing
/// derivatives are filled by finite differences.
PoseTrajectory load_demo(const std::string& path);
PoseTrajectory parse_demo_csv(const std::string& text);
PoseTrajectory parse_demo_json(const std::string& text);

/// Fills v and a from positions and w, wdot from quaternions.
void fill_derivatives(PoseTrajectory& traj, bool velocities, bool accelerations,
                      bool angular_velocities, bool angular_accelerations);

/// Splits at rest periods between bursts where max(|v|, |w|) exceeds the
/// threshold. Each cut is the slowest sample of its rest period and is shared
/// by the two adjacent segments.
std::vector<Segment> segment_zero_velocity(const PoseTrajectory& demo,
                                           double v_thresh);

/// Samples [seg.start_index, seg.end_index], re-timed to start at 0.
PoseTrajectory slice(const PoseTrajectory& traj, const Segment& seg);

/// Quintic time scaling of a straight line and of the short-arc geodesic.
/// The goal quaternion is taken on the start's hemisphere.
PoseTrajectory min_jerk_pose(const Pose& start, const Pose& goal, double T,
                             double dt);

/// Joins trajectories end to start; each junction sample appears once.
PoseTrajectory concatenate(const std::vector<PoseTrajectory>& parts);

/// Writes through a temporary file and an atomic rename.
void export_trajectory(const PoseTrajectory& traj, const std::string& path,
                       TrajFormat format);
std::string trajectory_to_csv(const PoseTrajectory& traj);
std::string trajectory_to_json(const PoseTrajectory& traj);

/// Atomic text write used by every file producer.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace posedmp
