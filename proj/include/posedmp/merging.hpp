#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "posedmp/dmp.hpp"

namespace posedmp {

enum class Strategy { Switch, MovingTarget, KernelStack };

struct Primitive {
  PoseDmp model;
  double duration = 1.0;  // T^l
};

struct SwitchParams {
  double dist_threshold_p = 0.01;   // m
  double dist_threshold_q = 0.01;   // rad, on |qerr|
  /// When set, switch once |v| and |w| both drop below this instead.
  std::optional<double> vel_threshold;
};

/// Crossing velocities per primitive. Missing entries default to zero and the
/// last primitive always uses zero.
struct MovingTargetParams {
  std::vector<Vec3> v_d;
  std::vector<Vec3> w_d;
};

struct KernelStackParams {
  double alpha_h = 1.0;
  /// Evaluate only the kernels of two neighbouring primitives at a time.
  bool windowed = false;
};

struct MergePlan {
  std::vector<Primitive> primitives;
  Strategy strategy = Strategy::Switch;
  SwitchParams switching;
  MovingTargetParams moving_target;
  KernelStackParams kernel_stack;

  /// Throws InvalidPlan on an empty plan, non-positive durations or models
  /// whose kernel form does not suit the strategy.
  void validate() const;
  double total_duration() const;
};

/// Velocities on both sides of a primitive change.
struct Handoff {
  std::size_t index = 0;
  double time = 0.0;
  Vec3 v_before, v_after, w_before, w_after;
};

struct MergeResult {
  PoseTrajectory traj;
  std::vector<Handoff> handoffs;
  std::size_t degenerate_steps = 0;
};

/// Converged means within this distance of the final goal (m and rad).
constexpr double kConvergenceDistance = 1e-3;
constexpr double kStallFactor = 5.0;
constexpr double kStackPhaseEnd = 1e-4;

MergeResult merge_switch(const MergePlan& plan, double dt);

Vec3 moving_target_position(const Vec3& goal, const Vec3& v_d, double T,
                            const ExpClock& clock, double h);
UnitQuaternion moving_target_quaternion(const UnitQuaternion& goal,
                                        const Vec3& w_d, double T,
                                        const ExpClock& clock, double h);
MergeResult merge_moving_target(const MergePlan& plan, double dt);

/// Merged banks for the kernel-stack strategy. `owner` maps every merged
/// kernel to its primitive.
struct StackedKernels {
  KernelBank position;
  KernelBank orientation;
  std::vector<std::size_t> owner;
  double total_duration = 0.0;
};

StackedKernels stack_kernels(const MergePlan& plan);
/// Same merge restricted to the listed primitives.
StackedKernels stack_kernels(const MergePlan& plan,
                             const std::vector<std::size_t>& subset);

/// Piecewise linear sweep through the goals, one window of tau T^l each.
Vec3 delayed_goal_position(const MergePlan& plan, double t);
/// Piecewise geodesic sweep through the goals.
UnitQuaternion delayed_goal_quaternion(const MergePlan& plan, double t);

MergeResult merge_kernel_stack(const MergePlan& plan, double dt);

MergeResult merge(const MergePlan& plan, double dt);

struct MergeMetrics {
  std::optional<double> e_p_max;
  std::optional<double> e_o_max;
  std::vector<double> via_distances_p;
  std::vector<double> via_distances_q;
  double duration = 0.0;
  double max_vel_jump = 0.0;
  double max_acc_jump = 0.0;
};

/// Errors compare each primitive with its demo segment in the primitive's
/// local time, clamped to the segment end.
MergeMetrics compute_metrics(const MergeResult& result, const MergePlan& plan,
                             const PoseTrajectory* demo);

/// Largest per-step change of linear or angular acceleration.
double max_acc_jump(const PoseTrajectory& traj);
/// Median per-step change, on the same norm as max_acc_jump.
double median_acc_change(const PoseTrajectory& traj);

}  // namespace posedmp
