#pragma once

#include <random>

#include "posedmp/pipeline.hpp"

namespace posedmp::testing {

/// Orientation-only out-and-back demonstration through a via orientation,
/// two 5 s minimum-jerk legs sampled at 10 ms.
inline const UnitQuaternion kStart(0.247, 0.178, 0.318, -0.897);
inline const UnitQuaternion kVia(0.372, -0.499, -0.616, 0.482);

inline PoseTrajectory via_demo(double dt = 0.01) {
  return min_jerk_path({{Vec3::Zero(), kStart}, {Vec3::Zero(), kVia}, {Vec3::Zero(), kStart}},
                       {5.0, 5.0}, dt);
}

inline TrainOptions via_options() {
  TrainOptions opt;
  opt.kernels = 15;
  opt.gains = DmpGains::critically_damped(10.0);
  opt.tau = 1.0;
  opt.alpha_h = 1.0;
  return opt;
}

inline ModelFile via_model(const PoseTrajectory& demo) {
  return train_segments(demo, via_options(), 1e-3);
}

inline UnitQuaternion random_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return UnitQuaternion(Vec4(n(rng), n(rng), n(rng), n(rng)));
}

inline Vec3 random_vec(std::mt19937_64& rng, double half) {
  std::uniform_real_distribution<double> u(-half, half);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace posedmp::testing
