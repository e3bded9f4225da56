#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "posedmp/quaternion.hpp"

namespace posedmp {

enum class KernelForm { PhaseKernels, TimeKernels };

using WeightMatrix = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Gaussian basis plus per-dimension weights.
///
/// PhaseKernels: psi_i(h) = exp(-a_i (h - c_i)^2), widths hold a_i.
/// TimeKernels:  psi_i(s) = exp(-(s - c_i)^2 / (2 sigma_i^2)) with
///               s = t / (tau T), widths hold sigma_i.
struct KernelBank {
  KernelForm form = KernelForm::PhaseKernels;
  std::vector<double> centers;
  std::vector<double> widths;
  WeightMatrix weights;

  std::size_t size() const { return centers.size(); }
  /// Throws std::invalid_argument when the bank breaks its invariants.
  void validate() const;
};

struct ForcingValue {
  Vec3 value = Vec3::Zero();
  bool degenerate = false;
};

/// Centers at the phase values reached at equally spaced times over
/// [0, T]; neighbouring kernels cross at psi = 0.5.
KernelBank make_phase_kernels(std::size_t n, double gamma, double duration);

/// Centers equally spaced on [0, 1]; neighbouring kernels cross at 0.5.
KernelBank make_time_kernels(std::size_t n);

/// Activations of every kernel at the given input (phase or normalized time).
Eigen::VectorXd kernel_activations(const KernelBank& k, double x);

/// (sum w psi / sum psi) h, with psi evaluated at `phase` for PhaseKernels
/// and at `t_norm` for TimeKernels.
ForcingValue forcing_eval(const KernelBank& k, double phase, double t_norm);

}  // namespace posedmp
