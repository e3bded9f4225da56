#include "posedmp/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace posedmp {

namespace {

constexpr double kDegenerateSum = 1e-12;

}  // namespace

void KernelBank::validate() const {
  const std::size_t n = centers.size();
  if (n < 2) throw std::invalid_argument("kernel bank needs at least 2 kernels");
  if (widths.size() != n || static_cast<std::size_t>(weights.cols()) != n) {
    throw std::invalid_argument("kernel bank arrays have mismatched sizes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(widths[i] > 0.0)) throw std::invalid_argument("kernel width must be positive");
    if (i > 0 && centers[i] < centers[i - 1]) {
      throw std::invalid_argument("kernel centers must be sorted");
    }
  }
}

KernelBank make_phase_kernels(std::size_t n, double gamma, double duration) {
  if (n < 2) throw std::invalid_argument("kernel bank needs at least 2 kernels");
  KernelBank k;
  k.form = KernelForm::PhaseKernels;
  k.centers.resize(n);
  k.widths.resize(n);
  // Ascending phase means the last kernel sits at t = 0.
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = static_cast<double>(n - 1 - i) / static_cast<double>(n - 1);
    k.centers[i] = std::exp(-gamma * frac * duration);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double gap = i + 1 < n ? k.centers[i + 1] - k.centers[i]
                                 : k.centers[i] - k.centers[i - 1];
    k.widths[i] = 4.0 * std::log(2.0) / (gap * gap);
  }
  k.weights = WeightMatrix::Zero(3, static_cast<Eigen::Index>(n));
  return k;
}

KernelBank make_time_kernels(std::size_t n) {
  if (n < 2) throw std::invalid_argument("kernel bank needs at least 2 kernels");
  KernelBank k;
  k.form = KernelForm::TimeKernels;
  const double gap = 1.0 / static_cast<double>(n - 1);
  const double sigma = gap / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  for (std::size_t i = 0; i < n; ++i) {
    k.centers.push_back(static_cast<double>(i) * gap);
    k.widths.push_back(sigma);
  }
  k.weights = WeightMatrix::Zero(3, static_cast<Eigen::Index>(n));
  return k;
}

Eigen::VectorXd kernel_activations(const KernelBank& k, double x) {
  const auto n = static_cast<Eigen::Index>(k.size());
  Eigen::VectorXd psi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = x - k.centers[static_cast<std::size_t>(i)];
    const double w = k.widths[static_cast<std::size_t>(i)];
    psi[i] = k.form == KernelForm::PhaseKernels ? std::exp(-w * d * d)
                                                : std::exp(-d * d / (2.0 * w * w));
  }
  return psi;
}

ForcingValue forcing_eval(const KernelBank& k, double phase, double t_norm) {
  ForcingValue out;
  if (k.size() == 0) return out;
  const double x = k.form == KernelForm::PhaseKernels ? phase : t_norm;
  const Eigen::VectorXd psi = kernel_activations(k, x);
  double sum = psi.sum();
  if (sum < kDegenerateSum) {
    out.degenerate = true;
    sum += kDegenerateSum;
  }
  out.value = (k.weights * psi) * (phase / sum);
  return out;
}

}  // namespace posedmp
