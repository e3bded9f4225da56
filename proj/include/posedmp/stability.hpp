#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "posedmp/coupled.hpp"

namespace posedmp {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Random-trial description for the coupled stability check. Arm goals are
/// sampled per trial unless given; the relative goal is derived from them
/// unless overridden.
struct StabilityScenario {
  CouplingCase coupling = CouplingCase::CaseI;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  double horizon = 20.0;  // in units of tau
  double tau = 1.0;
  Range stiffness{1.0, 50.0};  // k, with K = kI and D = 2 sqrt(k) I
  Range coupling_damping{0.5, 5.0};
  std::optional<Vec3> coupling_damping_diag;
  double kf_ratio = 1.0;  // K_f = kf_ratio K

  std::optional<Vec3> goal_p_r, goal_p_l, goal_p_rel;
  std::optional<UnitQuaternion> goal_q_r, goal_q_l, goal_q_rel;

  double spread_p = 0.3;  // m, per axis
  double spread_v = 0.5;
  double spread_q = 0.8;  // max |log| of the initial offset
  double spread_w = 0.5;
  double tolerance = 1e-3;
  std::size_t threads = 0;  // 0 picks the hardware count
};

struct TrialReport {
  std::size_t index = 0;
  double vdot_p_min = 0.0, vdot_p_max = 0.0;
  double vdot_q_min = 0.0, vdot_q_max = 0.0;
  double V0_p = 0.0, V0_q = 0.0;
  /// Last time either arm was farther than the tolerance from its goal.
  double convergence_time = 0.0;
  bool converged = false;
  double final_dist_p = 0.0, final_dist_q = 0.0;
  double max_stiffness_residual = 0.0;
  bool ablation_identical = true;
};

struct Violation {
  std::size_t trial = 0;
  std::size_t step = 0;
  double t = 0.0;
  std::string which;  // "position" or "orientation"
  double V_before = 0.0, V_after = 0.0;
  CoupledState state;
};

struct StabilityReport {
  CouplingCase coupling = CouplingCase::CaseI;
  Preconditions pre;                // worst case over trials
  double equilibrium_residual = 0.0;  // |x_dot| at the arm goals, max over trials
  std::vector<TrialReport> trials;
  std::vector<Violation> violations;
  std::size_t non_converged = 0;
  bool ablation_ok = true;

  bool passed() const {
    return pre.ok(1e-9) && equilibrium_residual <= 1e-9 && violations.empty() &&
           non_converged == 0 && ablation_ok;
  }
};

class StabilityViolation : public std::runtime_error {
 public:
  explicit StabilityViolation(Violation v);
  const Violation& violation() const { return v_; }

 private:
  Violation v_;
};

/// Per-step increase allowed before a step counts as a violation.
constexpr double kLyapunovSlack = 1e-9;

/// Builds trial `index` of the scenario: the system and its initial state.
/// Initial states are redrawn until V^q(0) < 4.
std::pair<CoupledSystem, CoupledState> sample_trial(const StabilityScenario& sc,
                                                    std::size_t index);

StabilityReport verify_stability(const StabilityScenario& sc);

/// Throws StabilityViolation for the first violation in the report.
void throw_if_unstable(const StabilityReport& report);

}  // namespace posedmp
