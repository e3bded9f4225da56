// posedmp command-line front end: synth, train, merge, verify.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "posedmp/errors.hpp"
#include "posedmp/pipeline.hpp"
#include "posedmp/stability.hpp"

namespace {

using nlohmann::json;
using namespace posedmp;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Usage or input problem; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) throw UsageError(what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw UsageError("unknown key '" + key + "' in " + what);
  }
}

json read_json(const std::string& path) {
  if (!std::filesystem::exists(path)) throw UsageError("no such file: " + path);
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

Vec3 vec3(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw UsageError("'" + key + "' must hold 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

UnitQuaternion quat(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 4) throw UsageError("'" + key + "' must hold 4 numbers");
  return UnitQuaternion(Vec4(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                             j[3].get<double>()));
}

Range range(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) throw UsageError("'" + key + "' must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json vjson(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json qjson(const UnitQuaternion& q) {
  return json::array({q.eta(), q.eps()[0], q.eps()[1], q.eps()[2]});
}

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw UsageError("no such file: " + path);
}

// synth ----------------------------------------------------------------------

struct SynthArgs {
  std::string out = "demo.csv";
  double dt = 0.01;
  double T1 = 5.0, T2 = 5.0;
};

int cmd_synth(const SynthArgs& a) {
  // Orientation-only out-and-back motion through a via orientation.
  const UnitQuaternion q0(0.247, 0.178, 0.318, -0.897);
  const UnitQuaternion q1(0.372, -0.499, -0.616, 0.482);
  const PoseTrajectory demo =
      min_jerk_path({{Vec3::Zero(), q0}, {Vec3::Zero(), q1}, {Vec3::Zero(), q0}},
                    {a.T1, a.T2}, a.dt);
  export_trajectory(demo, a.out,
                    a.out.ends_with(".json") ? TrajFormat::Json : TrajFormat::Csv);
  std::cout << "wrote " << demo.size() << " samples to " << a.out << "\n";
  return kExitOk;
}

// train ----------------------------------------------------------------------

struct TrainArgs {
  std::string demo;
  std::string out = "model.json";
  std::size_t kernels = 15;
  double stiffness = 10.0;
  double tau = 1.0;
  double alpha_h = 1.0;
  double rest = 1e-3;
};

int cmd_train(const TrainArgs& a) {
  require_file(a.demo);
  const PoseTrajectory demo = load_demo(a.demo);
  TrainOptions opt;
  opt.kernels = a.kernels;
  opt.gains = DmpGains::critically_damped(a.stiffness);
  opt.tau = a.tau;
  opt.alpha_h = a.alpha_h;
  std::vector<SegmentFit> fits;
  const ModelFile model = train_segments(demo, opt, a.rest, &fits);
  save_model(model, a.out);
  for (std::size_t i = 0; i < fits.size(); ++i) {
    std::printf("segment %zu: samples %zu-%zu rmse_p %.6g m rmse_q %.6g rad\n", i,
                fits[i].segment.start_index, fits[i].segment.end_index, fits[i].rmse_p,
                fits[i].rmse_q);
  }
  std::cout << "wrote " << model.segments.size() << " segment models to " << a.out << "\n";
  return kExitOk;
}

// merge ----------------------------------------------------------------------

struct MergeArgs {
  std::string model;
  std::string plan;
  std::string demo;
  std::string out = "merged.csv";
  std::string metrics = "metrics.json";
  std::string strategy = "switch";
  double dt = 0.01;
  double tau = 0.0;
  double threshold = 0.01;
  std::optional<double> vel_threshold;
  std::vector<double> cross_vel;
  std::vector<double> cross_lin_vel;
  double alpha_h = 1.0;
  bool windowed = false;
};

Strategy strategy_of(const std::string& s) {
  if (s == "switch") return Strategy::Switch;
  if (s == "moving-target") return Strategy::MovingTarget;
  if (s == "kernel-stack") return Strategy::KernelStack;
  throw UsageError("unknown strategy '" + s + "'");
}

void apply_plan_file(MergeArgs& a) {
  const json j = read_json(a.plan);
  reject_unknown(j,
                 {"strategy", "dt", "tau", "threshold", "vel_threshold", "cross_vel",
                  "cross_lin_vel", "alpha_h", "windowed"},
                 a.plan);
  if (j.contains("strategy")) a.strategy = j["strategy"].get<std::string>();
  if (j.contains("dt")) a.dt = j["dt"].get<double>();
  if (j.contains("tau")) a.tau = j["tau"].get<double>();
  if (j.contains("threshold")) a.threshold = j["threshold"].get<double>();
  if (j.contains("vel_threshold")) a.vel_threshold = j["vel_threshold"].get<double>();
  if (j.contains("cross_vel")) a.cross_vel = j["cross_vel"].get<std::vector<double>>();
  if (j.contains("cross_lin_vel")) {
    a.cross_lin_vel = j["cross_lin_vel"].get<std::vector<double>>();
  }
  if (j.contains("alpha_h")) a.alpha_h = j["alpha_h"].get<double>();
  if (j.contains("windowed")) a.windowed = j["windowed"].get<bool>();
}

int cmd_merge(MergeArgs a) {
  if (!a.plan.empty()) apply_plan_file(a);
  require_file(a.model);
  const Strategy strategy = strategy_of(a.strategy);
  if (!(a.dt > 0.0)) throw UsageError("dt must be positive");
  const bool crossing = !a.cross_vel.empty() || !a.cross_lin_vel.empty();
  if (crossing && strategy != Strategy::MovingTarget) {
    throw UsageError("crossing velocities need --strategy moving-target");
  }
  if (a.windowed && strategy != Strategy::KernelStack) {
    throw UsageError("--windowed needs --strategy kernel-stack");
  }
  if (a.vel_threshold && strategy != Strategy::Switch) {
    throw UsageError("--vel-threshold needs --strategy switch");
  }
  for (const auto* v : {&a.cross_vel, &a.cross_lin_vel}) {
    if (!v->empty() && v->size() != 3) throw UsageError("crossing velocities take 3 numbers");
  }

  const ModelFile model = load_model(a.model);
  MergePlan plan = make_plan(model, strategy, a.tau);
  plan.switching.dist_threshold_p = a.threshold;
  plan.switching.dist_threshold_q = a.threshold;
  plan.switching.vel_threshold = a.vel_threshold;
  for (std::size_t l = 0; l + 1 < plan.primitives.size(); ++l) {
    plan.moving_target.w_d.push_back(
        a.cross_vel.empty() ? Vec3::Zero() : Vec3(a.cross_vel[0], a.cross_vel[1], a.cross_vel[2]));
    plan.moving_target.v_d.push_back(a.cross_lin_vel.empty()
                                         ? Vec3::Zero()
                                         : Vec3(a.cross_lin_vel[0], a.cross_lin_vel[1],
                                                a.cross_lin_vel[2]));
  }
  plan.kernel_stack.alpha_h = a.alpha_h;
  plan.kernel_stack.windowed = a.windowed;

  std::optional<PoseTrajectory> demo;
  if (!a.demo.empty()) {
    require_file(a.demo);
    demo = load_demo(a.demo);
  }
  const MergeResult result = merge(plan, a.dt);
  const MergeMetrics m = compute_metrics(result, plan, demo ? &*demo : nullptr);

  json metrics = {{"strategy", a.strategy},
                  {"e_p_max", m.e_p_max ? json(*m.e_p_max) : json(nullptr)},
                  {"e_o_max", m.e_o_max ? json(*m.e_o_max) : json(nullptr)},
                  {"via_distances", {{"position", m.via_distances_p},
                                     {"orientation", m.via_distances_q}}},
                  {"duration", m.duration},
                  {"max_vel_jump", m.max_vel_jump},
                  {"max_acc_jump", m.max_acc_jump},
                  {"degenerate_steps", result.degenerate_steps}};
  export_trajectory(result.traj, a.out,
                    a.out.ends_with(".json") ? TrajFormat::Json : TrajFormat::Csv);
  write_file_atomic(a.metrics, metrics.dump(2) + "\n");
  std::printf("%s: %zu samples, duration %.3f s, max_vel_jump %.3g, max_acc_jump %.3g\n",
              a.strategy.c_str(), result.traj.size(), m.duration, m.max_vel_jump,
              m.max_acc_jump);
  return kExitOk;
}

// verify ---------------------------------------------------------------------

struct VerifyArgs {
  std::string scenario;
  std::string out = "report.json";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<double> dt;
  std::size_t threads = 0;
};

StabilityScenario read_scenario(const std::string& path) {
  const json j = read_json(path);
  reject_unknown(j,
                 {"case", "trials", "seed", "dt", "horizon", "tau", "stiffness",
                  "coupling_damping", "coupling_damping_diag", "kf_ratio", "goals",
                  "spreads", "tolerance"},
                 path);
  StabilityScenario sc;
  try {
    sc.coupling = coupling_case_from_string(j.at("case").get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const json::exception&) {
    throw UsageError(path + ": missing 'case'");
  }
  if (j.contains("trials")) sc.trials = j["trials"].get<std::size_t>();
  if (j.contains("seed")) sc.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("dt")) sc.dt = j["dt"].get<double>();
  if (j.contains("horizon")) sc.horizon = j["horizon"].get<double>();
  if (j.contains("tau")) sc.tau = j["tau"].get<double>();
  if (j.contains("stiffness")) sc.stiffness = range(j["stiffness"], "stiffness");
  if (j.contains("coupling_damping")) {
    sc.coupling_damping = range(j["coupling_damping"], "coupling_damping");
  }
  if (j.contains("coupling_damping_diag")) {
    sc.coupling_damping_diag = vec3(j["coupling_damping_diag"], "coupling_damping_diag");
  }
  if (j.contains("kf_ratio")) sc.kf_ratio = j["kf_ratio"].get<double>();
  if (j.contains("tolerance")) sc.tolerance = j["tolerance"].get<double>();
  if (j.contains("goals")) {
    const json& g = j["goals"];
    reject_unknown(g, {"p_r", "p_l", "p_rel", "q_r", "q_l", "q_rel"}, path + " goals");
    if (g.contains("p_r")) sc.goal_p_r = vec3(g["p_r"], "p_r");
    if (g.contains("p_l")) sc.goal_p_l = vec3(g["p_l"], "p_l");
    if (g.contains("p_rel")) sc.goal_p_rel = vec3(g["p_rel"], "p_rel");
    if (g.contains("q_r")) sc.goal_q_r = quat(g["q_r"], "q_r");
    if (g.contains("q_l")) sc.goal_q_l = quat(g["q_l"], "q_l");
    if (g.contains("q_rel")) sc.goal_q_rel = quat(g["q_rel"], "q_rel");
  }
  if (j.contains("spreads")) {
    const json& s = j["spreads"];
    reject_unknown(s, {"p", "v", "q", "w"}, path + " spreads");
    if (s.contains("p")) sc.spread_p = s["p"].get<double>();
    if (s.contains("v")) sc.spread_v = s["v"].get<double>();
    if (s.contains("q")) sc.spread_q = s["q"].get<double>();
    if (s.contains("w")) sc.spread_w = s["w"].get<double>();
  }
  if (!(sc.dt > 0.0) || !(sc.horizon > 0.0) || !(sc.tau > 0.0) || sc.trials == 0) {
    throw UsageError(path + ": dt, horizon, tau and trials must be positive");
  }
  return sc;
}

json state_json(const CoupledState& s) {
  return {{"p_r", vjson(s.p_r)}, {"p_l", vjson(s.p_l)}, {"v_r", vjson(s.v_r)},
          {"v_l", vjson(s.v_l)}, {"q_r", qjson(s.q_r)}, {"q_l", qjson(s.q_l)},
          {"w_r", vjson(s.w_r)}, {"w_l", vjson(s.w_l)}};
}

json report_json(const StabilityReport& r) {
  json trials = json::array();
  for (const TrialReport& t : r.trials) {
    trials.push_back({{"index", t.index},
                      {"vdot_p_min", t.vdot_p_min},
                      {"vdot_p_max", t.vdot_p_max},
                      {"vdot_q_min", t.vdot_q_min},
                      {"vdot_q_max", t.vdot_q_max},
                      {"V0_p", t.V0_p},
                      {"V0_q", t.V0_q},
                      {"convergence_time", t.convergence_time},
                      {"converged", t.converged},
                      {"final_dist_p", t.final_dist_p},
                      {"final_dist_q", t.final_dist_q},
                      {"max_stiffness_residual", t.max_stiffness_residual},
                      {"ablation_identical", t.ablation_identical}});
  }
  json violations = json::array();
  for (const Violation& v : r.violations) {
    violations.push_back({{"trial", v.trial},
                          {"step", v.step},
                          {"t", v.t},
                          {"which", v.which},
                          {"V_before", v.V_before},
                          {"V_after", v.V_after},
                          {"state", state_json(v.state)}});
  }
  return {{"case", to_string(r.coupling)},
          {"passed", r.passed()},
          {"preconditions",
           {{"gains_positive", r.pre.gains_positive},
            {"coupling_gains_positive", r.pre.coupling_gains_positive},
            {"stiffness_matched", r.pre.stiffness_matched},
            {"isotropic", r.pre.isotropic},
            {"consistency_p", r.pre.consistency_p},
            {"consistency_q", r.pre.consistency_q}}},
          {"equilibrium_residual", r.equilibrium_residual},
          {"non_converged", r.non_converged},
          {"ablation_ok", r.ablation_ok},
          {"violations", violations},
          {"trials", trials}};
}

int cmd_verify(const VerifyArgs& a) {
  StabilityScenario sc = read_scenario(a.scenario);
  if (a.seed) sc.seed = *a.seed;
  if (a.trials) sc.trials = *a.trials;
  if (a.dt) sc.dt = *a.dt;
  sc.threads = a.threads;
  const StabilityReport rep = verify_stability(sc);
  write_file_atomic(a.out, report_json(rep).dump(2) + "\n");
  std::printf("case %s: %zu trials, %zu violations, %zu not converged, ablation %s, %s\n",
              to_string(rep.coupling).c_str(), rep.trials.size(), rep.violations.size(),
              rep.non_converged, rep.ablation_ok ? "identical" : "differs",
              rep.pre.describe().c_str());
  if (!rep.violations.empty()) {
    const Violation& v = rep.violations.front();
    std::cerr << "counterexample: " << StabilityViolation(v).what() << " state "
              << state_json(v.state).dump() << "\n";
  }
  if (!rep.passed()) {
    std::cerr << "verification failed\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose DMP training, merging and coupled stability checks"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write the out-and-back orientation demo");
  s->add_option("--out", synth.out, "Output trajectory (.csv or .json)");
  s->add_option("--dt", synth.dt, "Sample time")->check(CLI::PositiveNumber);
  s->add_option("--t1", synth.T1, "Duration of the first leg")->check(CLI::PositiveNumber);
  s->add_option("--t2", synth.T2, "Duration of the second leg")->check(CLI::PositiveNumber);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Segment a demonstration and train each segment");
  t->add_option("--demo", train.demo, "Demonstration file")->required();
  t->add_option("--out", train.out, "Model file");
  t->add_option("--kernels", train.kernels, "Kernels per primitive")->check(CLI::Range(2, 10000));
  t->add_option("--stiffness", train.stiffness, "k in K = kI")->check(CLI::PositiveNumber);
  t->add_option("--tau", train.tau, "Time scaling")->check(CLI::PositiveNumber);
  t->add_option("--alpha-h", train.alpha_h, "Sigmoid clock steepness")->check(CLI::PositiveNumber);
  t->add_option("--rest-threshold", train.rest, "Speed below which the demo is at rest")
      ->check(CLI::PositiveNumber);

  MergeArgs mergeargs;
  auto* m = app.add_subcommand("merge", "Merge the trained segments into one motion");
  m->add_option("--model", mergeargs.model, "Model file")->required();
  m->add_option("--plan", mergeargs.plan, "Plan JSON; its keys override flags");
  m->add_option("--demo", mergeargs.demo, "Demonstration used for the error metrics");
  m->add_option("--out", mergeargs.out, "Output trajectory (.csv or .json)");
  m->add_option("--metrics", mergeargs.metrics, "Metrics JSON");
  m->add_option("--strategy", mergeargs.strategy, "switch | moving-target | kernel-stack");
  m->add_option("--dt", mergeargs.dt, "Integration step")->check(CLI::PositiveNumber);
  m->add_option("--tau", mergeargs.tau, "Override the trained time scaling")
      ->check(CLI::PositiveNumber);
  m->add_option("--threshold", mergeargs.threshold, "Switch distance (m and rad)")
      ->check(CLI::PositiveNumber);
  m->add_option("--vel-threshold", mergeargs.vel_threshold, "Switch on speed instead")
      ->check(CLI::PositiveNumber);
  m->add_option("--cross-vel", mergeargs.cross_vel, "Angular crossing velocity (3 values)")
      ->expected(3);
  m->add_option("--cross-lin-vel", mergeargs.cross_lin_vel, "Linear crossing velocity (3 values)")
      ->expected(3);
  m->add_option("--alpha-h", mergeargs.alpha_h, "Sigmoid clock steepness")
      ->check(CLI::PositiveNumber);
  m->add_flag("--windowed", mergeargs.windowed, "Evaluate two primitives' kernels at a time");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Check coupled stability on random trials");
  v->add_option("--scenario", verify.scenario, "Scenario JSON")->required();
  v->add_option("--out", verify.out, "Report JSON");
  v->add_option("--seed", verify.seed, "Override the scenario seed");
  v->add_option("--trials", verify.trials, "Override the number of trials");
  v->add_option("--dt", verify.dt, "Override the integration step")->check(CLI::PositiveNumber);
  v->add_option("--threads", verify.threads, "Worker threads, 0 for all cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*t) return cmd_train(train);
    if (*m) return cmd_merge(mergeargs);
    if (*v) return cmd_verify(verify);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NonUniformSampling& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NonUnitQuaternion& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NoSegments& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
