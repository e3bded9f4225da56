#include "posedmp/serialization.hpp"

#include <json.hpp>

#include "posedmp/errors.hpp"
#include "posedmp/traj_io.hpp"

namespace posedmp {

namespace {

using nlohmann::json;

json vec(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json quat(const UnitQuaternion& q) { return json::array({q.eta(), q.eps()[0], q.eps()[1], q.eps()[2]}); }

Vec3 to_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

UnitQuaternion to_quat(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("expected a quaternion");
  return UnitQuaternion(Vec4(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                             j[3].get<double>()));
}

json bank_json(const KernelBank& k) {
  json w = json::array();
  for (std::size_t i = 0; i < k.size(); ++i) {
    w.push_back(vec(k.weights.col(static_cast<Eigen::Index>(i))));
  }
  return {{"form", k.form == KernelForm::PhaseKernels ? "phase" : "time"},
          {"centers", k.centers},
          {"widths", k.widths},
          {"weights", w}};
}

KernelBank to_bank(const json& j) {
  KernelBank k;
  const std::string form = j.at("form").get<std::string>();
  if (form == "phase") {
    k.form = KernelForm::PhaseKernels;
  } else if (form == "time") {
    k.form = KernelForm::TimeKernels;
  } else {
    throw std::invalid_argument("unknown kernel form '" + form + "'");
  }
  k.centers = j.at("centers").get<std::vector<double>>();
  k.widths = j.at("widths").get<std::vector<double>>();
  const json& w = j.at("weights");
  if (!w.is_array() || w.size() != k.centers.size() || k.widths.size() != k.centers.size()) {
    throw std::invalid_argument("kernel arrays differ in length");
  }
  k.weights.resize(3, static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) {
    k.weights.col(static_cast<Eigen::Index>(i)) = to_vec(w[i]);
  }
  k.validate();
  return k;
}

template <class Dmp>
json common(const Dmp& d) {
  return {{"K", vec(d.gains.K)},
          {"D", vec(d.gains.D)},
          {"kernels", bank_json(d.kernels)},
          {"tau", d.tau},
          {"duration", d.duration},
          {"gamma", d.clock.gamma},
          {"alpha_h", d.clock.alpha_h},
          {"dt", d.clock.dt}};
}

template <class Dmp>
void read_common(const json& j, Dmp& d) {
  d.gains.K = to_vec(j.at("K"));
  d.gains.D = to_vec(j.at("D"));
  d.gains.validate();
  d.kernels = to_bank(j.at("kernels"));
  d.tau = j.at("tau").get<double>();
  d.duration = j.at("duration").get<double>();
  d.clock.gamma = j.at("gamma").get<double>();
  d.clock.alpha_h = j.at("alpha_h").get<double>();
  d.clock.dt = j.at("dt").get<double>();
}

json pose_json(const PoseDmp& m) {
  json p = common(m.position);
  p["start"] = vec(m.position.start);
  p["goal"] = vec(m.position.goal);
  json o = common(m.orientation);
  o["start"] = quat(m.orientation.start);
  o["goal"] = quat(m.orientation.goal);
  return {{"position", p}, {"orientation", o}};
}

PoseDmp to_pose(const json& j) {
  PoseDmp m;
  const json& p = j.at("position");
  read_common(p, m.position);
  m.position.start = to_vec(p.at("start"));
  m.position.goal = to_vec(p.at("goal"));
  const json& o = j.at("orientation");
  read_common(o, m.orientation);
  m.orientation.start = to_quat(o.at("start"));
  m.orientation.goal = to_quat(o.at("goal"));
  return m;
}

}  // namespace

std::string model_to_json(const ModelFile& m) {
  json segs = json::array();
  for (const ModelSegment& s : m.segments) {
    segs.push_back({{"duration", s.duration}, {"phase", pose_json(s.phase)},
                    {"moving", pose_json(s.moving)},
                    {"time", pose_json(s.time)}});
  }
  json root = {{"format", "posedmp-model"}, {"version", kModelFormatVersion},
               {"segments", segs}};
  return root.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid model JSON: ") + e.what(), 1, e.byte);
  }
  try {
    if (root.at("format").get<std::string>() != "posedmp-model") {
      throw std::invalid_argument("not a model file");
    }
    const int version = root.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw std::invalid_argument("unsupported model version " + std::to_string(version));
    }
    ModelFile m;
    for (const json& s : root.at("segments")) {
      ModelSegment seg;
      seg.duration = s.at("duration").get<double>();
      seg.phase = to_pose(s.at("phase"));
      seg.moving = to_pose(s.at("moving"));
      seg.time = to_pose(s.at("time"));
      m.segments.push_back(seg);
    }
    if (m.segments.empty()) throw std::invalid_argument("model file has no segments");
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model: ") + e.what(), 1, 1);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("malformed model: ") + e.what(), 1, 1);
  }
}

void save_model(const ModelFile& m, const std::string& path) {
  write_file_atomic(path, model_to_json(m));
}

ModelFile load_model(const std::string& path) { return model_from_json(read_file(path)); }

}  // namespace posedmp
