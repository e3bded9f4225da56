#include "posedmp/traj_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "posedmp/errors.hpp"

namespace posedmp {

const std::vector<std::string> kTrajectoryColumns = {
    "t",  "px", "py", "pz", "vx",  "vy",  "vz",  "ax", "ay", "az", "qw",
    "qx", "qy", "qz", "wx", "wy", "wz", "dwx", "dwy", "dwz", "h"};

namespace {

const std::vector<std::string> kRequired = {"t",  "px", "py", "pz",
                                            "qw", "qx", "qy", "qz"};
const std::vector<std::vector<std::string>> kOptionalGroups = {
    {"vx", "vy", "vz"}, {"ax", "ay", "az"},    {"wx", "wy", "wz"},
    {"dwx", "dwy", "dwz"}, {"h"}};

struct Columns {
  bool v = false, a = false, w = false, dw = false, h = false;
};

using Row = std::map<std::string, double>;

Columns check_columns(const std::vector<std::string>& names,
                      std::size_t header_line) {
  auto has = [&](const std::string& n) {
    return std::find(names.begin(), names.end(), n) != names.end();
  };
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& n = names[i];
    const bool known = std::find(kTrajectoryColumns.begin(),
                                 kTrajectoryColumns.end(),
                                 n) != kTrajectoryColumns.end();
    if (!known) throw ParseError("unknown column '" + n + "'", header_line, i + 1);
    if (std::count(names.begin(), names.end(), n) > 1) {
      throw ParseError("duplicate column '" + n + "'", header_line, i + 1);
    }
  }
  for (const std::string& r : kRequired) {
    if (!has(r)) throw ParseError("missing column '" + r + "'", header_line, 1);
  }
  bool present[5] = {};
  for (std::size_t g = 0; g < kOptionalGroups.size(); ++g) {
    const auto& group = kOptionalGroups[g];
    const auto count = std::count_if(group.begin(), group.end(), has);
    if (count != 0 && count != static_cast<long>(group.size())) {
      throw ParseError("incomplete column group starting '" + group[0] + "'",
                       header_line, 1);
    }
    present[g] = count != 0;
  }
  return {present[0], present[1], present[2], present[3], present[4]};
}

Vec3 vec_of(const Row& r, const char* x, const char* y, const char* z) {
  return {r.at(x), r.at(y), r.at(z)};
}

/// Validates, normalizes and fills missing derivatives.
PoseTrajectory build(const std::vector<Row>& rows, const Columns& cols) {
  if (rows.size() < 2) throw InsufficientData("trajectory needs at least 2 rows");
  PoseTrajectory traj;
  traj.dt = rows[1].at("t") - rows[0].at("t");
  if (!(traj.dt > 0.0)) throw NonUniformSampling(1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    if (i > 0 && std::abs(r.at("t") - rows[i - 1].at("t") - traj.dt) >
                     kSamplingTolerance) {
      throw NonUniformSampling(i);
    }
    const Vec4 qc(r.at("qw"), r.at("qx"), r.at("qy"), r.at("qz"));
    const double norm = qc.norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitNormTolerance) {
      throw NonUnitQuaternion(i, norm);
    }
    PoseSample s;
    s.t = r.at("t");
    s.p = vec_of(r, "px", "py", "pz");
    s.q = UnitQuaternion(qc);
    if (!traj.samples.empty() && s.q.dot(traj.samples.back().q) < 0.0) s.q = -s.q;
    if (cols.v) s.v = vec_of(r, "vx", "vy", "vz");
    if (cols.a) s.a = vec_of(r, "ax", "ay", "az");
    if (cols.w) s.w = vec_of(r, "wx", "wy", "wz");
    if (cols.dw) s.wdot = vec_of(r, "dwx", "dwy", "dwz");
    if (cols.h) s.h = r.at("h");
    traj.samples.push_back(s);
  }
  fill_derivatives(traj, !cols.v, !cols.a, !cols.w, !cols.dw);
  return traj;
}

std::size_t line_of(const std::string& text, std::size_t byte, std::size_t* col) {
  std::size_t line = 1, last_nl = 0;
  bool seen = false;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      last_nl = i;
      seen = true;
    }
  }
  *col = seen ? byte - last_nl : byte;
  return line;
}

template <class Get>
Vec3 central_difference(std::size_t k, std::size_t n, double dt, Get get) {
  if (k == 0) return (get(1) - get(0)) / dt;
  if (k + 1 == n) return (get(n - 1) - get(n - 2)) / dt;
  return (get(k + 1) - get(k - 1)) / (2.0 * dt);
}

void append_number(std::string& out, double x) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", x);
  out.append(buf, static_cast<std::size_t>(len));
}

std::vector<double> row_values(const PoseSample& s) {
  return {s.t,       s.p.x(),    s.p.y(),    s.p.z(),    s.v.x(),
          s.v.y(),   s.v.z(),    s.a.x(),    s.a.y(),    s.a.z(),
          s.q.eta(), s.q.eps().x(), s.q.eps().y(), s.q.eps().z(), s.w.x(),
          s.w.y(),   s.w.z(),    s.wdot.x(), s.wdot.y(), s.wdot.z(),
          s.h};
}

double smoothstep5(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
double smoothstep5_d(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }
double smoothstep5_dd(double x) { return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x); }

}  // namespace

void fill_derivatives(PoseTrajectory& traj, bool velocities,
                      bool accelerations, bool angular_velocities,
                      bool angular_accelerations) {
  auto& s = traj.samples;
  const std::size_t n = s.size();
  const double dt = traj.dt;
  if (n < 2) return;
  if (velocities) {
    std::vector<Vec3> v(n);
    for (std::size_t k = 0; k < n; ++k) {
      v[k] = central_difference(k, n, dt, [&](std::size_t i) { return s[i].p; });
    }
    for (std::size_t k = 0; k < n; ++k) s[k].v = v[k];
  }
  if (accelerations) {
    std::vector<Vec3> a(n);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = central_difference(k, n, dt, [&](std::size_t i) { return s[i].v; });
    }
    for (std::size_t k = 0; k < n; ++k) s[k].a = a[k];
  }
  if (angular_velocities) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t lo = k == 0 ? 0 : k - 1;
      const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
      const UnitQuaternion rel =
          qmul(align_to(s[hi].q, s[lo].q), conj(s[lo].q));
      s[k].w = 2.0 * qlog(rel) / (static_cast<double>(hi - lo) * dt);
    }
  }
  if (angular_accelerations) {
    std::vector<Vec3> a(n);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = central_difference(k, n, dt, [&](std::size_t i) { return s[i].w; });
    }
    for (std::size_t k = 0; k < n; ++k) s[k].wdot = a[k];
  }
}

PoseTrajectory parse_demo_csv(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  std::size_t header = 0;
  while (header < lines.size() && lines[header].empty()) ++header;
  if (header == lines.size()) throw ParseError("empty file", 1, 1);

  std::vector<std::string> names;
  {
    std::string name;
    std::istringstream in(lines[header]);
    while (std::getline(in, name, ',')) {
      name.erase(0, name.find_first_not_of(" \t"));
      name.erase(name.find_last_not_of(" \t") + 1);
      names.push_back(name);
    }
  }
  const Columns cols = check_columns(names, header + 1);

  std::vector<Row> rows;
  for (std::size_t li = header + 1; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Row row;
    std::size_t pos = 0;
    for (std::size_t c = 0; c < names.size(); ++c) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      std::size_t b = pos, e = end;
      while (b < e && (line[b] == ' ' || line[b] == '\t')) ++b;
      while (e > b && (line[e - 1] == ' ' || line[e - 1] == '\t')) --e;
      double value = 0.0;
      const auto res = std::from_chars(line.data() + b, line.data() + e, value);
      if (b == e || res.ec != std::errc() || res.ptr != line.data() + e) {
        throw ParseError("invalid number for column '" + names[c] + "'", li + 1,
                         pos + 1);
      }
      if (!std::isfinite(value)) {
        throw ParseError("non-finite value for column '" + names[c] + "'",
                         li + 1, pos + 1);
      }
      row[names[c]] = value;
      if (c + 1 < names.size() && end == line.size()) {
        throw ParseError("expected " + std::to_string(names.size()) + " fields",
                         li + 1, line.size() + 1);
      }
      pos = end + 1;
    }
    if (pos <= line.size()) {
      throw ParseError("too many fields", li + 1, pos);
    }
    rows.push_back(std::move(row));
  }
  return build(rows, cols);
}

PoseTrajectory parse_demo_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t col = 0;
    const std::size_t line = line_of(text, e.byte, &col);
    throw ParseError("malformed JSON", line, col);
  }
  if (!doc.is_object() || !doc.contains("rows") || !doc["rows"].is_array()) {
    throw ParseError("expected an object with a 'rows' array", 1, 1);
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "rows" && it.key() != "dt") {
      throw ParseError("unknown key '" + it.key() + "'", 1, 1);
    }
  }
  const auto& rows_json = doc["rows"];
  if (rows_json.empty()) throw InsufficientData("trajectory needs at least 2 rows");
  std::vector<std::string> names;
  for (auto it = rows_json[0].begin(); it != rows_json[0].end(); ++it) {
    names.push_back(it.key());
  }
  const Columns cols = check_columns(names, 1);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < rows_json.size(); ++i) {
    const auto& r = rows_json[i];
    if (!r.is_object() || r.size() != names.size()) {
      throw ParseError("row " + std::to_string(i) + " has inconsistent fields", 1, 1);
    }
    Row row;
    for (const std::string& n : names) {
      if (!r.contains(n) || !r[n].is_number()) {
        throw ParseError("row " + std::to_string(i) + " lacks numeric '" + n + "'",
                         1, 1);
      }
      row[n] = r[n].get<double>();
    }
    rows.push_back(std::move(row));
  }
  return build(rows, cols);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PoseTrajectory load_demo(const std::string& path) {
  const std::string text = read_file(path);
  const bool json = std::filesystem::path(path).extension() == ".json";
  return json ? parse_demo_json(text) : parse_demo_csv(text);
}

std::vector<Segment> segment_zero_velocity(const PoseTrajectory& demo,
                                           double v_thresh) {
  const auto& s = demo.samples;
  const std::size_t n = s.size();
  std::vector<double> speed(n);
  for (std::size_t k = 0; k < n; ++k) speed[k] = std::max(s[k].v.norm(), s[k].w.norm());

  // Bursts as [first, last] index pairs of above-threshold samples.
  std::vector<std::pair<std::size_t, std::size_t>> bursts;
  for (std::size_t k = 0; k < n; ++k) {
    if (speed[k] <= v_thresh) continue;
    if (!bursts.empty() && bursts.back().second + 1 == k) {
      bursts.back().second = k;
    } else {
      bursts.emplace_back(k, k);
    }
  }
  if (bursts.empty()) {
    throw NoSegments("speed never exceeds " + std::to_string(v_thresh));
  }
  std::vector<std::size_t> cuts{0};
  for (std::size_t b = 0; b + 1 < bursts.size(); ++b) {
    const std::size_t lo = bursts[b].second + 1;
    const std::size_t hi = bursts[b + 1].first;
    std::size_t best = lo;
    for (std::size_t k = lo; k < hi; ++k) {
      if (speed[k] < speed[best]) best = k;
    }
    cuts.push_back(best);
  }
  cuts.push_back(n - 1);
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Segment seg;
    seg.start_index = cuts[i];
    seg.end_index = cuts[i + 1];
    seg.goal = {s[seg.end_index].p, s[seg.end_index].q};
    out.push_back(seg);
  }
  return out;
}

PoseTrajectory slice(const PoseTrajectory& traj, const Segment& seg) {
  if (seg.end_index >= traj.size() || seg.start_index >= seg.end_index) {
    throw std::out_of_range("segment outside trajectory");
  }
  PoseTrajectory out;
  out.dt = traj.dt;
  const double t0 = traj.samples[seg.start_index].t;
  for (std::size_t k = seg.start_index; k <= seg.end_index; ++k) {
    PoseSample s = traj.samples[k];
    s.t -= t0;
    out.samples.push_back(s);
  }
  return out;
}

PoseTrajectory min_jerk_pose(const Pose& start, const Pose& goal, double T,
                             double dt) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
  if (std::abs(start.q.dot(goal.q)) < 1e-9) {
    throw DomainError("orientation endpoints are half a turn apart; no unique short arc");
  }
  const UnitQuaternion qg = align_to(goal.q, start.q);
  const Vec3 r = qlog(qmul(qg, conj(start.q)));
  const Vec3 dp = goal.p - start.p;
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  PoseTrajectory traj;
  traj.dt = dt;
  traj.samples.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = k == n ? T : static_cast<double>(k) * dt;
    const double x = t / T;
    const double s = smoothstep5(x);
    const double sd = smoothstep5_d(x) / T;
    const double sdd = smoothstep5_dd(x) / (T * T);
    PoseSample p;
    p.t = t;
    p.p = k == n ? goal.p : Vec3(start.p + dp * s);
    p.v = dp * sd;
    p.a = dp * sdd;
    p.q = k == n ? qg : qmul(qexp(s * r), start.q);
    p.w = 2.0 * r * sd;
    p.wdot = 2.0 * r * sdd;
    traj.samples.push_back(p);
  }
  return traj;
}

PoseTrajectory concatenate(const std::vector<PoseTrajectory>& parts) {
  PoseTrajectory out;
  if (parts.empty()) return out;
  out.dt = parts.front().dt;
  double offset = 0.0;
  for (const PoseTrajectory& part : parts) {
    if (part.samples.empty()) continue;
    const double t0 = part.samples.front().t;
    const std::size_t first = out.samples.empty() ? 0 : 1;
    for (std::size_t k = first; k < part.size(); ++k) {
      PoseSample s = part.samples[k];
      s.t = offset + (s.t - t0);
      if (!out.samples.empty()) s.q = align_to(s.q, out.samples.back().q);
      out.samples.push_back(s);
    }
    offset = out.samples.back().t;
  }
  return out;
}

std::string trajectory_to_csv(const PoseTrajectory& traj) {
  std::string out;
  for (std::size_t i = 0; i < kTrajectoryColumns.size(); ++i) {
    if (i) out += ',';
    out += kTrajectoryColumns[i];
  }
  out += '\n';
  for (const PoseSample& s : traj.samples) {
    const std::vector<double> v = row_values(s);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ',';
      append_number(out, v[i]);
    }
    out += '\n';
  }
  return out;
}

std::string trajectory_to_json(const PoseTrajectory& traj) {
  // Hand-written so numbers keep 17 significant digits.
  std::string out = "{\"dt\": ";
  append_number(out, traj.dt);
  out += ", \"rows\": [\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const std::vector<double> v = row_values(traj.samples[k]);
    out += "  {";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ", ";
      out += '"' + kTrajectoryColumns[i] + "\": ";
      append_number(out, v[i]);
    }
    out += k + 1 < traj.size() ? "},\n" : "}\n";
  }
  out += "]}\n";
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into '" + path + "'");
  }
}

void export_trajectory(const PoseTrajectory& traj, const std::string& path,
                       TrajFormat format) {
  if (traj.samples.empty()) throw IoError("refusing to export an empty trajectory");
  write_file_atomic(path, format == TrajFormat::Csv ? trajectory_to_csv(traj)
                                                    : trajectory_to_json(traj));
}

}  // namespace posedmp
