#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "posedmp/errors.hpp"
#include "posedmp/pipeline.hpp"
#include "support.hpp"

using namespace posedmp;
namespace fs = std::filesystem;

namespace {

std::string csv_rows(const std::vector<std::string>& rows) {
  std::string out = "t,px,py,pz,qw,qx,qy,qz\n";
  for (const std::string& r : rows) out += r + "\n";
  return out;
}

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() /
                     ("posedmp_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                      "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(CsvParse, MinimalColumnsGetDerivatives) {
  const PoseTrajectory t = parse_demo_csv(csv_rows({"0,0,0,0,1,0,0,0", "0.1,0.1,0,0,1,0,0,0",
                                                    "0.2,0.2,0,0,1,0,0,0"}));
  ASSERT_EQ(t.size(), 3u);
  EXPECT_NEAR(t.dt, 0.1, 1e-12);
  EXPECT_NEAR(t.samples[1].v.x(), 1.0, 1e-9);
  EXPECT_NEAR(t.samples[1].a.x(), 0.0, 1e-9);
}

TEST(CsvParse, ReportsLineAndColumn) {
  try {
    parse_demo_csv(csv_rows({"0,0,0,0,1,0,0,0", "0.1,0,abc,0,1,0,0,0"}));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 7u);  // character position of the bad field
  }
  EXPECT_THROW(parse_demo_csv("t,px,py,pz,qw,qx,qy\n0,0,0,0,1,0,0\n"), ParseError);
  EXPECT_THROW(parse_demo_csv("t,px,py,pz,qw,qx,qy,qz,vx\n0,0,0,0,1,0,0,0,0\n"), ParseError);
  EXPECT_THROW(parse_demo_csv(csv_rows({"0,0,0,0,1,0,0,0", "0.1,0,0,0,1,0,0"})), ParseError);
}

TEST(CsvParse, RejectsBadSamplingAndQuaternions) {
  try {
    parse_demo_csv(csv_rows({"0,0,0,0,1,0,0,0", "0.1,0,0,0,1,0,0,0", "0.25,0,0,0,1,0,0,0"}));
    FAIL();
  } catch (const NonUniformSampling& e) {
    EXPECT_EQ(e.row(), 2u);
  }
  EXPECT_THROW(parse_demo_csv(csv_rows({"0,0,0,0,1,0,0,0", "0.1,0,0,0,1.1,0,0,0"})),
               NonUnitQuaternion);
  // Within tolerance the row is normalized.
  const PoseTrajectory ok =
      parse_demo_csv(csv_rows({"0,0,0,0,1,0,0,0", "0.1,0,0,0,1.0005,0,0,0"}));
  EXPECT_NEAR(ok.samples[1].q.coeffs().norm(), 1.0, 1e-15);
}

TEST(CsvParse, MakesQuaternionsSignContinuous) {
  const PoseTrajectory t =
      parse_demo_csv(csv_rows({"0,0,0,0,1,0,0,0", "0.1,0,0,0,-0.999,-0.0447,0,0"}));
  EXPECT_GT(t.samples[1].q.eta(), 0.0);
}

TEST(JsonParse, AcceptsRowsAndRejectsUnknownKeys) {
  const std::string doc =
      R"({"rows": [{"t":0,"px":0,"py":0,"pz":0,"qw":1,"qx":0,"qy":0,"qz":0},
                   {"t":0.5,"px":1,"py":0,"pz":0,"qw":1,"qx":0,"qy":0,"qz":0}]})";
  const PoseTrajectory t = parse_demo_json(doc);
  EXPECT_NEAR(t.dt, 0.5, 1e-12);
  EXPECT_THROW(parse_demo_json(R"({"rows": [], "extra": 1})"), ParseError);
  EXPECT_THROW(parse_demo_json("{\"rows\": [1,"), ParseError);
}

TEST(RoundTrip, CsvAndJsonPreserveSamples) {
  const PoseTrajectory demo = posedmp::testing::via_demo(0.05);
  for (const PoseTrajectory& back : {parse_demo_csv(trajectory_to_csv(demo)),
                                     parse_demo_json(trajectory_to_json(demo))}) {
    ASSERT_EQ(back.size(), demo.size());
    for (std::size_t k = 0; k < demo.size(); ++k) {
      EXPECT_NEAR(back.samples[k].t, demo.samples[k].t, 1e-12);
      EXPECT_LT(qerr(back.samples[k].q, demo.samples[k].q).norm(), 1e-12);
      EXPECT_LT((back.samples[k].w - demo.samples[k].w).norm(), 1e-12);
    }
  }
}

TEST(Files, AtomicExportAndMissingInput) {
  const fs::path dir = temp_dir();
  const std::string path = (dir / "traj.csv").string();
  export_trajectory(posedmp::testing::via_demo(0.1), path, TrajFormat::Csv);
  EXPECT_EQ(load_demo(path).size(), 101u);
  for (const auto& e : fs::directory_iterator(dir)) {
    EXPECT_EQ(e.path().filename(), "traj.csv");  // no temporary left behind
  }
  EXPECT_THROW(load_demo((dir / "missing.csv").string()), IoError);
  EXPECT_THROW(export_trajectory(PoseTrajectory{}, path, TrajFormat::Json), IoError);
  fs::remove_all(dir);
}

TEST(MinJerk, EndpointsAtRest) {
  const Pose a{Vec3(0, 0, 0), UnitQuaternion(1, 0, 0, 0)};
  const Pose b{Vec3(1, 0, 0), UnitQuaternion(std::cos(0.4), 0, std::sin(0.4), 0)};
  const PoseTrajectory t = min_jerk_pose(a, b, 2.0, 0.01);
  ASSERT_EQ(t.size(), 201u);
  EXPECT_EQ(t.samples.front().v, Vec3::Zero());
  EXPECT_LT(t.samples.back().v.norm(), 1e-12);
  EXPECT_LT(t.samples.back().w.norm(), 1e-12);
  EXPECT_LT(qerr(b.q, t.samples.back().q).norm(), 1e-12);
  // Peak speed of the quintic is 15/8 of the mean.
  EXPECT_NEAR(t.samples[100].v.x(), 1.875 * 0.5, 1e-9);
  // Constant rotation axis with peak rate 15/8 of 0.8 rad / 2 s.
  EXPECT_NEAR(t.samples[100].w.y(), 1.875 * 0.4, 1e-9);
  EXPECT_THROW(min_jerk_pose(a, {Vec3::Zero(), UnitQuaternion(0, 1, 0, 0)}, 1.0, 0.1),
               DomainError);
}

TEST(Segmentation, SplitsAtRestAndSharesCuts) {
  const PoseTrajectory demo = posedmp::testing::via_demo(0.01);
  const std::vector<Segment> segs = segment_zero_velocity(demo, 1e-3);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[0].start_index, 0u);
  EXPECT_EQ(segs[0].end_index, segs[1].start_index);
  EXPECT_EQ(segs[0].end_index, 500u);
  EXPECT_EQ(segs[1].end_index, demo.size() - 1);
  EXPECT_LT(qerr(segs[0].goal.q, posedmp::testing::kVia).norm(), 1e-9);
  const PoseTrajectory part = slice(demo, segs[1]);
  EXPECT_DOUBLE_EQ(part.samples.front().t, 0.0);
  EXPECT_THROW(segment_zero_velocity(demo, 100.0), NoSegments);
}

TEST(Concatenate, JunctionAppearsOnce) {
  const Pose a{Vec3::Zero(), UnitQuaternion()};
  const Pose b{Vec3(1, 0, 0), UnitQuaternion()};
  const PoseTrajectory x = min_jerk_pose(a, b, 1.0, 0.1);
  const PoseTrajectory y = min_jerk_pose(b, a, 1.0, 0.1);
  const PoseTrajectory c = concatenate({x, y});
  EXPECT_EQ(c.size(), 21u);
  EXPECT_NEAR(c.samples.back().t, 2.0, 1e-12);
}
