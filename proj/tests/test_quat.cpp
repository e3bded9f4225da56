#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "posedmp/errors.hpp"
#include "posedmp/quaternion.hpp"
#include "support.hpp"

using namespace posedmp;
using posedmp::testing::random_quaternion;
using posedmp::testing::random_vec;

namespace {

Eigen::Quaterniond to_eigen(const UnitQuaternion& q) {
  return {q.eta(), q.eps().x(), q.eps().y(), q.eps().z()};
}

void expect_same_rotation(const UnitQuaternion& a, const UnitQuaternion& b, double tol) {
  EXPECT_NEAR(std::abs(a.dot(b)), 1.0, tol);
}

}  // namespace

TEST(Quaternion, ConstructorNormalizes) {
  const UnitQuaternion q(2.0, 0.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(q.eta(), 1.0);
  const UnitQuaternion r(1.0, 1.0, 1.0, 1.0);
  EXPECT_NEAR(r.coeffs().norm(), 1.0, 1e-15);
  EXPECT_THROW(UnitQuaternion(0.0, 0.0, 0.0, 0.0), DomainError);
}

TEST(Quaternion, ErrorFixedValues) {
  const UnitQuaternion q(0.3, 0.1, -0.5, 0.7);
  EXPECT_LT(qerr(q, q).norm(), 1e-15);
  const Vec3 e = qerr(UnitQuaternion(0, 1, 0, 0), UnitQuaternion::identity());
  EXPECT_EQ(e, Vec3(1, 0, 0));
}

TEST(Quaternion, ProductMatchesEigen) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion a = random_quaternion(rng), b = random_quaternion(rng);
    const Eigen::Quaterniond ref = to_eigen(a) * to_eigen(b);
    const UnitQuaternion c = qmul(a, b);
    EXPECT_NEAR(c.eta(), ref.w(), 1e-12);
    EXPECT_LT((c.eps() - ref.vec()).norm(), 1e-12);
  }
}

TEST(Quaternion, RotateMatchesMatrix) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion q = random_quaternion(rng);
    const Vec3 v = random_vec(rng, 2.0);
    EXPECT_LT((rotate(q, v) - to_eigen(q).toRotationMatrix() * v).norm(), 1e-12);
  }
}

TEST(Quaternion, LogExpRoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    UnitQuaternion q = random_quaternion(rng);
    if (q.eta() < 0.0) q = -q;
    expect_same_rotation(qexp(qlog(q)), q, 1e-12);
    const Vec3 r = random_vec(rng, 1.5);
    EXPECT_LT((qlog(qexp(r)) - r).norm(), 1e-10);
  }
}

TEST(Quaternion, LogBranches) {
  EXPECT_EQ(qlog(UnitQuaternion::identity()), Vec3::Zero());
  EXPECT_EQ(qlog(UnitQuaternion(1.0, 1e-14, 0.0, 0.0)), Vec3::Zero());
  EXPECT_THROW(qlog(UnitQuaternion(-1.0, 0.0, 0.0, 0.0)), DomainError);
  // Half-angle convention: qlog of a quarter turn about z.
  const UnitQuaternion qz(std::cos(std::numbers::pi / 4), 0, 0, std::sin(std::numbers::pi / 4));
  EXPECT_LT((qlog(qz) - Vec3(0, 0, std::numbers::pi / 4)).norm(), 1e-14);
}

TEST(Quaternion, ExpDomain) {
  EXPECT_THROW(qexp(Vec3(std::numbers::pi, 0, 0)), DomainError);
  EXPECT_NO_THROW(qexp(Vec3(std::numbers::pi - 1e-6, 0, 0)));
  EXPECT_EQ(qexp(Vec3::Zero()).coeffs(), Vec4(1, 0, 0, 0));
}

TEST(Quaternion, PropagationForms) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion q = random_quaternion(rng);
    const Vec3 w = random_vec(rng, 3.0);
    EXPECT_LT((propagate(q, w) - propagate_matrix_form(q, w)).norm(), 1e-14);
    // The rate is tangent to the unit sphere.
    EXPECT_NEAR(propagate(q, w).dot(q.coeffs()), 0.0, 1e-14);
  }
}

TEST(Quaternion, IntegrationIsWorldFrameRotation) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion q = random_quaternion(rng);
    const Vec3 w = random_vec(rng, 2.0);
    const double dt = 0.05;
    const Eigen::AngleAxisd aa(w.norm() * dt, w.normalized());
    const Eigen::Quaterniond ref = Eigen::Quaterniond(aa) * to_eigen(q);
    const UnitQuaternion out = integrate_step(q, w, dt);
    EXPECT_NEAR(std::abs(out.coeffs().dot(Vec4(ref.w(), ref.x(), ref.y(), ref.z()))), 1.0,
                1e-12);
  }
}

TEST(Quaternion, IntegrationAgreesWithPropagationForSmallSteps) {
  const UnitQuaternion q(0.4, -0.2, 0.7, 0.1);
  const Vec3 w(0.3, -1.1, 0.5);
  const double dt = 1e-6;
  const Vec4 fd = (integrate_step(q, w, dt).coeffs() - q.coeffs()) / dt;
  EXPECT_LT((fd - propagate(q, w)).norm(), 1e-5);
}

TEST(Quaternion, ErrorSmallAngleMatchesLog) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion b = random_quaternion(rng);
    const UnitQuaternion a = qmul(qexp(random_vec(rng, 0.03)), b);
    const Vec3 e = qerr(a, b);
    const Vec3 l = qlog(align_to(qmul(a, conj(b)), UnitQuaternion::identity()));
    EXPECT_LT((2.0 * e - 2.0 * l).norm(), 1e-4 * (1.0 + e.norm()));
  }
}

TEST(Quaternion, AlignPicksNearHemisphere) {
  const UnitQuaternion ref(1, 0, 0, 0);
  const UnitQuaternion a(-0.9, 0.1, 0.1, 0.1);
  EXPECT_GT(align_to(a, ref).dot(ref), 0.0);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const UnitQuaternion x = random_quaternion(rng), y = random_quaternion(rng);
    const UnitQuaternion ax = align_to(x, y);
    EXPECT_LE(qlog(qmul(ax, conj(y))).norm(), std::numbers::pi / 2 + 1e-9);
  }
}

TEST(Quaternion, SlerpEndpointsAndMidpoint) {
  const UnitQuaternion a(1, 0, 0, 0);
  const UnitQuaternion b(std::cos(0.5), std::sin(0.5), 0, 0);
  expect_same_rotation(slerp(a, b, 0.0), a, 1e-15);
  expect_same_rotation(slerp(a, b, 1.0), b, 1e-14);
  expect_same_rotation(slerp(a, b, 0.5), UnitQuaternion(std::cos(0.25), std::sin(0.25), 0, 0),
                       1e-14);
}

TEST(Quaternion, ChordalDistanceRate) {
  // d/dt |g - q|^2 along q_dot = 1/2 w~ q equals -w . vec(g q_bar).
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const UnitQuaternion g = random_quaternion(rng);
    const UnitQuaternion q = random_quaternion(rng);
    const Vec3 w = random_vec(rng, 1.0);
    const double h = 1e-5;
    const double fd =
        (v_e(g, integrate_step(q, w, h)) - v_e(g, integrate_step(q, w, -h))) / (2 * h);
    EXPECT_NEAR(fd, -w.dot(qerr(g, q)), 1e-7);
  }
}

TEST(Quaternion, SkewIsCrossProduct) {
  const Vec3 a(1, -2, 3), b(0.5, 4, -1);
  EXPECT_LT((skew(a) * b - a.cross(b)).norm(), 1e-15);
}
