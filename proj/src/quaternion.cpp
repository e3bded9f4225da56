#include "posedmp/quaternion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "posedmp/errors.hpp"

namespace posedmp {

namespace {

constexpr double kLogBranchEps = 1e-12;
constexpr double kDomainMargin = 1e-9;

}  // namespace

UnitQuaternion::UnitQuaternion(double eta, const Vec3& eps) {
  const double n = std::sqrt(eta * eta + eps.squaredNorm());
  if (!std::isfinite(n) || n < 1e-12) {
    throw DomainError("quaternion cannot be normalized");
  }
  eta_ = eta / n;
  eps_ = eps / n;
}

Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return s;
}

UnitQuaternion qmul(const UnitQuaternion& a, const UnitQuaternion& b) {
  const double eta = a.eta() * b.eta() - a.eps().dot(b.eps());
  const Vec3 eps =
      a.eta() * b.eps() + b.eta() * a.eps() + a.eps().cross(b.eps());
  return {eta, eps};
}

UnitQuaternion conj(const UnitQuaternion& q) { return {q.eta(), -q.eps()}; }

RotationVector qlog(const UnitQuaternion& q) {
  if ((q.coeffs() - Vec4(-1.0, 0.0, 0.0, 0.0)).norm() < kDomainMargin) {
    throw DomainError("log map undefined at [-1, 0, 0, 0]");
  }
  const double n = q.eps().norm();
  if (n < kLogBranchEps) {
    return Vec3::Zero();
  }
  return std::acos(std::clamp(q.eta(), -1.0, 1.0)) * q.eps() / n;
}

UnitQuaternion qexp(const RotationVector& r) {
  const double n = r.norm();
  if (!(n < std::numbers::pi - kDomainMargin)) {
    throw DomainError("exp map argument leaves the bijective domain");
  }
  if (n == 0.0) {
    return {};
  }
  return {std::cos(n), std::sin(n) * r / n};
}

Vec4 propagate(const UnitQuaternion& q, const AngularVelocity& w) {
  // Pure quaternion times q, without renormalization.
  Vec4 rate;
  rate[0] = -w.dot(q.eps());
  rate.tail<3>() = q.eta() * w + w.cross(q.eps());
  return 0.5 * rate;
}

Vec4 propagate_matrix_form(const UnitQuaternion& q, const AngularVelocity& w) {
  Vec4 rate;
  rate[0] = -0.5 * q.eps().dot(w);
  rate.tail<3>() = 0.5 * (q.eta() * Mat3::Identity() - skew(q.eps())) * w;
  return rate;
}

UnitQuaternion integrate_step(const UnitQuaternion& q, const AngularVelocity& w,
                              double dt) {
  return qmul(qexp(0.5 * dt * w), q);
}

Vec3 qerr(const UnitQuaternion& a, const UnitQuaternion& b) {
  return qmul(a, conj(b)).eps();
}

UnitQuaternion align_to(const UnitQuaternion& a, const UnitQuaternion& ref) {
  return a.dot(ref) < 0.0 ? -a : a;
}

Vec3 rotate(const UnitQuaternion& q, const Vec3& v) {
  // q v~ conj(q) expanded; avoids normalizing a pure quaternion.
  const Vec3 t = 2.0 * q.eps().cross(v);
  return v + q.eta() * t + q.eps().cross(t);
}

UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b,
                     double s) {
  const UnitQuaternion rel = qmul(align_to(b, a), conj(a));
  return qmul(qexp(s * qlog(rel)), a);
}

double chordal_sq(const UnitQuaternion& a, const UnitQuaternion& b) {
  return (a.coeffs() - b.coeffs()).squaredNorm();
}

double v_e(const UnitQuaternion& a, const UnitQuaternion& b) {
  return chordal_sq(a, b);
}

double orientation_distance(const UnitQuaternion& a, const UnitQuaternion& b) {
  return qerr(a, b).norm();
}

}  // namespace posedmp
