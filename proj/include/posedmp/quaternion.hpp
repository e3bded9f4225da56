#pragma once

#include <Eigen/Core>

namespace posedmp {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

/// Rotation vector produced by the log map. Its norm is half the rotation
/// angle, so 0 <= |r| < pi covers one hemisphere of S^3.
using RotationVector = Vec3;
using AngularVelocity = Vec3;

/// Unit quaternion [eta, eps] stored in that order. Every constructor
/// normalizes, so the unit-norm invariant holds for every live value.
class UnitQuaternion {
 public:
  UnitQuaternion() : eta_(1.0), eps_(Vec3::Zero()) {}
  UnitQuaternion(double eta, const Vec3& eps);
  UnitQuaternion(double eta, double e1, double e2, double e3)
      : UnitQuaternion(eta, Vec3(e1, e2, e3)) {}
  explicit UnitQuaternion(const Vec4& coeffs)
      : UnitQuaternion(coeffs[0], coeffs.tail<3>()) {}

  static UnitQuaternion identity() { return {}; }

  double eta() const { return eta_; }
  const Vec3& eps() const { return eps_; }
  Vec4 coeffs() const { return {eta_, eps_[0], eps_[1], eps_[2]}; }
  double dot(const UnitQuaternion& o) const {
    return eta_ * o.eta_ + eps_.dot(o.eps_);
  }

  UnitQuaternion operator-() const {
    UnitQuaternion q;
    q.eta_ = -eta_;
    q.eps_ = -eps_;
    return q;
  }

 private:
  double eta_;
  Vec3 eps_;
};

/// Cross-product matrix, S(a) b = a x b.
Mat3 skew(const Vec3& a);

UnitQuaternion qmul(const UnitQuaternion& a, const UnitQuaternion& b);
UnitQuaternion conj(const UnitQuaternion& q);

/// Throws DomainError within 1e-9 of [-1, 0, 0, 0].
RotationVector qlog(const UnitQuaternion& q);
/// Throws DomainError when |r| >= pi - 1e-9.
UnitQuaternion qexp(const RotationVector& r);

/// Quaternion rate q_dot = 1/2 w~ * q (product form).
Vec4 propagate(const UnitQuaternion& q, const AngularVelocity& w);
/// Same rate from eta_dot = -1/2 eps^T w, eps_dot = 1/2 (eta I - S(eps)) w.
Vec4 propagate_matrix_form(const UnitQuaternion& q, const AngularVelocity& w);

/// q(t + dt) = exp(dt/2 w) * q(t).
UnitQuaternion integrate_step(const UnitQuaternion& q, const AngularVelocity& w,
                              double dt);

/// Orientation error vec(a * conj(b)): error of goal a relative to state b.
Vec3 qerr(const UnitQuaternion& a, const UnitQuaternion& b);

/// Returns a or -a, whichever has non-negative scalar part in a * conj(ref).
UnitQuaternion align_to(const UnitQuaternion& a, const UnitQuaternion& ref);

/// Rotates v by q: vec(q * v~ * conj(q)).
Vec3 rotate(const UnitQuaternion& q, const Vec3& v);

/// Geodesic interpolation exp(s log(b * conj(a))) * a on the short arc.
UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b,
                     double s);

/// Squared chordal distance (eta1 - eta2)^2 + |eps1 - eps2|^2.
double chordal_sq(const UnitQuaternion& a, const UnitQuaternion& b);

/// V_e(a, b) = (eta_a - eta_b)^2 + |eps_a - eps_b|^2. Its rate along
/// q_dot = 1/2 w~ * q with constant a is -w^T vec(a * conj(q)).
double v_e(const UnitQuaternion& a, const UnitQuaternion& b);

/// |qerr(a, b)|, invariant to the sign of either argument.
double orientation_distance(const UnitQuaternion& a, const UnitQuaternion& b);

}  // namespace posedmp
