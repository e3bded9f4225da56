#include "posedmp/coupled.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace posedmp {

namespace {

constexpr int kArmSize = 13;  // p, v, q (4), w
constexpr int kStateSize = 3 * kArmSize;

using Packed = Eigen::Matrix<double, kStateSize, 1>;

Vec3 err2(const UnitQuaternion& g, const UnitQuaternion& q) { return 2.0 * qerr(g, q); }

void put(Packed& x, int base, const Vec3& p, const Vec3& v, const Vec4& q, const Vec3& w) {
  x.segment<3>(base) = p;
  x.segment<3>(base + 3) = v;
  x.segment<4>(base + 6) = q;
  x.segment<3>(base + 10) = w;
}

Packed pack(const CoupledState& s) {
  Packed x;
  put(x, 0, s.p_r, s.v_r, s.q_r.coeffs(), s.w_r);
  put(x, kArmSize, s.p_l, s.v_l, s.q_l.coeffs(), s.w_l);
  put(x, 2 * kArmSize, s.rel.p, s.rel.v, s.rel.q.coeffs(), s.rel.w);
  return x;
}

CoupledState unpack(const Packed& x) {
  CoupledState s;
  s.p_r = x.segment<3>(0);
  s.v_r = x.segment<3>(3);
  s.q_r = UnitQuaternion(Vec4(x.segment<4>(6)));
  s.w_r = x.segment<3>(10);
  s.p_l = x.segment<3>(kArmSize);
  s.v_l = x.segment<3>(kArmSize + 3);
  s.q_l = UnitQuaternion(Vec4(x.segment<4>(kArmSize + 6)));
  s.w_l = x.segment<3>(kArmSize + 10);
  s.rel.p = x.segment<3>(2 * kArmSize);
  s.rel.v = x.segment<3>(2 * kArmSize + 3);
  s.rel.q = UnitQuaternion(Vec4(x.segment<4>(2 * kArmSize + 6)));
  s.rel.w = x.segment<3>(2 * kArmSize + 10);
  return s;
}

double phase(const CoupledSystem& sys, const ExpClock& c, double t) {
  return sys.decayed_clock ? 0.0 : c.phase_at(t);
}

Vec3 forcing(const KernelBank& k, double h) {
  if (k.size() == 0) return Vec3::Zero();
  if (k.form != KernelForm::PhaseKernels) {
    throw std::invalid_argument("coupled primitives need phase kernels");
  }
  return forcing_eval(k, h, 0.0).value;
}

/// Derivative of one primitive with coupling injected at both levels.
void primitive_deriv(const CoupledSystem& sys, const PoseDmp& m, double t,
                     const Vec3& p, const Vec3& v, const UnitQuaternion& q,
                     const Vec3& w, const Vec3& fp, const Vec3& fv,
                     const Vec3& fq, const Vec3& fw, Packed& dx, int base) {
  const PositionDmp& pd = m.position;
  const OrientationDmp& od = m.orientation;
  const double hp = phase(sys, exp_clock_of(pd), t);
  const double ho = phase(sys, exp_clock_of(od), t);
  const Vec3 sp = (pd.goal - p) - (pd.goal - pd.start) * hp + forcing(pd.kernels, hp);
  const UnitQuaternion& g = od.goal;
  const Vec3 sq = err2(g, q) - err2(g, od.start) * ho + forcing(od.kernels, ho);
  dx.segment<3>(base) = (v + fp) / pd.tau;
  dx.segment<3>(base + 3) =
      (sys.K.cwiseProduct(sp) - sys.D.cwiseProduct(v) + fv) / pd.tau;
  dx.segment<4>(base + 6) = propagate(q, (w + fq) / od.tau);
  dx.segment<3>(base + 10) =
      (sys.K.cwiseProduct(sq) - sys.D.cwiseProduct(w) + fw) / od.tau;
}

Packed deriv(const CoupledSystem& sys, const CoupledState& s, double t) {
  const CouplingForces f = coupling_eval(sys, s);
  Packed dx;
  primitive_deriv(sys, sys.right, t, s.p_r, s.v_r, s.q_r, s.w_r, f.fp_rl, f.fv_rl,
                  f.fq_rl, f.fw_rl, dx, 0);
  primitive_deriv(sys, sys.left, t, s.p_l, s.v_l, s.q_l, s.w_l, f.fp_lr, f.fv_lr,
                  f.fq_lr, f.fw_lr, dx, kArmSize);
  const Vec3 z = Vec3::Zero();
  primitive_deriv(sys, sys.relative, t, s.rel.p, s.rel.v, s.rel.q, s.rel.w, z, z, z, z,
                  dx, 2 * kArmSize);
  return dx;
}

bool positive(const Vec3& x) {
  return (x.array() > 0.0).all() && x.allFinite();
}

}  // namespace

std::string to_string(CouplingCase c) {
  switch (c) {
    case CouplingCase::CaseI: return "I";
    case CouplingCase::CaseII: return "II";
    case CouplingCase::CaseIII: return "III";
    case CouplingCase::Uncoupled: return "none";
  }
  return "?";
}

CouplingCase coupling_case_from_string(const std::string& s) {
  if (s == "I" || s == "case1") return CouplingCase::CaseI;
  if (s == "II" || s == "case2") return CouplingCase::CaseII;
  if (s == "III" || s == "case3") return CouplingCase::CaseIII;
  if (s == "none") return CouplingCase::Uncoupled;
  throw std::invalid_argument("unknown coupling case '" + s + "'");
}

std::string Preconditions::describe() const {
  std::ostringstream os;
  os << "gains_positive=" << gains_positive
     << " coupling_gains_positive=" << coupling_gains_positive
     << " stiffness_matched=" << stiffness_matched << " isotropic=" << isotropic
     << " consistency_p=" << consistency_p << " consistency_q=" << consistency_q;
  return os.str();
}

Preconditions preconditions(const CoupledSystem& sys) {
  Preconditions pc;
  pc.gains_positive = positive(sys.K) && positive(sys.D);
  pc.coupling_gains_positive = positive(sys.Kf) && positive(sys.Df);
  pc.stiffness_matched = (sys.Kf - sys.K).cwiseAbs().maxCoeff() <= 1e-12 * sys.K.maxCoeff();
  pc.isotropic = sys.K.maxCoeff() - sys.K.minCoeff() <= 1e-12 * sys.K.maxCoeff();
  pc.consistency_p = (sys.relative.position.goal -
                      (sys.right.position.goal - sys.left.position.goal))
                         .norm();
  pc.consistency_q = orientation_distance(
      sys.relative.orientation.goal,
      qmul(sys.right.orientation.goal, conj(sys.left.orientation.goal)));
  return pc;
}

CouplingForces coupling_eval(const CoupledSystem& sys, const CoupledState& st) {
  CouplingForces f;
  if (sys.coupling == CouplingCase::Uncoupled) return f;
  const UnitQuaternion q_rl = st.q_rl();
  const UnitQuaternion q_lr = conj(q_rl);
  const Vec3 ep = st.rel.p - st.p_rl();
  const Vec3 ev = st.rel.v - st.v_rl();
  const Vec3 eq = err2(st.rel.q, q_rl);
  const Vec3 ew = st.rel.w - st.w_rl();
  switch (sys.coupling) {
    case CouplingCase::CaseI:
      f.fv_rl = sys.Kf.cwiseProduct(ep) + sys.Df.cwiseProduct(ev);
      f.fv_lr = -f.fv_rl;
      f.fw_rl = sys.Kf.cwiseProduct(eq) + sys.Df.cwiseProduct(ew);
      // Damping is rotated into the left frame so it opposes w_lr exactly.
      f.fw_lr = sys.Kf.cwiseProduct(err2(conj(st.rel.q), q_lr)) -
                rotate(q_lr, sys.Df.cwiseProduct(ew));
      break;
    case CouplingCase::CaseIII:
      f.fv_rl = sys.Df.cwiseProduct(ev);
      f.fv_lr = -f.fv_rl;
      f.fw_rl = sys.Df.cwiseProduct(ew);
      f.fw_lr = -rotate(q_lr, f.fw_rl);
      [[fallthrough]];
    case CouplingCase::CaseII:
      f.fp_rl = sys.Kf.cwiseProduct(ep);
      f.fp_lr = -f.fp_rl;
      f.fq_rl = sys.Kf.cwiseProduct(eq);
      f.fq_lr = -rotate(q_lr, f.fq_rl);
      break;
    case CouplingCase::Uncoupled:
      break;
  }
  return f;
}

CoupledState coupled_initial_state(const CoupledSystem& sys) {
  CoupledState s;
  s.p_r = sys.right.position.start;
  s.p_l = sys.left.position.start;
  s.q_r = sys.right.orientation.start;
  s.q_l = sys.left.orientation.start;
  s.rel.p = sys.relative.position.start;
  s.rel.q = sys.relative.orientation.start;
  return s;
}

CoupledState coupled_step(const CoupledSystem& sys, const CoupledState& st,
                          double t, double dt, Integrator integ) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const Packed x = pack(st);
  if (integ == Integrator::Euler) {
    // Quaternions move on the group so Euler keeps them unit.
    const Packed k = deriv(sys, st, t);
    Packed y = x + dt * k;
    CoupledState out = unpack(y);
    const CouplingForces f = coupling_eval(sys, st);
    out.q_r = integrate_step(st.q_r, (st.w_r + f.fq_rl) / sys.right.orientation.tau, dt);
    out.q_l = integrate_step(st.q_l, (st.w_l + f.fq_lr) / sys.left.orientation.tau, dt);
    out.rel.q = integrate_step(st.rel.q, st.rel.w / sys.relative.orientation.tau, dt);
    return out;
  }
  const Packed k1 = deriv(sys, st, t);
  const Packed k2 = deriv(sys, unpack(x + dt / 2 * k1), t + dt / 2);
  const Packed k3 = deriv(sys, unpack(x + dt / 2 * k2), t + dt / 2);
  const Packed k4 = deriv(sys, unpack(x + dt * k3), t + dt);
  return unpack(x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4));
}

std::vector<CoupledState> coupled_rollout(const CoupledSystem& sys,
                                          const CoupledState& st0,
                                          double duration, double dt,
                                          Integrator integ) {
  if (!(dt > 0.0) || !(duration >= 0.0)) {
    throw std::invalid_argument("duration and dt must be positive");
  }
  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  std::vector<CoupledState> out;
  out.reserve(n + 1);
  out.push_back(st0);
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(coupled_step(sys, out.back(), static_cast<double>(k) * dt, dt, integ));
  }
  return out;
}

double lyapunov_position(const CoupledSystem& sys, const CoupledState& st) {
  const Vec3 er = sys.right.position.goal - st.p_r;
  const Vec3 el = sys.left.position.goal - st.p_l;
  double V = 0.5 * er.dot(sys.K.cwiseProduct(er)) + 0.5 * el.dot(sys.K.cwiseProduct(el)) +
             0.5 * st.v_r.squaredNorm() + 0.5 * st.v_l.squaredNorm();
  if (sys.coupling == CouplingCase::CaseI) {
    const Vec3 e = sys.relative.position.goal - st.p_rl();
    V += 0.5 * e.dot(sys.Kf.cwiseProduct(e));
  }
  return V;
}

namespace {

double arm_orientation_terms(const CoupledSystem& sys, const CoupledState& st) {
  return 2.0 * v_e(sys.right.orientation.goal, st.q_r) +
         0.5 * st.w_r.dot(st.w_r.cwiseQuotient(sys.K)) +
         2.0 * v_e(sys.left.orientation.goal, st.q_l) +
         0.5 * st.w_l.dot(st.w_l.cwiseQuotient(sys.K));
}

double relative_orientation_terms(const CoupledSystem& sys, const CoupledState& st) {
  const UnitQuaternion& g = sys.relative.orientation.goal;
  return v_e(g, st.q_rl()) + v_e(conj(g), st.q_lr());
}

}  // namespace

double lyapunov_orientation(const CoupledSystem& sys, const CoupledState& st) {
  double V = arm_orientation_terms(sys, st);
  if (sys.coupling == CouplingCase::CaseI) V += relative_orientation_terms(sys, st);
  return V;
}

double lyapunov_orientation_weighted(const CoupledSystem& sys,
                                     const CoupledState& st) {
  return arm_orientation_terms(sys, st) + 2.0 * relative_orientation_terms(sys, st);
}

double lyapunov_position_rate(const CoupledSystem& sys, const CoupledState& st) {
  const double tau = sys.right.position.tau;
  const Vec3 vrl = st.v_rl();
  double rate = -st.v_r.dot(sys.D.cwiseProduct(st.v_r)) - st.v_l.dot(sys.D.cwiseProduct(st.v_l));
  const Vec3 e = (sys.right.position.goal - st.p_r) - (sys.left.position.goal - st.p_l);
  switch (sys.coupling) {
    case CouplingCase::CaseI:
      rate -= vrl.dot(sys.Df.cwiseProduct(vrl));
      break;
    case CouplingCase::CaseIII:
      rate -= vrl.dot(sys.Df.cwiseProduct(vrl));
      [[fallthrough]];
    case CouplingCase::CaseII:
      rate -= sys.Kf.cwiseProduct(sys.relative.position.goal - st.p_rl())
                  .dot(sys.K.cwiseProduct(e));
      break;
    case CouplingCase::Uncoupled:
      break;
  }
  return rate / tau;
}

double lyapunov_orientation_rate(const CoupledSystem& sys, const CoupledState& st) {
  const double tau = sys.right.orientation.tau;
  const Vec3 Dk = sys.D.cwiseQuotient(sys.K);
  const Vec3 wrl = st.w_rl();
  double rate = -st.w_r.dot(Dk.cwiseProduct(st.w_r)) - st.w_l.dot(Dk.cwiseProduct(st.w_l));
  const Vec3 er = err2(sys.right.orientation.goal, st.q_r);
  const Vec3 el = err2(sys.left.orientation.goal, st.q_l);
  const Vec3 fq = sys.Kf.cwiseProduct(err2(sys.relative.orientation.goal, st.q_rl()));
  switch (sys.coupling) {
    case CouplingCase::CaseI:
      rate -= wrl.dot(sys.Df.cwiseQuotient(sys.K).cwiseProduct(wrl));
      break;
    case CouplingCase::CaseIII:
      rate -= wrl.dot(sys.Df.cwiseQuotient(sys.K).cwiseProduct(wrl));
      [[fallthrough]];
    case CouplingCase::CaseII:
      rate -= fq.dot(er - rotate(st.q_rl(), el));
      break;
    case CouplingCase::Uncoupled:
      break;
  }
  return rate / tau;
}

double stiffness_residual(const CoupledSystem& sys, const CoupledState& st) {
  const Vec3 e = err2(sys.relative.orientation.goal, st.q_rl());
  return st.w_rl().dot(sys.Kf.cwiseQuotient(sys.K).cwiseProduct(e) - e);
}

}  // namespace posedmp
