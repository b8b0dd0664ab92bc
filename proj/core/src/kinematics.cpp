// Copyright 2026 The midigap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "midigap/kinematics.hpp"

#include <cmath>
#include <numbers>

#include "midigap/error.hpp"

namespace midigap {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Quaterniond rpy(double roll, double pitch, double yaw) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                            Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                            Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()));
}

RigidTransform origin(double x, double y, double z, double roll = 0, double pitch = 0, double yaw = 0) {
  return {Eigen::Vector3d(x, y, z), rpy(roll, pitch, yaw)};
}

Joint revolute(std::string name, RigidTransform at, Eigen::Vector3d axis, double lower, double upper) {
  return {std::move(name), axis, at, lower, upper};
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

void require_dof(const KinematicChain& chain, const Eigen::VectorXd& q) {
  if (q.size() != chain.dof()) {
    fail(ErrorCode::kInvalidArgument, "joint vector has " + std::to_string(q.size()) + " entries, chain " +
                                          chain.name() + " has " + std::to_string(chain.dof()) + " joints");
  }
}

}  // namespace

KinematicChain::KinematicChain(std::string name, std::vector<Joint> joints, RigidTransform ee_offset)
    : name_(std::move(name)), joints_(std::move(joints)), ee_offset_(ee_offset) {
  if (joints_.empty()) fail(ErrorCode::kInvalidArgument, "kinematic chain without joints");
  for (Joint& j : joints_) {
    if (!(std::isfinite(j.lower) && std::isfinite(j.upper) && j.lower < j.upper)) {
      fail(ErrorCode::kInvalidArgument, "joint " + j.name + " needs finite limits with lower < upper");
    }
    const double n = j.axis.norm();
    if (std::abs(n - 1.0) > 1e-9) fail(ErrorCode::kInvalidArgument, "joint " + j.name + " axis must be unit length");
    j.origin.rotation.normalize();
  }
  ee_offset_.rotation.normalize();
}

Eigen::VectorXd KinematicChain::lower() const {
  Eigen::VectorXd out(dof());
  for (int i = 0; i < dof(); ++i) out[i] = joints_[static_cast<std::size_t>(i)].lower;
  return out;
}

Eigen::VectorXd KinematicChain::upper() const {
  Eigen::VectorXd out(dof());
  for (int i = 0; i < dof(); ++i) out[i] = joints_[static_cast<std::size_t>(i)].upper;
  return out;
}

Eigen::VectorXd KinematicChain::clamp(const Eigen::VectorXd& q) const {
  return q.cwiseMax(lower()).cwiseMin(upper());
}

bool KinematicChain::within_limits(const Eigen::VectorXd& q, double tol) const {
  return q.size() == dof() && ((q - lower()).array() >= -tol).all() && ((upper() - q).array() >= -tol).all();
}

KinematicChain builtin_chain(std::string_view name) {
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d y = Eigen::Vector3d::UnitY();
  if (name == "planar3") {
    return KinematicChain("planar3",
                          {revolute("j1", origin(0, 0, 0), z, -2.9, 2.9),
                           revolute("j2", origin(0.5, 0, 0), z, -2.9, 2.9),
                           revolute("j3", origin(0.4, 0, 0), z, -2.9, 2.9)},
                          origin(0.3, 0, 0));
  }
  if (name == "ur5") {
    return KinematicChain("ur5",
                          {revolute("shoulder_pan", origin(0, 0, 0.089159), z, -2 * kPi, 2 * kPi),
                           revolute("shoulder_lift", origin(0, 0.13585, 0, 0, kPi / 2, 0), y, -2 * kPi, 2 * kPi),
                           revolute("elbow", origin(0, -0.1197, 0.425), y, -kPi, kPi),
                           revolute("wrist_1", origin(0, 0, 0.39225, 0, kPi / 2, 0), y, -2 * kPi, 2 * kPi),
                           revolute("wrist_2", origin(0, 0.093, 0), z, -2 * kPi, 2 * kPi),
                           revolute("wrist_3", origin(0, 0, 0.09465), y, -2 * kPi, 2 * kPi)},
                          origin(0, 0.0823, 0, 0, 0, kPi / 2));
  }
  if (name == "panda") {
    return KinematicChain("panda",
                          {revolute("joint1", origin(0, 0, 0.333), z, -2.8973, 2.8973),
                           revolute("joint2", origin(0, 0, 0, -kPi / 2, 0, 0), z, -1.7628, 1.7628),
                           revolute("joint3", origin(0, -0.316, 0, kPi / 2, 0, 0), z, -2.8973, 2.8973),
                           revolute("joint4", origin(0.0825, 0, 0, kPi / 2, 0, 0), z, -3.0718, -0.0698),
                           revolute("joint5", origin(-0.0825, 0.384, 0, -kPi / 2, 0, 0), z, -2.8973, 2.8973),
                           revolute("joint6", origin(0, 0, 0, kPi / 2, 0, 0), z, -0.0175, 3.7525),
                           revolute("joint7", origin(0.088, 0, 0, kPi / 2, 0, 0), z, -2.8973, 2.8973)},
                          origin(0, 0, 0.2104, 0, 0, -kPi / 4));
  }
  fail(ErrorCode::kInvalidArgument, "unknown built-in chain '" + std::string(name) + "'");
}

std::vector<std::string> builtin_chain_names() { return {"planar3", "ur5", "panda"}; }

RigidTransform fk_transform(const KinematicChain& chain, const Eigen::VectorXd& q) {
  require_dof(chain, q);
  RigidTransform t;
  for (int i = 0; i < chain.dof(); ++i) {
    const Joint& j = chain.joints()[static_cast<std::size_t>(i)];
    t = t * j.origin;
    t = t * RigidTransform{Eigen::Vector3d::Zero(), Eigen::Quaterniond(Eigen::AngleAxisd(q[i], j.axis))};
  }
  return t * chain.ee_offset();
}

Eigen::VectorXd fk(const KinematicChain& chain, const Eigen::VectorXd& q) {
  const RigidTransform t = fk_transform(chain, q);
  Eigen::VectorXd pose(7);
  pose.head<3>() = t.translation;
  Eigen::Quaterniond r = t.rotation.normalized();
  if (r.w() < 0.0) r.coeffs() = -r.coeffs();
  pose.tail<4>() = quaternion_to_wxyz(r);
  return pose;
}

Jacobian jacobian(const KinematicChain& chain, const Eigen::VectorXd& q) {
  require_dof(chain, q);
  std::vector<Eigen::Vector3d> axes;
  std::vector<Eigen::Vector3d> points;
  RigidTransform t;
  for (int i = 0; i < chain.dof(); ++i) {
    const Joint& j = chain.joints()[static_cast<std::size_t>(i)];
    t = t * j.origin;
    axes.push_back(t.rotation * j.axis);
    points.push_back(t.translation);
    t = t * RigidTransform{Eigen::Vector3d::Zero(), Eigen::Quaterniond(Eigen::AngleAxisd(q[i], j.axis))};
  }
  const Eigen::Vector3d ee = (t * chain.ee_offset()).translation;
  Jacobian jac(6, chain.dof());
  for (int i = 0; i < chain.dof(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    jac.block<3, 1>(0, i) = axes[k].cross(ee - points[k]);
    jac.block<3, 1>(3, i) = axes[k];
  }
  return jac;
}

Eigen::Matrix<double, 6, 1> pose_error(const Eigen::VectorXd& target, const Eigen::VectorXd& pose) {
  Eigen::Matrix<double, 6, 1> e;
  e.head<3>() = pose.head<3>() - target.head<3>();
  const Eigen::Quaterniond qt = quaternion_from_wxyz(target.segment<4>(3));
  Eigen::Quaterniond qp = quaternion_from_wxyz(pose.segment<4>(3));
  if (qt.coeffs().dot(qp.coeffs()) < 0.0) qp.coeffs() = -qp.coeffs();
  e.tail<3>() = quaternion_log(qt.conjugate() * qp);
  return e;
}

Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  double c = 1.0 / 12.0;
  if (theta > 1e-6) {
    c = 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() + 0.5 * k + c * k * k;
}

Jacobian pose_error_jacobian(const KinematicChain& chain, const Eigen::VectorXd& target,
                             const Eigen::VectorXd& q, Eigen::Matrix<double, 6, 1>* error) {
  const Jacobian geo = jacobian(chain, q);
  const RigidTransform t = fk_transform(chain, q);
  Eigen::VectorXd pose(7);
  pose.head<3>() = t.translation;
  pose.tail<4>() = quaternion_to_wxyz(t.rotation.normalized());
  const Eigen::Matrix<double, 6, 1> e = pose_error(target, pose);
  if (error) *error = e;
  Jacobian out(6, chain.dof());
  out.topRows<3>() = geo.topRows<3>();
  // world angular velocity -> body frame -> rotation-vector rate
  const Eigen::Matrix3d r_world_ee = t.rotation.normalized().toRotationMatrix();
  out.bottomRows<3>() = so3_right_jacobian_inverse(e.tail<3>()) * r_world_ee.transpose() * geo.bottomRows<3>();
  return out;
}

IkResult ik_solve(const KinematicChain& chain, const GaussianStep& target, const Eigen::VectorXd& q_init,
                  const IkOptions& options) {
  require_dof(chain, q_init);
  if (target.mean.size() < 7 || target.var.size() < 6 || (target.var.head<6>().array() <= 0.0).any()) {
    fail(ErrorCode::kInvalidArgument, "IK target needs a pose mean and positive pose variances");
  }
  const Eigen::VectorXd mean = target.mean.head<7>();
  const Eigen::Array<double, 6, 1> w = target.var.head<6>().array().inverse();
  auto cost_at = [&](const Eigen::VectorXd& q) {
    const Eigen::Matrix<double, 6, 1> e = pose_error(mean, fk(chain, q));
    return 0.5 * (e.array().square() * w).sum();
  };

  IkResult r{chain.clamp(q_init), 0.0, 0};
  r.cost = cost_at(r.q);
  double damping = 1e-3;
  const int n = chain.dof();
  while (r.cost >= options.tol && r.iterations < options.max_iter) {
    ++r.iterations;
    Eigen::Matrix<double, 6, 1> e;
    const Jacobian jac = pose_error_jacobian(chain, mean, r.q, &e);
    const Eigen::MatrixXd jw = w.matrix().asDiagonal() * jac;
    const Eigen::MatrixXd h = jac.transpose() * jw;
    const Eigen::VectorXd g = jw.transpose() * e;
    bool accepted = false;
    while (damping < 1e12) {
      Eigen::MatrixXd a = h;
      a.diagonal() += damping * (h.diagonal().array() + 1e-9).matrix();
      const Eigen::VectorXd dq = a.ldlt().solve(-g);
      const Eigen::VectorXd candidate = chain.clamp(r.q + dq);
      const double c = cost_at(candidate);
      if (c < r.cost) {
        r.q = candidate;
        r.cost = c;
        damping = std::max(damping / 3.0, 1e-12);
        accepted = true;
        break;
      }
      damping *= 4.0;
    }
    if (!accepted) break;  // stalled at a local minimum or a joint limit
    (void)n;
  }
  if (r.cost >= options.tol) {
    throw ConvergenceError("IK did not reach tolerance (cost " + std::to_string(r.cost) + ")", r.q, r.cost);
  }
  return r;
}

}  // namespace midigap
