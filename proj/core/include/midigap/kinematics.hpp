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

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "midigap/digap.hpp"

namespace midigap {

/// Revolute joint: rotation about `axis` (in the joint frame) after the
/// fixed `origin` transform from the parent frame.
struct Joint {
  std::string name;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  RigidTransform origin;
  double lower = -3.14159;
  double upper = 3.14159;
};

class KinematicChain {
 public:
  KinematicChain() = default;
  KinematicChain(std::string name, std::vector<Joint> joints, RigidTransform ee_offset);

  const std::string& name() const { return name_; }
  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<Joint>& joints() const { return joints_; }
  const RigidTransform& ee_offset() const { return ee_offset_; }
  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& q) const;
  bool within_limits(const Eigen::VectorXd& q, double tol = 0.0) const;

 private:
  std::string name_;
  std::vector<Joint> joints_;
  RigidTransform ee_offset_;
};

/// "planar3" (three unit-axis-z links), "ur5" (6-DoF, UR5-like geometry) and
/// "panda" (7-DoF, Franka-like geometry).
KinematicChain builtin_chain(std::string_view name);
std::vector<std::string> builtin_chain_names();

/// End-effector pose as an R3xS3 point (x, y, z, qw, qx, qy, qz).
Eigen::VectorXd fk(const KinematicChain& chain, const Eigen::VectorXd& q);
RigidTransform fk_transform(const KinematicChain& chain, const Eigen::VectorXd& q);

using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Geometric Jacobian in the world frame: linear velocity rows, then angular
/// velocity rows.
Jacobian jacobian(const KinematicChain& chain, const Eigen::VectorXd& q);

/// 6D pose error Log_target(pose): (x - x_target, Log(theta_target^-1 theta)).
Eigen::Matrix<double, 6, 1> pose_error(const Eigen::VectorXd& target, const Eigen::VectorXd& pose);

/// Derivative of pose_error(target, fk(q)) with respect to q.
Jacobian pose_error_jacobian(const KinematicChain& chain, const Eigen::VectorXd& target,
                             const Eigen::VectorXd& q, Eigen::Matrix<double, 6, 1>* error = nullptr);

/// Inverse of the SO(3) right Jacobian at rotation vector phi.
Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& phi);

struct IkOptions {
  double tol = 1e-10;  // on the cost 0.5 e^T W e
  int max_iter = 200;
};

struct IkResult {
  Eigen::VectorXd q;
  double cost = 0.0;
  int iterations = 0;
};

/// Damped Gauss-Newton on 0.5 e^T Sigma^-1 e with the target's pose mean and
/// variance; iterates are clamped to the joint limits. Throws
/// ConvergenceError (carrying q and the cost) when tol is not reached.
IkResult ik_solve(const KinematicChain& chain, const GaussianStep& target, const Eigen::VectorXd& q_init,
                  const IkOptions& options = {});

}  // namespace midigap
