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

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "midigap/digap.hpp"
#include "midigap/kinematics.hpp"
#include "midigap/mixture.hpp"
#include "midigap/updating.hpp"

namespace midigap {

using JointTrajectory = std::vector<Eigen::VectorXd>;

struct PathOptions {
  double lambda_q = 0.1;
  double lambda_e = 1.0;
  double z = 1.96;
  int max_outer = 20;
  double initial_penalty = 10.0;
  double penalty_growth = 5.0;
  int max_inner = 100;
  /// Allowed excess of |e| over z*sigma, in pose units.
  double constraint_tol = 1e-6;
  /// Also start from the chained per-step IK path and keep the better result.
  bool greedy_warm_start = true;
  IkOptions ik;
};

struct PathResult {
  JointTrajectory joints;
  Trajectory ee_path;
  double objective = 0.0;
  double tracking = 0.0;
  double smoothness = 0.0;
  double max_violation = 0.0;
  bool feasible = false;
  int outer_iterations = 0;
  /// Objective of each accepted (feasible, improving) outer iterate.
  std::vector<double> objective_trace;
  double seconds = 0.0;
};

/// Restricts a model to its leading R3xS3 block.
DiGaP pose_block(const DiGaP& model);

/// Joint-space tracking of a pose tube: tracking plus smoothness objective,
/// joint limits, and |e_{t,i}| <= z sigma_{t,i} via an augmented Lagrangian.
/// An infeasible tube yields feasible == false with the violation reported.
PathResult optimize_path(const KinematicChain& chain, const DiGaP& target, const Eigen::VectorXd& q0,
                         const PathOptions& options = {});

/// Per-step IK chained from q0; a step that fails keeps the solver's last
/// iterate.
JointTrajectory greedy_ik_path(const KinematicChain& chain, const DiGaP& target, const Eigen::VectorXd& q0,
                               const IkOptions& options = {});

Trajectory fk_path(const KinematicChain& chain, const JointTrajectory& joints);

/// 0.5 sum_t sum_i Log_mu_t(xi_t)_i^2 / sigma_{t,i}^2.
double trajectory_nll(const DiGaP& target, const Trajectory& path);

/// Full Gaussian negative log likelihood including log-determinant and
/// normalizing constants.
double trajectory_full_nll(const DiGaP& target, const Trajectory& path);

/// Per-step likelihood kernels exp(-0.5 z-score^2), in [0, 1].
std::vector<double> step_likelihoods(const DiGaP& target, const Trajectory& path);

struct ModalOptimization {
  MiDiGaP model;
  std::vector<PathResult> paths;  // one per mode; empty joints for zero-prior modes
  std::vector<ModeUpdateReport> report;
};

/// Weights each mode by the L_q-normalized likelihood of its optimized path;
/// infeasible optimizations receive weight 0.
ModalOptimization modal_update_from_optimization(const KinematicChain& chain, const MiDiGaP& model,
                                                 const Eigen::VectorXd& q0, const PathOptions& options = {},
                                                 double q_norm = 1.0);

struct ChainOptimization {
  SkillChain chain;
  std::vector<ModalPath> paths;
  std::vector<double> path_evidence;
  std::vector<std::vector<PathResult>> solutions;  // per modal path, per skill
};

/// Optimizes every modal path with nonzero probability (skills chained at the
/// previous skill's final configuration) and feeds each (skill, mode) the best
/// evidence among paths through it into apply_to_chain.
ChainOptimization modal_update_from_optimization(const KinematicChain& chain, const SkillChain& skills,
                                                 const Eigen::VectorXd& q0, const PathOptions& options = {},
                                                 double q_norm = 1.0, std::size_t max_paths = 256);

}  // namespace midigap
