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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "midigap/manifold.hpp"

namespace midigap {

/// A demonstration or predicted path: T points on one manifold.
class Trajectory {
 public:
  Trajectory() = default;
  /// Canonicalizes quaternion blocks; requires at least one point.
  Trajectory(ManifoldSpec spec, std::vector<Eigen::VectorXd> points, std::string demo_id = {});

  const ManifoldSpec& spec() const { return spec_; }
  std::size_t length() const { return points_.size(); }
  const std::vector<Eigen::VectorXd>& points() const { return points_; }
  const Eigen::VectorXd& operator[](std::size_t t) const { return points_[t]; }
  ManifoldPoint point(std::size_t t) const { return ManifoldPoint(spec_, points_.at(t)); }
  const std::string& demo_id() const { return demo_id_; }
  void set_demo_id(std::string id) { demo_id_ = std::move(id); }

 private:
  ManifoldSpec spec_;
  std::vector<Eigen::VectorXd> points_;
  std::string demo_id_;
};

/// Point at fractional index `index` in [0, T-1], interpolated along the
/// geodesic between the neighbouring samples.
Eigen::VectorXd sample_at(const Trajectory& traj, double index);

/// Index-space linear resampling; endpoints are kept exactly.
Trajectory resample_to_length(const Trajectory& traj, int length);

/// round(mean of demo lengths).
int mean_length(std::span<const Trajectory> demos);

/// One Gaussian of a DiGaP: mean on the manifold, diagonal variance in the
/// tangent space at that mean.
struct GaussianStep {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

class DiGaP {
 public:
  DiGaP() = default;
  DiGaP(ManifoldSpec spec, std::vector<GaussianStep> steps, double sample_rate_hz = 20.0);

  const ManifoldSpec& spec() const { return spec_; }
  std::size_t length() const { return steps_.size(); }
  const std::vector<GaussianStep>& steps() const { return steps_; }
  const GaussianStep& step(std::size_t t) const { return steps_[t]; }
  double sample_rate_hz() const { return sample_rate_hz_; }

 private:
  ManifoldSpec spec_;
  std::vector<GaussianStep> steps_;
  double sample_rate_hz_ = 20.0;
};

struct FitOptions {
  double var_floor = 1e-8;
  FrechetOptions frechet;
  /// Common length the demos are resampled to; mean demo length when unset.
  std::optional<int> length;
  double sample_rate_hz = 20.0;
};

DiGaP fit(std::span<const Trajectory> demos, const FitOptions& options = {});

/// Most likely trajectory: the sequence of step means.
Trajectory predict(const DiGaP& model);

/// Thresholds one ambient coordinate (e.g. a gripper channel) to {0, 1}.
void binarize_channel(Trajectory& traj, int ambient_index, double threshold = 0.5);

struct RigidTransform {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& other) const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
};

/// Maps the pose block (leading R^3 x S^3) of every point; further factors
/// pass through untouched.
Eigen::VectorXd transform_point(const ManifoldSpec& spec, const Eigen::VectorXd& coords,
                                const RigidTransform& frame);
Trajectory transform_trajectory(const Trajectory& traj, const RigidTransform& frame);

/// Expresses a model learnt in `frame` in world coordinates.
DiGaP transform_to_world(const DiGaP& model, const RigidTransform& frame);

/// Precision-weighted product of Gaussians, step by step.
DiGaP fuse_product(std::span<const DiGaP> models);

/// Product of a set of Gaussians at a single step.
GaussianStep fuse_steps(const ManifoldSpec& spec, std::span<const GaussianStep* const> steps);

using FramePoses = std::map<std::string, RigidTransform>;

/// Inclusive step range in which a frame takes part in fusion.
struct ActiveWindow {
  int first = 0;
  int last = 0;
};

/// Task-parameterized model: one DiGaP per coordinate frame.
struct FramedDiGaP {
  std::map<std::string, DiGaP> frames;
  std::map<std::string, ActiveWindow> windows;  // frames without entry are always active

  std::size_t length() const;
  const ManifoldSpec& spec() const;
};

/// Fits one DiGaP per frame from demos expressed in world coordinates.
/// `poses[n]` holds the frame poses observed with demo n.
FramedDiGaP fit_framed(std::span<const Trajectory> demos, std::span<const FramePoses> poses,
                       const FitOptions& options = {});

/// Moves each local model to the given frame poses and fuses the frames that
/// are active at each step.
DiGaP to_world(const FramedDiGaP& model, const FramePoses& poses);

}  // namespace midigap
