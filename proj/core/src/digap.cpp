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

#include "midigap/digap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "midigap/error.hpp"

namespace midigap {

namespace {

constexpr double kFusionTol = 1e-10;
constexpr int kFusionMaxIter = 100;

void require_pose(const ManifoldSpec& spec) {
  if (!spec.starts_with_pose()) {
    fail(ErrorCode::kSpecMismatch,
         "frame transforms need a pose manifold (R3xS3...), got " + spec.to_string());
  }
}

}  // namespace

Trajectory::Trajectory(ManifoldSpec spec, std::vector<Eigen::VectorXd> points, std::string demo_id)
    : spec_(std::move(spec)), points_(std::move(points)), demo_id_(std::move(demo_id)) {
  if (points_.empty()) fail(ErrorCode::kInvalidArgument, "trajectory without points");
  for (Eigen::VectorXd& p : points_) {
    if (p.size() != spec_.ambient_dim()) {
      fail(ErrorCode::kSpecMismatch, "trajectory point does not match manifold " + spec_.to_string());
    }
    if (!p.allFinite()) fail(ErrorCode::kInvalidArgument, "non-finite trajectory point");
    spec_.canonicalize(p);
  }
}

Eigen::VectorXd sample_at(const Trajectory& traj, double index) {
  const double last = static_cast<double>(traj.length() - 1);
  index = std::clamp(index, 0.0, last);
  const auto lo = static_cast<std::size_t>(std::floor(index));
  const double frac = index - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= traj.length()) return traj[lo];
  return geodesic_interpolate(traj.spec(), traj[lo], traj[lo + 1], frac);
}

Trajectory resample_to_length(const Trajectory& traj, int length) {
  if (length < 2) fail(ErrorCode::kInvalidArgument, "resample length must be at least 2");
  const auto target = static_cast<std::size_t>(length);
  if (target == traj.length()) return traj;
  std::vector<Eigen::VectorXd> points;
  points.reserve(target);
  const double scale = static_cast<double>(traj.length() - 1);
  for (std::size_t i = 0; i < target; ++i) {
    const double index = static_cast<double>(i) * scale / static_cast<double>(target - 1);
    points.push_back(sample_at(traj, index));
  }
  return Trajectory(traj.spec(), std::move(points), traj.demo_id());
}

int mean_length(std::span<const Trajectory> demos) {
  if (demos.empty()) fail(ErrorCode::kInsufficientDemos, "no demonstrations");
  double total = 0.0;
  for (const Trajectory& d : demos) total += static_cast<double>(d.length());
  return static_cast<int>(std::lround(total / static_cast<double>(demos.size())));
}

DiGaP::DiGaP(ManifoldSpec spec, std::vector<GaussianStep> steps, double sample_rate_hz)
    : spec_(std::move(spec)), steps_(std::move(steps)), sample_rate_hz_(sample_rate_hz) {
  if (steps_.empty()) fail(ErrorCode::kInvalidArgument, "DiGaP without steps");
  if (!(sample_rate_hz_ > 0.0)) fail(ErrorCode::kInvalidArgument, "sample rate must be positive");
  for (GaussianStep& s : steps_) {
    if (s.mean.size() != spec_.ambient_dim() || s.var.size() != spec_.tangent_dim()) {
      fail(ErrorCode::kSpecMismatch, "DiGaP step does not match manifold " + spec_.to_string());
    }
    if (!s.mean.allFinite() || !s.var.allFinite() || (s.var.array() <= 0.0).any()) {
      fail(ErrorCode::kInvalidArgument, "DiGaP variances must be finite and positive");
    }
    spec_.canonicalize(s.mean);
  }
}

DiGaP fit(std::span<const Trajectory> demos, const FitOptions& options) {
  if (demos.size() < 2) {
    fail(ErrorCode::kInsufficientDemos,
         "fitting needs at least 2 demonstrations, got " + std::to_string(demos.size()));
  }
  const ManifoldSpec& spec = demos.front().spec();
  for (const Trajectory& d : demos) {
    if (!(d.spec() == spec)) fail(ErrorCode::kSpecMismatch, "demonstrations on different manifolds");
  }
  const int length = options.length.value_or(mean_length(demos));
  std::vector<Trajectory> resampled;
  resampled.reserve(demos.size());
  for (const Trajectory& d : demos) {
    resampled.push_back(static_cast<int>(d.length()) == length ? d : resample_to_length(d, length));
  }

  const std::size_t n = demos.size();
  const std::vector<double> weights(n, 1.0);
  std::vector<Eigen::VectorXd> column(n);
  std::vector<GaussianStep> steps;
  steps.reserve(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    for (std::size_t i = 0; i < n; ++i) column[i] = resampled[i][static_cast<std::size_t>(t)];
    GaussianStep step;
    step.mean = weighted_frechet_mean(spec, column, weights, column.front(), options.frechet);
    step.var = Eigen::VectorXd::Zero(spec.tangent_dim());
    for (const auto& z : column) step.var += spec.log(step.mean, z).array().square().matrix();
    step.var /= static_cast<double>(n - 1);
    step.var = step.var.cwiseMax(options.var_floor);
    steps.push_back(std::move(step));
  }
  return DiGaP(spec, std::move(steps), options.sample_rate_hz);
}

Trajectory predict(const DiGaP& model) {
  std::vector<Eigen::VectorXd> points;
  points.reserve(model.length());
  for (const GaussianStep& s : model.steps()) points.push_back(s.mean);
  return Trajectory(model.spec(), std::move(points));
}

void binarize_channel(Trajectory& traj, int ambient_index, double threshold) {
  std::vector<Eigen::VectorXd> points = traj.points();
  for (Eigen::VectorXd& p : points) {
    p[ambient_index] = p[ambient_index] >= threshold ? 1.0 : 0.0;
  }
  traj = Trajectory(traj.spec(), std::move(points), traj.demo_id());
}

RigidTransform RigidTransform::inverse() const {
  const Eigen::Quaterniond inv = rotation.conjugate();
  return {-(inv * translation), inv};
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  return {rotation * other.translation + translation, (rotation * other.rotation).normalized()};
}

Eigen::VectorXd transform_point(const ManifoldSpec& spec, const Eigen::VectorXd& coords,
                                const RigidTransform& frame) {
  require_pose(spec);
  Eigen::VectorXd out = coords;
  out.head<3>() = frame.apply(coords.head<3>());
  Eigen::Quaterniond q = frame.rotation * quaternion_from_wxyz(coords.segment<4>(3));
  q.normalize();
  out.segment<4>(3) = quaternion_to_wxyz(q);
  spec.canonicalize(out);
  return out;
}

Trajectory transform_trajectory(const Trajectory& traj, const RigidTransform& frame) {
  std::vector<Eigen::VectorXd> points;
  points.reserve(traj.length());
  for (const auto& p : traj.points()) points.push_back(transform_point(traj.spec(), p, frame));
  return Trajectory(traj.spec(), std::move(points), traj.demo_id());
}

DiGaP transform_to_world(const DiGaP& model, const RigidTransform& frame) {
  require_pose(model.spec());
  const Eigen::Matrix3d rot = frame.rotation.normalized().toRotationMatrix();
  const Eigen::Matrix3d rot_sq = rot.array().square().matrix();
  std::vector<GaussianStep> steps;
  steps.reserve(model.length());
  for (const GaussianStep& s : model.steps()) {
    GaussianStep out;
    out.mean = transform_point(model.spec(), s.mean, frame);
    out.var = s.var;
    // diag(R diag(v) R^T)_i = sum_j R_ij^2 v_j; orientation tangents are body-relative
    out.var.head<3>() = rot_sq * s.var.head<3>();
    steps.push_back(std::move(out));
  }
  return DiGaP(model.spec(), std::move(steps), model.sample_rate_hz());
}

GaussianStep fuse_steps(const ManifoldSpec& spec, std::span<const GaussianStep* const> steps) {
  if (steps.empty()) fail(ErrorCode::kInvalidArgument, "product of zero Gaussians");
  if (steps.size() == 1) return *steps.front();

  GaussianStep fused;
  fused.mean = Eigen::VectorXd(spec.ambient_dim());
  fused.var = Eigen::VectorXd(spec.tangent_dim());
  for (std::size_t f = 0; f < spec.factor_count(); ++f) {
    const Factor& factor = spec.factors()[f];
    const int a = spec.ambient_offset(f);
    const int t = spec.tangent_offset(f);
    const int dim = factor.tangent_dim();

    Eigen::ArrayXd precision = Eigen::ArrayXd::Zero(dim);
    for (const GaussianStep* s : steps) precision += s->var.segment(t, dim).array().inverse();
    fused.var.segment(t, dim) = precision.inverse().matrix();

    if (factor.kind == FactorKind::kEuclidean) {
      Eigen::ArrayXd weighted = Eigen::ArrayXd::Zero(dim);
      for (const GaussianStep* s : steps) {
        weighted += s->mean.segment(a, dim).array() / s->var.segment(t, dim).array();
      }
      fused.mean.segment(a, dim) = (weighted / precision).matrix();
      continue;
    }

    // Orientation: fixed-point iteration in the tangent space of the estimate,
    // started at the most certain input.
    const GaussianStep* start = *std::min_element(
        steps.begin(), steps.end(), [t](const GaussianStep* x, const GaussianStep* y) {
          return x->var.segment<3>(t).sum() < y->var.segment<3>(t).sum();
        });
    Eigen::Quaterniond mu = quaternion_from_wxyz(start->mean.segment<4>(a));
    double update_norm = 0.0;
    int it = 0;
    for (; it < kFusionMaxIter; ++it) {
      Eigen::Array3d weighted = Eigen::Array3d::Zero();
      for (const GaussianStep* s : steps) {
        Eigen::Quaterniond qi = quaternion_from_wxyz(s->mean.segment<4>(a));
        if (mu.coeffs().dot(qi.coeffs()) < 0.0) qi.coeffs() = -qi.coeffs();
        weighted += quaternion_log(mu.conjugate() * qi).array() / s->var.segment<3>(t).array();
      }
      const Eigen::Vector3d update = (weighted / precision).matrix();
      update_norm = update.norm();
      if (update_norm < kFusionTol) break;
      mu = (mu * quaternion_exp(update)).normalized();
    }
    if (it == kFusionMaxIter) {
      throw ConvergenceError("orientation fusion did not converge",
                             quaternion_to_wxyz(mu), update_norm);
    }
    fused.mean.segment<4>(a) = quaternion_to_wxyz(mu);
  }
  spec.canonicalize(fused.mean);
  return fused;
}

DiGaP fuse_product(std::span<const DiGaP> models) {
  if (models.empty()) fail(ErrorCode::kInvalidArgument, "product of zero models");
  const DiGaP& first = models.front();
  for (const DiGaP& m : models) {
    if (!(m.spec() == first.spec()) || m.length() != first.length()) {
      fail(ErrorCode::kSpecMismatch, "fused models must share manifold and length");
    }
  }
  std::vector<const GaussianStep*> column(models.size());
  std::vector<GaussianStep> steps;
  steps.reserve(first.length());
  for (std::size_t t = 0; t < first.length(); ++t) {
    for (std::size_t i = 0; i < models.size(); ++i) column[i] = &models[i].step(t);
    steps.push_back(fuse_steps(first.spec(), column));
  }
  return DiGaP(first.spec(), std::move(steps), first.sample_rate_hz());
}

std::size_t FramedDiGaP::length() const {
  if (frames.empty()) fail(ErrorCode::kInvalidArgument, "framed model without frames");
  return frames.begin()->second.length();
}

const ManifoldSpec& FramedDiGaP::spec() const {
  if (frames.empty()) fail(ErrorCode::kInvalidArgument, "framed model without frames");
  return frames.begin()->second.spec();
}

FramedDiGaP fit_framed(std::span<const Trajectory> demos, std::span<const FramePoses> poses,
                       const FitOptions& options) {
  if (demos.size() != poses.size()) {
    fail(ErrorCode::kInvalidArgument, "need one set of frame poses per demonstration");
  }
  if (demos.empty()) fail(ErrorCode::kInsufficientDemos, "no demonstrations");
  FitOptions common = options;
  common.length = options.length.value_or(mean_length(demos));

  FramedDiGaP model;
  for (const auto& [frame_id, unused] : poses.front()) {
    std::vector<Trajectory> local;
    local.reserve(demos.size());
    for (std::size_t n = 0; n < demos.size(); ++n) {
      const auto it = poses[n].find(frame_id);
      if (it == poses[n].end()) {
        fail(ErrorCode::kInvalidArgument, "demo " + demos[n].demo_id() + " lacks frame " + frame_id);
      }
      local.push_back(transform_trajectory(demos[n], it->second.inverse()));
    }
    model.frames.emplace(frame_id, fit(local, common));
  }
  return model;
}

DiGaP to_world(const FramedDiGaP& model, const FramePoses& poses) {
  std::vector<std::string> ids;
  std::vector<DiGaP> world;
  for (const auto& [frame_id, local] : model.frames) {
    const auto it = poses.find(frame_id);
    if (it == poses.end()) fail(ErrorCode::kInvalidArgument, "missing pose for frame " + frame_id);
    ids.push_back(frame_id);
    world.push_back(transform_to_world(local, it->second));
  }
  const std::size_t length = model.length();
  const ManifoldSpec& spec = model.spec();
  std::vector<GaussianStep> steps;
  steps.reserve(length);
  std::vector<const GaussianStep*> active;
  for (std::size_t t = 0; t < length; ++t) {
    active.clear();
    for (std::size_t i = 0; i < world.size(); ++i) {
      const auto w = model.windows.find(ids[i]);
      const auto ti = static_cast<int>(t);
      if (w == model.windows.end() || (ti >= w->second.first && ti <= w->second.last)) {
        active.push_back(&world[i].step(t));
      }
    }
    // no frame declared active: fall back to all frames
    if (active.empty()) {
      for (const DiGaP& m : world) active.push_back(&m.step(t));
    }
    steps.push_back(fuse_steps(spec, active));
  }
  return DiGaP(spec, std::move(steps), world.front().sample_rate_hz());
}

}  // namespace midigap
