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

#include "midigap/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "midigap/error.hpp"
#include "midigap/random.hpp"

namespace midigap {

namespace {

constexpr double kPi = std::numbers::pi;

double phase(int t, int length) { return static_cast<double>(t) / static_cast<double>(length - 1); }

// One noise channel over a demo: independent draws, or a random sum of the
// three lowest sine harmonics scaled to the same pointwise variance.
class NoiseChannel {
 public:
  NoiseChannel(NoiseKind kind, double sigma, Rng& rng) : kind_(kind), sigma_(sigma), rng_(&rng) {
    if (kind_ == NoiseKind::kSmooth) {
      for (int k = 0; k < 3; ++k) {
        gains_[k] = standard_normal(rng);
        phases_[k] = 2.0 * kPi * uniform01(rng);
      }
    }
  }

  double operator()(double s) {
    if (sigma_ == 0.0) return 0.0;
    if (kind_ == NoiseKind::kIid) return sigma_ * standard_normal(*rng_);
    double v = 0.0;
    for (int k = 0; k < 3; ++k) v += gains_[k] * std::sin((k + 1) * kPi * s + phases_[k]);
    return sigma_ * std::sqrt(2.0 / 3.0) * v;
  }

 private:
  NoiseKind kind_;
  double sigma_;
  Rng* rng_;
  double gains_[3] = {0, 0, 0};
  double phases_[3] = {0, 0, 0};
};

Eigen::VectorXd make_pose(const Eigen::Vector3d& p, const Eigen::Quaterniond& r) {
  Eigen::VectorXd out(7);
  out.head<3>() = p;
  Eigen::Quaterniond q = r.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  out.tail<4>() = quaternion_to_wxyz(q);
  return out;
}

Dataset scalar_family(const SynthSpec& spec) {
  Dataset data;
  data.spec = ManifoldSpec::euclidean(1);
  data.sample_rate_hz = spec.sample_rate_hz;
  std::vector<Eigen::VectorXd> truth;
  for (int t = 0; t < spec.length; ++t) {
    truth.push_back(Eigen::VectorXd::Constant(1, family_value(spec.family, phase(t, spec.length), spec.length)));
  }
  for (int i = 0; i < spec.n_demos; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    NoiseChannel noise(spec.noise_kind, spec.noise, rng);
    std::vector<Eigen::VectorXd> points = truth;
    for (int t = 0; t < spec.length; ++t) points[static_cast<std::size_t>(t)][0] += noise(phase(t, spec.length));
    const std::string id = "demo_" + std::to_string(i);
    data.demos.emplace_back(data.spec, std::move(points), id);
    data.truth.emplace_back(data.spec, truth, id);
  }
  return data;
}

Eigen::VectorXd perturb_pose(const Eigen::VectorXd& pose, std::array<NoiseChannel, 6>& noise, double s) {
  Eigen::VectorXd v(6);
  for (int k = 0; k < 6; ++k) v[k] = noise[static_cast<std::size_t>(k)](s);
  return ManifoldSpec::pose().exp(pose, v);
}

std::array<NoiseChannel, 6> pose_noise(const SynthSpec& spec, Rng& rng) {
  return {NoiseChannel(spec.noise_kind, spec.noise, rng), NoiseChannel(spec.noise_kind, spec.noise, rng),
          NoiseChannel(spec.noise_kind, spec.noise, rng), NoiseChannel(spec.noise_kind, spec.noise, rng),
          NoiseChannel(spec.noise_kind, spec.noise, rng), NoiseChannel(spec.noise_kind, spec.noise, rng)};
}

Dataset multimode_pose(const SynthSpec& spec) {
  if (spec.modes < 1) fail(ErrorCode::kInvalidArgument, "multimode family needs at least one mode");
  if (spec.separation < 0.0) fail(ErrorCode::kInvalidArgument, "mode separation must be non-negative");
  Dataset data;
  data.spec = ManifoldSpec::pose();
  data.sample_rate_hz = spec.sample_rate_hz;
  const Eigen::Quaterniond tilt(Eigen::AngleAxisd(2.5, Eigen::Vector3d::UnitY()));
  for (int i = 0; i < spec.n_demos; ++i) {
    const int mode = i % spec.modes;
    const double offset = spec.separation * (mode - 0.5 * (spec.modes - 1));
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    RigidTransform frame;
    if (spec.object_frame) {
      for (int k = 0; k < 3; ++k) frame.translation[k] = 0.2 * uniform01(rng) - 0.1;
      frame.rotation = Eigen::AngleAxisd(uniform01(rng) - 0.5, Eigen::Vector3d::UnitZ());
    }
    auto noise = pose_noise(spec, rng);
    std::vector<Eigen::VectorXd> truth;
    std::vector<Eigen::VectorXd> points;
    for (int t = 0; t < spec.length; ++t) {
      const double s = phase(t, spec.length);
      double bump = std::sin(kPi * s);
      if (spec.second_half_only) bump = s <= 0.5 ? 0.0 : std::sin(kPi * (2.0 * s - 1.0));
      const Eigen::Vector3d p(0.45 + 0.15 * s, -0.15 + 0.3 * s + offset * bump, 0.35 + 0.1 * std::sin(kPi * s));
      const Eigen::Quaterniond r = Eigen::Quaterniond(Eigen::AngleAxisd(0.6 * s, Eigen::Vector3d::UnitZ())) * tilt;
      const Eigen::VectorXd local = make_pose(p, r);
      truth.push_back(local);
      points.push_back(perturb_pose(local, noise, s));
    }
    const std::string id = "demo_" + std::to_string(i);
    Trajectory demo(data.spec, std::move(points), id);
    Trajectory clean(data.spec, std::move(truth), id);
    if (spec.object_frame) {
      demo = transform_trajectory(demo, frame);
      clean = transform_trajectory(clean, frame);
      data.frames.push_back({{"object", frame}});
    }
    data.demos.push_back(std::move(demo));
    data.truth.push_back(std::move(clean));
    data.labels.push_back(mode);
  }
  return data;
}

Dataset arm_traced(const SynthSpec& spec) {
  const KinematicChain chain = builtin_chain(spec.chain);
  Dataset data;
  data.spec = ManifoldSpec::pose();
  data.sample_rate_hz = spec.sample_rate_hz;
  Rng nominal_rng(derive_seed(spec.seed, 0x6e6f6d696e616cULL));
  const Eigen::VectorXd lower = chain.lower();
  const Eigen::VectorXd upper = chain.upper();
  Eigen::VectorXd qa(chain.dof());
  Eigen::VectorXd qb(chain.dof());
  for (int j = 0; j < chain.dof(); ++j) {
    const double mid = 0.5 * (lower[j] + upper[j]);
    const double half = std::min(0.5 * (upper[j] - lower[j]), 1.5);
    qa[j] = mid + 0.5 * half * (2.0 * uniform01(nominal_rng) - 1.0);
    qb[j] = qa[j] + spec.joint_excursion * (2.0 * uniform01(nominal_rng) - 1.0);
  }
  qb = chain.clamp(qb);
  for (int i = 0; i < spec.n_demos; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    std::vector<NoiseChannel> noise;
    for (int j = 0; j < chain.dof(); ++j) noise.emplace_back(spec.noise_kind, spec.noise, rng);
    JointTrajectory joints;
    std::vector<Eigen::VectorXd> points;
    std::vector<Eigen::VectorXd> truth;
    for (int t = 0; t < spec.length; ++t) {
      const double s = phase(t, spec.length);
      const Eigen::VectorXd nominal = qa + (0.5 - 0.5 * std::cos(kPi * s)) * (qb - qa);
      Eigen::VectorXd q = nominal;
      for (int j = 0; j < chain.dof(); ++j) q[j] += noise[static_cast<std::size_t>(j)](s);
      q = chain.clamp(q);
      points.push_back(fk(chain, q));
      truth.push_back(fk(chain, nominal));
      joints.push_back(std::move(q));
    }
    const std::string id = "demo_" + std::to_string(i);
    data.demos.emplace_back(data.spec, std::move(points), id);
    data.truth.emplace_back(data.spec, std::move(truth), id);
    data.joints.push_back(std::move(joints));
  }
  return data;
}

}  // namespace

std::string to_string(SynthFamily family) {
  switch (family) {
    case SynthFamily::kSine: return "sine";
    case SynthFamily::kPiecewiseLinear: return "piecewise_linear";
    case SynthFamily::kOscillatory: return "oscillatory";
    case SynthFamily::kNonStationary: return "non_stationary";
    case SynthFamily::kChaotic: return "chaotic";
    case SynthFamily::kDiscontinuous: return "discontinuous";
    case SynthFamily::kMultiModePose: return "multimode_pose";
    case SynthFamily::kArmTraced: return "arm_traced";
  }
  return "unknown";
}

SynthFamily parse_synth_family(std::string_view name) {
  for (SynthFamily f : {SynthFamily::kSine, SynthFamily::kPiecewiseLinear, SynthFamily::kOscillatory,
                        SynthFamily::kNonStationary, SynthFamily::kChaotic, SynthFamily::kDiscontinuous,
                        SynthFamily::kMultiModePose, SynthFamily::kArmTraced}) {
    if (to_string(f) == name) return f;
  }
  fail(ErrorCode::kInvalidArgument, "unknown synthetic family '" + std::string(name) + "'");
}

std::string to_string(NoiseKind kind) { return kind == NoiseKind::kIid ? "iid" : "smooth"; }

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "iid") return NoiseKind::kIid;
  if (name == "smooth") return NoiseKind::kSmooth;
  fail(ErrorCode::kInvalidArgument, "unknown noise kind '" + std::string(name) + "'");
}

std::vector<std::pair<double, double>> piecewise_linear_knots() {
  return {{0.0, 0.0}, {0.25, 1.0}, {0.5, -0.5}, {0.75, 0.25}, {1.0, 0.75}};
}

double family_value(SynthFamily family, double s, int length) {
  switch (family) {
    case SynthFamily::kSine:
      return std::sin(2.0 * kPi * s);
    case SynthFamily::kPiecewiseLinear: {
      const auto knots = piecewise_linear_knots();
      for (std::size_t k = 1; k < knots.size(); ++k) {
        if (s <= knots[k].first || k + 1 == knots.size()) {
          const auto [s0, v0] = knots[k - 1];
          const auto [s1, v1] = knots[k];
          return v0 + (s - s0) / (s1 - s0) * (v1 - v0);
        }
      }
      return knots.back().second;
    }
    case SynthFamily::kOscillatory:
      return 0.8 * std::sin(8.0 * kPi * s) + 0.2 * std::sin(2.0 * kPi * s);
    case SynthFamily::kNonStationary:
      return (0.3 + 0.7 * s) * std::sin(2.0 * kPi * (s + 3.0 * s * s));
    case SynthFamily::kChaotic: {
      // logistic map with r = 3.9, one iterate per time step
      const long steps = std::lround(s * static_cast<double>(length - 1));
      double x = 0.3;
      for (long k = 0; k < steps; ++k) x = 3.9 * x * (1.0 - x);
      return 2.0 * x - 1.0;
    }
    case SynthFamily::kDiscontinuous:
      return s < 0.5 ? -0.5 : 0.5 + 0.3 * (s - 0.5);
    default:
      fail(ErrorCode::kInvalidArgument, to_string(family) + " is not a scalar family");
  }
}

Dataset generate(const SynthSpec& spec) {
  if (spec.n_demos < 2) fail(ErrorCode::kInvalidArgument, "synthetic datasets need at least 2 demos");
  if (spec.length < 2) fail(ErrorCode::kInvalidArgument, "synthetic trajectories need at least 2 steps");
  if (!(spec.noise >= 0.0) || !(spec.sample_rate_hz > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "noise must be non-negative and the sample rate positive");
  }
  switch (spec.family) {
    case SynthFamily::kMultiModePose: return multimode_pose(spec);
    case SynthFamily::kArmTraced: return arm_traced(spec);
    default: return scalar_family(spec);
  }
}

}  // namespace midigap
