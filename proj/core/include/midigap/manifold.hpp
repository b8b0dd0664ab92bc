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

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace midigap {

enum class FactorKind : std::uint8_t { kEuclidean, kQuaternion };

/// One factor of a product manifold: R^dim or the unit quaternions S^3.
struct Factor {
  FactorKind kind = FactorKind::kEuclidean;
  int dim = 0;  // Euclidean dimension, unused for quaternions

  static Factor euclidean(int dim) { return {FactorKind::kEuclidean, dim}; }
  static Factor quaternion() { return {FactorKind::kQuaternion, 0}; }

  int ambient_dim() const { return kind == FactorKind::kQuaternion ? 4 : dim; }
  int tangent_dim() const { return kind == FactorKind::kQuaternion ? 3 : dim; }

  bool operator==(const Factor&) const = default;
};

/// Product manifold R^{n_1} x ... x S^3 x ... described by its factors.
///
/// Points are stored as ambient coordinate vectors where every quaternion
/// block is (w, x, y, z). Tangent vectors concatenate the Euclidean
/// displacements and, per quaternion block, the body-frame rotation vector
/// Log(base^-1 * p). Cheap to copy: the factor layout is shared.
class ManifoldSpec {
 public:
  ManifoldSpec();
  explicit ManifoldSpec(std::vector<Factor> factors);

  static ManifoldSpec euclidean(int dim);
  static ManifoldSpec quaternion();
  /// R^3 x S^3.
  static ManifoldSpec pose();
  /// Parses the compact form produced by to_string(), e.g. "R3xS3xR1".
  static ManifoldSpec parse(std::string_view text);

  /// The product of `copies` copies of this manifold (M^k).
  ManifoldSpec power(int copies) const;
  ManifoldSpec concat(const ManifoldSpec& other) const;

  std::span<const Factor> factors() const;
  std::size_t factor_count() const;
  int ambient_dim() const;
  int tangent_dim() const;
  int ambient_offset(std::size_t factor) const;
  int tangent_offset(std::size_t factor) const;
  bool has_quaternion() const;

  /// True when the first two factors are R^3 and S^3 (further factors, such as
  /// gripper channels, are allowed).
  bool starts_with_pose() const;

  std::string to_string() const;

  bool operator==(const ManifoldSpec& other) const;

  /// Raw coordinate operations; callers guarantee dimensions.
  Eigen::VectorXd log(const Eigen::VectorXd& base, const Eigen::VectorXd& p) const;
  Eigen::VectorXd exp(const Eigen::VectorXd& base, const Eigen::VectorXd& v) const;
  double distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  /// Renormalizes quaternion blocks and flips them to w >= 0.
  void canonicalize(Eigen::VectorXd& coords) const;
  /// Origin for Euclidean blocks, identity for quaternion blocks.
  Eigen::VectorXd identity() const;

 private:
  struct Layout;
  std::shared_ptr<const Layout> layout_;
};

class ManifoldPoint {
 public:
  ManifoldPoint() = default;
  /// Requires unit quaternion blocks (within 1e-9); stores them with w >= 0.
  ManifoldPoint(ManifoldSpec spec, Eigen::VectorXd coords);

  /// Renormalizes quaternion blocks instead of validating them.
  static ManifoldPoint normalized(ManifoldSpec spec, Eigen::VectorXd coords);

  const ManifoldSpec& spec() const { return spec_; }
  const Eigen::VectorXd& coords() const { return coords_; }

 private:
  ManifoldSpec spec_;
  Eigen::VectorXd coords_;
};

struct TangentVector {
  ManifoldPoint base;
  Eigen::VectorXd coords;
};

/// Rotation vector of a unit quaternion (angle * axis), taken on the w >= 0
/// hemisphere so the angle lies in [0, pi].
Eigen::Vector3d quaternion_log(const Eigen::Quaterniond& q);
Eigen::Quaterniond quaternion_exp(const Eigen::Vector3d& rotation_vector);

/// Reads / writes a (w, x, y, z) block.
Eigen::Quaterniond quaternion_from_wxyz(const Eigen::Ref<const Eigen::VectorXd>& block);
Eigen::Vector4d quaternion_to_wxyz(const Eigen::Quaterniond& q);

TangentVector log_map(const ManifoldPoint& base, const ManifoldPoint& p);
ManifoldPoint exp_map(const ManifoldPoint& base, const TangentVector& v);
double geodesic_distance(const ManifoldPoint& a, const ManifoldPoint& b);

struct FrechetOptions {
  double tol = 1e-10;
  int max_iter = 100;
};

struct FrechetResult {
  ManifoldPoint mean;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Karcher fixed-point iteration started at points[0]. Throws
/// ConvergenceError (carrying the last iterate) after max_iter.
FrechetResult frechet_mean(std::span<const ManifoldPoint> points,
                           const FrechetOptions& options = {});

/// Weighted variant over raw coordinates; `init` seeds the iteration.
/// Weights need not be normalized but must have a positive sum.
Eigen::VectorXd weighted_frechet_mean(const ManifoldSpec& spec,
                                      std::span<const Eigen::VectorXd> points,
                                      std::span<const double> weights,
                                      const Eigen::VectorXd& init,
                                      const FrechetOptions& options = {},
                                      int* iterations = nullptr);

/// Point at fraction s of the geodesic from a to b.
Eigen::VectorXd geodesic_interpolate(const ManifoldSpec& spec,
                                     const Eigen::VectorXd& a,
                                     const Eigen::VectorXd& b, double s);

}  // namespace midigap
