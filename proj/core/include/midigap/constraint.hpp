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

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "midigap/manifold.hpp"

namespace midigap {

/// Convex evidence reshapes the Gaussians (moment matching); modal evidence
/// only reweights the modes.
enum class ConstraintClass : std::uint8_t { kConvex, kModal };

/// Workspace sphere {x : |x - center| <= radius}.
struct ReachSphere {
  Eigen::VectorXd center;
  double radius = 1.0;
};

/// {x : n^T (x - p) >= d_safe}, n the outward obstacle normal.
struct HalfSpace {
  Eigen::VectorXd point;
  Eigen::VectorXd normal;
  double d_safe = 0.0;
};

/// Intersection of half-spaces sharing one safety distance. The obstacle
/// points must be pairwise at least d_safe + d_uni apart.
struct HalfSpaceSet {
  std::vector<HalfSpace> planes;  // per-plane d_safe is ignored
  double d_safe = 0.0;
  std::optional<double> d_uni;    // derived from the model when unset
};

/// {x : |x - base| >= d_min}.
struct SelfCollision {
  Eigen::VectorXd base;
  double d_min = 0.1;
};

/// Voxel occupancy in [0, 1] at cell centres, x fastest:
/// values[ix + nx * (iy + ny * iz)]. Points outside the grid are free.
struct OccupancyGrid {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  double cell_size = 0.05;
  std::vector<double> values;
  double threshold = 0.5;

  /// Trilinear interpolation of the cell-centre values.
  double occupancy(const Eigen::Vector3d& x) const;
};

/// Arbitrary membership test on the full point coordinates.
struct CustomRegion {
  std::function<bool(const Eigen::VectorXd&)> contains;
  ConstraintClass constraint_class = ConstraintClass::kModal;
  std::string name = "custom";
};

/// A feasible region R. Geometric kinds act on the leading Euclidean factor
/// of the manifold (the position block).
class Constraint {
 public:
  using Kind = std::variant<ReachSphere, HalfSpace, HalfSpaceSet, SelfCollision, OccupancyGrid, CustomRegion>;

  explicit Constraint(Kind kind);

  const Kind& kind() const { return kind_; }
  ConstraintClass constraint_class() const;
  std::string name() const;

  bool contains(const ManifoldSpec& spec, const Eigen::VectorXd& coords) const;

  /// Checks ||p_i - p_j|| >= d_safe + d_uni for half-space sets.
  void check_margins(double d_uni) const;

 private:
  Kind kind_;
};

/// Leading Euclidean block of a point; throws when the manifold has none of
/// the requested dimension.
Eigen::VectorXd position_block(const ManifoldSpec& spec, const Eigen::VectorXd& coords, int dim);

}  // namespace midigap
