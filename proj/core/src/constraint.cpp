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

#include "midigap/constraint.hpp"

#include <cmath>

#include "midigap/error.hpp"

namespace midigap {

namespace {

constexpr double kNormalTolerance = 1e-9;

void check_half_space(const HalfSpace& h) {
  if (h.point.size() == 0 || h.point.size() != h.normal.size()) {
    fail(ErrorCode::kInvalidArgument, "half-space point and normal must have the same dimension");
  }
  if (std::abs(h.normal.norm() - 1.0) > kNormalTolerance) {
    fail(ErrorCode::kInvalidArgument, "half-space normal must be unit length");
  }
}

bool in_half_space(const HalfSpace& h, double d_safe, const Eigen::VectorXd& x) {
  return h.normal.dot(x - h.point) >= d_safe;
}

struct Validator {
  void operator()(const ReachSphere& c) const {
    if (c.center.size() == 0) fail(ErrorCode::kInvalidArgument, "reach sphere needs a center");
    if (!(c.radius > 0.0)) fail(ErrorCode::kInvalidArgument, "reach radius must be positive");
  }
  void operator()(const HalfSpace& c) const {
    check_half_space(c);
    if (c.d_safe < 0.0) fail(ErrorCode::kInvalidArgument, "d_safe must be non-negative");
  }
  void operator()(const HalfSpaceSet& c) const {
    if (c.planes.empty()) fail(ErrorCode::kInvalidArgument, "empty half-space set");
    for (const HalfSpace& h : c.planes) {
      check_half_space(h);
      if (h.point.size() != c.planes.front().point.size()) {
        fail(ErrorCode::kInvalidArgument, "half-spaces of different dimension");
      }
    }
    if (c.d_safe < 0.0) fail(ErrorCode::kInvalidArgument, "d_safe must be non-negative");
    if (c.d_uni && !(*c.d_uni > 0.0)) fail(ErrorCode::kInvalidArgument, "d_uni must be positive");
  }
  void operator()(const SelfCollision& c) const {
    if (c.base.size() == 0) fail(ErrorCode::kInvalidArgument, "self-collision needs a base");
    if (!(c.d_min > 0.0)) fail(ErrorCode::kInvalidArgument, "d_min must be positive");
  }
  void operator()(const OccupancyGrid& c) const {
    for (int d : c.dims) {
      if (d <= 0) fail(ErrorCode::kInvalidArgument, "occupancy grid dimensions must be positive");
    }
    if (c.values.size() != static_cast<std::size_t>(c.dims[0]) * c.dims[1] * c.dims[2]) {
      fail(ErrorCode::kInvalidArgument, "occupancy grid size does not match its dimensions");
    }
    if (!(c.cell_size > 0.0)) fail(ErrorCode::kInvalidArgument, "cell size must be positive");
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) {
      fail(ErrorCode::kInvalidArgument, "occupancy threshold must lie in (0, 1)");
    }
    for (double v : c.values) {
      if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::kInvalidArgument, "occupancy values must lie in [0, 1]");
    }
  }
  void operator()(const CustomRegion& c) const {
    if (!c.contains) fail(ErrorCode::kInvalidArgument, "custom region without membership test");
  }
};

}  // namespace

double OccupancyGrid::occupancy(const Eigen::Vector3d& x) const {
  const Eigen::Vector3d u = (x - origin) / cell_size - Eigen::Vector3d::Constant(0.5);
  std::array<int, 3> lo{};
  std::array<double, 3> frac{};
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor(u[a]);
    lo[a] = static_cast<int>(f);
    frac[a] = u[a] - f;
  }
  auto at = [&](int ix, int iy, int iz) {
    if (ix < 0 || iy < 0 || iz < 0 || ix >= dims[0] || iy >= dims[1] || iz >= dims[2]) return 0.0;
    return values[static_cast<std::size_t>(ix + dims[0] * (iy + dims[1] * iz))];
  };
  double occ = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    const int dx = corner & 1;
    const int dy = (corner >> 1) & 1;
    const int dz = (corner >> 2) & 1;
    const double w = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) *
                     (dz ? frac[2] : 1.0 - frac[2]);
    if (w > 0.0) occ += w * at(lo[0] + dx, lo[1] + dy, lo[2] + dz);
  }
  return occ;
}

Constraint::Constraint(Kind kind) : kind_(std::move(kind)) {
  std::visit(Validator{}, kind_);
  if (const auto* set = std::get_if<HalfSpaceSet>(&kind_); set && set->d_uni) check_margins(*set->d_uni);
}

ConstraintClass Constraint::constraint_class() const {
  if (std::holds_alternative<SelfCollision>(kind_) || std::holds_alternative<OccupancyGrid>(kind_)) {
    return ConstraintClass::kModal;
  }
  if (const auto* c = std::get_if<CustomRegion>(&kind_)) return c->constraint_class;
  return ConstraintClass::kConvex;
}

std::string Constraint::name() const {
  struct Namer {
    std::string operator()(const ReachSphere&) const { return "reach"; }
    std::string operator()(const HalfSpace&) const { return "half_space"; }
    std::string operator()(const HalfSpaceSet&) const { return "half_space_set"; }
    std::string operator()(const SelfCollision&) const { return "self_collision"; }
    std::string operator()(const OccupancyGrid&) const { return "occupancy"; }
    std::string operator()(const CustomRegion& c) const { return c.name; }
  };
  return std::visit(Namer{}, kind_);
}

Eigen::VectorXd position_block(const ManifoldSpec& spec, const Eigen::VectorXd& coords, int dim) {
  if (spec.factor_count() == 0 || spec.factors()[0].kind != FactorKind::kEuclidean ||
      spec.factors()[0].dim != dim) {
    fail(ErrorCode::kSpecMismatch, "constraint of dimension " + std::to_string(dim) +
                                       " does not apply to manifold " + spec.to_string());
  }
  return coords.head(dim);
}

bool Constraint::contains(const ManifoldSpec& spec, const Eigen::VectorXd& coords) const {
  struct Member {
    const ManifoldSpec& spec;
    const Eigen::VectorXd& coords;
    bool operator()(const ReachSphere& c) const {
      return (position_block(spec, coords, static_cast<int>(c.center.size())) - c.center).norm() <= c.radius;
    }
    bool operator()(const HalfSpace& c) const {
      return in_half_space(c, c.d_safe, position_block(spec, coords, static_cast<int>(c.point.size())));
    }
    bool operator()(const HalfSpaceSet& c) const {
      const Eigen::VectorXd x = position_block(spec, coords, static_cast<int>(c.planes.front().point.size()));
      for (const HalfSpace& h : c.planes) {
        if (!in_half_space(h, c.d_safe, x)) return false;
      }
      return true;
    }
    bool operator()(const SelfCollision& c) const {
      return (position_block(spec, coords, static_cast<int>(c.base.size())) - c.base).norm() >= c.d_min;
    }
    bool operator()(const OccupancyGrid& c) const {
      return c.occupancy(position_block(spec, coords, 3)) < c.threshold;
    }
    bool operator()(const CustomRegion& c) const { return c.contains(coords); }
  };
  return std::visit(Member{spec, coords}, kind_);
}

void Constraint::check_margins(double d_uni) const {
  const auto* set = std::get_if<HalfSpaceSet>(&kind_);
  if (!set) return;
  const double margin = set->d_safe + d_uni;
  for (std::size_t i = 0; i < set->planes.size(); ++i) {
    for (std::size_t j = i + 1; j < set->planes.size(); ++j) {
      if ((set->planes[i].point - set->planes[j].point).norm() < margin) {
        fail(ErrorCode::kInvalidArgument,
             "obstacles " + std::to_string(i) + " and " + std::to_string(j) +
                 " are closer than d_safe + d_uni; the feasible region may not be connected");
      }
    }
  }
}

}  // namespace midigap
