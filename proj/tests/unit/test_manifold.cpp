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

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "midigap/error.hpp"
#include "midigap/manifold.hpp"

namespace midigap {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd wxyz(const Eigen::Quaterniond& q) { return quaternion_to_wxyz(q); }

Eigen::Quaterniond rot_z(double angle) { return Eigen::Quaterniond(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ())); }

// Closed-form matrix logarithm of a rotation matrix, independent of the
// quaternion code under test.
Eigen::Vector3d matrix_log(const Eigen::Matrix3d& r) {
  const double angle = std::acos(std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0));
  if (angle < 1e-12) return Eigen::Vector3d::Zero();
  const Eigen::Vector3d vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return angle / (2.0 * std::sin(angle)) * vee;
}

Eigen::Quaterniond random_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized();
}

ManifoldPoint random_pose_point(const ManifoldSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::VectorXd x(spec.ambient_dim());
  for (std::size_t f = 0; f < spec.factor_count(); ++f) {
    const Factor factor = spec.factors()[f];
    const int off = spec.ambient_offset(f);
    if (factor.kind == FactorKind::kQuaternion) {
      x.segment<4>(off) = wxyz(random_quaternion(rng));
    } else {
      for (int i = 0; i < factor.dim; ++i) x[off + i] = n(rng);
    }
  }
  return ManifoldPoint(spec, x);
}

TEST(ManifoldSpec, DimensionsAddUpPerFactor) {
  const ManifoldSpec spec = ManifoldSpec::parse("R3xS3xR1");
  EXPECT_EQ(spec.ambient_dim(), 8);
  EXPECT_EQ(spec.tangent_dim(), 7);
  EXPECT_EQ(spec.factor_count(), 3u);
  EXPECT_TRUE(spec.starts_with_pose());
  EXPECT_EQ(spec.to_string(), "R3xS3xR1");
  EXPECT_EQ(ManifoldSpec::pose().power(2).tangent_dim(), 12);
}

TEST(ManifoldSpec, RejectsGarbage) {
  EXPECT_THROW(ManifoldSpec::parse("R3xQ4"), Error);
  EXPECT_THROW(ManifoldSpec::parse(""), Error);
}

TEST(ManifoldPoint, RejectsNonUnitQuaternion) {
  Eigen::VectorXd x(4);
  x << 1.0, 0.1, 0.0, 0.0;
  EXPECT_THROW(ManifoldPoint(ManifoldSpec::quaternion(), x), Error);
  EXPECT_NO_THROW(ManifoldPoint::normalized(ManifoldSpec::quaternion(), x));
}

TEST(ManifoldPoint, StoresCanonicalSign) {
  const Eigen::VectorXd x = -wxyz(rot_z(0.3));
  const ManifoldPoint p(ManifoldSpec::quaternion(), x);
  EXPECT_GE(p.coords()[0], 0.0);
  EXPECT_LT((p.coords() - wxyz(rot_z(0.3))).norm(), 1e-15);
}

TEST(LogMap, SamePointGivesZero) {
  std::mt19937_64 rng(3);
  const ManifoldSpec spec = ManifoldSpec::parse("R3xS3xR1");
  const ManifoldPoint p = random_pose_point(spec, rng);
  EXPECT_LT(log_map(p, p).coords.norm(), 1e-15);
}

TEST(LogMap, EuclideanIsSubtraction) {
  const ManifoldSpec spec = ManifoldSpec::euclidean(3);
  const ManifoldPoint base(spec, Eigen::Vector3d::Zero());
  const ManifoldPoint p(spec, Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(log_map(base, p).coords, Eigen::VectorXd(Eigen::Vector3d(1, 2, 3)));
}

TEST(LogMap, QuarterTurnAboutZMatchesMatrixLog) {
  const ManifoldSpec spec = ManifoldSpec::quaternion();
  const ManifoldPoint base(spec, wxyz(Eigen::Quaterniond::Identity()));
  const ManifoldPoint p(spec, wxyz(rot_z(kPi / 2)));
  const Eigen::VectorXd v = log_map(base, p).coords;
  EXPECT_NEAR(v[0], 0.0, 1e-15);
  EXPECT_NEAR(v[1], 0.0, 1e-15);
  EXPECT_NEAR(v[2], kPi / 2, 1e-14);
  EXPECT_LT((v - matrix_log(rot_z(kPi / 2).toRotationMatrix())).norm(), 1e-12);
}

TEST(LogMap, RandomRotationsMatchMatrixLog) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Quaterniond a = random_quaternion(rng);
    const Eigen::Quaterniond b = random_quaternion(rng);
    const Eigen::Vector3d expected = matrix_log((a.conjugate() * b).toRotationMatrix());
    if (expected.norm() > kPi - 1e-6) continue;
    const ManifoldSpec spec = ManifoldSpec::quaternion();
    const Eigen::VectorXd v = log_map(ManifoldPoint(spec, wxyz(a)), ManifoldPoint(spec, wxyz(b))).coords;
    EXPECT_LT((v - expected).norm(), 1e-9);
  }
}

TEST(LogMap, HalfTurnPairIsAnError) {
  const ManifoldSpec spec = ManifoldSpec::quaternion();
  const ManifoldPoint base(spec, wxyz(Eigen::Quaterniond::Identity()));
  const ManifoldPoint p(spec, wxyz(rot_z(kPi)));
  EXPECT_THROW(log_map(base, p), Error);
}

TEST(LogMap, SpecMismatchIsAnError) {
  const ManifoldPoint a(ManifoldSpec::euclidean(3), Eigen::Vector3d::Zero());
  const ManifoldPoint b(ManifoldSpec::euclidean(2), Eigen::Vector2d::Zero());
  EXPECT_THROW(log_map(a, b), Error);
}

TEST(ExpMap, ZeroTangentReturnsBase) {
  std::mt19937_64 rng(5);
  const ManifoldSpec spec = ManifoldSpec::pose();
  const ManifoldPoint p = random_pose_point(spec, rng);
  const ManifoldPoint q = exp_map(p, {p, Eigen::VectorXd::Zero(6)});
  EXPECT_LT((q.coords() - p.coords()).norm(), 1e-15);
}

TEST(ExpMap, HalfTurnAboutZ) {
  const ManifoldSpec spec = ManifoldSpec::quaternion();
  const ManifoldPoint base(spec, wxyz(Eigen::Quaterniond::Identity()));
  const ManifoldPoint p = exp_map(base, {base, Eigen::Vector3d(0, 0, kPi)});
  const Eigen::Matrix3d expected = Eigen::AngleAxisd(kPi, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  EXPECT_LT((quaternion_from_wxyz(p.coords()).toRotationMatrix() - expected).norm(), 1e-12);
}

TEST(ExpMap, RoundTripOnThousandRandomPairs) {
  std::mt19937_64 rng(7);
  const ManifoldSpec spec = ManifoldSpec::parse("R3xS3xS3xR2");
  for (int i = 0; i < 1000; ++i) {
    const ManifoldPoint base = random_pose_point(spec, rng);
    const ManifoldPoint p = random_pose_point(spec, rng);
    const ManifoldPoint back = exp_map(base, log_map(base, p));
    EXPECT_LT(geodesic_distance(back, p), 1e-9);
  }
}

TEST(GeodesicDistance, DoubleCoverAndQuarterTurn) {
  const ManifoldSpec spec = ManifoldSpec::quaternion();
  const Eigen::Vector4d q = wxyz(rot_z(0.7));
  EXPECT_NEAR(spec.distance(q, -q), 0.0, 1e-15);
  EXPECT_NEAR(spec.distance(wxyz(Eigen::Quaterniond::Identity()), wxyz(rot_z(kPi / 2))), kPi / 2, 1e-14);
}

TEST(GeodesicDistance, SymmetricAndTriangle) {
  std::mt19937_64 rng(13);
  const ManifoldSpec spec = ManifoldSpec::pose();
  for (int i = 0; i < 300; ++i) {
    const ManifoldPoint a = random_pose_point(spec, rng);
    const ManifoldPoint b = random_pose_point(spec, rng);
    const ManifoldPoint c = random_pose_point(spec, rng);
    EXPECT_NEAR(geodesic_distance(a, b), geodesic_distance(b, a), 1e-9);
    EXPECT_LE(geodesic_distance(a, c), geodesic_distance(a, b) + geodesic_distance(b, c) + 1e-9);
  }
}

TEST(QuaternionSign, NegatedInputsChangeNothing) {
  std::mt19937_64 rng(17);
  const ManifoldSpec spec = ManifoldSpec::quaternion();
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector4d a = wxyz(random_quaternion(rng));
    const Eigen::Vector4d b = wxyz(random_quaternion(rng));
    EXPECT_NEAR(spec.distance(a, b), spec.distance(-a, b), 1e-12);
    const ManifoldPoint pa(spec, a);
    const ManifoldPoint pb(spec, b);
    const ManifoldPoint na(spec, -a);
    const ManifoldPoint nb(spec, -b);
    EXPECT_LT((log_map(pa, pb).coords - log_map(na, nb).coords).norm(), 1e-12);
  }
}

TEST(FrechetMean, IdenticalPointsConvergeImmediately) {
  const ManifoldSpec spec = ManifoldSpec::pose();
  Eigen::VectorXd x(7);
  x << 1, 2, 3, wxyz(rot_z(0.4));
  const std::vector<ManifoldPoint> pts(4, ManifoldPoint(spec, x));
  const FrechetResult r = frechet_mean(pts);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_LT(geodesic_distance(r.mean, pts[0]), 1e-15);
}

TEST(FrechetMean, EuclideanIsArithmeticMean) {
  const ManifoldSpec spec = ManifoldSpec::euclidean(2);
  const std::vector<ManifoldPoint> pts{ManifoldPoint(spec, Eigen::Vector2d(0, 1)),
                                       ManifoldPoint(spec, Eigen::Vector2d(2, 5)),
                                       ManifoldPoint(spec, Eigen::Vector2d(4, 0))};
  const FrechetResult r = frechet_mean(pts);
  EXPECT_NEAR(r.mean.coords()[0], 2.0, 1e-12);
  EXPECT_NEAR(r.mean.coords()[1], 2.0, 1e-12);
}

TEST(FrechetMean, TwoQuaternionsGiveSlerpMidpointAndGridMinimum) {
  const ManifoldSpec spec = ManifoldSpec::quaternion();
  const std::vector<ManifoldPoint> pts{ManifoldPoint(spec, wxyz(Eigen::Quaterniond::Identity())),
                                       ManifoldPoint(spec, wxyz(rot_z(kPi / 2)))};
  const FrechetResult r = frechet_mean(pts);
  EXPECT_LT(spec.distance(r.mean.coords(), wxyz(rot_z(kPi / 4))), 1e-9);

  // brute force over a grid of rotation vectors around the candidate region
  auto cost = [&](const Eigen::Vector4d& q) {
    double c = 0.0;
    for (const ManifoldPoint& p : pts) c += std::pow(spec.distance(q, p.coords()), 2);
    return c;
  };
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector4d best_q;
  const int n = 20;
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      for (int k = 0; k <= 2 * n; ++k) {
        const Eigen::Vector3d v(0.02 * i, 0.02 * j, kPi / 2 * k / (2.0 * n));
        const Eigen::Vector4d q = wxyz(Eigen::Quaterniond(Eigen::AngleAxisd(v.norm(), v.normalized())));
        const double c = cost(q);
        if (c < best) {
          best = c;
          best_q = q;
        }
      }
    }
  }
  EXPECT_LT(spec.distance(best_q, r.mean.coords()), 0.05);
  EXPECT_LE(cost(r.mean.coords()), best + 1e-12);
}

TEST(FrechetMean, GradientVanishesAtResult) {
  std::mt19937_64 rng(19);
  const ManifoldSpec spec = ManifoldSpec::pose();
  std::normal_distribution<double> n(0.0, 0.3);
  const ManifoldPoint center = random_pose_point(spec, rng);
  std::vector<ManifoldPoint> pts;
  for (int i = 0; i < 12; ++i) {
    Eigen::VectorXd v(6);
    for (int k = 0; k < 6; ++k) v[k] = n(rng);
    pts.push_back(exp_map(center, {center, v}));
  }
  const FrechetResult r = frechet_mean(pts);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(6);
  for (const ManifoldPoint& p : pts) g += log_map(r.mean, p).coords;
  EXPECT_LT((g / pts.size()).norm(), 1e-10);
}

TEST(FrechetMean, NonConvergenceCarriesLastIterate) {
  std::mt19937_64 rng(23);
  const ManifoldSpec spec = ManifoldSpec::quaternion();
  std::vector<ManifoldPoint> pts;
  for (int i = 0; i < 20; ++i) pts.emplace_back(spec, wxyz(random_quaternion(rng)));
  FrechetOptions options;
  options.max_iter = 1;
  options.tol = 1e-300;
  try {
    frechet_mean(pts, options);
    FAIL() << "expected a convergence error";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonConvergence);
    EXPECT_EQ(e.last_iterate().size(), 4);
  }
}

TEST(GeodesicInterpolate, EndpointsAndMidpoint) {
  const ManifoldSpec spec = ManifoldSpec::quaternion();
  const Eigen::VectorXd a = wxyz(Eigen::Quaterniond::Identity());
  const Eigen::VectorXd b = wxyz(rot_z(kPi / 2));
  EXPECT_LT(spec.distance(geodesic_interpolate(spec, a, b, 0.0), a), 1e-15);
  EXPECT_LT(spec.distance(geodesic_interpolate(spec, a, b, 1.0), b), 1e-12);
  EXPECT_LT(spec.distance(geodesic_interpolate(spec, a, b, 0.5), wxyz(rot_z(kPi / 4))), 1e-12);
}

}  // namespace
}  // namespace midigap
