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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "midigap/error.hpp"
#include "midigap/metrics.hpp"
#include "midigap/updating.hpp"

namespace midigap {
namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Moments of N(mu, sigma^2) truncated to x >= a.
struct Truncated {
  double mean, var, mass;
};
Truncated lower_truncated(double mu, double sigma, double a) {
  const double alpha = (a - mu) / sigma;
  const double mass = 1.0 - Phi(alpha);
  const double lambda = phi(alpha) / mass;
  return {mu + sigma * lambda, sigma * sigma * (1.0 + alpha * lambda - lambda * lambda), mass};
}

Constraint half_line(double threshold) {
  return Constraint(HalfSpace{Eigen::VectorXd::Constant(1, threshold), Eigen::VectorXd::Ones(1), 0.0});
}

GaussianStep step1d(double mean, double var) {
  return {Eigen::VectorXd::Constant(1, mean), Eigen::VectorXd::Constant(1, var)};
}

MiDiGaP mixture1d(const std::vector<double>& means, double sigma, int length = 1) {
  MiDiGaP m;
  for (double mu : means) {
    m.modes.push_back({1.0 / static_cast<double>(means.size()),
                       DiGaP(ManifoldSpec::euclidean(1),
                             std::vector<GaussianStep>(static_cast<std::size_t>(length), step1d(mu, sigma * sigma)))});
  }
  return m;
}

TEST(MomentMatch, HalfSpaceMatchesTruncatedNormal) {
  const ManifoldSpec spec = ManifoldSpec::euclidean(1);
  for (double a : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    Rng rng(42);
    const StepPosterior post = moment_match(spec, step1d(0.0, 1.0), half_line(a), 100000, rng);
    const Truncated oracle = lower_truncated(0.0, 1.0, a);
    ASSERT_TRUE(post.valid);
    // location error in units of the prior scale
    EXPECT_NEAR(post.posterior.mean[0], oracle.mean, 0.02) << a;
    EXPECT_NEAR(std::sqrt(post.posterior.var[0]), std::sqrt(oracle.var), 0.02 * std::sqrt(oracle.var)) << a;
    EXPECT_NEAR(post.p_r, oracle.mass, 0.005) << a;
    EXPECT_LT(post.posterior.var[0], 1.0);
  }
}

TEST(MomentMatch, StandardNormalAtZero) {
  Rng rng(1);
  const StepPosterior post = moment_match(ManifoldSpec::euclidean(1), step1d(0.0, 1.0), half_line(0.0), 100000, rng);
  EXPECT_NEAR(post.posterior.mean[0], 0.7979, 0.016);
  EXPECT_NEAR(post.posterior.var[0], 0.3634, 0.015);
  EXPECT_NEAR(post.p_r, 0.5, 0.005);
}

TEST(MomentMatch, FarTail) {
  Rng rng(2);
  const StepPosterior post = moment_match(ManifoldSpec::euclidean(1), step1d(0.0, 1.0), half_line(3.0), 1000000, rng);
  EXPECT_NEAR(post.p_r, Phi(-3.0), 0.0003);
}

TEST(MomentMatch, WholeSpaceKeepsPrior) {
  Rng rng(3);
  const Constraint everywhere(ReachSphere{Eigen::Vector3d::Zero(), 1e6});
  Eigen::VectorXd mean(7);
  mean << 0.1, 0.2, 0.3, std::cos(0.3), std::sin(0.3), 0, 0;
  const GaussianStep prior{mean, Eigen::VectorXd::Constant(6, 0.01)};
  const StepPosterior post = moment_match(ManifoldSpec::pose(), prior, everywhere, 20000, rng);
  EXPECT_DOUBLE_EQ(post.p_r, 1.0);
  EXPECT_LT(ManifoldSpec::pose().distance(post.posterior.mean, mean), 0.01);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(post.posterior.var[i], 0.01, 0.001);
}

TEST(MomentMatch, NothingKeptIsFlagged) {
  Rng rng(4);
  const StepPosterior post = moment_match(ManifoldSpec::euclidean(1), step1d(0.0, 1.0), half_line(50.0), 1000, rng);
  EXPECT_FALSE(post.valid);
  EXPECT_EQ(post.p_r, 0.0);
}

TEST(MomentMatch, TooFewSamplesIsAnError) {
  Rng rng(5);
  EXPECT_THROW(moment_match(ManifoldSpec::euclidean(1), step1d(0, 1), half_line(0), 99, rng), Error);
}

TEST(CiIntersects, Examples) {
  const ManifoldSpec spec = ManifoldSpec::euclidean(1);
  EXPECT_TRUE(ci_intersects(spec, step1d(1.0, 1.0), half_line(0.0), 1.96));
  EXPECT_FALSE(ci_intersects(spec, step1d(0.0, 1.0), half_line(5.0), 1.96));
  EXPECT_TRUE(ci_intersects(spec, step1d(0.0, 1.0), half_line(1.9), 1.96));

  const ManifoldSpec r3 = ManifoldSpec::euclidean(3);
  const Constraint reach(ReachSphere{Eigen::Vector3d::Zero(), 1.0});
  const GaussianStep outside{Eigen::Vector3d(1.5, 0, 0), Eigen::Vector3d::Constant(0.09)};
  EXPECT_TRUE(ci_intersects(r3, outside, reach, 1.96));
  const GaussianStep further{Eigen::Vector3d(1.7, 0, 0), Eigen::Vector3d::Constant(0.09)};
  EXPECT_FALSE(ci_intersects(r3, further, reach, 1.96));
}

TEST(CiIntersects, OccupancyFallsBackToSampling) {
  OccupancyGrid grid;
  grid.dims = {4, 4, 4};
  grid.origin = Eigen::Vector3d::Zero();
  grid.cell_size = 0.25;
  grid.values.assign(64, 1.0);
  const Constraint occ(grid);
  const ManifoldSpec r3 = ManifoldSpec::euclidean(3);
  EXPECT_FALSE(ci_intersects(r3, {Eigen::Vector3d::Constant(0.5), Eigen::Vector3d::Constant(1e-4)}, occ, 1.96));
  EXPECT_TRUE(ci_intersects(r3, {Eigen::Vector3d::Constant(5.0), Eigen::Vector3d::Constant(1e-4)}, occ, 1.96));
}

TEST(TruncationNorm, ArithmeticMeanMaxAndPower) {
  const std::vector<double> p{0.2, 0.5, 0.9, 0.4};
  EXPECT_DOUBLE_EQ(truncation_norm(p, 1.0), (0.2 + 0.5 + 0.9 + 0.4) / 4.0);
  EXPECT_DOUBLE_EQ(truncation_norm(p, std::numeric_limits<double>::infinity()), 0.9);
  EXPECT_NEAR(truncation_norm(p, 2.0), std::sqrt((0.04 + 0.25 + 0.81 + 0.16) / 4.0), 1e-15);
  EXPECT_THROW(truncation_norm(p, 0.5), Error);
}

TEST(ApplyConvex, WholeSpaceLeavesWeights) {
  MiDiGaP m = mixture1d({-1.0, 1.0}, 0.5, 3);
  m.modes[0].prior = 0.3;
  m.modes[1].prior = 0.7;
  const UpdateResult r = apply_convex(m, half_line(-100.0));
  EXPECT_DOUBLE_EQ(r.model.modes[0].prior, 0.3);
  EXPECT_DOUBLE_EQ(r.model.modes[1].prior, 0.7);
}

TEST(ApplyConvex, ExcludedTubeIsZeroed) {
  const UpdateResult r = apply_convex(mixture1d({2.0, -2.0}, 0.1, 4), half_line(0.0));
  EXPECT_DOUBLE_EQ(r.model.modes[0].prior, 1.0);
  EXPECT_DOUBLE_EQ(r.model.modes[1].prior, 0.0);
  EXPECT_FALSE(r.report[1].ci_passed);
}

TEST(ApplyConvex, TwoModePhiRatio) {
  UpdateOptions options;
  options.n_samples = 100000;
  options.seed = 9;
  options.z = 3.0;
  const UpdateResult r = apply_convex(mixture1d({1.0, -1.0}, 0.5), half_line(0.0), options);
  const double expected = Phi(2.0) / (Phi(2.0) + Phi(-2.0));
  EXPECT_NEAR(r.model.modes[0].prior, expected, 0.01);
  EXPECT_NEAR(r.model.modes[0].prior, 0.977, 0.01);
  const Truncated oracle = lower_truncated(1.0, 0.5, 0.0);
  EXPECT_NEAR(r.model.modes[0].model.step(0).mean[0], oracle.mean, 0.02 * oracle.mean);
}

TEST(ApplyConvex, NarrowConfidenceTubeZeroesTheFarMode) {
  // -1 + 1.96 * 0.5 < 0
  const UpdateResult r = apply_convex(mixture1d({1.0, -1.0}, 0.5), half_line(0.0));
  EXPECT_DOUBLE_EQ(r.model.modes[0].prior, 1.0);
  EXPECT_FALSE(r.report[1].ci_passed);
}

TEST(ApplyConvex, AllModesZeroedIsInfeasible) {
  try {
    apply_convex(mixture1d({-2.0, -3.0}, 0.1), half_line(0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(ApplyConvex, ModalConstraintIsRejected) {
  const Constraint self(SelfCollision{Eigen::VectorXd::Zero(1), 0.1});
  EXPECT_THROW(apply_convex(mixture1d({1.0}, 0.1), self), Error);
}

TEST(ApplyConvex, WeightsMonotoneInNestedRegions) {
  const MiDiGaP m = mixture1d({0.0, 0.5}, 0.5, 5);
  UpdateOptions options;
  options.z = 10.0;
  double previous0 = 0.0, previous1 = 0.0;
  for (double a : {1.0, 0.5, 0.0, -0.5, -1.0}) {
    const UpdateResult r = apply_convex(m, half_line(a), options);
    EXPECT_GE(r.report[0].evidence, previous0);
    EXPECT_GE(r.report[1].evidence, previous1);
    previous0 = r.report[0].evidence;
    previous1 = r.report[1].evidence;
  }
}

TEST(ApplyConvex, PreservesSmoothness) {
  // Smooth 1D prior mean crossing a lower bound at 0.
  constexpr int kT = 40;
  constexpr double kSigma = 0.2;
  std::vector<GaussianStep> steps;
  std::vector<Eigen::VectorXd> prior_mean;
  for (int t = 0; t < kT; ++t) {
    const double x = 0.5 * std::sin(2.0 * std::numbers::pi * t / (kT - 1));
    steps.push_back(step1d(x, kSigma * kSigma));
    prior_mean.push_back(Eigen::VectorXd::Constant(1, x));
  }
  MiDiGaP m;
  m.modes.push_back({1.0, DiGaP(ManifoldSpec::euclidean(1), steps)});
  UpdateOptions options;
  options.n_samples = 100000;
  options.z = 10.0;
  const UpdateResult r = apply_convex(m, half_line(0.0), options);
  const Trajectory prior(ManifoldSpec::euclidean(1), prior_mean);
  const Trajectory posterior = predict(r.model.modes[0].model);
  double worst_se = 0.0;
  for (std::size_t t = 0; t < posterior.length(); ++t) {
    const double kept = r.report[0].p_r[t] * options.n_samples;
    worst_se = std::max(worst_se, std::sqrt(r.model.modes[0].model.step(t).var[0] / kept));
  }
  // a second difference combines three means with weights 1, -2, 1
  EXPECT_LE(max_second_difference(posterior), max_second_difference(prior) + 3.0 * std::sqrt(6.0) * worst_se);
}

TEST(ApplyConvex, HalfSpaceSetMarginIsChecked) {
  HalfSpaceSet set;
  set.planes.push_back({Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), 0.0});
  set.planes.push_back({Eigen::Vector2d(0.05, 0), Eigen::Vector2d(-1, 0), 0.0});
  set.d_safe = 0.1;
  set.d_uni = 0.1;
  MiDiGaP m;
  m.modes.push_back({1.0, DiGaP(ManifoldSpec::euclidean(2), {GaussianStep{Eigen::Vector2d(1, 0), Eigen::Vector2d::Constant(0.01)}})});
  EXPECT_THROW(apply_convex(m, Constraint(set)), Error);
}

TEST(ApplyModal, SatisfiedEverywhereKeepsWeightsAndGaussians) {
  MiDiGaP m = mixture1d({1.0, 2.0}, 0.1, 3);
  m.modes[0].prior = 0.25;
  m.modes[1].prior = 0.75;
  const Constraint self(SelfCollision{Eigen::VectorXd::Constant(1, -10.0), 0.5});
  const UpdateResult r = apply_modal(m, self);
  EXPECT_DOUBLE_EQ(r.model.modes[0].prior, 0.25);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t t = 0; t < 3; ++t) {
      EXPECT_EQ(r.model.modes[k].model.step(t).mean, m.modes[k].model.step(t).mean);
      EXPECT_EQ(r.model.modes[k].model.step(t).var, m.modes[k].model.step(t).var);
    }
  }
}

TEST(ApplyModal, OccupancyBlocksOneMode) {
  // Occupied slab y in [0.6, 1.6] with interpolated edges; mode 2 runs inside it.
  OccupancyGrid grid;
  grid.dims = {10, 10, 2};
  grid.origin = Eigen::Vector3d::Zero();
  grid.cell_size = 0.2;
  grid.values.assign(200, 0.0);
  for (int iz = 0; iz < 2; ++iz) {
    for (int iy = 3; iy < 8; ++iy) {
      for (int ix = 0; ix < 10; ++ix) grid.values[static_cast<std::size_t>(ix + 10 * (iy + 10 * iz))] = 1.0;
    }
  }
  const ManifoldSpec r3 = ManifoldSpec::euclidean(3);
  MiDiGaP m;
  for (double y : {0.0, 1.0}) {
    std::vector<GaussianStep> steps;
    for (int t = 0; t < 5; ++t) steps.push_back({Eigen::Vector3d(0.3 + 0.3 * t, y, 0.2), Eigen::Vector3d::Constant(1e-4)});
    m.modes.push_back({0.5, DiGaP(r3, steps)});
  }
  const UpdateResult r = apply_modal(m, Constraint(grid));
  EXPECT_NEAR(r.model.modes[0].prior, 1.0, 1e-12);
  EXPECT_LT(r.model.modes[1].prior, 1e-12);
}

TEST(ApplyConstraint, DispatchesOnClass) {
  const MiDiGaP m = mixture1d({1.0, -1.0}, 0.1);
  const UpdateResult convex = apply_constraint(m, half_line(0.0));
  EXPECT_GT(convex.model.modes[0].model.step(0).mean[0], 1.0 - 1e-3);
  const Constraint self(SelfCollision{Eigen::VectorXd::Constant(1, -1.0), 0.5});
  const UpdateResult modal = apply_constraint(m, self);
  EXPECT_NEAR(modal.model.modes[0].prior, 1.0, 1e-12);
}

SkillChain fan_out_chain() {
  const auto skill = [](int modes) {
    MiDiGaP out = mixture1d(std::vector<double>(static_cast<std::size_t>(modes), 0.0), 0.1, 2);
    for (int k = 0; k < modes; ++k) out.modes[static_cast<std::size_t>(k)].model =
        DiGaP(ManifoldSpec::euclidean(1), {step1d(k, 0.01), step1d(k, 0.01)});
    return out;
  };
  Transitions tr;
  tr.initial = Eigen::VectorXd::Ones(1);
  tr.matrices.push_back(Eigen::RowVector3d::Constant(1.0 / 3.0));
  tr.matrices.push_back(Eigen::Matrix3d::Identity());
  return make_chain({skill(1), skill(3), skill(3)}, tr);
}

TEST(ApplyToChain, UnitWeightIsIdentity) {
  const SkillChain chain = fan_out_chain();
  const SkillChain out = apply_to_chain(chain, 1, 2, 1.0);
  EXPECT_EQ(out.transitions.matrices[0], chain.transitions.matrices[0]);
  EXPECT_EQ(out.transitions.matrices[1], chain.transitions.matrices[1]);
}

TEST(ApplyToChain, ZeroedModeRemovesItsPaths) {
  const SkillChain out = apply_to_chain(fan_out_chain(), 1, 1, 0.0);
  const std::vector<int> dead{0, 1, 1};
  EXPECT_DOUBLE_EQ(modal_path_probability(out, dead), 0.0);
  for (int j : {0, 2}) {
    const std::vector<int> path{0, j, j};
    EXPECT_DOUBLE_EQ(modal_path_probability(out, path), 0.5);
  }
}

TEST(ApplyToChain, DeadEndPropagatesBackwards) {
  // Zero skill 3 mode 2: skill 2 mode 2 has no continuation left.
  const SkillChain out = apply_to_chain(fan_out_chain(), 2, 1, 0.0);
  EXPECT_DOUBLE_EQ(out.transitions.matrices[0](0, 1), 0.0);
  EXPECT_DOUBLE_EQ(out.transitions.matrices[0](0, 0), 0.5);
}

TEST(ApplyToChain, ZeroingAllModesIsInfeasible) {
  SkillChain chain = fan_out_chain();
  chain = apply_to_chain(chain, 2, 0, 0.0);
  chain = apply_to_chain(chain, 2, 1, 0.0);
  try {
    apply_to_chain(chain, 2, 2, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(UpdateChain, ConvexEvidencePropagates) {
  // Modes sit at x = 0, 1, 2; R = {x <= 1.5} removes mode 3 of skills 2 and 3.
  const Constraint below(HalfSpace{Eigen::VectorXd::Constant(1, 1.5), -Eigen::VectorXd::Ones(1), 0.0});
  const ChainUpdateResult r = update_chain(fan_out_chain(), below);
  ASSERT_EQ(r.reports.size(), 3u);
  const std::vector<int> removed{0, 2, 2};
  EXPECT_DOUBLE_EQ(modal_path_probability(r.chain, removed), 0.0);
  for (int j : {0, 1}) {
    const std::vector<int> path{0, j, j};
    EXPECT_NEAR(modal_path_probability(r.chain, path), 0.5, 1e-12);
  }
  EXPECT_DOUBLE_EQ(r.chain.skills[1].modes[2].prior, 0.0);
}

TEST(UpdateChain, SkillWithoutFeasibleModeIsInfeasible) {
  const Constraint above(HalfSpace{Eigen::VectorXd::Constant(1, 5.0), Eigen::VectorXd::Ones(1), 0.0});
  try {
    update_chain(fan_out_chain(), above);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

}  // namespace
}  // namespace midigap
