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
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "midigap/error.hpp"
#include "midigap/mixture.hpp"

namespace midigap {
namespace {

DiGaP constant_model(const ManifoldSpec& spec, const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
                     int length) {
  return DiGaP(spec, std::vector<GaussianStep>(static_cast<std::size_t>(length), GaussianStep{mean, var}));
}

// A skill whose modes sit at y = 0, 1, ..., modes - 1 with start x0 and end x1.
MiDiGaP line_skill(int modes, double x0, double x1, int length = 5) {
  MiDiGaP out;
  const ManifoldSpec spec = ManifoldSpec::euclidean(2);
  for (int m = 0; m < modes; ++m) {
    std::vector<GaussianStep> steps;
    for (int t = 0; t < length; ++t) {
      const double s = static_cast<double>(t) / (length - 1);
      steps.push_back({Eigen::Vector2d(x0 + s * (x1 - x0), m), Eigen::Vector2d::Constant(0.01)});
    }
    out.modes.push_back({1.0 / modes, DiGaP(spec, steps)});
  }
  return out;
}

Partition labels_to_partition(std::vector<int> labels) {
  return make_partition(std::move(labels), ClusterMethod::kKMeansBic, 20);
}

// One mode fanning out into three parts that persist into the third skill.
SkillChain fan_out_chain() {
  const std::vector<Partition> partitions{
      labels_to_partition(std::vector<int>(15, 0)),
      labels_to_partition({0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2}),
      labels_to_partition({0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2})};
  return make_chain({line_skill(1, 0, 1), line_skill(3, 1, 2), line_skill(3, 2, 3)},
                    learn_transitions(partitions));
}

// Recursive enumeration written independently of enumerate_modal_paths.
double sum_all_paths(const SkillChain& chain, std::vector<int>& path) {
  if (path.size() == chain.skills.size()) return modal_path_probability(chain, path);
  double total = 0.0;
  for (std::size_t m = 0; m < chain.skills[path.size()].modes.size(); ++m) {
    path.push_back(static_cast<int>(m));
    total += sum_all_paths(chain, path);
    path.pop_back();
  }
  return total;
}

std::vector<Trajectory> noisy_lines(int n, double offset, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<Trajectory> out;
  for (int i = 0; i < n; ++i) {
    std::vector<Eigen::VectorXd> pts;
    for (int t = 0; t < 10; ++t) pts.push_back(Eigen::VectorXd::Constant(1, offset + 0.1 * t + noise(rng)));
    out.emplace_back(ManifoldSpec::euclidean(1), pts);
  }
  return out;
}

TEST(FitMixture, SinglePartIsUnimodal) {
  const auto demos = noisy_lines(4, 0.0, 1);
  const MiDiGaP m = fit_mixture(demos, labels_to_partition({0, 0, 0, 0}));
  ASSERT_EQ(m.modes.size(), 1u);
  EXPECT_DOUBLE_EQ(m.modes[0].prior, 1.0);
}

TEST(FitMixture, PriorsAreFractionsOfDemos) {
  std::vector<Trajectory> demos = noisy_lines(6, 0.0, 2);
  for (const auto& d : noisy_lines(4, 5.0, 3)) demos.push_back(d);
  const MiDiGaP m = fit_mixture(demos, labels_to_partition({0, 0, 0, 0, 0, 0, 1, 1, 1, 1}));
  ASSERT_EQ(m.modes.size(), 2u);
  EXPECT_DOUBLE_EQ(m.modes[0].prior, 0.6);
  EXPECT_DOUBLE_EQ(m.modes[1].prior, 0.4);
  EXPECT_NEAR(m.modes[1].model.step(0).mean[0], 5.0, 0.05);
  EXPECT_NO_THROW(validate(m));
}

TEST(FitMixture, EqualPartsGiveEqualPriors) {
  std::vector<Trajectory> demos;
  std::vector<int> labels;
  for (int k = 0; k < 3; ++k) {
    for (const auto& d : noisy_lines(5, 3.0 * k, 10 + k)) demos.push_back(d);
    labels.insert(labels.end(), 5, k);
  }
  const MiDiGaP m = fit_mixture(demos, labels_to_partition(labels));
  for (const auto& mode : m.modes) EXPECT_DOUBLE_EQ(mode.prior, 1.0 / 3.0);
}

TEST(FitMixture, SingletonPartIsAnError) {
  const auto demos = noisy_lines(4, 0.0, 4);
  try {
    fit_mixture(demos, labels_to_partition({0, 0, 0, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientDemos);
    EXPECT_NE(std::string(e.what()).find("part 2"), std::string::npos);
  }
}

TEST(FitMixture, ModesShareCommonLength) {
  std::vector<Trajectory> demos = noisy_lines(3, 0.0, 5);
  std::vector<Eigen::VectorXd> longer(20, Eigen::VectorXd::Zero(1));
  demos.emplace_back(ManifoldSpec::euclidean(1), longer);
  demos.emplace_back(ManifoldSpec::euclidean(1), longer);
  const MiDiGaP m = fit_mixture(demos, labels_to_partition({0, 0, 0, 1, 1}));
  EXPECT_EQ(m.modes[0].model.length(), 20u);
  EXPECT_EQ(m.modes[1].model.length(), 20u);
}

TEST(SampleMode, DegeneratePriorAlwaysPicksMode) {
  MiDiGaP m = line_skill(3, 0, 1);
  m.modes[0].prior = 1.0;
  m.modes[1].prior = 0.0;
  m.modes[2].prior = 0.0;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_mode(m, rng), 0u);
}

TEST(SampleMode, FrequenciesConverge) {
  for (const double p : {0.5, 0.6}) {
    MiDiGaP m = line_skill(2, 0, 1);
    m.modes[0].prior = p;
    m.modes[1].prior = 1.0 - p;
    Rng rng(7);
    int first = 0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) first += sample_mode(m, rng) == 0 ? 1 : 0;
    EXPECT_NEAR(static_cast<double>(first) / kDraws, p, 0.01);
  }
}

TEST(LearnTransitions, IdenticalPartitionsGiveIdentity) {
  const Partition p = labels_to_partition({0, 1, 2, 0, 1, 2});
  const std::vector<Partition> ps{p, p};
  const Transitions t = learn_transitions(ps);
  EXPECT_TRUE(t.matrices[0].isApprox(Eigen::Matrix3d::Identity()));
}

TEST(LearnTransitions, HandCountedIntersections) {
  const std::vector<Partition> ps{labels_to_partition({0, 0, 0, 1, 1, 1}),
                                  labels_to_partition({0, 0, 1, 1, 1, 1})};
  const Transitions t = learn_transitions(ps);
  EXPECT_DOUBLE_EQ(t.matrices[0](0, 0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.matrices[0](0, 1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.matrices[0](1, 0), 0.0);
  EXPECT_DOUBLE_EQ(t.matrices[0](1, 1), 1.0);
  EXPECT_DOUBLE_EQ(t.initial[0], 0.5);
}

TEST(LearnTransitions, MismatchedDemoSetsAreAnError) {
  const std::vector<Partition> ps{labels_to_partition({0, 0, 1}), labels_to_partition({0, 1, 1, 0})};
  EXPECT_THROW(learn_transitions(ps), Error);
}

TEST(FanOutChain, TransitionsAndPathProbabilities) {
  const SkillChain chain = fan_out_chain();
  for (int j = 0; j < 3; ++j) {
    EXPECT_DOUBLE_EQ(chain.transitions.matrices[0](0, j), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(chain.transitions.matrices[1](j, j), 1.0);
    const std::vector<int> path{0, j, j};
    EXPECT_DOUBLE_EQ(modal_path_probability(chain, path), 1.0 / 3.0);
  }
  const std::vector<int> crossing{0, 0, 1};
  EXPECT_DOUBLE_EQ(modal_path_probability(chain, crossing), 0.0);
}

TEST(ModalPaths, EnumerationSumsToOneOnRandomChains) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> modes(1, 4);
  std::uniform_int_distribution<int> label(0, 3);
  for (int rep = 0; rep < 30; ++rep) {
    const int skills = 1 + rep % 5;
    std::vector<Partition> partitions;
    std::vector<MiDiGaP> models;
    for (int j = 0; j < skills; ++j) {
      const int m = modes(rng);
      std::vector<int> labels(40);
      for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i) < m ? static_cast<int>(i) : label(rng) % m;
      partitions.push_back(labels_to_partition(labels));
      models.push_back(line_skill(partitions.back().parts, j, j + 1));
    }
    const SkillChain chain = make_chain(models, learn_transitions(partitions));
    std::vector<int> path;
    EXPECT_NEAR(sum_all_paths(chain, path), 1.0, 1e-9);
    double listed = 0.0;
    for (const auto& p : enumerate_modal_paths(chain)) {
      EXPECT_GT(p.probability, 0.0);
      listed += p.probability;
    }
    EXPECT_NEAR(listed, 1.0, 1e-9);
  }
}

TEST(ModalPaths, OutOfRangeIndexIsAnError) {
  const SkillChain chain = fan_out_chain();
  const std::vector<int> bad{0, 3, 0};
  const std::vector<int> short_path{0, 1};
  EXPECT_THROW(modal_path_probability(chain, bad), Error);
  EXPECT_THROW(modal_path_probability(chain, short_path), Error);
}

TEST(SampleModalPath, FanOutFrequenciesAndZeroedMode) {
  SkillChain chain = fan_out_chain();
  Rng rng(3);
  std::map<std::vector<int>, int> counts;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) ++counts[sample_modal_path(chain, rng).modes];
  ASSERT_EQ(counts.size(), 3u);
  for (int j = 0; j < 3; ++j) {
    const std::vector<int> path{0, j, j};
    EXPECT_NEAR(counts[path] / static_cast<double>(kDraws), 1.0 / 3.0, 0.01);
  }

  chain.transitions.matrices[0] << 0.5, 0.0, 0.5;
  for (int i = 0; i < 10000; ++i) EXPECT_NE(sample_modal_path(chain, rng).modes[1], 1);
}

TEST(SampleModalPath, DeterministicChain) {
  const std::vector<Partition> ps{labels_to_partition({0, 0, 0}), labels_to_partition({0, 0, 0})};
  const SkillChain chain = make_chain({line_skill(1, 0, 1), line_skill(1, 1, 2)}, learn_transitions(ps));
  Rng rng(5);
  const ModalPath p = sample_modal_path(chain, rng);
  EXPECT_EQ(p.modes, (std::vector<int>{0, 0}));
  EXPECT_DOUBLE_EQ(p.probability, 1.0);
}

// Diagonal Gaussian KL estimated by Monte Carlo.
double mc_kl(const Eigen::VectorXd& ma, const Eigen::VectorXd& va, const Eigen::VectorXd& mb,
             const Eigen::VectorXd& vb) {
  Rng rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  double acc = 0.0;
  constexpr int kDraws = 200000;
  for (int i = 0; i < kDraws; ++i) {
    double la = 0.0, lb = 0.0;
    for (Eigen::Index d = 0; d < ma.size(); ++d) {
      const double x = ma[d] + std::sqrt(va[d]) * n(rng);
      la += -0.5 * std::log(va[d]) - 0.5 * (x - ma[d]) * (x - ma[d]) / va[d];
      lb += -0.5 * std::log(vb[d]) - 0.5 * (x - mb[d]) * (x - mb[d]) / vb[d];
    }
    acc += la - lb;
  }
  return acc / kDraws;
}

TEST(DiagonalKl, MatchesMonteCarlo) {
  const ManifoldSpec spec = ManifoldSpec::euclidean(2);
  const Eigen::Vector2d ma(0.0, 1.0), va(0.5, 0.2), mb(0.3, 0.4), vb(0.8, 0.1);
  EXPECT_NEAR(diagonal_gaussian_kl(spec, ma, va, mb, vb), mc_kl(ma, va, mb, vb), 0.02);
  EXPECT_DOUBLE_EQ(diagonal_gaussian_kl(spec, ma, va, ma, va), 0.0);
}

TEST(KlChain, ExactContinuationHasProbabilityOne) {
  const ManifoldSpec spec = ManifoldSpec::euclidean(1);
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, 0.1);
  MiDiGaP a, b;
  a.modes.push_back({1.0, constant_model(spec, Eigen::VectorXd::Constant(1, 2.0), v, 3)});
  b.modes.push_back({1.0, constant_model(spec, Eigen::VectorXd::Constant(1, 2.0), v, 3)});
  EXPECT_DOUBLE_EQ(kl_chain(a, b)(0, 0), 1.0);
}

TEST(KlChain, FarSuccessorIsSuppressed) {
  const ManifoldSpec spec = ManifoldSpec::euclidean(1);
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, 1.0);
  MiDiGaP a, b;
  a.modes.push_back({1.0, constant_model(spec, Eigen::VectorXd::Zero(1), v, 2)});
  // KL of unit-variance Gaussians is half the squared distance: 50 at distance 10.
  b.modes.push_back({0.5, constant_model(spec, Eigen::VectorXd::Zero(1), v, 2)});
  b.modes.push_back({0.5, constant_model(spec, Eigen::VectorXd::Constant(1, 10.0), v, 2)});
  const Eigen::MatrixXd pi = kl_chain(a, b);
  EXPECT_NEAR(pi(0, 1), std::exp(-50.0) / (1.0 + std::exp(-50.0)), 1e-30);
  EXPECT_NEAR(pi(0, 0), 1.0, 1e-15);
}

TEST(KlChain, IdenticalSuccessorsGiveUniformRow) {
  const ManifoldSpec spec = ManifoldSpec::pose();
  Eigen::VectorXd mean(7);
  mean << 0.1, 0.2, 0.3, 1, 0, 0, 0;
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(6, 0.01);
  MiDiGaP a, b;
  a.modes.push_back({1.0, constant_model(spec, mean, v, 2)});
  Eigen::VectorXd other = mean;
  other[0] += 0.05;
  for (int i = 0; i < 3; ++i) b.modes.push_back({1.0 / 3.0, constant_model(spec, other, v, 2)});
  const Eigen::MatrixXd pi = kl_chain(a, b);
  for (int l = 0; l < 3; ++l) EXPECT_NEAR(pi(0, l), 1.0 / 3.0, 1e-15);
}

TEST(KlChain, SpecMismatchIsAnError) {
  MiDiGaP a = line_skill(1, 0, 1);
  MiDiGaP b;
  b.modes.push_back({1.0, constant_model(ManifoldSpec::euclidean(3), Eigen::Vector3d::Zero(),
                                         Eigen::Vector3d::Ones(), 2)});
  try {
    kl_chain(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpecMismatch);
  }
}

TEST(SequenceSkills, RowsNormalized) {
  const SkillChain chain = sequence_skills({line_skill(2, 0, 1), line_skill(3, 1, 2)});
  EXPECT_NEAR(chain.transitions.initial.sum(), 1.0, 1e-12);
  for (Eigen::Index k = 0; k < 2; ++k) EXPECT_NEAR(chain.transitions.matrices[0].row(k).sum(), 1.0, 1e-12);
  // Mode 0 ends at y = 0 and is closest to successor mode 0.
  EXPECT_GT(chain.transitions.matrices[0](0, 0), 0.99);
}

TEST(RegressChain, ConcatenatesSelectedModes) {
  const SkillChain chain = fan_out_chain();
  ModalPath path;
  path.modes = {0, 1, 1};
  const Trajectory traj = regress_chain(chain, path);
  EXPECT_EQ(traj.length(), 15u);
  EXPECT_DOUBLE_EQ(traj[9][0], 2.0);
  EXPECT_DOUBLE_EQ(traj[9][1], 1.0);
  EXPECT_DOUBLE_EQ(traj[14][0], 3.0);
  EXPECT_DOUBLE_EQ(traj[14][1], 1.0);
  ModalPath single;
  single.modes = {0};
  const SkillChain one = make_chain({line_skill(1, 0, 1)}, learn_transitions(std::vector<Partition>{labels_to_partition({0, 0})}));
  EXPECT_EQ(regress_chain(one, single).length(), 5u);
}

TEST(Validate, RejectsBadPriors) {
  MiDiGaP m = line_skill(2, 0, 1);
  m.modes[0].prior = 0.7;
  EXPECT_THROW(validate(m), Error);
  normalize_priors(m);
  EXPECT_NO_THROW(validate(m));
  m.modes[0].prior = 0.0;
  m.modes[1].prior = 0.0;
  EXPECT_THROW(normalize_priors(m), Error);
}

}  // namespace
}  // namespace midigap
