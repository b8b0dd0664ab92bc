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

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "midigap/digap.hpp"
#include "midigap/partition.hpp"
#include "midigap/random.hpp"

namespace midigap {

struct Mode {
  double prior = 0.0;
  DiGaP model;
};

/// Mixture of DiGaPs. All modes share the manifold and the step count.
struct MiDiGaP {
  std::vector<Mode> modes;
  std::string provenance;

  const ManifoldSpec& spec() const { return modes.front().model.spec(); }
  std::size_t length() const { return modes.front().model.length(); }
  std::vector<double> priors() const;
};

/// Checks mixture invariants: non-empty, shared spec/length, priors >= 0
/// summing to one within 1e-12.
void validate(const MiDiGaP& model);

/// Scales priors to sum to one. Throws kInfeasible when all are zero.
void normalize_priors(MiDiGaP& model);

/// One DiGaP per part, priors |part| / N. Every mode is fitted at the
/// largest mean part length so all modes have the same step count.
MiDiGaP fit_mixture(std::span<const Trajectory> demos, const Partition& partition,
                    const FitOptions& options = {});

std::size_t sample_mode(const MiDiGaP& model, Rng& rng);

/// Samples a mode and returns its mean trajectory.
Trajectory regress(const MiDiGaP& model, Rng& rng);

/// Mode-to-mode transition tables between consecutive skills.
/// matrices[j](k, l): probability of mode l in skill j+1 given mode k in
/// skill j. Rows of unreachable modes may be all zero.
struct Transitions {
  Eigen::VectorXd initial;
  std::vector<Eigen::MatrixXd> matrices;
};

struct SkillChain {
  std::vector<MiDiGaP> skills;
  Transitions transitions;
  std::string provenance;
};

/// Co-membership ratios |DM_k ∩ DM_l| / |DM_k| between consecutive partitions
/// of the same demonstrations; initial distribution from the first partition.
Transitions learn_transitions(std::span<const Partition> partitions);

/// Validates shapes and row sums, then assembles the chain.
SkillChain make_chain(std::vector<MiDiGaP> skills, Transitions transitions);

/// KL divergence between diagonal Gaussians, charted at `mean_a`.
double diagonal_gaussian_kl(const ManifoldSpec& spec, const Eigen::VectorXd& mean_a,
                            const Eigen::VectorXd& var_a, const Eigen::VectorXd& mean_b,
                            const Eigen::VectorXd& var_b);

/// Transition matrix from the final Gaussians of `a` to the initial Gaussians
/// of `b`, pi(k, l) proportional to exp(-KL), rows normalized.
Eigen::MatrixXd kl_chain(const MiDiGaP& a, const MiDiGaP& b);

/// Chains independently learnt skills; initial distribution from the first
/// skill's priors, junctions from kl_chain.
SkillChain sequence_skills(std::vector<MiDiGaP> skills);

struct ModalPath {
  std::vector<int> modes;
  double probability = 0.0;
};

double modal_path_probability(const SkillChain& chain, std::span<const int> path);

/// Ancestral sampling junction by junction.
ModalPath sample_modal_path(const SkillChain& chain, Rng& rng);

/// Every path with non-zero probability, most likely first.
std::vector<ModalPath> enumerate_modal_paths(const SkillChain& chain);

/// Concatenation of the mean trajectories of the chosen modes.
Trajectory regress_chain(const SkillChain& chain, const ModalPath& path);

}  // namespace midigap
