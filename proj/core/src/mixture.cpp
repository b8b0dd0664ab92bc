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

#include "midigap/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "midigap/error.hpp"

namespace midigap {

namespace {

constexpr double kPriorTolerance = 1e-12;
constexpr double kRowTolerance = 1e-9;

}  // namespace

std::vector<double> MiDiGaP::priors() const {
  std::vector<double> out;
  out.reserve(modes.size());
  for (const Mode& m : modes) out.push_back(m.prior);
  return out;
}

void validate(const MiDiGaP& model) {
  if (model.modes.empty()) fail(ErrorCode::kInvalidArgument, "mixture without modes");
  double total = 0.0;
  for (const Mode& m : model.modes) {
    if (!(m.model.spec() == model.spec()) || m.model.length() != model.length()) {
      fail(ErrorCode::kSpecMismatch, "mixture modes must share manifold and length");
    }
    if (!(m.prior >= 0.0 && m.prior <= 1.0)) fail(ErrorCode::kInvalidArgument, "prior outside [0, 1]");
    total += m.prior;
  }
  if (std::abs(total - 1.0) > kPriorTolerance) {
    fail(ErrorCode::kInvalidArgument, "mixture priors do not sum to one");
  }
}

void normalize_priors(MiDiGaP& model) {
  double total = 0.0;
  for (const Mode& m : model.modes) total += m.prior;
  if (!(total > 0.0)) fail(ErrorCode::kInfeasible, "evidence infeasible: every mode has zero weight");
  for (Mode& m : model.modes) m.prior /= total;
}

MiDiGaP fit_mixture(std::span<const Trajectory> demos, const Partition& partition,
                    const FitOptions& options) {
  if (partition.labels.size() != demos.size()) {
    fail(ErrorCode::kInvalidArgument, "partition does not cover the demonstrations");
  }
  const auto parts = partition.members();
  int common_length = 0;
  std::vector<std::vector<Trajectory>> grouped(parts.size());
  for (std::size_t m = 0; m < parts.size(); ++m) {
    if (parts[m].size() < 2) {
      fail(ErrorCode::kInsufficientDemos, "part " + std::to_string(m + 1) + " has " +
                                              std::to_string(parts[m].size()) +
                                              " demonstration(s); at least 2 are needed");
    }
    for (int i : parts[m]) grouped[m].push_back(demos[static_cast<std::size_t>(i)]);
    common_length = std::max(common_length, mean_length(grouped[m]));
  }
  FitOptions per_mode = options;
  per_mode.length = options.length.value_or(common_length);

  MiDiGaP model;
  for (std::size_t m = 0; m < parts.size(); ++m) {
    model.modes.push_back({static_cast<double>(parts[m].size()) / static_cast<double>(demos.size()),
                           fit(grouped[m], per_mode)});
  }
  model.provenance = to_string(partition.method);
  return model;
}

std::size_t sample_mode(const MiDiGaP& model, Rng& rng) {
  const std::vector<double> priors = model.priors();
  return sample_categorical(priors, rng);
}

Trajectory regress(const MiDiGaP& model, Rng& rng) {
  return predict(model.modes[sample_mode(model, rng)].model);
}

Transitions learn_transitions(std::span<const Partition> partitions) {
  if (partitions.empty()) fail(ErrorCode::kInvalidArgument, "no partitions");
  const std::size_t n = partitions.front().labels.size();
  for (const Partition& p : partitions) {
    if (p.labels.size() != n) {
      fail(ErrorCode::kInvalidArgument, "partitions index different demonstration sets");
    }
  }
  Transitions out;
  const auto sizes = partitions.front().part_sizes();
  out.initial.resize(static_cast<Eigen::Index>(sizes.size()));
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    out.initial[static_cast<Eigen::Index>(k)] = static_cast<double>(sizes[k]) / static_cast<double>(n);
  }
  for (std::size_t j = 0; j + 1 < partitions.size(); ++j) {
    const Partition& from = partitions[j];
    const Partition& to = partitions[j + 1];
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(from.parts, to.parts);
    for (std::size_t i = 0; i < n; ++i) counts(from.labels[i], to.labels[i]) += 1.0;
    for (Eigen::Index k = 0; k < counts.rows(); ++k) counts.row(k) /= counts.row(k).sum();
    out.matrices.push_back(std::move(counts));
  }
  return out;
}

SkillChain make_chain(std::vector<MiDiGaP> skills, Transitions transitions) {
  if (skills.empty()) fail(ErrorCode::kInvalidArgument, "chain without skills");
  for (const MiDiGaP& s : skills) validate(s);
  if (transitions.matrices.size() + 1 != skills.size()) {
    fail(ErrorCode::kInvalidArgument, "need one transition matrix per junction");
  }
  if (transitions.initial.size() != static_cast<Eigen::Index>(skills.front().modes.size())) {
    fail(ErrorCode::kInvalidArgument, "initial distribution does not match the first skill");
  }
  if (std::abs(transitions.initial.sum() - 1.0) > kRowTolerance || (transitions.initial.array() < 0).any()) {
    fail(ErrorCode::kInvalidArgument, "initial distribution must be a probability vector");
  }
  for (std::size_t j = 0; j < transitions.matrices.size(); ++j) {
    const Eigen::MatrixXd& m = transitions.matrices[j];
    if (m.rows() != static_cast<Eigen::Index>(skills[j].modes.size()) ||
        m.cols() != static_cast<Eigen::Index>(skills[j + 1].modes.size())) {
      fail(ErrorCode::kInvalidArgument, "transition matrix shape does not match the skills");
    }
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
      const double row = m.row(k).sum();
      if ((m.row(k).array() < 0).any() || (row != 0.0 && std::abs(row - 1.0) > kRowTolerance)) {
        fail(ErrorCode::kInvalidArgument, "transition rows must be distributions");
      }
    }
  }
  SkillChain chain;
  chain.skills = std::move(skills);
  chain.transitions = std::move(transitions);
  return chain;
}

double diagonal_gaussian_kl(const ManifoldSpec& spec, const Eigen::VectorXd& mean_a,
                            const Eigen::VectorXd& var_a, const Eigen::VectorXd& mean_b,
                            const Eigen::VectorXd& var_b) {
  const Eigen::ArrayXd delta = spec.log(mean_a, mean_b).array();
  const Eigen::ArrayXd va = var_a.array();
  const Eigen::ArrayXd vb = var_b.array();
  return 0.5 * (va / vb + delta.square() / vb - 1.0 + (vb / va).log()).sum();
}

Eigen::MatrixXd kl_chain(const MiDiGaP& a, const MiDiGaP& b) {
  if (!(a.spec() == b.spec())) fail(ErrorCode::kSpecMismatch, "chained skills live on different manifolds");
  const auto rows = static_cast<Eigen::Index>(a.modes.size());
  const auto cols = static_cast<Eigen::Index>(b.modes.size());
  Eigen::MatrixXd kl(rows, cols);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const GaussianStep& end = a.modes[static_cast<std::size_t>(k)].model.steps().back();
    for (Eigen::Index l = 0; l < cols; ++l) {
      const GaussianStep& start = b.modes[static_cast<std::size_t>(l)].model.steps().front();
      kl(k, l) = diagonal_gaussian_kl(a.spec(), end.mean, end.var, start.mean, start.var);
    }
  }
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const double shift = kl.row(k).minCoeff();
    out.row(k) = (-(kl.row(k).array() - shift)).exp().matrix();
    out.row(k) /= out.row(k).sum();
  }
  return out;
}

SkillChain sequence_skills(std::vector<MiDiGaP> skills) {
  if (skills.empty()) fail(ErrorCode::kInvalidArgument, "chain without skills");
  Transitions t;
  const std::vector<double> priors = skills.front().priors();
  t.initial = Eigen::Map<const Eigen::VectorXd>(priors.data(), static_cast<Eigen::Index>(priors.size()));
  for (std::size_t j = 0; j + 1 < skills.size(); ++j) t.matrices.push_back(kl_chain(skills[j], skills[j + 1]));
  SkillChain chain = make_chain(std::move(skills), std::move(t));
  chain.provenance = "kl";
  return chain;
}

double modal_path_probability(const SkillChain& chain, std::span<const int> path) {
  if (path.size() != chain.skills.size()) {
    fail(ErrorCode::kInvalidArgument, "modal path length differs from the number of skills");
  }
  for (std::size_t j = 0; j < path.size(); ++j) {
    if (path[j] < 0 || path[j] >= static_cast<int>(chain.skills[j].modes.size())) {
      fail(ErrorCode::kInvalidArgument, "mode index out of range in skill " + std::to_string(j + 1));
    }
  }
  double p = chain.transitions.initial[path[0]];
  for (std::size_t j = 0; j + 1 < path.size(); ++j) p *= chain.transitions.matrices[j](path[j], path[j + 1]);
  return p;
}

ModalPath sample_modal_path(const SkillChain& chain, Rng& rng) {
  ModalPath path;
  const Eigen::VectorXd& initial = chain.transitions.initial;
  path.modes.push_back(static_cast<int>(
      sample_categorical(std::span<const double>(initial.data(), static_cast<std::size_t>(initial.size())), rng)));
  for (const Eigen::MatrixXd& m : chain.transitions.matrices) {
    const Eigen::VectorXd row = m.row(path.modes.back()).transpose();
    if (!(row.sum() > 0.0)) fail(ErrorCode::kInfeasible, "no feasible continuation");
    path.modes.push_back(static_cast<int>(
        sample_categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), rng)));
  }
  path.probability = modal_path_probability(chain, path.modes);
  return path;
}

std::vector<ModalPath> enumerate_modal_paths(const SkillChain& chain) {
  std::vector<ModalPath> out;
  std::vector<int> current;
  std::function<void(double)> descend = [&](double p) {
    const std::size_t j = current.size();
    if (j == chain.skills.size()) {
      out.push_back({current, p});
      return;
    }
    for (int m = 0; m < static_cast<int>(chain.skills[j].modes.size()); ++m) {
      const double next = j == 0 ? chain.transitions.initial[m]
                                 : p * chain.transitions.matrices[j - 1](current.back(), m);
      if (next <= 0.0) continue;
      current.push_back(m);
      descend(next);
      current.pop_back();
    }
  };
  descend(1.0);
  std::stable_sort(out.begin(), out.end(),
                   [](const ModalPath& a, const ModalPath& b) { return a.probability > b.probability; });
  return out;
}

Trajectory regress_chain(const SkillChain& chain, const ModalPath& path) {
  if (path.modes.size() != chain.skills.size()) {
    fail(ErrorCode::kInvalidArgument, "modal path length differs from the number of skills");
  }
  std::vector<Eigen::VectorXd> points;
  for (std::size_t j = 0; j < chain.skills.size(); ++j) {
    const auto& modes = chain.skills[j].modes;
    const int m = path.modes[j];
    if (m < 0 || m >= static_cast<int>(modes.size())) fail(ErrorCode::kInvalidArgument, "mode index out of range");
    for (const GaussianStep& s : modes[static_cast<std::size_t>(m)].model.steps()) points.push_back(s.mean);
  }
  return Trajectory(chain.skills.front().spec(), std::move(points));
}

}  // namespace midigap
