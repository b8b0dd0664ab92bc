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
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "midigap/constraint.hpp"
#include "midigap/digap.hpp"
#include "midigap/mixture.hpp"
#include "midigap/random.hpp"

namespace midigap {

struct UpdateOptions {
  double z = 1.96;
  /// Exponent of the normalized L_q norm over steps; infinity selects the max.
  double q = 1.0;
  int n_samples = 1000;
  std::uint64_t seed = 0;
  /// Unimodality margin for half-space sets; 2 * max step sigma along the
  /// obstacle normals when unset.
  std::optional<double> d_uni;
  double var_floor = 1e-8;
};

/// Monte-Carlo truncation of one Gaussian step.
struct StepPosterior {
  GaussianStep posterior;
  double p_r = 0.0;  // fraction of samples inside R
  int kept = 0;
  bool valid = false;  // false when fewer than two samples survived
};

/// Samples the Riemannian Gaussian (tangent draw, exponential map), keeps the
/// samples in R, and moment matches: Frechet mean of the kept samples and the
/// diagonal tangent sample variance at that mean.
StepPosterior moment_match(const ManifoldSpec& spec, const GaussianStep& prior,
                           const Constraint& constraint, int n_samples, Rng& rng,
                           double var_floor = 1e-8);

/// Whether the z-scaled confidence ellipsoid of the step meets R. Closed form
/// for spheres and half-spaces; occupancy and custom regions are probed by
/// deterministic sampling.
bool ci_intersects(const ManifoldSpec& spec, const GaussianStep& step, const Constraint& constraint,
                   double z, std::uint64_t seed = 0);

/// (1/T sum_t p_t^q)^(1/q); q = infinity gives max_t p_t.
double truncation_norm(std::span<const double> p_r, double q);

struct ModeUpdateReport {
  double prior_before = 0.0;
  double prior_after = 0.0;
  bool ci_passed = true;
  double evidence = 0.0;  // L_q norm of p_R over steps
  std::vector<double> p_r;
};

struct UpdateResult {
  MiDiGaP model;
  std::vector<ModeUpdateReport> report;
};

/// Convex evidence: zero modes whose confidence tube misses R, moment match
/// the survivors, and reweight by the L_q truncation strength.
UpdateResult apply_convex(const MiDiGaP& model, const Constraint& constraint,
                          const UpdateOptions& options = {});

/// Modal evidence: reweight only; Gaussians are returned untouched.
UpdateResult apply_modal(const MiDiGaP& model, const Constraint& constraint,
                         const UpdateOptions& options = {});

/// Dispatches on the constraint class.
UpdateResult apply_constraint(const MiDiGaP& model, const Constraint& constraint,
                              const UpdateOptions& options = {});

/// Scales every transition into mode `mode` of skill `skill` by `weight`
/// (the initial distribution for skill 0) and renormalizes. Predecessor modes
/// left without any continuation are removed recursively, so earlier skills
/// stop selecting dead ends. Throws kInfeasible if no modal path survives.
SkillChain apply_to_chain(const SkillChain& chain, std::size_t skill, int mode, double weight);

struct ChainUpdateResult {
  SkillChain chain;
  std::vector<std::vector<ModeUpdateReport>> reports;  // per skill
};

/// Applies the evidence to each skill and propagates the per-mode evidence
/// through the transitions.
ChainUpdateResult update_chain(const SkillChain& chain, const Constraint& constraint,
                               const UpdateOptions& options = {});

}  // namespace midigap
