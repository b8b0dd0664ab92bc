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

#include "midigap/updating.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "midigap/error.hpp"

namespace midigap {

namespace {

constexpr int kCiProbeSamples = 512;

Eigen::VectorXd tangent_draw(const Eigen::VectorXd& var, Rng& rng) {
  Eigen::VectorXd u(var.size());
  for (Eigen::Index i = 0; i < var.size(); ++i) u[i] = std::sqrt(var[i]) * standard_normal(rng);
  return u;
}

// Standard deviation of the step along a direction of the position block.
double sigma_along(const GaussianStep& step, const Eigen::VectorXd& normal) {
  return std::sqrt((normal.array().square() * step.var.head(normal.size()).array()).sum());
}

bool half_space_ci(const ManifoldSpec& spec, const GaussianStep& step, const HalfSpace& h,
                   double d_safe, double z) {
  const Eigen::VectorXd mu = position_block(spec, step.mean, static_cast<int>(h.point.size()));
  return h.normal.dot(mu - h.point) - d_safe + z * sigma_along(step, h.normal) >= 0.0;
}

bool sampled_ci(const ManifoldSpec& spec, const GaussianStep& step, const Constraint& constraint,
                double z, std::uint64_t seed) {
  if (constraint.contains(spec, step.mean)) return true;
  Rng rng(seed);
  const Eigen::ArrayXd sigma = step.var.array().sqrt();
  for (int i = 0; i < kCiProbeSamples; ++i) {
    Eigen::VectorXd u = tangent_draw(step.var, rng);
    // project draws outside the ellipsoid onto its surface
    const double m = (u.array() / sigma).matrix().norm();
    if (m > z) u *= z / m;
    if (constraint.contains(spec, spec.exp(step.mean, u))) return true;
  }
  return false;
}

double resolve_d_uni(const MiDiGaP& model, const Constraint& constraint, const UpdateOptions& options) {
  const auto* set = std::get_if<HalfSpaceSet>(&constraint.kind());
  if (!set) return 0.0;
  if (set->d_uni) return *set->d_uni;
  if (options.d_uni) return *options.d_uni;
  double max_sigma = 0.0;
  for (const Mode& m : model.modes) {
    for (const GaussianStep& s : m.model.steps()) {
      for (const HalfSpace& h : set->planes) max_sigma = std::max(max_sigma, sigma_along(s, h.normal));
    }
  }
  return 2.0 * max_sigma;
}

}  // namespace

StepPosterior moment_match(const ManifoldSpec& spec, const GaussianStep& prior,
                           const Constraint& constraint, int n_samples, Rng& rng, double var_floor) {
  if (n_samples < 100) fail(ErrorCode::kInvalidArgument, "moment matching needs at least 100 samples");
  std::vector<Eigen::VectorXd> kept;
  for (int i = 0; i < n_samples; ++i) {
    Eigen::VectorXd x = spec.exp(prior.mean, tangent_draw(prior.var, rng));
    if (constraint.contains(spec, x)) kept.push_back(std::move(x));
  }
  StepPosterior out;
  out.kept = static_cast<int>(kept.size());
  out.p_r = static_cast<double>(kept.size()) / static_cast<double>(n_samples);
  if (kept.size() < 2) return out;

  const std::vector<double> w(kept.size(), 1.0);
  out.posterior.mean = weighted_frechet_mean(spec, kept, w, kept.front());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(spec.tangent_dim());
  for (const auto& x : kept) var += spec.log(out.posterior.mean, x).array().square().matrix();
  out.posterior.var = (var / static_cast<double>(kept.size() - 1)).cwiseMax(var_floor);
  out.valid = true;
  return out;
}

bool ci_intersects(const ManifoldSpec& spec, const GaussianStep& step, const Constraint& constraint,
                   double z, std::uint64_t seed) {
  if (!(z > 0.0)) fail(ErrorCode::kInvalidArgument, "confidence scale z must be positive");
  const auto& kind = constraint.kind();
  if (const auto* c = std::get_if<ReachSphere>(&kind)) {
    const auto dim = c->center.size();
    const Eigen::ArrayXd gap = (position_block(spec, step.mean, static_cast<int>(dim)) - c->center).array().abs();
    const Eigen::ArrayXd sigma = step.var.head(dim).array().sqrt();
    return (gap - z * sigma).max(0.0).matrix().norm() <= c->radius;
  }
  if (const auto* c = std::get_if<HalfSpace>(&kind)) return half_space_ci(spec, step, *c, c->d_safe, z);
  if (const auto* c = std::get_if<HalfSpaceSet>(&kind)) {
    return std::all_of(c->planes.begin(), c->planes.end(),
                       [&](const HalfSpace& h) { return half_space_ci(spec, step, h, c->d_safe, z); });
  }
  if (const auto* c = std::get_if<SelfCollision>(&kind)) {
    const auto dim = c->base.size();
    const Eigen::ArrayXd gap = (position_block(spec, step.mean, static_cast<int>(dim)) - c->base).array().abs();
    return (gap + z * step.var.head(dim).array().sqrt()).matrix().norm() >= c->d_min;
  }
  return sampled_ci(spec, step, constraint, z, seed);
}

double truncation_norm(std::span<const double> p_r, double q) {
  if (p_r.empty()) fail(ErrorCode::kInvalidArgument, "truncation norm over zero steps");
  if (!(q >= 1.0)) fail(ErrorCode::kInvalidArgument, "q must be at least 1");
  if (std::isinf(q)) return *std::max_element(p_r.begin(), p_r.end());
  double sum = 0.0;
  for (double p : p_r) sum += q == 1.0 ? p : std::pow(p, q);
  const double mean = sum / static_cast<double>(p_r.size());
  return q == 1.0 ? mean : std::pow(mean, 1.0 / q);
}

UpdateResult apply_convex(const MiDiGaP& model, const Constraint& constraint, const UpdateOptions& options) {
  if (constraint.constraint_class() != ConstraintClass::kConvex) {
    fail(ErrorCode::kInvalidArgument, "apply_convex needs a convex constraint");
  }
  validate(model);
  constraint.check_margins(resolve_d_uni(model, constraint, options));

  UpdateResult result;
  result.model.provenance = model.provenance;
  for (std::size_t m = 0; m < model.modes.size(); ++m) {
    const Mode& mode = model.modes[m];
    const ManifoldSpec& spec = mode.model.spec();
    ModeUpdateReport report;
    report.prior_before = mode.prior;

    for (std::size_t t = 0; t < mode.model.length() && report.ci_passed; ++t) {
      report.ci_passed = ci_intersects(spec, mode.model.step(t), constraint, options.z,
                                       derive_seed(options.seed, t));
    }
    Mode updated{0.0, mode.model};
    if (report.ci_passed && mode.prior > 0.0) {
      std::vector<GaussianStep> steps;
      bool usable = true;
      for (std::size_t t = 0; t < mode.model.length(); ++t) {
        // same stream for every mode so weights differ by geometry, not noise
        Rng rng(derive_seed(options.seed, t));
        StepPosterior post = moment_match(spec, mode.model.step(t), constraint, options.n_samples, rng,
                                          options.var_floor);
        report.p_r.push_back(post.p_r);
        usable = usable && post.valid;
        steps.push_back(post.valid ? std::move(post.posterior) : mode.model.step(t));
      }
      report.evidence = usable ? truncation_norm(report.p_r, options.q) : 0.0;
      if (usable) updated.model = DiGaP(spec, std::move(steps), mode.model.sample_rate_hz());
      updated.prior = mode.prior * report.evidence;
    }
    result.model.modes.push_back(std::move(updated));
    result.report.push_back(std::move(report));
  }
  normalize_priors(result.model);
  for (std::size_t m = 0; m < result.report.size(); ++m) result.report[m].prior_after = result.model.modes[m].prior;
  return result;
}

UpdateResult apply_modal(const MiDiGaP& model, const Constraint& constraint, const UpdateOptions& options) {
  validate(model);
  if (options.n_samples < 1) fail(ErrorCode::kInvalidArgument, "n_samples must be positive");
  UpdateResult result;
  result.model = model;
  for (std::size_t m = 0; m < model.modes.size(); ++m) {
    const Mode& mode = model.modes[m];
    const ManifoldSpec& spec = mode.model.spec();
    ModeUpdateReport report;
    report.prior_before = mode.prior;
    for (std::size_t t = 0; t < mode.model.length(); ++t) {
      Rng rng(derive_seed(options.seed, t));
      const GaussianStep& step = mode.model.step(t);
      int inside = 0;
      for (int i = 0; i < options.n_samples; ++i) {
        if (constraint.contains(spec, spec.exp(step.mean, tangent_draw(step.var, rng)))) ++inside;
      }
      report.p_r.push_back(static_cast<double>(inside) / static_cast<double>(options.n_samples));
    }
    report.evidence = truncation_norm(report.p_r, options.q);
    result.model.modes[m].prior = mode.prior * report.evidence;
    result.report.push_back(std::move(report));
  }
  normalize_priors(result.model);
  for (std::size_t m = 0; m < result.report.size(); ++m) result.report[m].prior_after = result.model.modes[m].prior;
  return result;
}

UpdateResult apply_constraint(const MiDiGaP& model, const Constraint& constraint, const UpdateOptions& options) {
  return constraint.constraint_class() == ConstraintClass::kConvex ? apply_convex(model, constraint, options)
                                                                   : apply_modal(model, constraint, options);
}

SkillChain apply_to_chain(const SkillChain& chain, std::size_t skill, int mode, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) fail(ErrorCode::kInvalidArgument, "evidence weight must lie in [0, 1]");
  if (skill >= chain.skills.size() || mode < 0 ||
      mode >= static_cast<int>(chain.skills[skill].modes.size())) {
    fail(ErrorCode::kInvalidArgument, "skill or mode index out of range");
  }
  SkillChain out = chain;
  Transitions& tr = out.transitions;

  struct Pending {
    std::size_t skill;
    int mode;
    double weight;
  };
  std::vector<Pending> work{{skill, mode, weight}};
  while (!work.empty()) {
    const Pending p = work.back();
    work.pop_back();
    if (p.skill == 0) {
      tr.initial[p.mode] *= p.weight;
      const double total = tr.initial.sum();
      if (!(total > 0.0)) fail(ErrorCode::kInfeasible, "infeasible chain: no modal path survives the evidence");
      tr.initial /= total;
      continue;
    }
    Eigen::MatrixXd& m = tr.matrices[p.skill - 1];
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
      const double before = m.row(k).sum();
      if (before == 0.0) continue;  // predecessor already unreachable
      m(k, p.mode) *= p.weight;
      const double after = m.row(k).sum();
      if (after > 0.0) {
        m.row(k) /= after;
      } else {
        m.row(k).setZero();
        work.push_back({p.skill - 1, static_cast<int>(k), 0.0});
      }
    }
  }
  return out;
}

ChainUpdateResult update_chain(const SkillChain& chain, const Constraint& constraint, const UpdateOptions& options) {
  ChainUpdateResult result;
  result.chain = chain;
  for (std::size_t j = 0; j < chain.skills.size(); ++j) {
    const MiDiGaP& skill = chain.skills[j];
    // evidence is taken per mode, independent of the skill's own priors
    MiDiGaP uniform = skill;
    for (Mode& m : uniform.modes) m.prior = 1.0 / static_cast<double>(uniform.modes.size());
    UpdateOptions per_skill = options;
    per_skill.seed = derive_seed(options.seed, j);

    std::vector<ModeUpdateReport> reports;
    try {
      UpdateResult updated = apply_constraint(uniform, constraint, per_skill);
      reports = std::move(updated.report);
      for (std::size_t m = 0; m < skill.modes.size(); ++m) {
        result.chain.skills[j].modes[m].model = std::move(updated.model.modes[m].model);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInfeasible) throw;
      fail(ErrorCode::kInfeasible, "infeasible chain: every mode of skill " + std::to_string(j + 1) +
                                       " violates the evidence");
    }
    for (std::size_t m = 0; m < reports.size(); ++m) {
      const double w = reports[m].ci_passed ? reports[m].evidence : 0.0;
      result.chain = apply_to_chain(result.chain, j, static_cast<int>(m), std::clamp(w, 0.0, 1.0));
    }
    // keep the skill's own priors consistent with the same evidence
    for (std::size_t m = 0; m < reports.size(); ++m) {
      const double w = reports[m].ci_passed ? reports[m].evidence : 0.0;
      result.chain.skills[j].modes[m].prior = skill.modes[m].prior * w;
      reports[m].prior_before = skill.modes[m].prior;
    }
    normalize_priors(result.chain.skills[j]);
    for (std::size_t m = 0; m < reports.size(); ++m) reports[m].prior_after = result.chain.skills[j].modes[m].prior;
    result.reports.push_back(std::move(reports));
  }
  return result;
}

}  // namespace midigap
