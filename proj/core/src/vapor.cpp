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

#include "midigap/vapor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <utility>

#include <Eigen/Cholesky>

#include "midigap/error.hpp"

namespace midigap {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

struct Problem {
  const KinematicChain* chain = nullptr;
  std::vector<Eigen::VectorXd> mean;
  std::vector<Vec6> sigma;
  std::vector<Vec6> weight;  // lambda_e * sigma_max / var
  double lambda_q = 0.0;
  double z = 1.96;
  int steps = 0;
  int dof = 0;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct Multipliers {
  std::vector<Vec6> above;  // for  e / (z sigma) - 1 <= 0
  std::vector<Vec6> below;  // for -e / (z sigma) - 1 <= 0
  double rho = 10.0;
};

struct Evaluation {
  std::vector<Vec6> errors;
  double tracking = 0.0;
  double smoothness = 0.0;
  double penalty = 0.0;
  double merit() const { return tracking + smoothness + penalty; }
  double objective() const { return tracking + smoothness; }
};

double phr(double lambda, double rho, double g) {
  const double s = std::max(0.0, lambda + rho * g);
  return (s * s - lambda * lambda) / (2.0 * rho);
}

Evaluation evaluate(const Problem& p, const JointTrajectory& q, const Multipliers& mult) {
  Evaluation out;
  out.errors.resize(static_cast<std::size_t>(p.steps));
  for (int t = 0; t < p.steps; ++t) {
    const auto k = static_cast<std::size_t>(t);
    const Vec6 e = pose_error(p.mean[k], fk(*p.chain, q[k]));
    out.errors[k] = e;
    out.tracking += (p.weight[k].array() * e.array().square()).sum();
    for (int i = 0; i < 6; ++i) {
      const double g = e[i] / (p.z * p.sigma[k][i]);
      out.penalty += phr(mult.above[k][i], mult.rho, g - 1.0) + phr(mult.below[k][i], mult.rho, -g - 1.0);
    }
    if (t + 1 < p.steps) out.smoothness += p.lambda_q * (q[k + 1] - q[k]).squaredNorm();
  }
  return out;
}

double max_violation(const Problem& p, const std::vector<Vec6>& errors) {
  double v = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < p.steps; ++t) {
    const auto k = static_cast<std::size_t>(t);
    v = std::max(v, (errors[k].cwiseAbs() - p.z * p.sigma[k]).maxCoeff());
  }
  return std::max(v, 0.0);
}

// Solves the symmetric block-tridiagonal system with dense diagonal blocks
// `diag` and diagonal coupling blocks `coupling[t]` between steps t and t+1.
std::vector<Eigen::VectorXd> solve_block_tridiagonal(std::vector<Eigen::MatrixXd> diag,
                                                     const std::vector<Eigen::VectorXd>& coupling,
                                                     std::vector<Eigen::VectorXd> rhs) {
  const std::size_t steps = diag.size();
  std::vector<Eigen::LDLT<Eigen::MatrixXd>> factors(steps);
  factors[0].compute(diag[0]);
  for (std::size_t t = 1; t < steps; ++t) {
    const Eigen::VectorXd& c = coupling[t - 1];
    const Eigen::MatrixXd m = factors[t - 1].solve(Eigen::MatrixXd(c.asDiagonal()));
    diag[t] -= c.asDiagonal() * m;
    rhs[t] -= c.asDiagonal() * factors[t - 1].solve(rhs[t - 1]);
    factors[t].compute(diag[t]);
  }
  std::vector<Eigen::VectorXd> x(steps);
  x[steps - 1] = factors[steps - 1].solve(rhs[steps - 1]);
  for (std::size_t t = steps - 1; t-- > 0;) {
    x[t] = factors[t].solve(rhs[t] - coupling[t].cwiseProduct(x[t + 1]));
  }
  return x;
}

// Projected Levenberg-Marquardt on the augmented Lagrangian merit. Returns
// the final evaluation.
Evaluation minimize_merit(const Problem& p, JointTrajectory& q, const Multipliers& mult, int max_inner) {
  const int n = p.dof;
  const auto steps = static_cast<std::size_t>(p.steps);
  Evaluation current = evaluate(p, q, mult);
  double damping = 1e-4;
  for (int it = 0; it < max_inner; ++it) {
    std::vector<Eigen::MatrixXd> a(steps, Eigen::MatrixXd::Zero(n, n));
    std::vector<Eigen::VectorXd> b(steps, Eigen::VectorXd::Zero(n));
    for (std::size_t t = 0; t < steps; ++t) {
      Vec6 e;
      const Jacobian je = pose_error_jacobian(*p.chain, p.mean[t], q[t], &e);
      a[t] += je.transpose() * p.weight[t].asDiagonal() * je;
      b[t] += je.transpose() * p.weight[t].cwiseProduct(e);
      for (int i = 0; i < 6; ++i) {
        const double scale = 1.0 / (p.z * p.sigma[t][i]);
        const double g = e[i] * scale;
        const auto row = je.row(i);
        for (const auto& [lambda, sign] : {std::pair{mult.above[t][i], 1.0}, std::pair{mult.below[t][i], -1.0}}) {
          const double s = lambda + mult.rho * (sign * g - 1.0);
          if (s <= 0.0) continue;
          a[t] += 0.5 * mult.rho * scale * scale * row.transpose() * row;
          b[t] += 0.5 * s * sign * scale * row.transpose();
        }
      }
      if (t + 1 < steps) {
        const Eigen::VectorXd d = q[t] - q[t + 1];
        a[t].diagonal().array() += p.lambda_q;
        a[t + 1].diagonal().array() += p.lambda_q;
        b[t] += p.lambda_q * d;
        b[t + 1] -= p.lambda_q * d;
      }
    }
    // variables pinned at a bound with the gradient pushing outward
    std::vector<std::vector<bool>> fixed(steps, std::vector<bool>(static_cast<std::size_t>(n), false));
    for (std::size_t t = 0; t < steps; ++t) {
      for (int j = 0; j < n; ++j) {
        fixed[t][static_cast<std::size_t>(j)] =
            (q[t][j] <= p.lower[j] && b[t][j] > 0.0) || (q[t][j] >= p.upper[j] && b[t][j] < 0.0);
      }
    }
    bool accepted = false;
    while (damping < 1e10) {
      std::vector<Eigen::MatrixXd> d = a;
      std::vector<Eigen::VectorXd> rhs(steps);
      std::vector<Eigen::VectorXd> coupling(steps > 1 ? steps - 1 : 0, Eigen::VectorXd::Constant(n, -p.lambda_q));
      for (std::size_t t = 0; t < steps; ++t) {
        d[t].diagonal() += damping * (a[t].diagonal().array() + 1e-6).matrix();
        rhs[t] = -b[t];
        for (int j = 0; j < n; ++j) {
          if (!fixed[t][static_cast<std::size_t>(j)]) continue;
          d[t].row(j).setZero();
          d[t].col(j).setZero();
          d[t](j, j) = 1.0;
          rhs[t][j] = 0.0;
          if (t > 0) coupling[t - 1][j] = 0.0;
          if (t + 1 < steps) coupling[t][j] = 0.0;
        }
      }
      const std::vector<Eigen::VectorXd> dx = solve_block_tridiagonal(std::move(d), coupling, std::move(rhs));
      JointTrajectory candidate(steps);
      for (std::size_t t = 0; t < steps; ++t) {
        candidate[t] = (q[t] + dx[t]).cwiseMax(p.lower).cwiseMin(p.upper);
      }
      Evaluation next = evaluate(p, candidate, mult);
      if (next.merit() < current.merit()) {
        const double gain = current.merit() - next.merit();
        q = std::move(candidate);
        const bool tiny = gain <= 1e-15 * (1.0 + std::abs(current.merit()));
        current = std::move(next);
        damping = std::max(damping / 3.0, 1e-12);
        accepted = !tiny;
        break;
      }
      damping *= 4.0;
    }
    if (!accepted) break;
  }
  return current;
}

Problem make_problem(const KinematicChain& chain, const DiGaP& target, const PathOptions& options) {
  if (!target.spec().starts_with_pose()) {
    fail(ErrorCode::kSpecMismatch, "path optimization needs a target whose manifold starts with R3xS3");
  }
  if (target.length() == 0) fail(ErrorCode::kInvalidArgument, "empty target tube");
  if (!(options.z > 0.0) || options.lambda_q < 0.0 || options.lambda_e <= 0.0) {
    fail(ErrorCode::kInvalidArgument, "path optimization needs z > 0, lambda_q >= 0, lambda_e > 0");
  }
  Problem p;
  p.chain = &chain;
  p.lambda_q = options.lambda_q;
  p.z = options.z;
  p.steps = static_cast<int>(target.length());
  p.dof = chain.dof();
  p.lower = chain.lower();
  p.upper = chain.upper();
  double sigma_max = 0.0;
  for (const GaussianStep& s : target.steps()) {
    if ((s.var.head<6>().array() <= 0.0).any()) fail(ErrorCode::kInvalidArgument, "target variances must be positive");
    sigma_max = std::max(sigma_max, s.var.head<6>().maxCoeff());
  }
  for (const GaussianStep& s : target.steps()) {
    p.mean.push_back(s.mean.head<7>());
    p.sigma.push_back(s.var.head<6>().cwiseSqrt());
    p.weight.push_back(options.lambda_e * sigma_max * s.var.head<6>().cwiseInverse());
  }
  return p;
}

}  // namespace

DiGaP pose_block(const DiGaP& model) {
  if (!model.spec().starts_with_pose()) {
    fail(ErrorCode::kSpecMismatch, "model manifold " + model.spec().to_string() + " does not start with R3xS3");
  }
  std::vector<GaussianStep> steps;
  steps.reserve(model.length());
  for (const GaussianStep& s : model.steps()) steps.push_back({s.mean.head<7>(), s.var.head<6>()});
  return DiGaP(ManifoldSpec::pose(), std::move(steps), model.sample_rate_hz());
}

Trajectory fk_path(const KinematicChain& chain, const JointTrajectory& joints) {
  std::vector<Eigen::VectorXd> poses;
  poses.reserve(joints.size());
  for (const Eigen::VectorXd& q : joints) poses.push_back(fk(chain, q));
  return Trajectory(ManifoldSpec::pose(), std::move(poses));
}

namespace {

PathResult solve_from(const KinematicChain& chain, const Problem& p, JointTrajectory q, const PathOptions& options) {
  const auto steps = static_cast<std::size_t>(p.steps);

  Multipliers mult;
  mult.above.assign(steps, Vec6::Zero());
  mult.below.assign(steps, Vec6::Zero());
  mult.rho = options.initial_penalty;

  PathResult result;
  JointTrajectory best;
  double best_objective = std::numeric_limits<double>::infinity();
  double previous_violation = std::numeric_limits<double>::infinity();
  double previous_objective = std::numeric_limits<double>::infinity();
  Evaluation last;
  for (int outer = 1; outer <= options.max_outer; ++outer) {
    result.outer_iterations = outer;
    last = minimize_merit(p, q, mult, options.max_inner);
    const double violation = max_violation(p, last.errors);
    const double objective = last.objective();
    if (violation <= options.constraint_tol && objective < best_objective) {
      best = q;
      best_objective = objective;
      result.objective_trace.push_back(objective);
    }
    bool multipliers_moved = false;
    for (std::size_t t = 0; t < steps; ++t) {
      for (int i = 0; i < 6; ++i) {
        const double g = last.errors[t][i] / (p.z * p.sigma[t][i]);
        const double up = std::max(0.0, mult.above[t][i] + mult.rho * (g - 1.0));
        const double down = std::max(0.0, mult.below[t][i] + mult.rho * (-g - 1.0));
        multipliers_moved = multipliers_moved || std::abs(up - mult.above[t][i]) > 1e-12 ||
                            std::abs(down - mult.below[t][i]) > 1e-12;
        mult.above[t][i] = up;
        mult.below[t][i] = down;
      }
    }
    if (violation <= options.constraint_tol &&
        (!multipliers_moved || std::abs(previous_objective - objective) <= 1e-12 * (1.0 + objective))) {
      break;
    }
    if (violation > 0.25 * previous_violation) mult.rho *= options.penalty_growth;
    previous_violation = violation;
    previous_objective = objective;
  }

  result.feasible = !best.empty();
  result.joints = result.feasible ? std::move(best) : q;
  const Evaluation final_eval = evaluate(p, result.joints, mult);
  result.tracking = final_eval.tracking;
  result.smoothness = final_eval.smoothness;
  result.objective = final_eval.objective();
  result.max_violation = max_violation(p, final_eval.errors);
  result.ee_path = fk_path(chain, result.joints);
  return result;
}

bool better(const PathResult& a, const PathResult& b) {
  if (a.feasible != b.feasible) return a.feasible;
  return a.feasible ? a.objective < b.objective : a.max_violation < b.max_violation;
}

}  // namespace

PathResult optimize_path(const KinematicChain& chain, const DiGaP& target, const Eigen::VectorXd& q0,
                         const PathOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (q0.size() != chain.dof() || !chain.within_limits(q0)) {
    fail(ErrorCode::kInvalidArgument, "initial configuration must match the chain and lie within its limits");
  }
  const Problem p = make_problem(chain, target, options);
  const auto steps = static_cast<std::size_t>(p.steps);

  Eigen::VectorXd q_final;
  try {
    q_final = ik_solve(chain, target.step(steps - 1), q0, options.ik).q;
  } catch (const ConvergenceError& e) {
    q_final = e.last_iterate();
  }
  JointTrajectory interpolated(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const double s = steps > 1 ? static_cast<double>(t) / static_cast<double>(steps - 1) : 1.0;
    interpolated[t] = q0 + s * (q_final - q0);
  }
  PathResult result = solve_from(chain, p, std::move(interpolated), options);
  if (options.greedy_warm_start) {
    PathResult alternative = solve_from(chain, p, greedy_ik_path(chain, target, q0, options.ik), options);
    if (better(alternative, result)) result = std::move(alternative);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

JointTrajectory greedy_ik_path(const KinematicChain& chain, const DiGaP& target, const Eigen::VectorXd& q0,
                               const IkOptions& options) {
  const DiGaP pose = pose_block(target);
  JointTrajectory out;
  out.reserve(pose.length());
  Eigen::VectorXd q = q0;
  for (const GaussianStep& step : pose.steps()) {
    try {
      q = ik_solve(chain, step, q, options).q;
    } catch (const ConvergenceError& e) {
      q = e.last_iterate();
    }
    out.push_back(q);
  }
  return out;
}

namespace {

std::vector<double> squared_scores(const DiGaP& target, const Trajectory& path) {
  if (target.length() != path.length()) {
    fail(ErrorCode::kInvalidArgument, "trajectory has " + std::to_string(path.length()) + " steps, target has " +
                                          std::to_string(target.length()));
  }
  const bool pose_only = path.spec() == ManifoldSpec::pose() && !(target.spec() == ManifoldSpec::pose());
  const DiGaP model = pose_only ? pose_block(target) : target;
  if (!(model.spec() == path.spec())) {
    fail(ErrorCode::kSpecMismatch, "trajectory manifold " + path.spec().to_string() + " does not match target " +
                                       model.spec().to_string());
  }
  std::vector<double> out;
  out.reserve(path.length());
  for (std::size_t t = 0; t < path.length(); ++t) {
    const GaussianStep& s = model.step(t);
    const Eigen::VectorXd v = model.spec().log(s.mean, path[t]);
    out.push_back((v.array().square() / s.var.array()).sum());
  }
  return out;
}

}  // namespace

double trajectory_nll(const DiGaP& target, const Trajectory& path) {
  double c = 0.0;
  for (double s : squared_scores(target, path)) c += 0.5 * s;
  return c;
}

double trajectory_full_nll(const DiGaP& target, const Trajectory& path) {
  const std::vector<double> scores = squared_scores(target, path);
  const bool pose_only = path.spec() == ManifoldSpec::pose() && !(target.spec() == ManifoldSpec::pose());
  const DiGaP model = pose_only ? pose_block(target) : target;
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  double nll = 0.0;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const Eigen::VectorXd& var = model.step(t).var;
    nll += 0.5 * (scores[t] + var.array().log().sum() + static_cast<double>(var.size()) * log_two_pi);
  }
  return nll;
}

std::vector<double> step_likelihoods(const DiGaP& target, const Trajectory& path) {
  std::vector<double> out = squared_scores(target, path);
  for (double& s : out) s = std::exp(-0.5 * s);
  return out;
}

ModalOptimization modal_update_from_optimization(const KinematicChain& chain, const MiDiGaP& model,
                                                 const Eigen::VectorXd& q0, const PathOptions& options,
                                                 double q_norm) {
  validate(model);
  ModalOptimization out;
  out.model = model;
  out.paths.resize(model.modes.size());
  out.report.resize(model.modes.size());
  for (std::size_t m = 0; m < model.modes.size(); ++m) {
    const Mode& mode = model.modes[m];
    ModeUpdateReport& report = out.report[m];
    report.prior_before = mode.prior;
    if (mode.prior > 0.0) {
      const DiGaP target = pose_block(mode.model);
      out.paths[m] = optimize_path(chain, target, q0, options);
      report.ci_passed = out.paths[m].feasible;
      if (out.paths[m].feasible) {
        report.p_r = step_likelihoods(target, out.paths[m].ee_path);
        report.evidence = truncation_norm(report.p_r, q_norm);
      }
    }
    out.model.modes[m].prior = mode.prior * report.evidence;
  }
  double total = 0.0;
  for (const Mode& mode : out.model.modes) total += mode.prior;
  if (!(total > 0.0)) fail(ErrorCode::kInfeasible, "evidence infeasible: no mode admits a feasible joint path");
  normalize_priors(out.model);
  for (std::size_t m = 0; m < out.report.size(); ++m) out.report[m].prior_after = out.model.modes[m].prior;
  return out;
}

ChainOptimization modal_update_from_optimization(const KinematicChain& chain, const SkillChain& skills,
                                                 const Eigen::VectorXd& q0, const PathOptions& options,
                                                 double q_norm, std::size_t max_paths) {
  ChainOptimization out;
  out.paths = enumerate_modal_paths(skills);
  if (out.paths.size() > max_paths) out.paths.resize(max_paths);

  // each (skill, mode) target is solved once per start configuration
  std::map<std::pair<std::size_t, int>, DiGaP> targets;
  std::map<std::pair<std::size_t, int>, double> best_evidence;
  for (const ModalPath& path : out.paths) {
    std::vector<PathResult> solved;
    std::vector<double> kernels;
    Eigen::VectorXd q = q0;
    bool feasible = true;
    for (std::size_t j = 0; j < path.modes.size(); ++j) {
      const auto key = std::pair{j, path.modes[j]};
      auto it = targets.find(key);
      if (it == targets.end()) {
        it = targets.emplace(key, pose_block(skills.skills[j].modes[static_cast<std::size_t>(path.modes[j])].model))
                 .first;
      }
      PathResult r = optimize_path(chain, it->second, q, options);
      feasible = feasible && r.feasible;
      const std::vector<double> k = step_likelihoods(it->second, r.ee_path);
      kernels.insert(kernels.end(), k.begin(), k.end());
      q = r.joints.back();
      solved.push_back(std::move(r));
      if (!feasible) break;
    }
    const double evidence = feasible ? truncation_norm(kernels, q_norm) : 0.0;
    out.path_evidence.push_back(evidence);
    out.solutions.push_back(std::move(solved));
    for (std::size_t j = 0; j < path.modes.size(); ++j) {
      double& best = best_evidence[{j, path.modes[j]}];
      best = std::max(best, evidence);
    }
  }
  bool any = false;
  for (double e : out.path_evidence) any = any || e > 0.0;
  if (!any) fail(ErrorCode::kInfeasible, "infeasible chain: no modal path admits a feasible joint path");

  out.chain = skills;
  for (const auto& [key, weight] : best_evidence) {
    out.chain = apply_to_chain(out.chain, key.first, key.second, std::min(1.0, weight));
  }
  return out;
}

}  // namespace midigap
