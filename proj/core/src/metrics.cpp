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

#include "midigap/metrics.hpp"

#include <cmath>
#include <map>

#include "midigap/error.hpp"

namespace midigap {

namespace {

void require_nonempty(const Trajectory& traj) {
  if (traj.length() == 0) fail(ErrorCode::kInvalidArgument, "empty trajectory");
}

double choose2(double n) { return 0.5 * n * (n - 1.0); }

}  // namespace

double rmse(const Trajectory& predicted, const Trajectory& reference) {
  require_nonempty(predicted);
  if (!(predicted.spec() == reference.spec())) {
    fail(ErrorCode::kSpecMismatch, "cannot compare " + predicted.spec().to_string() + " with " +
                                       reference.spec().to_string());
  }
  if (predicted.length() != reference.length()) {
    fail(ErrorCode::kInvalidArgument, "RMSE needs equal lengths");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < predicted.length(); ++t) {
    const double d = predicted.spec().distance(predicted[t], reference[t]);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predicted.length()));
}

Eigen::VectorXd position_of(const ManifoldSpec& spec, const Eigen::VectorXd& coords) {
  const auto factors = spec.factors();
  if (factors.empty() || factors.front().kind != FactorKind::kEuclidean) {
    fail(ErrorCode::kSpecMismatch, "manifold " + spec.to_string() + " has no leading Euclidean block");
  }
  return coords.head(factors.front().dim);
}

double total_acceleration(const Trajectory& traj, double sample_rate_hz) {
  require_nonempty(traj);
  double total = 0.0;
  for (std::size_t t = 1; t + 1 < traj.length(); ++t) {
    const Eigen::VectorXd a = position_of(traj.spec(), traj[t + 1]) - 2.0 * position_of(traj.spec(), traj[t]) +
                              position_of(traj.spec(), traj[t - 1]);
    total += a.norm();
  }
  return total * sample_rate_hz * sample_rate_hz;
}

double max_second_difference(const Trajectory& traj) {
  require_nonempty(traj);
  double worst = 0.0;
  for (std::size_t t = 1; t + 1 < traj.length(); ++t) {
    const Eigen::VectorXd a = position_of(traj.spec(), traj[t + 1]) - 2.0 * position_of(traj.spec(), traj[t]) +
                              position_of(traj.spec(), traj[t - 1]);
    worst = std::max(worst, a.norm());
  }
  return worst;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size() || a.empty()) fail(ErrorCode::kInvalidArgument, "ARI needs two equal, non-empty labelings");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [key, n] : table) index += choose2(n);
  double sum_rows = 0.0;
  for (const auto& [key, n] : rows) sum_rows += choose2(n);
  double sum_cols = 0.0;
  for (const auto& [key, n] : cols) sum_cols += choose2(n);
  const double expected = sum_rows * sum_cols / choose2(static_cast<double>(a.size()));
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;  // both labelings trivial
  return (index - expected) / (maximum - expected);
}

bool satisfies(const Trajectory& traj, const Constraint& constraint) {
  for (std::size_t t = 0; t < traj.length(); ++t) {
    if (!constraint.contains(traj.spec(), traj[t])) return false;
  }
  return true;
}

MetricsReport evaluate(const Trajectory& predicted, const Trajectory& reference, double sample_rate_hz) {
  require_nonempty(predicted);
  require_nonempty(reference);
  if (!(predicted.spec() == reference.spec())) {
    fail(ErrorCode::kSpecMismatch, "cannot compare " + predicted.spec().to_string() + " with " +
                                       reference.spec().to_string());
  }
  MetricsReport report;
  Trajectory aligned = predicted;
  if (predicted.length() != reference.length()) {
    if (reference.length() < 2) fail(ErrorCode::kInvalidArgument, "cannot resample onto a single-step reference");
    aligned = resample_to_length(predicted, static_cast<int>(reference.length()));
    report.resampled = true;
  }
  report.rmse = rmse(aligned, reference);
  const auto factors = reference.spec().factors();
  if (factors.front().kind == FactorKind::kEuclidean) {
    report.total_acceleration = total_acceleration(aligned, sample_rate_hz);
    report.reference_acceleration = total_acceleration(reference, sample_rate_hz);
  }
  return report;
}

}  // namespace midigap
