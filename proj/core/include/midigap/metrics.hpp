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

#include <map>
#include <optional>
#include <span>
#include <string>

#include "midigap/constraint.hpp"
#include "midigap/digap.hpp"

namespace midigap {

/// Root mean squared geodesic distance between equal-length trajectories.
double rmse(const Trajectory& predicted, const Trajectory& reference);

/// Positional block used by the acceleration metrics: the leading Euclidean
/// factor.
Eigen::VectorXd position_of(const ManifoldSpec& spec, const Eigen::VectorXd& coords);

/// Sum over interior steps of ||x_{t+1} - 2 x_t + x_{t-1}|| * rate^2. The
/// first and last steps have no centred second difference and contribute
/// nothing.
double total_acceleration(const Trajectory& traj, double sample_rate_hz);

/// Largest positional second difference (unscaled).
double max_second_difference(const Trajectory& traj);

/// Hubert-Arabie adjusted Rand index; 1 for identical partitions up to
/// relabelling.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// True when every step's position lies in the constraint's region.
bool satisfies(const Trajectory& traj, const Constraint& constraint);

struct MetricsReport {
  std::optional<double> rmse;
  std::optional<double> total_acceleration;
  std::optional<double> reference_acceleration;
  std::optional<double> nll;
  std::optional<double> ari;
  bool resampled = false;
  std::map<std::string, bool> constraints;
  std::map<std::string, double> timings;
};

/// Compares a prediction with a reference, resampling the prediction to the
/// reference length when they differ (recorded in `resampled`).
MetricsReport evaluate(const Trajectory& predicted, const Trajectory& reference, double sample_rate_hz = 20.0);

}  // namespace midigap
