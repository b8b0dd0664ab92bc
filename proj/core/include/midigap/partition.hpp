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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "midigap/digap.hpp"
#include "midigap/manifold.hpp"

namespace midigap {

enum class ClusterMethod : std::uint8_t { kGmmBic, kKMeansBic, kDbscan };

std::string to_string(ClusterMethod method);
ClusterMethod parse_cluster_method(const std::string& text);

/// One row of a model-selection table.
struct BicEntry {
  int k = 0;
  double log_likelihood = 0.0;
  double bic = std::numeric_limits<double>::infinity();
  bool valid = false;  // false when every run for this k degenerated
};

/// Disjoint cover of the demo indices 0..N-1 by `parts` non-empty parts.
/// Labels are 0-based and numbered by first appearance.
struct Partition {
  std::vector<int> labels;
  int parts = 0;
  ClusterMethod method = ClusterMethod::kKMeansBic;
  int subsample_length = 0;
  std::vector<BicEntry> bic_table;
  std::size_t distance_evaluations = 0;

  /// Demo indices per part.
  std::vector<std::vector<int>> members() const;
  std::vector<int> part_sizes() const;
};

/// Renumbers labels by first appearance and checks the partition invariants.
Partition make_partition(std::vector<int> labels, ClusterMethod method, int subsample_length);

/// Demonstrations flattened onto M^{T'}.
struct VectorSet {
  ManifoldSpec spec;
  std::vector<Eigen::VectorXd> points;
  int subsample_length = 0;
};

inline constexpr int kDefaultSubsampleLength = 20;

/// Resamples every demo to T' points and concatenates them. T' = 1 keeps the
/// midpoint of each demo.
VectorSet vectorize(std::span<const Trajectory> demos, int subsample_length);

struct ClusterOptions {
  int k_max = 0;  // 0 selects min(10, N - 1)
  int restarts = 10;
  std::uint64_t seed = 0;
  int max_iter = 100;
};

/// Riemannian k-means for k = 1..k_max with k-means++ geodesic seeding; the
/// number of parts minimizes BIC under an isotropic per-part Gaussian.
Partition cluster_kmeans_bic(const VectorSet& vectors, const ClusterOptions& options = {});

/// EM for Riemannian GMMs with diagonal tangent covariances; the number of
/// components minimizes BIC. Hard labels by maximum responsibility.
/// `log_likelihood_trace`, when given, receives the per-iteration EM
/// log-likelihoods of the selected fit.
Partition cluster_gmm_bic(const VectorSet& vectors, const ClusterOptions& options = {},
                          std::vector<double>* log_likelihood_trace = nullptr);

/// Symmetric N x N geodesic distance matrix.
Eigen::MatrixXd pairwise_distances(const VectorSet& vectors);

inline constexpr double kDefaultDbscanEps = 0.5;
inline constexpr int kDefaultDbscanMinPts = 3;

/// DBSCAN on the geodesic distance; noise demos join the cluster with the
/// nearest Frechet-mean centroid.
Partition cluster_dbscan(const VectorSet& vectors, double eps = kDefaultDbscanEps,
                         int min_pts = kDefaultDbscanMinPts);

}  // namespace midigap
