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

#include "midigap/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>

#include "midigap/error.hpp"
#include "midigap/random.hpp"

namespace midigap {

std::string to_string(ClusterMethod method) {
  switch (method) {
    case ClusterMethod::kGmmBic: return "gmm";
    case ClusterMethod::kKMeansBic: return "kmeans";
    case ClusterMethod::kDbscan: return "dbscan";
  }
  return "unknown";
}

ClusterMethod parse_cluster_method(const std::string& text) {
  if (text == "gmm") return ClusterMethod::kGmmBic;
  if (text == "kmeans") return ClusterMethod::kKMeansBic;
  if (text == "dbscan") return ClusterMethod::kDbscan;
  fail(ErrorCode::kInvalidArgument, "unknown clustering method '" + text + "'");
}

std::vector<std::vector<int>> Partition::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(parts));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Partition::part_sizes() const {
  std::vector<int> sizes(static_cast<std::size_t>(parts), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

Partition make_partition(std::vector<int> labels, ClusterMethod method, int subsample_length) {
  if (labels.empty()) fail(ErrorCode::kInvalidArgument, "partition of zero demonstrations");
  std::map<int, int> renumber;
  for (int& l : labels) {
    if (l < 0) fail(ErrorCode::kInvalidArgument, "unassigned demonstration in partition");
    const auto [it, inserted] = renumber.emplace(l, static_cast<int>(renumber.size()));
    l = it->second;
  }
  Partition p;
  p.labels = std::move(labels);
  p.parts = static_cast<int>(renumber.size());
  p.method = method;
  p.subsample_length = subsample_length;
  return p;
}

VectorSet vectorize(std::span<const Trajectory> demos, int subsample_length) {
  if (demos.empty()) fail(ErrorCode::kInsufficientDemos, "nothing to vectorize");
  if (subsample_length < 1) fail(ErrorCode::kInvalidArgument, "T' must be positive");
  const ManifoldSpec& spec = demos.front().spec();
  for (const Trajectory& d : demos) {
    if (!(d.spec() == spec)) fail(ErrorCode::kSpecMismatch, "demonstrations on different manifolds");
    if (static_cast<int>(d.length()) < subsample_length) {
      fail(ErrorCode::kInvalidArgument, "T' = " + std::to_string(subsample_length) +
                                            " exceeds the length of demo " + d.demo_id());
    }
  }
  VectorSet out;
  out.spec = spec.power(subsample_length);
  out.subsample_length = subsample_length;
  const int block = spec.ambient_dim();
  for (const Trajectory& d : demos) {
    Eigen::VectorXd v(out.spec.ambient_dim());
    if (subsample_length == 1) {
      v = sample_at(d, 0.5 * static_cast<double>(d.length() - 1));
    } else {
      const Trajectory r = resample_to_length(d, subsample_length);
      for (int t = 0; t < subsample_length; ++t) v.segment(t * block, block) = r[static_cast<std::size_t>(t)];
    }
    out.points.push_back(std::move(v));
  }
  return out;
}

namespace {

int default_k_max(const ClusterOptions& options, std::size_t n) {
  const int k_max = options.k_max > 0 ? options.k_max : std::min(10, static_cast<int>(n) - 1);
  if (k_max > static_cast<int>(n)) {
    fail(ErrorCode::kInvalidArgument, "k_max exceeds the number of demonstrations");
  }
  return std::max(1, k_max);
}

double squared_distance(const ManifoldSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return spec.log(a, b).squaredNorm();
}

struct KMeansRun {
  std::vector<int> labels;
  std::vector<Eigen::VectorXd> centroids;
  double sse = 0.0;
  bool ok = false;
};

KMeansRun kmeans_once(const VectorSet& v, int k, Rng& rng, int max_iter) {
  const ManifoldSpec& spec = v.spec;
  const std::size_t n = v.points.size();
  KMeansRun run;

  // k-means++ seeding with geodesic distances
  std::vector<double> d2(n);
  run.centroids.push_back(v.points[rng() % n]);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(spec, run.centroids[0], v.points[i]);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    if (!(total > 0.0)) return run;  // fewer than k distinct points
    run.centroids.push_back(v.points[sample_categorical(d2, rng)]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(spec, run.centroids.back(), v.points[i]));
    }
  }

  run.labels.assign(n, -1);
  const FrechetOptions centroid_options{1e-9, 100};
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    run.sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = squared_distance(spec, run.centroids[static_cast<std::size_t>(c)], v.points[i]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      changed = changed || run.labels[i] != best;
      run.labels[i] = best;
      run.sse += best_d;
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      std::vector<Eigen::VectorXd> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (run.labels[i] == c) members.push_back(v.points[i]);
      }
      if (members.empty()) return run;
      const std::vector<double> w(members.size(), 1.0);
      try {
        run.centroids[static_cast<std::size_t>(c)] =
            weighted_frechet_mean(spec, members, w, run.centroids[static_cast<std::size_t>(c)],
                                  centroid_options);
      } catch (const ConvergenceError&) {
        return run;
      }
    }
  }
  run.ok = true;
  return run;
}

// Isotropic per-part Gaussian log-likelihood of a hard clustering.
double isotropic_log_likelihood(const VectorSet& v, const KMeansRun& run, int k) {
  const double n = static_cast<double>(v.points.size());
  const double dim = static_cast<double>(v.spec.tangent_dim());
  std::vector<double> count(static_cast<std::size_t>(k), 0.0);
  std::vector<double> sse(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < v.points.size(); ++i) {
    const auto c = static_cast<std::size_t>(run.labels[i]);
    count[c] += 1.0;
    sse[c] += squared_distance(v.spec, run.centroids[c], v.points[i]);
  }
  double ll = 0.0;
  for (std::size_t c = 0; c < count.size(); ++c) {
    const double var = std::max(sse[c] / (count[c] * dim), 1e-12);
    ll += count[c] * std::log(count[c] / n) -
          0.5 * count[c] * dim * (std::log(2.0 * std::numbers::pi * var) + 1.0);
  }
  return ll;
}

bool all_parts_at_least(const std::vector<int>& labels, int k, int min_size) {
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  return std::all_of(sizes.begin(), sizes.end(), [min_size](int s) { return s >= min_size; });
}

void require_vectors(const VectorSet& v) {
  if (v.points.size() < 2) fail(ErrorCode::kInsufficientDemos, "clustering needs at least 2 demos");
}

}  // namespace

Partition cluster_kmeans_bic(const VectorSet& vectors, const ClusterOptions& options) {
  require_vectors(vectors);
  const std::size_t n = vectors.points.size();
  const int k_max = default_k_max(options, n);
  const double dim = static_cast<double>(vectors.spec.tangent_dim());

  std::vector<BicEntry> table;
  std::vector<int> best_labels(n, 0);
  double best_bic = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= k_max; ++k) {
    KMeansRun best;
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
      Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(k * 1000 + r)));
      KMeansRun run = kmeans_once(vectors, k, rng, options.max_iter);
      if (run.ok && (!best.ok || run.sse < best.sse)) best = std::move(run);
    }
    BicEntry entry{k};
    // parts with fewer than two demos cannot be fitted downstream
    if (best.ok && (k == 1 || all_parts_at_least(best.labels, k, 2))) {
      const double params = k * (dim + 1.0) + (k - 1.0);
      entry.log_likelihood = isotropic_log_likelihood(vectors, best, k);
      entry.bic = -2.0 * entry.log_likelihood + params * std::log(static_cast<double>(n));
      entry.valid = true;
      if (entry.bic < best_bic) {
        best_bic = entry.bic;
        best_labels = best.labels;
      }
    }
    table.push_back(entry);
  }
  Partition p = make_partition(std::move(best_labels), ClusterMethod::kKMeansBic,
                               vectors.subsample_length);
  p.bic_table = std::move(table);
  return p;
}

namespace {

struct GmmFit {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::ArrayXd> vars;
  std::vector<double> weights;
  Eigen::MatrixXd resp;  // n x k
  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  bool ok = false;
};

// E-step; returns the data log-likelihood and fills responsibilities.
double expectation(const VectorSet& v, GmmFit& fit) {
  const std::size_t n = v.points.size();
  const std::size_t k = fit.means.size();
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  fit.resp.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  std::vector<double> log_norm(k);
  for (std::size_t c = 0; c < k; ++c) {
    log_norm[c] = std::log(fit.weights[c]) -
                  0.5 * (static_cast<double>(fit.vars[c].size()) * log_2pi + fit.vars[c].log().sum());
  }
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::ArrayXd row(static_cast<Eigen::Index>(k));
    for (std::size_t c = 0; c < k; ++c) {
      const Eigen::ArrayXd u = v.spec.log(fit.means[c], v.points[i]).array();
      row[static_cast<Eigen::Index>(c)] = log_norm[c] - 0.5 * (u.square() / fit.vars[c]).sum();
    }
    const double peak = row.maxCoeff();
    const double lse = peak + std::log((row - peak).exp().sum());
    ll += lse;
    fit.resp.row(static_cast<Eigen::Index>(i)) = (row - lse).exp().matrix().transpose();
  }
  return ll;
}

// M-step; false when a component lost its responsibility mass.
bool maximization(const VectorSet& v, const Eigen::ArrayXd& floor, GmmFit& fit) {
  const std::size_t n = v.points.size();
  const std::size_t k = static_cast<std::size_t>(fit.resp.cols());
  fit.means.resize(k, v.points.front());
  fit.vars.resize(k);
  fit.weights.resize(k);
  const FrechetOptions mean_options{1e-9, 100};
  for (std::size_t c = 0; c < k; ++c) {
    const Eigen::VectorXd r = fit.resp.col(static_cast<Eigen::Index>(c));
    const double mass = r.sum();
    if (mass < 2.0) return false;
    fit.weights[c] = mass / static_cast<double>(n);
    const std::vector<double> w(r.data(), r.data() + r.size());
    try {
      fit.means[c] = weighted_frechet_mean(v.spec, v.points, w, fit.means[c], mean_options);
    } catch (const ConvergenceError&) {
      return false;
    }
    Eigen::ArrayXd var = Eigen::ArrayXd::Zero(v.spec.tangent_dim());
    for (std::size_t i = 0; i < n; ++i) {
      var += w[i] * v.spec.log(fit.means[c], v.points[i]).array().square();
    }
    fit.vars[c] = var / mass + floor;
  }
  return true;
}

GmmFit run_em(const VectorSet& v, const KMeansRun& init, int k, const Eigen::ArrayXd& floor,
              int max_iter) {
  GmmFit fit;
  const std::size_t n = v.points.size();
  fit.resp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), k);
  for (std::size_t i = 0; i < n; ++i) fit.resp(static_cast<Eigen::Index>(i), init.labels[i]) = 1.0;
  fit.means = init.centroids;
  if (!maximization(v, floor, fit)) return fit;
  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    const double ll = expectation(v, fit);
    fit.trace.push_back(ll);
    fit.log_likelihood = ll;
    if (std::abs(ll - previous) <= 1e-10 * std::max(1.0, std::abs(ll))) break;
    previous = ll;
    if (!maximization(v, floor, fit)) return fit;
  }
  fit.ok = true;
  return fit;
}

}  // namespace

Partition cluster_gmm_bic(const VectorSet& vectors, const ClusterOptions& options,
                          std::vector<double>* log_likelihood_trace) {
  require_vectors(vectors);
  const std::size_t n = vectors.points.size();
  const int k_max = default_k_max(options, n);
  const double dim = static_cast<double>(vectors.spec.tangent_dim());

  // Variance floor relative to the overall spread of the data.
  const std::vector<double> ones(n, 1.0);
  const Eigen::VectorXd global_mean =
      weighted_frechet_mean(vectors.spec, vectors.points, ones, vectors.points.front(), {1e-9, 200});
  Eigen::ArrayXd floor = Eigen::ArrayXd::Zero(vectors.spec.tangent_dim());
  for (const auto& p : vectors.points) floor += vectors.spec.log(global_mean, p).array().square();
  floor = 1e-6 * floor / static_cast<double>(n) + 1e-12;

  std::vector<BicEntry> table;
  std::vector<int> best_labels(n, 0);
  std::vector<double> best_trace;
  double best_bic = std::numeric_limits<double>::infinity();
  bool any_fit = false;
  for (int k = 1; k <= k_max; ++k) {
    GmmFit best;
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
      Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(k * 1000 + r)));
      const KMeansRun init = kmeans_once(vectors, k, rng, options.max_iter);
      if (!init.ok) continue;
      GmmFit fit = run_em(vectors, init, k, floor, std::max(options.max_iter, 200));
      if (fit.ok && (!best.ok || fit.log_likelihood > best.log_likelihood)) best = std::move(fit);
    }
    BicEntry entry{k};
    if (best.ok) {
      std::vector<int> labels(n);
      for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index arg = 0;
        best.resp.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
        labels[i] = static_cast<int>(arg);
      }
      any_fit = true;
      if (k == 1 || all_parts_at_least(labels, k, 2)) {
        const double params = k * 2.0 * dim + (k - 1.0);
        entry.log_likelihood = best.log_likelihood;
        entry.bic = -2.0 * entry.log_likelihood + params * std::log(static_cast<double>(n));
        entry.valid = true;
        if (entry.bic < best_bic) {
          best_bic = entry.bic;
          best_labels = std::move(labels);
          best_trace = std::move(best.trace);
        }
      }
    }
    table.push_back(entry);
  }
  if (!any_fit || !std::isfinite(best_bic)) {
    fail(ErrorCode::kNonConvergence, "every EM restart degenerated");
  }
  if (log_likelihood_trace) *log_likelihood_trace = std::move(best_trace);
  Partition p = make_partition(std::move(best_labels), ClusterMethod::kGmmBic, vectors.subsample_length);
  p.bic_table = std::move(table);
  return p;
}

Eigen::MatrixXd pairwise_distances(const VectorSet& vectors) {
  const auto n = static_cast<Eigen::Index>(vectors.points.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = vectors.spec.distance(vectors.points[static_cast<std::size_t>(i)],
                                                vectors.points[static_cast<std::size_t>(j)]);
    }
  }
  return d;
}

Partition cluster_dbscan(const VectorSet& vectors, double eps, int min_pts) {
  require_vectors(vectors);
  if (!(eps > 0.0)) fail(ErrorCode::kInvalidArgument, "DBSCAN eps must be positive");
  if (min_pts < 1) fail(ErrorCode::kInvalidArgument, "DBSCAN min_pts must be at least 1");
  const std::size_t n = vectors.points.size();
  const Eigen::MatrixXd dist = pairwise_distances(vectors);

  auto neighbours = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j) {
      if (dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= eps) out.push_back(j);
    }
    return out;
  };

  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  std::vector<int> labels(n, kUnvisited);
  int clusters = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    const auto seeds = neighbours(i);
    if (static_cast<int>(seeds.size()) < min_pts) {
      labels[i] = kNoise;
      continue;
    }
    const int cluster = clusters++;
    labels[i] = cluster;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      if (labels[j] == kNoise) labels[j] = cluster;  // border point
      if (labels[j] != kUnvisited) continue;
      labels[j] = cluster;
      const auto more = neighbours(j);
      if (static_cast<int>(more.size()) >= min_pts) queue.insert(queue.end(), more.begin(), more.end());
    }
  }
  if (clusters == 0) fail(ErrorCode::kInfeasible, "DBSCAN found no clusters");

  // Attach noise to the nearest cluster centroid.
  if (std::find(labels.begin(), labels.end(), kNoise) != labels.end()) {
    std::vector<Eigen::VectorXd> centroids;
    for (int c = 0; c < clusters; ++c) {
      std::vector<Eigen::VectorXd> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == c) members.push_back(vectors.points[i]);
      }
      const std::vector<double> w(members.size(), 1.0);
      centroids.push_back(weighted_frechet_mean(vectors.spec, members, w, members.front()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != kNoise) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < clusters; ++c) {
        const double d = vectors.spec.distance(centroids[static_cast<std::size_t>(c)], vectors.points[i]);
        if (d < best) {
          best = d;
          labels[i] = c;
        }
      }
    }
  }
  Partition p = make_partition(std::move(labels), ClusterMethod::kDbscan, vectors.subsample_length);
  p.distance_evaluations = n * (n - 1) / 2;
  return p;
}

}  // namespace midigap
