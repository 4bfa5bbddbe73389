/*
 * Copyright (c) 2026, the nomad-projection authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "nomad/affinity.hpp"
#include "nomad/dataset.hpp"
#include "nomad/error.hpp"
#include "nomad/kmeans.hpp"
#include "nomad/knn.hpp"
#include "nomad/objective.hpp"
#include "nomad/pca.hpp"
#include "nomad/rng.hpp"

namespace nomad {

/// Which noise cells are replaced by their means during training.
///   RemoteClusters: cells on other workers (the communication-minimal split).
///   AllButOwnCluster: every cell except the head's own, for ablation.
enum class ApproxMode { RemoteClusters, AllButOwnCluster };

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t k = 15;              // neighbors per point
  std::size_t negatives = 5;       // nominal |M| per head
  std::size_t local_draws = 5;     // s: sampled local tails per head
  std::size_t batch_size = 1024;   // heads per SGD step
  std::size_t workers = 1;
  std::size_t n_clusters = 0;      // 0: auto (ceil(n/4096), clamped)
  std::uint64_t seed = 0;
  double lr0 = 0.0;                // 0: auto (n / 10)
  std::size_t kmeans_max_iters = 100;
  double kmeans_tol = -1.0;        // < 0: auto (scale-invariant)
  ApproxMode approx = ApproxMode::RemoteClusters;
  bool head_only = false;          // ablation: update only head positions
  std::size_t checkpoint_every = 0;  // 0: no checkpoints
  std::string checkpoint_prefix;
  bool verbose = false;            // per-epoch progress to stderr

  void validate() const {
    if (workers < 1) fail(ErrorKind::Parameter, "workers must be >= 1");
    if (k < 1) fail(ErrorKind::Parameter, "k must be >= 1");
    if (negatives < 1) fail(ErrorKind::Parameter, "negatives must be >= 1");
    if (local_draws < 1) fail(ErrorKind::Parameter, "local draws must be >= 1");
    if (batch_size < 1) fail(ErrorKind::Parameter, "batch size must be >= 1");
    if (n_clusters != 0 && n_clusters < workers)
      fail(ErrorKind::Parameter, "clusters must be >= workers");
  }

  std::size_t resolve_clusters(std::size_t n) const {
    if (n_clusters != 0) return std::min(n_clusters, n);
    const std::size_t want = (n + 4095) / 4096;
    return std::min(n, std::max({want, workers, std::size_t{2}}));
  }

  double resolve_lr0(std::size_t n) const {
    return lr0 > 0.0 ? lr0 : static_cast<double>(n) / 10.0;
  }
};

/// Linear learning-rate anneal from lr0 at epoch 0 down to 0.
inline double lr_schedule(std::size_t epoch, std::size_t total_epochs,
                          double lr0) {
  if (epoch >= total_epochs)
    fail(ErrorKind::Parameter, "epoch out of range for schedule");
  return lr0 * (1.0 - static_cast<double>(epoch) /
                          static_cast<double>(total_epochs));
}

/// Exclusive assignment of clusters (and so their points) to workers.
struct ShardPlan {
  std::size_t workers = 0;
  std::vector<std::uint32_t> cluster_to_worker;           // per cluster
  std::vector<std::vector<std::uint32_t>> worker_clusters;  // ascending ids
  std::vector<std::vector<std::uint32_t>> worker_points;    // ascending ids
  std::vector<std::uint64_t> worker_point_counts;
};

/// Greedy longest-processing-time sharding: clusters sorted by size
/// descending (id ascending on ties), each placed on the currently
/// lightest worker (lowest id on ties). Keeps every worker within one
/// largest-cluster size of the mean load.
inline ShardPlan shard_clusters(const ClusterAssignment& clusters,
                                std::size_t workers) {
  const std::size_t n_clusters = clusters.n_clusters;
  if (workers < 1) fail(ErrorKind::Parameter, "workers must be >= 1");
  if (n_clusters < workers)
    fail(ErrorKind::Parameter,
         "clusters must be >= workers (" + std::to_string(n_clusters) + " < " +
             std::to_string(workers) + ")");

  std::vector<std::uint32_t> order(n_clusters);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (clusters.sizes[a] != clusters.sizes[b])
      return clusters.sizes[a] > clusters.sizes[b];
    return a < b;
  });

  ShardPlan plan;
  plan.workers = workers;
  plan.cluster_to_worker.assign(n_clusters, 0);
  plan.worker_clusters.resize(workers);
  plan.worker_points.resize(workers);
  plan.worker_point_counts.assign(workers, 0);

  for (std::uint32_t c : order) {
    std::size_t lightest = 0;
    for (std::size_t w = 1; w < workers; ++w)
      if (plan.worker_point_counts[w] < plan.worker_point_counts[lightest])
        lightest = w;
    plan.cluster_to_worker[c] = static_cast<std::uint32_t>(lightest);
    plan.worker_clusters[lightest].push_back(c);
    plan.worker_point_counts[lightest] += clusters.sizes[c];
  }
  for (auto& owned : plan.worker_clusters) std::sort(owned.begin(), owned.end());
  for (std::size_t i = 0; i < clusters.assignment.size(); ++i)
    plan.worker_points[plan.cluster_to_worker[clusters.assignment[i]]].push_back(
        static_cast<std::uint32_t>(i));
  return plan;
}

/// Arithmetic mean of the current low-dimensional positions per cluster,
/// accumulated in ascending point order so a sharded computation of the
/// same quantity is bit-identical.
inline ClusterMeans gather_means(const LayoutMatrix& layout,
                                 const ClusterAssignment& clusters,
                                 std::uint64_t epoch_stamp = 0) {
  if (layout.rows != clusters.assignment.size())
    fail(ErrorKind::Internal, "layout and assignment cover different points");
  ClusterMeans means;
  means.epoch_stamp = epoch_stamp;
  means.counts = clusters.sizes;
  means.means.assign(clusters.n_clusters * 2, 0.0);
  const std::uint64_t covered =
      std::accumulate(clusters.sizes.begin(), clusters.sizes.end(),
                      std::uint64_t{0});
  if (covered != layout.rows)
    fail(ErrorKind::Internal, "means gather does not cover every point once");
  for (std::size_t i = 0; i < layout.rows; ++i) {
    double* mu = means.mean(clusters.assignment[i]);
    const double* p = layout.row(i);
    mu[0] += p[0];
    mu[1] += p[1];
  }
  for (std::size_t r = 0; r < clusters.n_clusters; ++r) {
    if (means.counts[r] == 0)
      fail(ErrorKind::Internal, "empty cluster in means gather");
    means.mean(r)[0] /= static_cast<double>(means.counts[r]);
    means.mean(r)[1] /= static_cast<double>(means.counts[r]);
  }
  return means;
}

/// One all-gathered message: a worker's cluster means for one epoch.
struct MeansMessage {
  std::uint32_t worker = 0;
  std::uint32_t clusters = 0;
  std::uint64_t payload_doubles = 0;  // 2 per cluster mean
  std::uint64_t payload_counts = 0;   // 1 per cluster
};

/// Record of everything that crossed the (in-process) worker boundary.
struct CommLog {
  std::vector<std::vector<MeansMessage>> epochs;
};

struct EpochStats {
  double loss_sum = 0.0;
  std::uint64_t heads = 0;
};

namespace detail {

/// Per-worker training state. The RNG stream is private to the worker and
/// seeded from (global seed, worker id); draws are consumed strictly in
/// (head, tails...) order per head so trajectories are reproducible.
struct WorkerState {
  std::uint32_t id = 0;
  std::vector<std::uint32_t> points;          // owned, ascending
  std::vector<std::uint32_t> eligible_heads;  // owned points with neighbors
  std::vector<std::uint32_t> remote_cells;    // R-tilde (RemoteClusters mode)
  std::vector<double> remote_probs;
  double local_mass = 1.0;
  Rng rng{0};
};

inline std::uint64_t worker_stream_tag(std::uint32_t worker_id) {
  return 0x776f726bull + worker_id;  // "work" + id
}

inline void apply_update(LayoutMatrix& layout, std::uint32_t point, Vec2 grad,
                         double step, std::size_t epoch, std::uint64_t draw) {
  double* p = layout.row(point);
  p[0] -= step * grad.x;
  p[1] -= step * grad.y;
  if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || std::fabs(p[0]) > 1e9 ||
      std::fabs(p[1]) > 1e9) {
    fail(ErrorKind::Divergence,
         "positions diverged at epoch " + std::to_string(epoch) +
             ", head draw " + std::to_string(draw) + " (point " +
             std::to_string(point) + ")");
  }
}

/// One epoch of one worker: eligible-head-count head draws, each with
/// local_draws sampled tails, per-head gradient applied immediately at
/// step lr / batch_size. Writes only rows this worker owns.
inline EpochStats run_worker_epoch(LayoutMatrix& layout,
                                   const ConditionalAffinity& affinity,
                                   const ClusterAssignment& clusters,
                                   const NoiseModel& noise,
                                   const std::vector<std::uint32_t>& owner,
                                   WorkerState& state,
                                   const ClusterMeans& stale_means,
                                   double step, const TrainConfig& cfg,
                                   std::size_t epoch,
                                   std::vector<std::vector<std::uint32_t>> const*
                                       cluster_members) {
  EpochStats stats;
  if (state.eligible_heads.empty()) return stats;

  HeadGradient grad;
  std::vector<double> q_neg_buf, q_rem_buf;
  std::vector<std::uint32_t> tails(cfg.local_draws);
  std::vector<std::uint32_t> per_head_remote;
  std::vector<double> per_head_probs;

  const std::uint64_t draws = state.eligible_heads.size();
  for (std::uint64_t t = 0; t < draws; ++t) {
    const std::uint32_t head =
        state.eligible_heads[state.rng.uniform_index(state.eligible_heads.size())];

    LossBatchSpec spec;
    spec.head = head;
    spec.neighbors = affinity.neighbors_of(head);
    spec.weights = affinity.weights_of(head);
    spec.m_total = cfg.negatives;

    const std::vector<std::uint32_t>* tail_pool = &state.points;
    if (cfg.approx == ApproxMode::AllButOwnCluster) {
      const std::uint32_t own = clusters.assignment[head];
      tail_pool = &(*cluster_members)[own];
      per_head_remote.clear();
      per_head_probs.clear();
      for (std::size_t r = 0; r < clusters.n_clusters; ++r) {
        if (r == own) continue;
        per_head_remote.push_back(static_cast<std::uint32_t>(r));
        per_head_probs.push_back(noise.cell_probs[r]);
      }
      spec.remote_cells = per_head_remote;
      spec.remote_probs = per_head_probs;
      spec.local_mass = static_cast<double>(noise.cell_counts[own]) /
                        static_cast<double>(noise.total);
    } else {
      spec.remote_cells = state.remote_cells;
      spec.remote_probs = state.remote_probs;
      spec.local_mass = state.local_mass;
    }

    for (std::size_t s = 0; s < cfg.local_draws; ++s)
      tails[s] = (*tail_pool)[state.rng.uniform_index(tail_pool->size())];
    spec.negatives = tails;

    nomad_gradient_into(layout, spec, stale_means, grad, q_neg_buf, q_rem_buf);
    stats.loss_sum += grad.loss;
    ++stats.heads;

    assert(owner[head] == state.id);
    apply_update(layout, head, grad.head, step, epoch, t);
    if (!cfg.head_only) {
      for (std::size_t j = 0; j < spec.neighbors.size(); ++j) {
        assert(owner[spec.neighbors[j]] == state.id);
        apply_update(layout, spec.neighbors[j], grad.neighbors[j], step, epoch, t);
      }
      for (std::size_t m = 0; m < spec.negatives.size(); ++m) {
        assert(owner[spec.negatives[m]] == state.id);
        apply_update(layout, spec.negatives[m], grad.negatives[m], step, epoch, t);
      }
    }
  }
  (void)owner;
  return stats;
}

}  // namespace detail

/// Everything fit() produced besides the layout, for inspection and tests.
struct FitReport {
  ClusterAssignment clusters;
  KnnGraph graph;
  ConditionalAffinity affinity;
  ShardPlan plan;
  LayoutMatrix pca;
  ClusterMeans final_means;
  CommLog comm;
  std::vector<double> epoch_mean_loss;
};

/// End-to-end pipeline: LSH-seeded K-Means, within-cluster exact kNN,
/// inverse-rank affinities, PCA init, then sharded SGD epochs with a
/// cluster-means all-gather between epochs. Deterministic for fixed
/// (data, config) including the worker count.
inline LayoutMatrix fit(const VectorDataset& data, const TrainConfig& config,
                        FitReport* report = nullptr) {
  config.validate();
  const std::size_t n = data.rows;
  const std::size_t n_clusters = config.resolve_clusters(n);
  if (n_clusters < config.workers)
    fail(ErrorKind::Parameter, "clusters must be >= workers");
  const double lr0 = config.resolve_lr0(n);

  ClusterAssignment clusters = lsh_init(data, n_clusters, config.seed);
  const double tol =
      config.kmeans_tol >= 0.0 ? config.kmeans_tol : default_kmeans_tol(data);
  clusters = kmeans_em(data, std::move(clusters), config.kmeans_max_iters, tol);

  const KnnGraph graph = build_knn(data, clusters, config.k);
  const ConditionalAffinity affinity = build_affinity(graph);
  if (affinity.eligible_heads.empty())
    fail(ErrorKind::Config, "no point has any neighbor; nothing to train on");

  const ShardPlan plan = shard_clusters(clusters, config.workers);
  const NoiseModel noise = make_noise_model(clusters, config.negatives);

  std::vector<std::uint32_t> owner(n);
  for (std::size_t i = 0; i < n; ++i)
    owner[i] = plan.cluster_to_worker[clusters.assignment[i]];

  LayoutMatrix layout = pca_init(data, config.seed);

  std::vector<detail::WorkerState> workers(config.workers);
  for (std::size_t w = 0; w < config.workers; ++w) {
    detail::WorkerState& state = workers[w];
    state.id = static_cast<std::uint32_t>(w);
    state.points = plan.worker_points[w];
    for (std::uint32_t i : state.points)
      if (affinity.neighbor_count(i) > 0) state.eligible_heads.push_back(i);
    std::uint64_t remote_count = 0;
    for (std::size_t r = 0; r < clusters.n_clusters; ++r) {
      if (plan.cluster_to_worker[r] == w) continue;
      state.remote_cells.push_back(static_cast<std::uint32_t>(r));
      state.remote_probs.push_back(noise.cell_probs[r]);
      remote_count += clusters.sizes[r];
    }
    state.local_mass = static_cast<double>(noise.total - remote_count) /
                       static_cast<double>(noise.total);
    state.rng = Rng(stream_seed(config.seed, detail::worker_stream_tag(state.id)));
  }

  std::vector<std::vector<std::uint32_t>> cluster_members;
  if (config.approx == ApproxMode::AllButOwnCluster) {
    cluster_members.resize(clusters.n_clusters);
    for (std::size_t i = 0; i < n; ++i)
      cluster_members[clusters.assignment[i]].push_back(
          static_cast<std::uint32_t>(i));
  }

  CommLog comm;
  std::vector<double> epoch_mean_loss;
  ClusterMeans means = gather_means(layout, clusters, 0);

  if (report) report->pca = layout;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const double lr = lr_schedule(epoch, config.epochs, lr0);
    const double step = lr / static_cast<double>(config.batch_size);

    std::vector<EpochStats> stats(config.workers);
    if (config.workers == 1) {
      stats[0] = detail::run_worker_epoch(layout, affinity, clusters, noise,
                                          owner, workers[0], means, step,
                                          config, epoch, &cluster_members);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(config.workers);
      for (std::size_t w = 0; w < config.workers; ++w) {
        pool.emplace_back([&, w] {
          stats[w] = detail::run_worker_epoch(layout, affinity, clusters, noise,
                                              owner, workers[w], means, step,
                                              config, epoch, &cluster_members);
        });
      }
      for (auto& t : pool) t.join();
    }

    // Barrier passed: all-gather the per-worker cluster means. Each worker
    // contributes exactly one message holding its clusters' means; no point
    // positions ever cross the boundary.
    ClusterMeans next;
    next.epoch_stamp = epoch + 1;
    next.counts = clusters.sizes;
    next.means.assign(clusters.n_clusters * 2, 0.0);
    std::vector<MeansMessage> messages;
    for (std::size_t w = 0; w < config.workers; ++w) {
      // One ascending pass over the worker's points: per-cluster sums see
      // ids in the same order as an unsharded gather, so the assembled
      // snapshot is bit-identical to gather_means on the full layout.
      for (std::uint32_t i : plan.worker_points[w]) {
        double* mu = next.mean(clusters.assignment[i]);
        const double* p = layout.row(i);
        mu[0] += p[0];
        mu[1] += p[1];
      }
      for (std::uint32_t r : plan.worker_clusters[w]) {
        double* mu = next.mean(r);
        mu[0] /= static_cast<double>(next.counts[r]);
        mu[1] /= static_cast<double>(next.counts[r]);
      }
      MeansMessage msg;
      msg.worker = static_cast<std::uint32_t>(w);
      msg.clusters = static_cast<std::uint32_t>(plan.worker_clusters[w].size());
      msg.payload_doubles = 2ull * msg.clusters;
      msg.payload_counts = msg.clusters;
      messages.push_back(msg);
    }
    means = std::move(next);
    comm.epochs.push_back(std::move(messages));

    double loss_sum = 0.0;
    std::uint64_t heads = 0;
    for (const EpochStats& s : stats) {
      loss_sum += s.loss_sum;
      heads += s.heads;
    }
    const double mean_loss =
        heads > 0 ? loss_sum / static_cast<double>(heads) : 0.0;
    epoch_mean_loss.push_back(mean_loss);
    layout.epoch = epoch + 1;

    if (config.verbose) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        started)
              .count();
      std::fprintf(stderr, "epoch %zu/%zu lr %.6g loss %.6f time %.2fs\n",
                   epoch + 1, config.epochs, lr, mean_loss, secs);
    }
    if (config.checkpoint_every > 0 &&
        (epoch + 1) % config.checkpoint_every == 0 &&
        !config.checkpoint_prefix.empty()) {
      save_layout(layout, data.ids, data.labels,
                  config.checkpoint_prefix + ".epoch" +
                      std::to_string(epoch + 1) + ".csv");
    }
  }

  if (report) {
    report->clusters = std::move(clusters);
    report->graph = graph;
    report->affinity = affinity;
    report->plan = plan;
    report->final_means = means;
    report->comm = std::move(comm);
    report->epoch_mean_loss = std::move(epoch_mean_loss);
  }
  return layout;
}

}  // namespace nomad
