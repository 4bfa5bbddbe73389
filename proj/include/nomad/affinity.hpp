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

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nomad/error.hpp"
#include "nomad/kmeans.hpp"
#include "nomad/knn.hpp"
#include "nomad/rng.hpp"

namespace nomad {

/// Inverse-rank neighbor weights: rank t (1 = nearest) gets
/// exp(1/t) / sum_{s=1..k} exp(1/s). Strictly decreasing, sums to 1.
inline std::vector<double> inverse_rank_weights(std::size_t k) {
  if (k < 1) fail(ErrorKind::Parameter, "neighbor count must be >= 1");
  std::vector<double> weights(k);
  double total = 0.0;
  for (std::size_t t = 1; t <= k; ++t) {
    weights[t - 1] = std::exp(1.0 / static_cast<double>(t));
    total += weights[t - 1];
  }
  for (double& w : weights) w /= total;
  return weights;
}

/// The explicit conditional neighbor model p(j|i): each point's kNN list
/// carries inverse-rank weights in distance order. Points without
/// neighbors carry no weights and are excluded from head sampling.
struct ConditionalAffinity {
  std::size_t rows = 0;
  std::vector<std::uint32_t> offsets;       // rows + 1, same shape as graph
  std::vector<std::uint32_t> neighbors;     // ascending by distance
  std::vector<double> weights;              // p(j|i), parallel to neighbors
  std::vector<std::uint32_t> eligible_heads;  // points with >= 1 neighbor

  std::size_t neighbor_count(std::size_t i) const {
    return offsets[i + 1] - offsets[i];
  }
  std::span<const std::uint32_t> neighbors_of(std::size_t i) const {
    return {neighbors.data() + offsets[i], neighbor_count(i)};
  }
  std::span<const double> weights_of(std::size_t i) const {
    return {weights.data() + offsets[i], neighbor_count(i)};
  }
};

inline ConditionalAffinity build_affinity(const KnnGraph& graph) {
  ConditionalAffinity aff;
  aff.rows = graph.rows;
  aff.offsets = graph.offsets;
  aff.neighbors = graph.neighbors;
  aff.weights.resize(graph.neighbors.size());

  // Weight tables are shared across points with the same neighbor count.
  std::vector<std::vector<double>> table(graph.k + 1);
  for (std::size_t i = 0; i < graph.rows; ++i) {
    const std::size_t count = aff.neighbor_count(i);
    if (count == 0) continue;
    if (table[count].empty()) table[count] = inverse_rank_weights(count);
    const auto& w = table[count];
    for (std::size_t t = 0; t < count; ++t)
      aff.weights[aff.offsets[i] + t] = w[t];
    aff.eligible_heads.push_back(static_cast<std::uint32_t>(i));
  }
  return aff;
}

/// Uniform noise distribution over negative-edge tails, factored by cluster:
/// p(m in r) = sizes[r] / n.
struct NoiseModel {
  std::vector<double> cell_probs;
  std::vector<std::uint32_t> cell_counts;
  std::size_t total = 0;
  std::size_t negatives_per_head = 0;  // |M|
};

inline NoiseModel make_noise_model(const ClusterAssignment& clusters,
                                   std::size_t negatives_per_head) {
  if (negatives_per_head < 1)
    fail(ErrorKind::Parameter, "negatives per head must be >= 1");
  NoiseModel noise;
  noise.total = clusters.assignment.size();
  noise.cell_counts = clusters.sizes;
  noise.cell_probs.resize(clusters.n_clusters);
  for (std::size_t r = 0; r < clusters.n_clusters; ++r)
    noise.cell_probs[r] = static_cast<double>(clusters.sizes[r]) /
                          static_cast<double>(noise.total);
  noise.negatives_per_head = negatives_per_head;
  return noise;
}

/// I.i.d. uniform head draws over points with at least one neighbor.
inline std::vector<std::uint32_t> sample_heads(const ConditionalAffinity& aff,
                                               std::size_t count, Rng& rng) {
  if (aff.eligible_heads.empty())
    fail(ErrorKind::Config, "no point has any neighbor; nothing to train on");
  std::vector<std::uint32_t> heads(count);
  for (std::size_t t = 0; t < count; ++t)
    heads[t] = aff.eligible_heads[rng.uniform_index(aff.eligible_heads.size())];
  return heads;
}

/// I.i.d. uniform draws from an explicit eligible set (the caller restricts
/// eligibility, e.g. to one worker's shard).
inline std::vector<std::uint32_t> sample_noise_tails(
    std::span<const std::uint32_t> eligible, std::size_t count, Rng& rng) {
  if (eligible.empty())
    fail(ErrorKind::Parameter, "noise tail set must be non-empty");
  std::vector<std::uint32_t> tails(count);
  for (std::size_t t = 0; t < count; ++t)
    tails[t] = eligible[rng.uniform_index(eligible.size())];
  return tails;
}

}  // namespace nomad
