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
#include <cstdint>
#include <span>
#include <vector>

#include "nomad/dataset.hpp"
#include "nomad/error.hpp"
#include "nomad/kmeans.hpp"

namespace nomad {

/// Per-point neighbor lists, ascending by squared Euclidean distance.
/// Every edge stays inside its cluster, so each cluster is a component.
struct KnnGraph {
  std::size_t rows = 0;
  std::size_t k = 0;                       // requested neighbor count
  std::vector<std::uint32_t> offsets;      // rows + 1
  std::vector<std::uint32_t> neighbors;    // concatenated lists
  std::vector<double> distances;           // squared, parallel to neighbors

  std::size_t neighbor_count(std::size_t i) const {
    return offsets[i + 1] - offsets[i];
  }
  std::span<const std::uint32_t> neighbors_of(std::size_t i) const {
    return {neighbors.data() + offsets[i], neighbor_count(i)};
  }
  std::span<const double> distances_of(std::size_t i) const {
    return {distances.data() + offsets[i], neighbor_count(i)};
  }
};

namespace detail {

inline double sq_dist_ff(const float* a, const float* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    acc += diff * diff;
  }
  return acc;
}

}  // namespace detail

/// Exact k nearest same-cluster points for every point, by brute force
/// within each cluster. Ties broken by lower point id. A point in a
/// singleton cluster gets an empty list.
inline KnnGraph build_knn(const VectorDataset& data,
                          const ClusterAssignment& clusters, std::size_t k) {
  if (k < 1) fail(ErrorKind::Parameter, "k must be >= 1");
  const std::size_t n = data.rows;

  std::vector<std::vector<std::uint32_t>> members(clusters.n_clusters);
  for (std::size_t i = 0; i < n; ++i)
    members[clusters.assignment[i]].push_back(static_cast<std::uint32_t>(i));

  KnnGraph graph;
  graph.rows = n;
  graph.k = k;
  graph.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t size = clusters.sizes[clusters.assignment[i]];
    graph.offsets[i + 1] =
        graph.offsets[i] +
        static_cast<std::uint32_t>(std::min(k, size - 1));
  }
  graph.neighbors.resize(graph.offsets[n]);
  graph.distances.resize(graph.offsets[n]);

  std::vector<std::pair<double, std::uint32_t>> candidates;
  for (const auto& cell : members) {
    for (std::uint32_t i : cell) {
      const std::size_t want = std::min(k, cell.size() - 1);
      if (want == 0) continue;
      candidates.clear();
      for (std::uint32_t j : cell) {
        if (j == i) continue;
        candidates.emplace_back(
            detail::sq_dist_ff(data.row(i), data.row(j), data.dims), j);
      }
      std::partial_sort(candidates.begin(), candidates.begin() + want,
                        candidates.end());
      std::uint32_t* out_n = graph.neighbors.data() + graph.offsets[i];
      double* out_d = graph.distances.data() + graph.offsets[i];
      for (std::size_t t = 0; t < want; ++t) {
        out_n[t] = candidates[t].second;
        out_d[t] = candidates[t].first;
      }
    }
  }
  return graph;
}

}  // namespace nomad
