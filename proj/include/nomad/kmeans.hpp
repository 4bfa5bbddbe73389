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
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "nomad/dataset.hpp"
#include "nomad/error.hpp"
#include "nomad/rng.hpp"

namespace nomad {

/// A partition of the dataset into non-empty clusters, with per-cluster
/// centroids in the high-dimensional space.
struct ClusterAssignment {
  std::vector<std::uint32_t> assignment;  // n entries in [0, n_clusters)
  std::size_t n_clusters = 0;
  std::size_t dims = 0;
  std::vector<double> centroids;          // n_clusters * dims
  std::vector<std::uint32_t> sizes;       // n_clusters

  const double* centroid(std::size_t r) const {
    return centroids.data() + r * dims;
  }
  double* centroid(std::size_t r) { return centroids.data() + r * dims; }
};

namespace detail {

inline double sq_dist(const float* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = static_cast<double>(a[j]) - b[j];
    acc += diff * diff;
  }
  return acc;
}

inline std::uint32_t nearest_centroid(const ClusterAssignment& ca,
                                      const float* x) {
  std::uint32_t best = 0;
  double best_d = sq_dist(x, ca.centroid(0), ca.dims);
  for (std::size_t r = 1; r < ca.n_clusters; ++r) {
    const double d = sq_dist(x, ca.centroid(r), ca.dims);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(r);
    }
  }
  return best;
}

inline void recompute_sizes(const VectorDataset& data, ClusterAssignment& ca) {
  ca.sizes.assign(ca.n_clusters, 0);
  for (std::size_t i = 0; i < data.rows; ++i) ++ca.sizes[ca.assignment[i]];
}

inline void recompute_centroid(const VectorDataset& data, ClusterAssignment& ca,
                               std::uint32_t r) {
  double* c = ca.centroid(r);
  std::fill(c, c + ca.dims, 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    if (ca.assignment[i] != r) continue;
    const float* x = data.row(i);
    for (std::size_t j = 0; j < ca.dims; ++j) c[j] += static_cast<double>(x[j]);
    ++count;
  }
  if (count > 0)
    for (std::size_t j = 0; j < ca.dims; ++j) c[j] /= static_cast<double>(count);
}

inline void recompute_all_centroids(const VectorDataset& data,
                                    ClusterAssignment& ca) {
  std::fill(ca.centroids.begin(), ca.centroids.end(), 0.0);
  for (std::size_t i = 0; i < data.rows; ++i) {
    double* c = ca.centroid(ca.assignment[i]);
    const float* x = data.row(i);
    for (std::size_t j = 0; j < ca.dims; ++j) c[j] += static_cast<double>(x[j]);
  }
  for (std::size_t r = 0; r < ca.n_clusters; ++r) {
    if (ca.sizes[r] == 0) continue;
    double* c = ca.centroid(r);
    for (std::size_t j = 0; j < ca.dims; ++j)
      c[j] /= static_cast<double>(ca.sizes[r]);
  }
}

/// Gives every empty cluster the point farthest from its centroid in the
/// currently largest cluster (ties: lower cluster index / lower point id).
/// Keeps the partition's cells non-empty.
inline void repair_empty_clusters(const VectorDataset& data,
                                  ClusterAssignment& ca) {
  for (;;) {
    std::uint32_t empty = UINT32_MAX;
    for (std::size_t r = 0; r < ca.n_clusters; ++r) {
      if (ca.sizes[r] == 0) {
        empty = static_cast<std::uint32_t>(r);
        break;
      }
    }
    if (empty == UINT32_MAX) return;

    std::uint32_t donor = 0;
    for (std::size_t r = 1; r < ca.n_clusters; ++r)
      if (ca.sizes[r] > ca.sizes[donor]) donor = static_cast<std::uint32_t>(r);
    if (ca.sizes[donor] < 2)
      fail(ErrorKind::Internal, "no donor cluster available for repair");

    std::size_t victim = SIZE_MAX;
    double worst = -1.0;
    for (std::size_t i = 0; i < data.rows; ++i) {
      if (ca.assignment[i] != donor) continue;
      const double d = sq_dist(data.row(i), ca.centroid(donor), ca.dims);
      if (d > worst) {
        worst = d;
        victim = i;
      }
    }
    ca.assignment[victim] = empty;
    --ca.sizes[donor];
    ++ca.sizes[empty];
    recompute_centroid(data, ca, donor);
    recompute_centroid(data, ca, empty);
  }
}

}  // namespace detail

/// Mean squared distance of each point to its assigned centroid.
inline double quantization_error(const VectorDataset& data,
                                 const ClusterAssignment& ca) {
  double acc = 0.0;
  for (std::size_t i = 0; i < data.rows; ++i)
    acc += detail::sq_dist(data.row(i), ca.centroid(ca.assignment[i]), ca.dims);
  return acc / static_cast<double>(data.rows);
}

/// Scale-invariant default stopping tolerance for kmeans_em.
inline double default_kmeans_tol(const VectorDataset& data) {
  double acc = 0.0;
  for (float v : data.data) acc += static_cast<double>(v) * v;
  return 1e-6 * (acc / static_cast<double>(data.rows));
}

/// Seeds K-Means with a sign-random-projection hash: ceil(log2(4C)) Gaussian
/// hyperplanes through the data mean, points bucketed by their sign-bit
/// code, and the C most populous buckets' means used as initial centroids.
/// Buckets are split by random perturbation when fewer than C are non-empty.
inline ClusterAssignment lsh_init(const VectorDataset& data,
                                  std::size_t n_clusters, std::uint64_t seed) {
  const std::size_t n = data.rows, d = data.dims;
  if (n_clusters < 2 || n_clusters > n)
    fail(ErrorKind::Parameter,
         "cluster count must be in [2, n]; got " + std::to_string(n_clusters));

  Rng rng(stream_seed(seed, 0x6c7368 /* "lsh" */));

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float* x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += static_cast<double>(x[j]);
  }
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);

  const std::size_t n_planes = static_cast<std::size_t>(
      std::ceil(std::log2(4.0 * static_cast<double>(n_clusters))));
  std::vector<double> planes(n_planes * d);
  for (double& w : planes) w = rng.gaussian();

  // Hash every point to the sign bits of its centered projections.
  std::map<std::uint64_t, std::vector<std::uint32_t>> buckets;
  for (std::size_t i = 0; i < n; ++i) {
    const float* x = data.row(i);
    std::uint64_t code = 0;
    for (std::size_t p = 0; p < n_planes; ++p) {
      const double* w = planes.data() + p * d;
      double proj = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        proj += (static_cast<double>(x[j]) - mean[j]) * w[j];
      if (proj >= 0.0) code |= (1ull << p);
    }
    buckets[code].push_back(static_cast<std::uint32_t>(i));
  }

  // Most populous buckets first; code order breaks ties deterministically.
  std::vector<std::pair<std::uint64_t, const std::vector<std::uint32_t>*>> ranked;
  ranked.reserve(buckets.size());
  for (const auto& [code, members] : buckets) ranked.emplace_back(code, &members);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second->size() > b.second->size();
                   });

  ClusterAssignment ca;
  ca.n_clusters = n_clusters;
  ca.dims = d;
  ca.centroids.assign(n_clusters * d, 0.0);

  const std::size_t seeded = std::min(n_clusters, ranked.size());
  for (std::size_t r = 0; r < seeded; ++r) {
    double* c = ca.centroid(r);
    for (std::uint32_t i : *ranked[r].second) {
      const float* x = data.row(i);
      for (std::size_t j = 0; j < d; ++j) c[j] += static_cast<double>(x[j]);
    }
    for (std::size_t j = 0; j < d; ++j)
      c[j] /= static_cast<double>(ranked[r].second->size());
  }

  if (seeded < n_clusters) {
    // Not enough distinct codes: mint extra centroids by perturbing the
    // largest buckets' means.
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      scale += detail::sq_dist(data.row(i), mean.data(), d);
    scale = std::sqrt(scale / static_cast<double>(n)) * 1e-3 + 1e-12;
    std::size_t source = 0;
    for (std::size_t r = seeded; r < n_clusters; ++r) {
      const double* src = ca.centroid(source);
      double* c = ca.centroid(r);
      for (std::size_t j = 0; j < d; ++j) c[j] = src[j] + scale * rng.gaussian();
      source = (source + 1) % seeded;
    }
  }

  ca.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    ca.assignment[i] = detail::nearest_centroid(ca, data.row(i));
  detail::recompute_sizes(data, ca);
  detail::repair_empty_clusters(data, ca);
  return ca;
}

/// Lloyd iterations from a given assignment: reassign to nearest centroid,
/// recompute centroid means, repair empties. Stops when no assignment
/// changes, when the max squared centroid displacement drops below tol, or
/// after max_iters. The quantization error never increases between
/// iterations; pass qe_trace to observe the sequence.
inline ClusterAssignment kmeans_em(const VectorDataset& data,
                                   ClusterAssignment init,
                                   std::size_t max_iters = 100,
                                   double tol = 0.0,
                                   std::vector<double>* qe_trace = nullptr) {
  ClusterAssignment ca = std::move(init);
  if (ca.assignment.size() != data.rows || ca.dims != data.dims)
    fail(ErrorKind::Parameter, "init assignment does not match dataset");
  if (qe_trace) qe_trace->clear();

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    std::size_t changes = 0;
    for (std::size_t i = 0; i < data.rows; ++i) {
      const std::uint32_t best = detail::nearest_centroid(ca, data.row(i));
      if (best != ca.assignment[i]) {
        ca.assignment[i] = best;
        ++changes;
      }
    }
    detail::recompute_sizes(data, ca);

    std::vector<double> previous = ca.centroids;
    detail::recompute_all_centroids(data, ca);
    detail::repair_empty_clusters(data, ca);

    double max_move = 0.0;
    for (std::size_t r = 0; r < ca.n_clusters; ++r) {
      double move = 0.0;
      for (std::size_t j = 0; j < ca.dims; ++j) {
        const double diff = ca.centroid(r)[j] - previous[r * ca.dims + j];
        move += diff * diff;
      }
      max_move = std::max(max_move, move);
    }

    if (qe_trace) qe_trace->push_back(quantization_error(data, ca));
    if (changes == 0 || max_move < tol) break;
  }
  return ca;
}

}  // namespace nomad
