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
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "nomad/dataset.hpp"
#include "nomad/error.hpp"
#include "nomad/knn.hpp"
#include "nomad/rng.hpp"

namespace nomad {

/// One evaluation result: value in [0, 1] plus the sampling standard error
/// (0 for exact computations).
struct MetricReport {
  std::string metric;
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t param = 0;   // k for NP, triplet count for triplets
  std::uint64_t sample = 0;  // evaluated points (0 = all)
  std::uint64_t seed = 0;

  std::string to_json() const {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "{\"metric\":\"%s\",\"value\":%.17g,\"stderr\":%.17g,"
                  "\"params\":{\"k\":%llu,\"sample\":%llu},\"seed\":%llu}",
                  metric.c_str(), value, std_error,
                  static_cast<unsigned long long>(param),
                  static_cast<unsigned long long>(sample),
                  static_cast<unsigned long long>(seed));
    return buf;
  }
};

namespace detail {

inline double sq_dist_rows(const float* a, const float* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    acc += diff * diff;
  }
  return acc;
}

inline double sq_dist_2d(const double* a, const double* b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

/// Exact k nearest ids of `target` among all other points under the given
/// squared-distance functor; ties broken by lower id. Result sorted by id
/// for cheap intersection.
template <typename DistFn>
std::vector<std::uint32_t> exact_knn_ids(std::size_t n, std::size_t target,
                                         std::size_t k, DistFn&& dist) {
  std::vector<std::pair<double, std::uint32_t>> cand;
  cand.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == target) continue;
    cand.emplace_back(dist(j), static_cast<std::uint32_t>(j));
  }
  std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
  std::vector<std::uint32_t> ids(k);
  for (std::size_t t = 0; t < k; ++t) ids[t] = cand[t].second;
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::size_t sorted_intersection_size(
    const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::size_t count = 0, ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] < b[ib])
      ++ia;
    else if (b[ib] < a[ia])
      ++ib;
    else
      ++count, ++ia, ++ib;
  }
  return count;
}

}  // namespace detail

/// Mean overlap between each evaluated point's k-neighborhood in the
/// high-dimensional space and in the layout, both exact brute force.
/// sample == 0 evaluates every point (std_error 0); otherwise `sample`
/// points are chosen uniformly without replacement and the sampling
/// standard error is reported.
inline MetricReport neighborhood_preservation(const VectorDataset& high,
                                              const LayoutMatrix& low,
                                              std::size_t k,
                                              std::size_t sample = 0,
                                              std::uint64_t seed = 0) {
  const std::size_t n = high.rows;
  if (low.rows != n)
    fail(ErrorKind::Parameter, "vector and layout row counts differ");
  if (k >= n) fail(ErrorKind::Parameter, "k must be < n");

  std::vector<std::uint32_t> evaluated;
  if (sample == 0 || sample >= n) {
    evaluated.resize(n);
    std::iota(evaluated.begin(), evaluated.end(), 0u);
    sample = 0;
  } else {
    // Partial Fisher-Yates: `sample` distinct points.
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    Rng rng(stream_seed(seed, 0x6e70 /* "np" */));
    for (std::size_t t = 0; t < sample; ++t) {
      const std::size_t pick = t + rng.uniform_index(n - t);
      std::swap(pool[t], pool[pick]);
      evaluated.push_back(pool[t]);
    }
  }

  double sum = 0.0, sum_sq = 0.0;
  for (std::uint32_t i : evaluated) {
    const auto hi = detail::exact_knn_ids(n, i, k, [&](std::size_t j) {
      return detail::sq_dist_rows(high.row(i), high.row(j), high.dims);
    });
    const auto lo = detail::exact_knn_ids(n, i, k, [&](std::size_t j) {
      return detail::sq_dist_2d(low.row(i), low.row(j));
    });
    const double overlap =
        static_cast<double>(detail::sorted_intersection_size(hi, lo)) /
        static_cast<double>(k);
    sum += overlap;
    sum_sq += overlap * overlap;
  }

  const double count = static_cast<double>(evaluated.size());
  MetricReport report;
  report.metric = "np";
  report.param = k;
  report.sample = sample;
  report.seed = seed;
  report.value = sum / count;
  if (sample != 0 && evaluated.size() > 1) {
    const double var =
        std::max(0.0, sum_sq / count - report.value * report.value);
    report.std_error = std::sqrt(var / count);
  }
  return report;
}

/// Same overlap score, but with the high-dimensional neighborhoods taken
/// from a prebuilt within-cluster ANN graph instead of exact search.
/// Reported under a distinct name so the approximation is never conflated
/// with the exact metric.
inline MetricReport neighborhood_preservation_ann(const KnnGraph& graph,
                                                  const LayoutMatrix& low,
                                                  std::size_t k) {
  const std::size_t n = graph.rows;
  if (low.rows != n)
    fail(ErrorKind::Parameter, "graph and layout row counts differ");
  if (k >= n) fail(ErrorKind::Parameter, "k must be < n");

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ann = graph.neighbors_of(i);
    const std::size_t have = std::min(k, ann.size());
    std::vector<std::uint32_t> hi(ann.begin(), ann.begin() + have);
    std::sort(hi.begin(), hi.end());
    const auto lo = detail::exact_knn_ids(n, i, k, [&](std::size_t j) {
      return detail::sq_dist_2d(low.row(i), low.row(j));
    });
    sum += static_cast<double>(detail::sorted_intersection_size(hi, lo)) /
           static_cast<double>(k);
  }

  MetricReport report;
  report.metric = "np-ann";
  report.param = k;
  report.value = sum / static_cast<double>(n);
  return report;
}

/// Probability that a random triplet (anchor a, comparisons b and c) has
/// the same ordering of d(a,b) vs d(a,c) in both spaces. Exact distance
/// ties count as agreement only when tied in both spaces.
inline MetricReport random_triplet_accuracy(const VectorDataset& high,
                                            const LayoutMatrix& low,
                                            std::size_t n_triplets,
                                            std::uint64_t seed = 0) {
  const std::size_t n = high.rows;
  if (low.rows != n)
    fail(ErrorKind::Parameter, "vector and layout row counts differ");
  if (n < 3) fail(ErrorKind::Parameter, "need at least 3 points");
  if (n_triplets < 1) fail(ErrorKind::Parameter, "need at least 1 triplet");

  Rng rng(stream_seed(seed, 0x747269 /* "tri" */));
  std::uint64_t agree = 0;
  for (std::size_t t = 0; t < n_triplets; ++t) {
    const std::size_t a = rng.uniform_index(n);
    std::size_t b = rng.uniform_index(n);
    while (b == a) b = rng.uniform_index(n);
    std::size_t c = rng.uniform_index(n);
    while (c == a || c == b) c = rng.uniform_index(n);

    const double hi_ab = detail::sq_dist_rows(high.row(a), high.row(b), high.dims);
    const double hi_ac = detail::sq_dist_rows(high.row(a), high.row(c), high.dims);
    const double lo_ab = detail::sq_dist_2d(low.row(a), low.row(b));
    const double lo_ac = detail::sq_dist_2d(low.row(a), low.row(c));

    const int hi_order = hi_ab < hi_ac ? -1 : (hi_ab > hi_ac ? 1 : 0);
    const int lo_order = lo_ab < lo_ac ? -1 : (lo_ab > lo_ac ? 1 : 0);
    if (hi_order == lo_order) ++agree;
  }

  MetricReport report;
  report.metric = "triplet";
  report.param = n_triplets;
  report.seed = seed;
  report.value =
      static_cast<double>(agree) / static_cast<double>(n_triplets);
  report.std_error = std::sqrt(report.value * (1.0 - report.value) /
                               static_cast<double>(n_triplets));
  return report;
}

}  // namespace nomad
