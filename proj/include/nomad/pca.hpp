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
#include <vector>

#include "nomad/dataset.hpp"
#include "nomad/error.hpp"
#include "nomad/rng.hpp"

namespace nomad {

namespace detail {

/// y = Cov * v without materializing the covariance: two passes over the
/// centered data (t = Xc v, then y = Xc^T t / n). Works for both n >= d
/// and n < d, which subsumes the Gram-matrix route.
inline void covariance_apply(const VectorDataset& data,
                             const std::vector<double>& mean,
                             const std::vector<double>& v,
                             std::vector<double>& scratch_n,
                             std::vector<double>& out) {
  const std::size_t n = data.rows, d = data.dims;
  for (std::size_t i = 0; i < n; ++i) {
    const float* x = data.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      acc += (static_cast<double>(x[j]) - mean[j]) * v[j];
    scratch_n[i] = acc;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float* x = data.row(i);
    const double t = scratch_n[i];
    for (std::size_t j = 0; j < d; ++j)
      out[j] += (static_cast<double>(x[j]) - mean[j]) * t;
  }
  for (std::size_t j = 0; j < d; ++j) out[j] /= static_cast<double>(n);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
  return acc;
}

inline double normalize(std::vector<double>& v) {
  const double norm = std::sqrt(dot(v, v));
  if (norm > 0.0)
    for (double& x : v) x /= norm;
  return norm;
}

}  // namespace detail

/// Projects mean-centered data onto its top-2 principal components
/// (power iteration with deflation, then a 2x2 Rayleigh-Ritz polish),
/// standardizes each output column to unit standard deviation, and fixes
/// signs so the largest-magnitude loading of each component is positive.
///
/// Rank-1 inputs get a small deterministic uniform jitter in the second
/// coordinate instead of failing; zero-variance inputs are an error.
inline LayoutMatrix pca_init(const VectorDataset& data, std::uint64_t seed = 0) {
  const std::size_t n = data.rows, d = data.dims;
  if (n < 2) fail(ErrorKind::Parameter, "need at least 2 rows");
  Rng rng(stream_seed(seed, 0x706361 /* "pca" */));

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float* x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += static_cast<double>(x[j]);
  }
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);

  double total_var = 0.0, total_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const float* x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = static_cast<double>(x[j]) - mean[j];
      total_var += c * c;
      total_sq += static_cast<double>(x[j]) * static_cast<double>(x[j]);
    }
  }
  total_var /= static_cast<double>(n);
  total_sq /= static_cast<double>(n);
  if (total_var <= 1e-18 * std::max(1.0, total_sq))
    fail(ErrorKind::Degenerate, "data has zero variance");

  std::vector<double> scratch(n), applied(d);
  std::vector<std::vector<double>> basis(2, std::vector<double>(d));
  double eigen[2] = {0.0, 0.0};

  for (int comp = 0; comp < 2; ++comp) {
    std::vector<double>& v = basis[comp];
    for (double& x : v) x = rng.gaussian();
    if (comp == 1) {
      const double overlap = detail::dot(v, basis[0]);
      for (std::size_t j = 0; j < d; ++j) v[j] -= overlap * basis[0][j];
    }
    if (detail::normalize(v) == 0.0) continue;

    std::vector<double> prev(d);
    for (std::size_t iter = 0; iter < 3000; ++iter) {
      prev = v;
      detail::covariance_apply(data, mean, v, scratch, applied);
      if (comp == 1) {
        const double overlap = detail::dot(applied, basis[0]);
        for (std::size_t j = 0; j < d; ++j) applied[j] -= overlap * basis[0][j];
      }
      v = applied;
      if (detail::normalize(v) == 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        break;
      }
      double drift = 0.0;
      const double align = detail::dot(v, prev) < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = v[j] - align * prev[j];
        drift += diff * diff;
      }
      if (drift < 1e-30) break;
    }
    detail::covariance_apply(data, mean, v, scratch, applied);
    eigen[comp] = detail::dot(v, applied);
  }

  // Rayleigh-Ritz in span{v1, v2}: diagonalize the projected 2x2 problem so
  // the output directions are orthogonal to machine precision.
  if (detail::dot(basis[1], basis[1]) > 0.0) {
    const double overlap = detail::dot(basis[1], basis[0]);
    for (std::size_t j = 0; j < d; ++j) basis[1][j] -= overlap * basis[0][j];
    if (detail::normalize(basis[1]) > 0.0) {
      std::vector<double> ca(d), cb(d);
      detail::covariance_apply(data, mean, basis[0], scratch, ca);
      detail::covariance_apply(data, mean, basis[1], scratch, cb);
      const double h00 = detail::dot(basis[0], ca);
      const double h01 = detail::dot(basis[0], cb);
      const double h11 = detail::dot(basis[1], cb);
      const double half_gap = 0.5 * (h00 - h11);
      const double root = std::sqrt(half_gap * half_gap + h01 * h01);
      eigen[0] = 0.5 * (h00 + h11) + root;
      eigen[1] = 0.5 * (h00 + h11) - root;
      double c = 1.0, s = 0.0;
      if (std::fabs(h01) > 1e-300) {
        const double t = eigen[0] - h00;
        const double len = std::sqrt(h01 * h01 + t * t);
        c = h01 / len;
        s = t / len;
      } else if (h11 > h00) {
        c = 0.0;
        s = 1.0;
      }
      std::vector<double> first(d), second(d);
      for (std::size_t j = 0; j < d; ++j) {
        first[j] = c * basis[0][j] + s * basis[1][j];
        second[j] = -s * basis[0][j] + c * basis[1][j];
      }
      basis[0] = first;
      basis[1] = second;
    }
  }

  // Deterministic sign: the largest-magnitude loading of each component is
  // positive (ties resolved at the lowest index).
  for (auto& v : basis) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j)
      if (std::fabs(v[j]) > std::fabs(v[arg])) arg = j;
    if (v[arg] < 0.0)
      for (double& x : v) x = -x;
  }

  LayoutMatrix layout = LayoutMatrix::zeros(n);
  const bool rank_deficient = eigen[1] <= 1e-12 * std::max(eigen[0], 0.0);
  for (int comp = 0; comp < 2; ++comp) {
    if (comp == 1 && rank_deficient) {
      for (std::size_t i = 0; i < n; ++i)
        layout.row(i)[1] = rng.uniform(-1e-4, 1e-4);
      break;
    }
    double col_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const float* x = data.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        acc += (static_cast<double>(x[j]) - mean[j]) * basis[comp][j];
      layout.row(i)[comp] = acc;
      col_mean += acc;
    }
    col_mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = layout.row(i)[comp] - col_mean;
      var += c * c;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd > 0.0)
      for (std::size_t i = 0; i < n; ++i) layout.row(i)[comp] /= sd;
  }
  return layout;
}

}  // namespace nomad
