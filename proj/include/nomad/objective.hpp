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

#include "nomad/affinity.hpp"
#include "nomad/dataset.hpp"
#include "nomad/error.hpp"

namespace nomad {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Cauchy kernel between two 2-D positions: 1 / (1 + squared distance).
/// Range (0, 1], equal to 1 iff a == b.
inline double cauchy_kernel(const double* a, const double* b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double sq = dx * dx + dy * dy;
  return 1.0 / (1.0 + sq);
}

inline double cauchy_kernel(Vec2 a, Vec2 b) {
  const double pa[2] = {a.x, a.y};
  const double pb[2] = {b.x, b.y};
  return cauchy_kernel(pa, pb);
}

/// Per-sample noise-contrastive classification loss for one positive edge
/// (i, j) against negative tails M: -log(q(ij) / (q(ij) + sum_m q(im))).
/// The batch loss is the mean of this over sampled (edge, M) pairs.
inline double infonce_loss(const LayoutMatrix& layout, std::size_t i,
                           std::size_t j,
                           std::span<const std::uint32_t> negatives) {
  if (i == j) fail(ErrorKind::Parameter, "positive edge must not be a self-loop");
  const double q_ij = cauchy_kernel(layout.row(i), layout.row(j));
  double noise = 0.0;
  for (std::uint32_t m : negatives)
    noise += cauchy_kernel(layout.row(i), layout.row(m));
  return -std::log(q_ij / (q_ij + noise));
}

/// Low-dimensional per-cluster means exchanged between workers once per
/// epoch. Stale by at most one epoch during training.
struct ClusterMeans {
  std::vector<double> means;           // n_clusters * 2
  std::vector<std::uint32_t> counts;   // n_clusters
  std::uint64_t epoch_stamp = 0;

  std::size_t size() const { return counts.size(); }
  const double* mean(std::size_t r) const { return means.data() + r * 2; }
  double* mean(std::size_t r) { return means.data() + r * 2; }
};

/// One head's contribution to the surrogate loss: its weighted neighbor
/// list, the drawn local negatives, and the remote cells whose noise mass
/// is represented by their means. Remote cells and the local eligible set
/// partition the clusters; local_mass is the total noise probability of
/// the non-approximated (local) cells.
struct LossBatchSpec {
  std::uint32_t head = 0;
  std::span<const std::uint32_t> neighbors;
  std::span<const double> weights;            // p(j|i), same length
  std::span<const std::uint32_t> negatives;   // drawn local tails (s draws)
  std::span<const std::uint32_t> remote_cells;  // cluster ids in R-tilde
  std::span<const double> remote_probs;       // p(m in r), same length
  double local_mass = 1.0;
  std::size_t m_total = 0;                    // nominal |M|
};

/// Computes local_mass exactly from integer counts so that "no remote
/// cells" gives exactly 1 and "all cells remote" gives exactly 0.
inline double local_noise_mass(const NoiseModel& noise,
                               std::span<const std::uint32_t> remote_cells) {
  std::uint64_t remote_count = 0;
  for (std::uint32_t r : remote_cells) remote_count += noise.cell_counts[r];
  return static_cast<double>(noise.total - remote_count) /
         static_cast<double>(noise.total);
}

namespace detail {

/// Shared denominator pieces of the surrogate loss for one head.
/// mean_field = |M| * sum_r p(m in r) q(i, mu_r) over the approximated cells;
/// sampled    = |M| * local_mass * (mean over drawn tails of q(i, m)).
struct NoiseTerms {
  double mean_field = 0.0;   // M-tilde
  double sampled = 0.0;      // M-hat
  double sample_factor = 0.0;  // |M| * local_mass / s
  double total() const { return mean_field + sampled; }
};

inline NoiseTerms noise_terms(const LayoutMatrix& layout,
                              const LossBatchSpec& spec,
                              const ClusterMeans& means,
                              std::vector<double>* q_negatives,
                              std::vector<double>* q_remote) {
  if (spec.negatives.empty() && spec.local_mass != 0.0)
    fail(ErrorKind::Config,
         "no local negative draws but local noise mass is non-zero");

  NoiseTerms terms;
  const double* head = layout.row(spec.head);

  double remote_sum = 0.0;
  for (std::size_t t = 0; t < spec.remote_cells.size(); ++t) {
    const double q = cauchy_kernel(head, means.mean(spec.remote_cells[t]));
    if (q_remote) (*q_remote)[t] = q;
    remote_sum += spec.remote_probs[t] * q;
  }
  terms.mean_field = static_cast<double>(spec.m_total) * remote_sum;

  if (!spec.negatives.empty()) {
    terms.sample_factor = static_cast<double>(spec.m_total) * spec.local_mass /
                          static_cast<double>(spec.negatives.size());
    double q_sum = 0.0;
    for (std::size_t t = 0; t < spec.negatives.size(); ++t) {
      const double q = cauchy_kernel(head, layout.row(spec.negatives[t]));
      if (q_negatives) (*q_negatives)[t] = q;
      q_sum += q;
    }
    terms.sampled = terms.sample_factor * q_sum;
  }
  return terms;
}

}  // namespace detail

/// Surrogate loss for one head: the inverse-rank-weighted sum over its
/// neighbors of the noise-contrastive log-ratio, where remote cells
/// contribute through their means and local cells through drawn samples.
/// With no remote cells and s = |M| this reduces exactly to the weighted
/// sum of per-edge infonce_loss values over the same draws.
inline double nomad_loss(const LayoutMatrix& layout, const LossBatchSpec& spec,
                         const ClusterMeans& means) {
  const auto terms = detail::noise_terms(layout, spec, means, nullptr, nullptr);
  const double background = terms.total();
  const double* head = layout.row(spec.head);
  double loss = 0.0;
  for (std::size_t t = 0; t < spec.neighbors.size(); ++t) {
    const double q_ij = cauchy_kernel(head, layout.row(spec.neighbors[t]));
    loss += spec.weights[t] * -std::log(q_ij / (q_ij + background));
  }
  return loss;
}

/// Analytic gradient of nomad_loss with respect to the head, its neighbors
/// and the drawn negatives. Cluster means are treated as constants: remote
/// positions are not writable within an epoch, so no gradient flows to
/// them. Also carries the loss value so training can report it for free.
struct HeadGradient {
  double loss = 0.0;
  Vec2 head;
  std::vector<Vec2> neighbors;
  std::vector<Vec2> negatives;
};

inline void nomad_gradient_into(const LayoutMatrix& layout,
                                const LossBatchSpec& spec,
                                const ClusterMeans& means, HeadGradient& out,
                                std::vector<double>& q_neg_buf,
                                std::vector<double>& q_rem_buf) {
  q_neg_buf.resize(spec.negatives.size());
  q_rem_buf.resize(spec.remote_cells.size());
  const auto terms =
      detail::noise_terms(layout, spec, means, &q_neg_buf, &q_rem_buf);
  const double background = terms.total();
  const double* head = layout.row(spec.head);

  out.loss = 0.0;
  out.head = Vec2{};
  out.neighbors.assign(spec.neighbors.size(), Vec2{});
  out.negatives.assign(spec.negatives.size(), Vec2{});

  // Attractive terms, plus the shared sensitivity of the loss to the
  // background noise mass: d(loss)/d(background) = sum_j w_j / (q_ij + bg).
  double bg_sens = 0.0;
  for (std::size_t t = 0; t < spec.neighbors.size(); ++t) {
    const double* other = layout.row(spec.neighbors[t]);
    const double q_ij = cauchy_kernel(head, other);
    const double w = spec.weights[t];
    out.loss += w * -std::log(q_ij / (q_ij + background));
    bg_sens += w / (q_ij + background);

    const double pull = 2.0 * w * (1.0 / q_ij - 1.0 / (q_ij + background)) *
                        q_ij * q_ij;
    const double dx = head[0] - other[0];
    const double dy = head[1] - other[1];
    out.head.x += pull * dx;
    out.head.y += pull * dy;
    out.neighbors[t].x = -pull * dx;
    out.neighbors[t].y = -pull * dy;
  }

  // Repulsion from drawn local negatives.
  for (std::size_t t = 0; t < spec.negatives.size(); ++t) {
    const double* other = layout.row(spec.negatives[t]);
    const double q_im = q_neg_buf[t];
    const double push = 2.0 * bg_sens * terms.sample_factor * q_im * q_im;
    const double dx = head[0] - other[0];
    const double dy = head[1] - other[1];
    out.head.x -= push * dx;
    out.head.y -= push * dy;
    out.negatives[t].x = push * dx;
    out.negatives[t].y = push * dy;
  }

  // Repulsion from remote cluster means (constants).
  for (std::size_t t = 0; t < spec.remote_cells.size(); ++t) {
    const double* mu = means.mean(spec.remote_cells[t]);
    const double q_ir = q_rem_buf[t];
    const double push = 2.0 * bg_sens * static_cast<double>(spec.m_total) *
                        spec.remote_probs[t] * q_ir * q_ir;
    out.head.x -= push * (head[0] - mu[0]);
    out.head.y -= push * (head[1] - mu[1]);
  }
}

inline HeadGradient nomad_gradient(const LayoutMatrix& layout,
                                   const LossBatchSpec& spec,
                                   const ClusterMeans& means) {
  HeadGradient out;
  std::vector<double> q_neg, q_rem;
  nomad_gradient_into(layout, spec, means, out, q_neg, q_rem);
  return out;
}

/// Exact expectation over all |M|-tuples (with repetition) of noise tails
/// of log(q(ij) + sum_m q(im)). Brute-force enumeration for bound tests;
/// guarded to at most 10^7 tuples.
inline double enumerate_infonce_expectation(
    const LayoutMatrix& layout, std::size_t i, std::size_t j,
    std::span<const std::uint32_t> tails, std::size_t m_count) {
  if (tails.empty()) fail(ErrorKind::Parameter, "tail set must be non-empty");
  double combos = 1.0;
  for (std::size_t t = 0; t < m_count; ++t) {
    combos *= static_cast<double>(tails.size());
    if (combos > 1e7) fail(ErrorKind::Size, "too many noise tuples to enumerate");
  }

  const double q_ij = cauchy_kernel(layout.row(i), layout.row(j));
  std::vector<double> q(tails.size());
  for (std::size_t t = 0; t < tails.size(); ++t)
    q[t] = cauchy_kernel(layout.row(i), layout.row(tails[t]));

  std::vector<std::size_t> pick(m_count, 0);
  double total = 0.0;
  std::size_t tuples = 0;
  for (;;) {
    double noise = 0.0;
    for (std::size_t t = 0; t < m_count; ++t) noise += q[pick[t]];
    total += std::log(q_ij + noise);
    ++tuples;
    std::size_t pos = 0;
    while (pos < m_count && ++pick[pos] == tails.size()) {
      pick[pos] = 0;
      ++pos;
    }
    if (pos == m_count) break;
  }
  return total / static_cast<double>(tuples);
}

/// Absolute error of the mean-substitution step for one cell:
/// | mean_m q(im) - q(i, mean_m theta_m) |. Decays quadratically as the
/// cell shrinks toward its mean.
inline double taylor_gap(const LayoutMatrix& layout, std::size_t i,
                         std::span<const std::uint32_t> cell) {
  if (cell.empty()) fail(ErrorKind::Parameter, "cell must be non-empty");
  const double* head = layout.row(i);
  double q_mean = 0.0;
  double mu[2] = {0.0, 0.0};
  for (std::uint32_t m : cell) {
    const double* p = layout.row(m);
    q_mean += cauchy_kernel(head, p);
    mu[0] += p[0];
    mu[1] += p[1];
  }
  q_mean /= static_cast<double>(cell.size());
  mu[0] /= static_cast<double>(cell.size());
  mu[1] /= static_cast<double>(cell.size());
  return std::fabs(q_mean - cauchy_kernel(head, mu));
}

}  // namespace nomad
