// Copyright 2026 The softmar Authors.
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

#include "mar/softlabel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mar/error.hpp"
#include "mar/parallel.hpp"

namespace mar {

AgentBank AgentBank::random(std::size_t count, Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  AgentBank bank;
  bank.vectors.resize(static_cast<Eigen::Index>(count), dim);
  for (Eigen::Index i = 0; i < bank.vectors.rows(); ++i) {
    Vec v(dim);
    do {
      for (Eigen::Index k = 0; k < dim; ++k) v[k] = gauss(rng);
    } while (v.norm() <= kNormEpsilon);
    bank.vectors.row(i) = normalize(v).coords().transpose();
  }
  bank.constrained = true;
  return bank;
}

double AgentBank::max_norm_deviation() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < vectors.rows(); ++i)
    worst = std::max(worst, std::abs(vectors.row(i).norm() - 1.0));
  return worst;
}

namespace {

void check_bank(const Vec& embedding, const AgentBank& agents, double scale) {
  if (agents.size() == 0) throw Error(ErrorCode::kEmptyAgentBank, "no reference agents");
  if (agents.dim() != embedding.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "agents have dimension " + std::to_string(agents.dim()) +
                    ", embedding has " + std::to_string(embedding.size()));
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidScale, "logit scale must be positive");
  }
}

}  // namespace

SoftMultilabel soft_multilabel(const Vec& embedding, const AgentBank& agents, double scale) {
  check_bank(embedding, agents, scale);
  Vec logits = scale * (agents.vectors * embedding);
  const double top = logits.maxCoeff();
  Vec e = (logits.array() - top).exp().matrix();
  return SoftMultilabel{e / e.sum()};
}

void soft_multilabel_backward(const Vec& embedding, const AgentBank& agents, double scale,
                              const SoftMultilabel& y, const Vec& grad_y,
                              Vec& grad_embedding, Mat& grad_agents) {
  // dL/dz_k = y_k (g_k - <y, g>) for z = scale * A f.
  const Vec grad_z = (y.values.array() * (grad_y.array() - y.values.dot(grad_y))).matrix();
  grad_embedding.noalias() += scale * (agents.vectors.transpose() * grad_z);
  grad_agents.noalias() += scale * grad_z * embedding.transpose();
}

double agreement(const SoftMultilabel& a, const SoftMultilabel& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "soft multilabels differ in length");
  }
  return a.values.cwiseMin(b.values).sum();
}

PairTable pairwise_agreements(std::span<const SoftMultilabel> labels, int threads) {
  const std::size_t n = labels.size();
  if (n < 2) throw Error(ErrorCode::kBatchTooSmall, "need at least 2 labels");
  PairTable table(n);
  parallel_for(n - 1, threads, [&](std::size_t i) {
    std::size_t k = table.index(i, i + 1);
    for (std::size_t j = i + 1; j < n; ++j, ++k) table[k] = agreement(labels[i], labels[j]);
  });
  return table;
}

namespace {

Moments moments_of(const std::vector<Vec>& logs, const std::vector<std::size_t>& members) {
  Moments m;
  m.count = members.size();
  m.mean = Vec::Zero(logs[members.front()].size());
  for (std::size_t s : members) m.mean += logs[s];
  m.mean /= static_cast<double>(m.count);
  Vec var = Vec::Zero(m.mean.size());
  for (std::size_t s : members) var += (logs[s] - m.mean).array().square().matrix();
  m.stddev = (var / static_cast<double>(m.count)).array().sqrt().matrix();
  return m;
}

}  // namespace

ViewStats view_stats(std::span<const SoftMultilabel> labels, std::span<const int> views) {
  if (labels.size() != views.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "labels and view ids differ in length");
  }
  ViewStats stats;
  stats.views.assign(views.begin(), views.end());
  stats.log_labels.reserve(labels.size());
  for (const auto& y : labels) {
    if (!stats.log_labels.empty() && y.size() != stats.log_labels.front().size()) {
      throw Error(ErrorCode::kDimensionMismatch, "soft multilabels differ in length");
    }
    stats.log_labels.push_back((y.values.array() + kLogEpsilon).log().matrix());
  }

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t s = 0; s < views.size(); ++s) members[views[s]].push_back(s);

  stats.included.assign(labels.size(), false);
  std::vector<std::size_t> all;
  for (const auto& [view, idx] : members) {
    if (idx.size() < 2) continue;
    stats.per_view[view] = moments_of(stats.log_labels, idx);
    for (std::size_t s : idx) stats.included[s] = true;
  }
  for (std::size_t s = 0; s < labels.size(); ++s)
    if (stats.included[s]) all.push_back(s);
  if (all.empty()) {
    throw Error(ErrorCode::kNoValidViews, "every view has fewer than 2 samples");
  }
  stats.global = moments_of(stats.log_labels, all);
  return stats;
}

CmlResult cml_loss(const ViewStats& stats) {
  CmlResult result;
  const Moments& g = stats.global;
  const Eigen::Index dims = g.mean.size();
  const double total = static_cast<double>(g.count);

  Vec sum_mean_gap = Vec::Zero(dims);
  Vec sum_std_gap = Vec::Zero(dims);
  for (const auto& [view, m] : stats.per_view) {
    const Vec dmu = m.mean - g.mean;
    const Vec dsigma = m.stddev - g.stddev;
    result.loss += dmu.squaredNorm() + dsigma.squaredNorm();
    sum_mean_gap += dmu;
    sum_std_gap += dsigma;
  }

  result.grad_log_labels.assign(stats.log_labels.size(), Vec::Zero(dims));
  for (std::size_t s = 0; s < stats.log_labels.size(); ++s) {
    if (!stats.included[s]) continue;
    const Moments& m = stats.per_view.at(stats.views[s]);
    const double count = static_cast<double>(m.count);
    const Vec& l = stats.log_labels[s];
    Vec& grad = result.grad_log_labels[s];
    for (Eigen::Index k = 0; k < dims; ++k) {
      // Mean terms: the sample moves its own view mean and the global mean.
      double d = 2.0 * (m.mean[k] - g.mean[k]) / count - 2.0 * sum_mean_gap[k] / total;
      // Std terms; a zero std contributes a zero subgradient.
      if (m.stddev[k] > 0.0) {
        d += 2.0 * (m.stddev[k] - g.stddev[k]) * (l[k] - m.mean[k]) / (count * m.stddev[k]);
      }
      if (g.stddev[k] > 0.0) {
        d -= 2.0 * sum_std_gap[k] * (l[k] - g.mean[k]) / (total * g.stddev[k]);
      }
      grad[k] = d;
    }
  }
  return result;
}

CmlObjective cml_objective(std::span<const Vec> embeddings, std::span<const int> views,
                           const AgentBank& agents, double scale) {
  std::vector<SoftMultilabel> labels;
  labels.reserve(embeddings.size());
  for (const auto& f : embeddings) labels.push_back(soft_multilabel(f, agents, scale));

  const ViewStats stats = view_stats(labels, views);
  const CmlResult cml = cml_loss(stats);

  CmlObjective out;
  out.loss = cml.loss;
  out.grad_agents = Mat::Zero(agents.vectors.rows(), agents.vectors.cols());
  out.grad_embeddings.assign(embeddings.size(), Vec::Zero(agents.dim()));
  for (std::size_t s = 0; s < embeddings.size(); ++s) {
    if (!stats.included[s]) continue;
    const Vec grad_y =
        (cml.grad_log_labels[s].array() / (labels[s].values.array() + kLogEpsilon)).matrix();
    soft_multilabel_backward(embeddings[s], agents, scale, labels[s], grad_y,
                             out.grad_embeddings[s], out.grad_agents);
  }
  return out;
}

}  // namespace mar
