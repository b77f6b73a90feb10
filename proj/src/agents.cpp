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

#include "mar/agents.hpp"

#include <cmath>
#include <string>

#include "mar/error.hpp"
#include "mar/softlabel.hpp"

namespace mar {

namespace {

void check_labels(std::span<const Vec> embeddings, std::span<const int> labels,
                  const AgentBank& agents) {
  if (embeddings.size() != labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "embeddings and labels differ in length");
  }
  for (int w : labels) {
    if (w < 0 || static_cast<std::size_t>(w) >= agents.size()) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "label " + std::to_string(w) + " outside [0, " +
                      std::to_string(agents.size()) + ")");
    }
  }
}

}  // namespace

AgentLossResult al_loss(std::span<const Vec> aux_embeddings, std::span<const int> labels,
                        const AgentBank& agents, double scale) {
  if (agents.size() == 0) throw Error(ErrorCode::kEmptyAgentBank, "no reference agents");
  check_labels(aux_embeddings, labels, agents);

  AgentLossResult r;
  r.grad_agents = Mat::Zero(agents.vectors.rows(), agents.vectors.cols());
  r.grad_embeddings.reserve(aux_embeddings.size());
  if (aux_embeddings.empty()) return r;

  const double inv_n = 1.0 / static_cast<double>(aux_embeddings.size());
  for (std::size_t k = 0; k < aux_embeddings.size(); ++k) {
    const Vec& f = aux_embeddings[k];
    const SoftMultilabel y = soft_multilabel(f, agents, scale);
    const int w = labels[k];
    // -log y_w as log-sum-exp minus the true logit, so an underflowed y_w
    // stays finite.
    const Vec logits = scale * (agents.vectors * f);
    const double top = logits.maxCoeff();
    const double lse = top + std::log((logits.array() - top).exp().sum());
    r.loss += (lse - logits[w]) * inv_n;
    // Cross-entropy through softmax: dL/dz = (y - onehot) / n.
    Vec grad_z = y.values * inv_n;
    grad_z[w] -= inv_n;
    r.grad_embeddings.push_back(scale * (agents.vectors.transpose() * grad_z));
    r.grad_agents.noalias() += scale * grad_z * f.transpose();
  }
  return r;
}

RjResult rj_loss(const AgentBank& agents, std::span<const Vec> target_embeddings,
                 std::span<const Vec> aux_embeddings, std::span<const int> labels,
                 double margin) {
  if (!(margin > 0.0)) throw Error(ErrorCode::kInvalidConfig, "margin must be positive");
  check_labels(aux_embeddings, labels, agents);

  RjResult r;
  r.grad_agents = Mat::Zero(agents.vectors.rows(), agents.vectors.cols());
  r.grad_target.assign(target_embeddings.size(), Vec::Zero(agents.dim()));
  r.grad_aux.assign(aux_embeddings.size(), Vec::Zero(agents.dim()));

  // Mined cross-domain pairs: strict inequality, so a pair at the margin is
  // neither mined nor carries a hinge gradient.
  std::vector<std::pair<std::size_t, std::size_t>> mined;
  std::vector<double> gaps;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Vec a = agents.agent(i).transpose();
    for (std::size_t j = 0; j < target_embeddings.size(); ++j) {
      const double d2 = (a - target_embeddings[j]).squaredNorm();
      if (d2 < margin) {
        mined.emplace_back(i, j);
        gaps.push_back(margin - d2);
      }
    }
  }
  r.hinge_terms = mined.size();
  if (!mined.empty()) {
    const double inv = 1.0 / static_cast<double>(mined.size());
    for (std::size_t t = 0; t < mined.size(); ++t) {
      const auto [i, j] = mined[t];
      r.hinge += gaps[t] * inv;
      // d(m - |a - f|^2)/da = -2 (a - f)
      const Vec diff = agents.agent(i).transpose() - target_embeddings[j];
      r.grad_agents.row(static_cast<Eigen::Index>(i)) -= (2.0 * inv) * diff.transpose();
      r.grad_target[j] += (2.0 * inv) * diff;
    }
  }

  r.center_terms = aux_embeddings.size();
  if (!aux_embeddings.empty()) {
    const double inv = 1.0 / static_cast<double>(aux_embeddings.size());
    for (std::size_t k = 0; k < aux_embeddings.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(labels[k]);
      const Vec diff = agents.vectors.row(i).transpose() - aux_embeddings[k];
      r.center += diff.squaredNorm() * inv;
      r.grad_agents.row(i) += (2.0 * inv) * diff.transpose();
      r.grad_aux[k] -= (2.0 * inv) * diff;
    }
  }
  r.loss = r.hinge + r.center;
  return r;
}

AgentBank renormalize_agents(AgentBank agents) {
  for (Eigen::Index i = 0; i < agents.vectors.rows(); ++i) {
    const Vec row = agents.vectors.row(i).transpose();
    agents.vectors.row(i) = normalize(row).coords().transpose();
  }
  agents.constrained = true;
  return agents;
}

}  // namespace mar
