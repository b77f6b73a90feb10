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

#ifndef MAR_SOFTLABEL_HPP_
#define MAR_SOFTLABEL_HPP_

#include <map>
#include <span>
#include <vector>

#include "mar/agent_bank.hpp"
#include "mar/geometry.hpp"

namespace mar {

// Added to every label likelihood before taking its log.
inline constexpr double kLogEpsilon = 1e-12;

// Likelihood of an unlabeled sample belonging to each reference person; a
// point in the open simplex.
struct SoftMultilabel {
  Vec values;

  Eigen::Index size() const { return values.size(); }
  double operator[](Eigen::Index k) const { return values[k]; }
};

// softmax(scale * A f), evaluated with the largest logit subtracted.
SoftMultilabel soft_multilabel(const Vec& embedding, const AgentBank& agents, double scale);
inline SoftMultilabel soft_multilabel(const UnitVector& embedding, const AgentBank& agents,
                                      double scale) {
  return soft_multilabel(embedding.coords(), agents, scale);
}

// Given dL/dy for y = soft_multilabel(f, agents, scale), accumulates dL/df
// into grad_embedding and dL/dA into grad_agents.
void soft_multilabel_backward(const Vec& embedding, const AgentBank& agents, double scale,
                              const SoftMultilabel& y, const Vec& grad_y,
                              Vec& grad_embedding, Mat& grad_agents);

// Sum_k min(y_i[k], y_j[k]).
double agreement(const SoftMultilabel& a, const SoftMultilabel& b);

PairTable pairwise_agreements(std::span<const SoftMultilabel> labels, int threads = 1);

struct Moments {
  Vec mean;
  Vec stddev;  // population form
  std::size_t count = 0;
};

// Per-view and global moments of log(y + eps). Views with fewer than two
// samples are dropped; the global moments cover the samples of the views
// that remain.
struct ViewStats {
  std::map<int, Moments> per_view;
  Moments global;

  // Retained for differentiation, aligned with the input order.
  std::vector<Vec> log_labels;
  std::vector<int> views;
  std::vector<bool> included;
};

ViewStats view_stats(std::span<const SoftMultilabel> labels, std::span<const int> views);

struct CmlResult {
  double loss = 0.0;
  // dL/d log-label for each input sample (zero for excluded samples).
  std::vector<Vec> grad_log_labels;
};

// Sum_v |mu_v - mu|^2 + |sigma_v - sigma|^2.
CmlResult cml_loss(const ViewStats& stats);

struct CmlObjective {
  double loss = 0.0;
  std::vector<Vec> grad_embeddings;
  Mat grad_agents;
};

// cml_loss composed with soft_multilabel; gradients flow through the log and
// the softmax back to the embeddings and agents.
CmlObjective cml_objective(std::span<const Vec> embeddings, std::span<const int> views,
                           const AgentBank& agents, double scale);

}  // namespace mar

#endif  // MAR_SOFTLABEL_HPP_
