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

#ifndef MAR_AGENTS_HPP_
#define MAR_AGENTS_HPP_

#include <span>
#include <vector>

#include "mar/agent_bank.hpp"
#include "mar/geometry.hpp"

namespace mar {

struct AgentLossResult {
  double loss = 0.0;
  std::vector<Vec> grad_embeddings;
  Mat grad_agents;
};

// Mean cross-entropy of softmax(scale * A f(z_k)) against the person label
// w_k. Labels index rows of the bank (0-based).
AgentLossResult al_loss(std::span<const Vec> aux_embeddings, std::span<const int> labels,
                        const AgentBank& agents, double scale);

struct RjResult {
  double loss = 0.0;
  double hinge = 0.0;   // mean of [m - |a_i - f(x_j)|^2]_+ over mined (i, j)
  double center = 0.0;  // mean of |a_{w_k} - f(z_k)|^2 over auxiliary samples
  std::size_t hinge_terms = 0;
  std::size_t center_terms = 0;
  std::vector<Vec> grad_target;
  std::vector<Vec> grad_aux;
  Mat grad_agents;
};

// Cross-domain joint embedding loss. For each agent a_i, target samples with
// |a_i - f(x_j)|^2 < m are pushed out to the margin while the auxiliary
// samples of person i are pulled onto a_i. The two sums are averaged
// separately over their contributing terms; an empty sum contributes 0.
RjResult rj_loss(const AgentBank& agents, std::span<const Vec> target_embeddings,
                 std::span<const Vec> aux_embeddings, std::span<const int> labels,
                 double margin);

inline double ral_loss(double al, double rj, double beta) { return al + beta * rj; }

// Projects every agent back onto the unit sphere.
AgentBank renormalize_agents(AgentBank agents);

}  // namespace mar

#endif  // MAR_AGENTS_HPP_
