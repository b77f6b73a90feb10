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

// Small fixed training instances shared by the unit tests and the acceptance
// binary.
#ifndef MAR_TESTS_INSTANCES_HPP_
#define MAR_TESTS_INSTANCES_HPP_

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mar/agents.hpp"
#include "mar/config.hpp"
#include "mar/evalset.hpp"
#include "mar/trainer.hpp"
#include "oracles.hpp"

namespace inst {

using mar::BatchData;
using mar::ObjectiveWeights;
using mar::TrainConfig;
using mar::TrainState;
using mar::Vec;

struct Instance {
  TrainConfig config;
  TrainState state;
  BatchData batch;
};

// 6 target samples over 2 views, 6 auxiliary samples of 3 reference persons,
// d_in = 5, d_out = 4. The ratio is large enough that both mined sets are
// non-empty, and the margin catches some target-agent pairs.
inline Instance gradient_instance(std::uint32_t depth = 1, std::uint64_t seed = 3) {
  Instance in;
  TrainConfig& c = in.config;
  c.d_in = 5;
  c.d_h = 6;
  c.d_out = 4;
  c.depth = depth;
  c.p = 0.4;
  c.m = 1.2;
  c.seed = seed;
  in.state = TrainState::initial(c, 3);
  in.state.agents = mar::renormalize_agents(in.state.agents);
  in.state.phase = mar::Phase::kConstrained;
  in.state.scale = 2.5;

  std::mt19937_64 rng(seed * 31 + 1);
  for (int k = 0; k < 6; ++k) {
    in.batch.target.push_back(oracle::random_vec(rng, 5));
    in.batch.views.push_back(1 + k % 2);
    in.batch.aux.push_back(oracle::random_vec(rng, 5));
    in.batch.labels.push_back(k % 3);
  }
  return in;
}

struct GradientReport {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_relative = 0.0;
  std::string first_failure;
};

// Central differences of the weighted objective over every encoder
// parameter and every agent coordinate.
inline GradientReport check_objective(const Instance& in, const ObjectiveWeights& w) {
  TrainState state = in.state;
  const mar::Evaluation ev = mar::evaluate_objective(state, in.config, in.batch, w);
  auto loss = [&] { return mar::evaluate_objective(state, in.config, in.batch, w).losses.total; };

  GradientReport r;
  auto visit = [&](double* x, double analytic, const std::string& name) {
    const double numeric = oracle::central_difference(loss, x);
    ++r.checked;
    if (std::abs(analytic) >= 1e-6) {
      r.worst_relative = std::max(r.worst_relative, std::abs(analytic - numeric) /
                                                        std::max(std::abs(analytic), std::abs(numeric)));
    }
    if (!oracle::gradient_close(analytic, numeric)) {
      if (r.failed++ == 0) {
        r.first_failure = name + ": analytic " + std::to_string(analytic) + ", numeric " +
                          std::to_string(numeric);
      }
    }
  };
  auto params = state.encoder.tensors();
  const auto grads = ev.grads.encoder.tensors();
  for (std::size_t t = 0; t < params.size(); ++t)
    for (std::size_t k = 0; k < params[t].size(); ++k)
      visit(&params[t][k], grads[t][k], "encoder tensor " + std::to_string(t) + "[" + std::to_string(k) + "]");
  for (Eigen::Index i = 0; i < state.agents.vectors.size(); ++i)
    visit(state.agents.vectors.data() + i, ev.grads.agents.data()[i], "agent coordinate " + std::to_string(i));
  return r;
}

// A reduced benchmark that trains in well under a second.
inline mar::RunConfig small_run() {
  mar::RunConfig rc;
  rc.synth.n_persons_target = 12;
  rc.synth.n_persons_aux = 24;
  rc.synth.n_persons_test = 12;
  rc.synth.views_target = 3;
  rc.synth.images_per_person_per_view = 3;
  rc.synth.d_in = 8;
  rc.train.d_in = 8;
  rc.train.d_out = 8;
  rc.train.d_h = 12;
  rc.train.batch_size = 40;
  rc.train.p = 0.02;
  rc.train.pretrain_epochs = 4;
  rc.train.train_epochs = 3;
  return rc;
}

struct RetrievalInstance {
  mar::LabeledEmbeddingSet probes;
  mar::LabeledEmbeddingSet gallery;
};

// 8 probes against 20 gallery items over 4 persons and 3 views. Every third
// instance duplicates part of the gallery so exact score ties occur.
inline RetrievalInstance retrieval_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> person(0, 3), view(1, 3);
  RetrievalInstance r;
  auto add = [&](mar::LabeledEmbeddingSet& set, const Vec& v) {
    set.embeddings.push_back(mar::normalize(v));
    set.person_ids.push_back(person(rng));
    set.view_ids.push_back(view(rng));
  };
  for (int q = 0; q < 8; ++q) add(r.probes, oracle::random_vec(rng, 3));
  for (int g = 0; g < 20; ++g) {
    if (seed % 3 == 0 && g >= 10) {
      const std::size_t src = static_cast<std::size_t>(g - 10);
      r.gallery.embeddings.push_back(r.gallery.embeddings[src]);
      r.gallery.person_ids.push_back(person(rng));
      r.gallery.view_ids.push_back(view(rng));
    } else {
      add(r.gallery, oracle::random_vec(rng, 3));
    }
  }
  return r;
}

inline oracle::Retrieval brute_force(const RetrievalInstance& in) {
  auto coords = [](const mar::LabeledEmbeddingSet& s) {
    std::vector<Vec> out;
    for (const auto& u : s.embeddings) out.push_back(u.coords());
    return out;
  };
  return oracle::brute_force(coords(in.probes), in.probes.person_ids, in.probes.view_ids,
                             coords(in.gallery), in.gallery.person_ids, in.gallery.view_ids);
}

}  // namespace inst

#endif  // MAR_TESTS_INSTANCES_HPP_
