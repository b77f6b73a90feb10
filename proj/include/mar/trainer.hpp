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

#ifndef MAR_TRAINER_HPP_
#define MAR_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mar/agent_bank.hpp"
#include "mar/data.hpp"
#include "mar/encoder.hpp"
#include "mar/evalset.hpp"
#include "mar/mining.hpp"

namespace mar {

enum class MiningMode {
  kGuided,   // soft multilabel agreement decides positive vs hard negative
  kFeature,  // ablation baseline: median split on feature similarity
};

const char* to_string(MiningMode mode);

struct TrainConfig {
  double lambda1 = 0.0002;  // weight of the cross-view consistency loss
  double lambda2 = 50.0;    // weight of reference agent learning
  double beta = 0.2;        // weight of the joint embedding loss inside it
  double p = 0.005;         // mining ratio; 0 disables mining
  double m = 1.0;           // agent margin
  std::size_t batch_size = 368;  // half target, half auxiliary
  double pretrain_learning_rate = 2.0;
  double learning_rate = 0.5;
  std::size_t pretrain_epochs = 30;
  std::size_t train_epochs = 60;
  std::uint64_t seed = 7;
  std::uint32_t d_in = 32;
  std::uint32_t d_h = 64;
  std::uint32_t d_out = 32;
  std::uint32_t depth = 1;
  double clip_norm = 10.0;  // global gradient norm cap; 0 disables
  int threads = 1;
  MiningMode mining = MiningMode::kGuided;
  double scale_override = 0.0;  // > 0 replaces the pretraining estimate
  std::size_t n_reference = 0;  // use only the first n auxiliary persons; 0 = all
  std::size_t eval_every = 0;   // evaluate on the test split every n epochs; 0 = final only

  std::size_t half_batch() const { return batch_size / 2; }
  EncoderShape encoder_shape() const { return {d_in, d_h, d_out, depth}; }
  void validate() const;
};

enum class Phase { kPretrain, kConstrained };

struct TrainState {
  EncoderParams encoder;
  AgentBank agents;
  double scale = 1.0;
  Phase phase = Phase::kPretrain;
  std::size_t epoch = 0;
  std::uint64_t step = 0;
  // True-class logits seen in the current pretraining epoch.
  double logit_sum = 0.0;
  std::size_t logit_count = 0;

  static TrainState initial(const TrainConfig& config, std::size_t n_reference);
  double pretrain_logit_mean() const;
};

// Everything the trainer reads from the two datasets. Auxiliary person ids
// are mapped onto agent rows in ascending id order.
struct TrainingData {
  std::vector<Vec> target_features;
  std::vector<int> target_views;
  std::vector<Vec> aux_features;
  std::vector<int> aux_labels;
  std::vector<std::int64_t> reference_ids;  // agent row -> auxiliary person id

  static TrainingData from(const FeatureDataset& target, const FeatureDataset& aux,
                           std::size_t n_reference = 0);
  std::size_t n_reference() const { return reference_ids.size(); }
};

struct Batch {
  std::vector<std::size_t> target;
  std::vector<std::size_t> aux;
};

// B/2 target and B/2 auxiliary indices drawn uniformly; a pure function of
// (seed, step). Sampling is without replacement when the dataset is large
// enough.
Batch compose_batch(const TrainConfig& config, std::uint64_t step, std::size_t n_target,
                    std::size_t n_aux);

struct BatchData {
  std::vector<Vec> target;
  std::vector<int> views;
  std::vector<Vec> aux;
  std::vector<int> labels;
};

BatchData gather(const TrainingData& data, const Batch& batch);

struct LossBreakdown {
  double mdl = 0.0;
  double cml = 0.0;
  double al = 0.0;
  double rj = 0.0;
  double total = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  bool mdl_skipped = false;
};

// Per-term weights of the objective. mar() gives
// L_MDL + lambda1 L_CML + lambda2 (L_AL + beta L_RJ). A term with weight 0
// is not evaluated at all.
struct ObjectiveWeights {
  double mdl = 1.0;
  double cml = 0.0;
  double al = 0.0;
  double rj = 0.0;

  static ObjectiveWeights mar(const TrainConfig& config);
};

struct Gradients {
  EncoderGrad encoder;
  Mat agents;

  double squared_norm() const;
};

struct Evaluation {
  LossBreakdown losses;
  Gradients grads;
};

// Loss and gradient of the constrained objective on one batch.
Evaluation evaluate_objective(const TrainState& state, const TrainConfig& config,
                              const BatchData& batch, const ObjectiveWeights& weights);

// Loss and gradient of the pretraining objective (L_AL, unconstrained, unit
// scale) on the auxiliary half.
Evaluation evaluate_pretrain(const TrainState& state, const TrainConfig& config,
                             const BatchData& batch);

LossBreakdown pretrain_step(TrainState& state, const TrainConfig& config,
                            const BatchData& batch);

// Ends pretraining: the logit scale becomes the mean true-class logit of the
// last pretraining epoch (or config.scale_override) and the agents are
// projected onto the sphere.
void freeze_scale(TrainState& state, const TrainConfig& config);

LossBreakdown mar_step(TrainState& state, const TrainConfig& config, const BatchData& batch);

struct EpochRecord {
  std::size_t epoch = 0;
  double mdl = 0.0;
  double cml = 0.0;
  double al = 0.0;
  double rj = 0.0;
  double total = 0.0;
  double positives = 0.0;  // mean per step
  double negatives = 0.0;
  double scale = 1.0;
  std::optional<double> rank1;
  std::optional<double> mean_ap;
};

std::string metrics_csv(std::span<const EpochRecord> log);

struct TrainHooks {
  // Called after every constrained step with the updated state and the batch
  // it was computed on.
  std::function<void(const TrainState&, const BatchData&, const LossBreakdown&)> on_step;
  // Held-out split for per-epoch retrieval metrics.
  const FeatureDataset* eval_set = nullptr;
};

struct TrainResult {
  TrainState pretrained;  // right after freeze_scale
  TrainState final_state;
  std::vector<EpochRecord> pretrain_log;
  std::vector<EpochRecord> train_log;
};

std::size_t steps_per_epoch(const TrainConfig& config, std::size_t n_target);

TrainState run_pretraining(const TrainConfig& config, const TrainingData& data,
                           std::vector<EpochRecord>* log = nullptr);

// Constrained phase starting from `state` (already frozen).
TrainState run_constrained(TrainState state, const TrainConfig& config,
                           const TrainingData& data, const TrainHooks& hooks = {},
                           std::vector<EpochRecord>* log = nullptr);

TrainResult train(const TrainConfig& config, const FeatureDataset& target,
                  const FeatureDataset& aux, const TrainHooks& hooks = {});

LabeledEmbeddingSet embed(const EncoderParams& params, const FeatureDataset& dataset,
                          int threads = 1);

// Cross-view Rank-1/5/10 and mAP on the first-per-(person, view) probe split.
RetrievalMetrics evaluate_retrieval(const EncoderParams& params, const FeatureDataset& dataset,
                                    int threads = 1);

struct BatchMining {
  std::vector<Vec> embeddings;
  PairTable similarities;
  PairTable agreements;
  MiningSets sets;
};

// Mining exactly as a constrained step performs it on the given target
// features.
BatchMining mine(const TrainState& state, const TrainConfig& config,
                 std::span<const Vec> target_features, MiningMode mode);

// Text sidecar with the scale, phase and counters of a state.
std::string state_text(const TrainState& state);
void save_checkpoint(const std::filesystem::path& dir, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& dir);

}  // namespace mar

#endif  // MAR_TRAINER_HPP_
