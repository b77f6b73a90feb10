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

#include "mar/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "mar/agents.hpp"
#include "mar/checkpoint.hpp"
#include "mar/config.hpp"
#include "mar/error.hpp"
#include "mar/parallel.hpp"
#include "mar/softlabel.hpp"

namespace mar {

const char* to_string(MiningMode mode) {
  return mode == MiningMode::kGuided ? "guided" : "feature";
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidConfig, why); };
  if (batch_size < 4 || batch_size % 2 != 0) fail("batch_size must be even and at least 4");
  if (!(pretrain_learning_rate > 0.0) || !(learning_rate > 0.0)) fail("learning rates must be positive");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(beta >= 0.0)) fail("loss weights must be non-negative");
  if (!(p >= 0.0 && p <= 1.0)) fail("p must lie in [0, 1]");
  if (!(m > 0.0)) fail("m must be positive");
  if (!(clip_norm >= 0.0)) fail("clip_norm must be non-negative");
  if (!(scale_override >= 0.0)) fail("scale_override must be non-negative");
  if (threads < 1) fail("threads must be at least 1");
  validate_shape(encoder_shape());
}

TrainState TrainState::initial(const TrainConfig& config, std::size_t n_reference) {
  TrainState s;
  s.encoder = EncoderParams::initialize(config.encoder_shape(), config.seed);
  s.agents = AgentBank::random(n_reference, config.d_out, config.seed ^ 0x9e3779b97f4a7c15ULL);
  s.agents.constrained = false;
  return s;
}

double TrainState::pretrain_logit_mean() const {
  return logit_count == 0 ? 0.0 : logit_sum / static_cast<double>(logit_count);
}

TrainingData TrainingData::from(const FeatureDataset& target, const FeatureDataset& aux,
                                std::size_t n_reference) {
  target.validate();
  aux.validate();
  if (target.empty()) throw Error(ErrorCode::kEmptyDataset, "target dataset is empty");
  if (aux.empty()) throw Error(ErrorCode::kEmptyDataset, "auxiliary dataset is empty");
  if (target.dim != aux.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "target and auxiliary feature dimensions differ");
  }
  TrainingData d;
  d.target_features = target.features;
  d.target_views = target.view_ids;

  std::map<std::int64_t, int> rows;
  for (auto id : aux.person_ids) {
    if (id < 0) throw Error(ErrorCode::kMalformedFile, "auxiliary samples need person ids");
    rows.emplace(id, -1);
  }
  for (auto& [id, row] : rows) {
    if (n_reference != 0 && d.reference_ids.size() == n_reference) break;
    row = static_cast<int>(d.reference_ids.size());
    d.reference_ids.push_back(id);
  }
  for (std::size_t i = 0; i < aux.size(); ++i) {
    const int row = rows.at(aux.person_ids[i]);
    if (row < 0) continue;  // beyond n_reference
    d.aux_features.push_back(aux.features[i]);
    d.aux_labels.push_back(row);
  }
  return d;
}

namespace {

void sample_indices(std::mt19937_64& rng, std::size_t n, std::size_t count,
                    std::vector<std::size_t>& out) {
  out.clear();
  if (n == 0) throw Error(ErrorCode::kEmptyDataset, "cannot sample from an empty dataset");
  if (n >= count) {
    // Partial Fisher-Yates.
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(pool[i], pool[pick(rng)]);
      out.push_back(pool[i]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < count; ++i) out.push_back(pick(rng));
  }
}

}  // namespace

Batch compose_batch(const TrainConfig& config, std::uint64_t step, std::size_t n_target,
                    std::size_t n_aux) {
  if (n_target == 0 || n_aux == 0) throw Error(ErrorCode::kEmptyDataset, "empty dataset");
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
  std::mt19937_64 rng(seq);
  Batch b;
  sample_indices(rng, n_target, config.half_batch(), b.target);
  sample_indices(rng, n_aux, config.half_batch(), b.aux);
  return b;
}

BatchData gather(const TrainingData& data, const Batch& batch) {
  BatchData out;
  for (std::size_t i : batch.target) {
    out.target.push_back(data.target_features[i]);
    out.views.push_back(data.target_views[i]);
  }
  for (std::size_t i : batch.aux) {
    out.aux.push_back(data.aux_features[i]);
    out.labels.push_back(data.aux_labels[i]);
  }
  return out;
}

ObjectiveWeights ObjectiveWeights::mar(const TrainConfig& config) {
  return {1.0, config.lambda1, config.lambda2, config.lambda2 * config.beta};
}

double Gradients::squared_norm() const {
  return encoder.squared_norm() + agents.squaredNorm();
}

namespace {

struct Forwarded {
  std::vector<EncoderOutput> outputs;
  std::vector<Vec> embeddings;
};

Forwarded forward_all(const EncoderParams& params, std::span<const Vec> inputs,
                      bool constrained, int threads) {
  Forwarded f;
  f.outputs.resize(inputs.size());
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    f.outputs[i] = forward(params, inputs[i], constrained);
  });
  f.embeddings.reserve(inputs.size());
  for (const auto& o : f.outputs) f.embeddings.push_back(o.embedding);
  return f;
}

// Sums per-sample parameter gradients in sample order, so the result is the
// same for every thread count.
void backward_all(const EncoderParams& params, std::span<const Vec> inputs,
                  const Forwarded& fwd, std::span<const Vec> grad_embeddings,
                  bool constrained, int threads, EncoderGrad& grad) {
  if (threads <= 1) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      backward_into(params, inputs[i], fwd.outputs[i], grad_embeddings[i], constrained, grad);
    }
    return;
  }
  std::vector<EncoderGrad> parts(inputs.size(), EncoderParams::zeros(params.shape));
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    backward_into(params, inputs[i], fwd.outputs[i], grad_embeddings[i], constrained, parts[i]);
  });
  for (const auto& part : parts) grad.add_scaled(part, 1.0);
}

void add_scaled(std::vector<Vec>& into, const std::vector<Vec>& g, double w) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += w * g[i];
}

MiningSets mine_sets(const std::vector<Vec>& embeddings, const AgentBank& agents, double scale,
                     double p, MiningMode mode, int threads, PairTable* sims_out = nullptr,
                     PairTable* agree_out = nullptr) {
  PairTable sims = pairwise_inner_products(embeddings, threads);
  MiningSets sets;
  if (mode == MiningMode::kFeature) {
    sets = baseline_sets(sims, p);
  } else {
    std::vector<SoftMultilabel> labels;
    labels.reserve(embeddings.size());
    for (const auto& f : embeddings) labels.push_back(soft_multilabel(f, agents, scale));
    PairTable agree = pairwise_agreements(labels, threads);
    sets = build_sets(sims, agree, compute_thresholds(sims, agree, p));
    if (agree_out) *agree_out = std::move(agree);
  }
  if (sims_out) *sims_out = std::move(sims);
  return sets;
}

}  // namespace

Evaluation evaluate_objective(const TrainState& state, const TrainConfig& config,
                              const BatchData& batch, const ObjectiveWeights& weights) {
  const int threads = config.threads;
  const auto tgt = forward_all(state.encoder, batch.target, true, threads);
  const auto aux = forward_all(state.encoder, batch.aux, true, threads);
  const Eigen::Index d = state.agents.dim();

  Evaluation ev;
  LossBreakdown& L = ev.losses;
  std::vector<Vec> g_tgt(batch.target.size(), Vec::Zero(d));
  std::vector<Vec> g_aux(batch.aux.size(), Vec::Zero(d));
  Mat g_agents = Mat::Zero(state.agents.vectors.rows(), d);

  if (weights.mdl != 0.0 && config.p > 0.0 && tgt.embeddings.size() >= 2) {
    const MiningSets sets = mine_sets(tgt.embeddings, state.agents, state.scale, config.p,
                                      config.mining, threads);
    L.positives = sets.positives.size();
    L.negatives = sets.hard_negatives.size();
    if (sets.positives.empty() || sets.hard_negatives.empty()) {
      L.mdl_skipped = true;
    } else {
      const MdlResult mdl = mdl_loss(sets, tgt.embeddings);
      L.mdl = mdl.loss;
      add_scaled(g_tgt, mdl.grad_embeddings, weights.mdl);
    }
  } else {
    L.mdl_skipped = true;
  }

  if (weights.cml != 0.0) {
    try {
      const CmlObjective cml =
          cml_objective(tgt.embeddings, batch.views, state.agents, state.scale);
      L.cml = cml.loss;
      add_scaled(g_tgt, cml.grad_embeddings, weights.cml);
      g_agents += weights.cml * cml.grad_agents;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoValidViews) throw;
    }
  }

  if (weights.al != 0.0) {
    const AgentLossResult al = al_loss(aux.embeddings, batch.labels, state.agents, state.scale);
    L.al = al.loss;
    add_scaled(g_aux, al.grad_embeddings, weights.al);
    g_agents += weights.al * al.grad_agents;
  }

  if (weights.rj != 0.0) {
    const RjResult rj =
        rj_loss(state.agents, tgt.embeddings, aux.embeddings, batch.labels, config.m);
    L.rj = rj.loss;
    add_scaled(g_tgt, rj.grad_target, weights.rj);
    add_scaled(g_aux, rj.grad_aux, weights.rj);
    g_agents += weights.rj * rj.grad_agents;
  }

  L.total = weights.mdl * L.mdl + weights.cml * L.cml + weights.al * L.al + weights.rj * L.rj;

  ev.grads.encoder = EncoderParams::zeros(state.encoder.shape);
  backward_all(state.encoder, batch.target, tgt, g_tgt, true, threads, ev.grads.encoder);
  backward_all(state.encoder, batch.aux, aux, g_aux, true, threads, ev.grads.encoder);
  ev.grads.agents = std::move(g_agents);
  return ev;
}

Evaluation evaluate_pretrain(const TrainState& state, const TrainConfig& config,
                             const BatchData& batch) {
  const auto aux = forward_all(state.encoder, batch.aux, false, config.threads);
  const AgentLossResult al = al_loss(aux.embeddings, batch.labels, state.agents, 1.0);
  Evaluation ev;
  ev.losses.al = al.loss;
  ev.losses.total = al.loss;
  ev.losses.mdl_skipped = true;
  ev.grads.encoder = EncoderParams::zeros(state.encoder.shape);
  backward_all(state.encoder, batch.aux, aux, al.grad_embeddings, false, config.threads,
               ev.grads.encoder);
  ev.grads.agents = al.grad_agents;
  return ev;
}

namespace {

void apply_sgd(TrainState& state, Gradients& grads, double rate, double clip_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (!std::isfinite(norm)) throw Error(ErrorCode::kNumericalFailure, "non-finite gradient");
  double step = rate;
  if (clip_norm > 0.0 && norm > clip_norm) step *= clip_norm / norm;
  state.encoder.add_scaled(grads.encoder, -step);
  state.agents.vectors -= step * grads.agents;
}

void check_finite(const LossBreakdown& L) {
  if (!std::isfinite(L.total)) throw Error(ErrorCode::kNumericalFailure, "loss is not finite");
}

}  // namespace

LossBreakdown pretrain_step(TrainState& state, const TrainConfig& config,
                            const BatchData& batch) {
  if (state.phase != Phase::kPretrain) {
    throw Error(ErrorCode::kInvalidConfig, "pretrain_step called after freeze_scale");
  }
  Evaluation ev = evaluate_pretrain(state, config, batch);
  check_finite(ev.losses);
  // True-class logits at the parameters the loss was evaluated on.
  for (std::size_t k = 0; k < batch.aux.size(); ++k) {
    const Vec f = forward(state.encoder, batch.aux[k], false).embedding;
    state.logit_sum += state.agents.agent(static_cast<std::size_t>(batch.labels[k])).dot(f);
    ++state.logit_count;
  }
  apply_sgd(state, ev.grads, config.pretrain_learning_rate, config.clip_norm);
  ++state.step;
  return ev.losses;
}

void freeze_scale(TrainState& state, const TrainConfig& config) {
  if (state.phase != Phase::kPretrain) {
    throw Error(ErrorCode::kInvalidConfig, "scale is already frozen");
  }
  double scale = config.scale_override;
  if (scale <= 0.0) {
    if (state.logit_count == 0) {
      throw Error(ErrorCode::kNoPretrainStats, "no pretraining logits were recorded");
    }
    scale = state.pretrain_logit_mean();
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidScale,
                "average true-class logit " + std::to_string(scale) + " is not positive");
  }
  state.scale = scale;
  state.agents = renormalize_agents(std::move(state.agents));
  state.phase = Phase::kConstrained;
}

LossBreakdown mar_step(TrainState& state, const TrainConfig& config, const BatchData& batch) {
  if (state.phase != Phase::kConstrained) {
    throw Error(ErrorCode::kInvalidConfig, "mar_step needs a frozen scale");
  }
  Evaluation ev = evaluate_objective(state, config, batch, ObjectiveWeights::mar(config));
  check_finite(ev.losses);
  apply_sgd(state, ev.grads, config.learning_rate, config.clip_norm);
  state.agents = renormalize_agents(std::move(state.agents));
  ++state.step;
  return ev.losses;
}

std::size_t steps_per_epoch(const TrainConfig& config, std::size_t n_target) {
  const std::size_t half = config.half_batch();
  return std::max<std::size_t>(1, (n_target + half - 1) / half);
}

namespace {

struct EpochAccumulator {
  EpochRecord rec;
  std::size_t steps = 0;

  void add(const LossBreakdown& L) {
    rec.mdl += L.mdl;
    rec.cml += L.cml;
    rec.al += L.al;
    rec.rj += L.rj;
    rec.total += L.total;
    rec.positives += static_cast<double>(L.positives);
    rec.negatives += static_cast<double>(L.negatives);
    ++steps;
  }

  EpochRecord finish(std::size_t epoch, double scale) {
    const double n = static_cast<double>(std::max<std::size_t>(steps, 1));
    EpochRecord r = rec;
    r.epoch = epoch;
    r.mdl /= n;
    r.cml /= n;
    r.al /= n;
    r.rj /= n;
    r.total /= n;
    r.positives /= n;
    r.negatives /= n;
    r.scale = scale;
    return r;
  }
};

}  // namespace

TrainState run_pretraining(const TrainConfig& config, const TrainingData& data,
                           std::vector<EpochRecord>* log) {
  config.validate();
  TrainState state = TrainState::initial(config, data.n_reference());
  const std::size_t steps = steps_per_epoch(config, data.target_features.size());
  for (std::size_t e = 0; e < config.pretrain_epochs; ++e) {
    state.logit_sum = 0.0;
    state.logit_count = 0;
    EpochAccumulator acc;
    for (std::size_t s = 0; s < steps; ++s) {
      const Batch b = compose_batch(config, state.step, data.target_features.size(),
                                    data.aux_features.size());
      acc.add(pretrain_step(state, config, gather(data, b)));
    }
    ++state.epoch;
    if (log) log->push_back(acc.finish(state.epoch, 1.0));
  }
  freeze_scale(state, config);
  return state;
}

TrainState run_constrained(TrainState state, const TrainConfig& config,
                           const TrainingData& data, const TrainHooks& hooks,
                           std::vector<EpochRecord>* log) {
  config.validate();
  const std::size_t steps = steps_per_epoch(config, data.target_features.size());
  for (std::size_t e = 0; e < config.train_epochs; ++e) {
    EpochAccumulator acc;
    for (std::size_t s = 0; s < steps; ++s) {
      const Batch b = compose_batch(config, state.step, data.target_features.size(),
                                    data.aux_features.size());
      const BatchData batch = gather(data, b);
      const LossBreakdown L = mar_step(state, config, batch);
      acc.add(L);
      if (hooks.on_step) hooks.on_step(state, batch, L);
    }
    ++state.epoch;
    EpochRecord rec = acc.finish(state.epoch, state.scale);
    const bool last = e + 1 == config.train_epochs;
    const bool due = config.eval_every != 0 && (e + 1) % config.eval_every == 0;
    if (hooks.eval_set != nullptr && (last || due)) {
      const auto metrics = evaluate_retrieval(state.encoder, *hooks.eval_set, config.threads);
      rec.rank1 = metrics.rank(1);
      rec.mean_ap = metrics.mean_ap;
    }
    if (log) log->push_back(rec);
  }
  return state;
}

TrainResult train(const TrainConfig& config, const FeatureDataset& target,
                  const FeatureDataset& aux, const TrainHooks& hooks) {
  config.validate();
  if (target.dim != config.d_in) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dataset dim " + std::to_string(target.dim) + " but d_in = " +
                    std::to_string(config.d_in));
  }
  const TrainingData data = TrainingData::from(target, aux, config.n_reference);
  TrainResult result;
  result.pretrained = run_pretraining(config, data, &result.pretrain_log);
  result.final_state = run_constrained(result.pretrained, config, data, hooks, &result.train_log);
  return result;
}

std::string metrics_csv(std::span<const EpochRecord> log) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,L_MDL,L_CML,L_AL,L_RJ,total,P,N,scale,rank1,mAP\n";
  for (const auto& r : log) {
    out << r.epoch << ',' << r.mdl << ',' << r.cml << ',' << r.al << ',' << r.rj << ','
        << r.total << ',' << r.positives << ',' << r.negatives << ',' << r.scale << ',';
    if (r.rank1) out << *r.rank1;
    out << ',';
    if (r.mean_ap) out << *r.mean_ap;
    out << '\n';
  }
  return out.str();
}

LabeledEmbeddingSet embed(const EncoderParams& params, const FeatureDataset& dataset,
                          int threads) {
  dataset.validate();
  std::vector<Vec> emb(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t i) {
    emb[i] = forward(params, dataset.features[i], true).embedding;
  });
  LabeledEmbeddingSet set;
  set.embeddings.reserve(emb.size());
  for (auto& e : emb) set.embeddings.push_back(UnitVector::from_unit(std::move(e)));
  set.person_ids = dataset.person_ids;
  set.view_ids = dataset.view_ids;
  return set;
}

RetrievalMetrics evaluate_retrieval(const EncoderParams& params, const FeatureDataset& dataset,
                                    int threads) {
  const auto [probes, gallery] = split_probe_gallery(embed(params, dataset, threads));
  const std::size_t ks[] = {1, 5, 10};
  return cmc_map(probes, gallery, ks, threads);
}

BatchMining mine(const TrainState& state, const TrainConfig& config,
                 std::span<const Vec> target_features, MiningMode mode) {
  BatchMining out;
  out.embeddings = forward_all(state.encoder, target_features, true, config.threads).embeddings;
  const double ratio = config.p > 0.0 ? config.p : 1.0;
  out.sets = mine_sets(out.embeddings, state.agents, state.scale, ratio, mode, config.threads,
                       &out.similarities, &out.agreements);
  if (mode == MiningMode::kFeature) {
    std::vector<SoftMultilabel> labels;
    for (const auto& f : out.embeddings) labels.push_back(soft_multilabel(f, state.agents, state.scale));
    out.agreements = pairwise_agreements(labels, config.threads);
  }
  return out;
}

std::string state_text(const TrainState& state) {
  std::ostringstream out;
  out.precision(17);
  out << "scale = " << state.scale << '\n'
      << "phase = " << (state.phase == Phase::kPretrain ? "pretrain" : "constrained") << '\n'
      << "epoch = " << state.epoch << '\n'
      << "step = " << state.step << '\n';
  return out.str();
}

void save_checkpoint(const std::filesystem::path& dir, const TrainState& state) {
  std::filesystem::create_directories(dir);
  save_encoder(dir / "encoder.bin", state.encoder);
  save_agents(dir / "agents.bin", state.agents);
  write_file_atomic(dir / "state.txt", state_text(state));
}

TrainState load_checkpoint(const std::filesystem::path& dir) {
  const KeyValues kv = parse_key_values(read_file(dir / "state.txt"), (dir / "state.txt").string());
  TrainState s;
  s.phase = require(kv, "phase") == "pretrain" ? Phase::kPretrain : Phase::kConstrained;
  s.scale = parse_real(require(kv, "scale"), "scale");
  s.epoch = static_cast<std::size_t>(parse_count(require(kv, "epoch"), "epoch"));
  s.step = parse_count(require(kv, "step"), "step");
  s.encoder = load_encoder(dir / "encoder.bin");
  s.agents = load_agents(dir / "agents.bin", s.phase == Phase::kConstrained);
  return s;
}

}  // namespace mar
