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

#include "mar/evalset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "mar/error.hpp"
#include "mar/parallel.hpp"

namespace mar {

void LabeledEmbeddingSet::validate() const {
  if (person_ids.size() != embeddings.size() || view_ids.size() != embeddings.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding set columns differ in length");
  }
}

std::vector<std::size_t> rank_gallery(const UnitVector& probe,
                                      const LabeledEmbeddingSet& gallery) {
  if (gallery.size() == 0) throw Error(ErrorCode::kEmptyGallery, "gallery is empty");
  std::vector<double> score(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g) score[g] = cosine(probe, gallery.embeddings[g]);
  std::vector<std::size_t> order(gallery.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return order;
}

double RetrievalMetrics::rank(std::size_t k) const {
  for (const auto& [kk, acc] : rank_k)
    if (kk == k) return acc;
  throw Error(ErrorCode::kInvalidConfig, "rank-" + std::to_string(k) + " was not computed");
}

namespace {

struct ProbeOutcome {
  bool valid = false;
  double ap = 0.0;
  std::size_t first_hit = 0;  // 1-based position of the first relevant item
};

ProbeOutcome evaluate_probe(const UnitVector& probe, std::int64_t pid, int view,
                            const LabeledEmbeddingSet& gallery) {
  ProbeOutcome out;
  const auto order = rank_gallery(probe, gallery);
  std::size_t position = 0;
  std::size_t hits = 0;
  double precision_sum = 0.0;
  for (std::size_t g : order) {
    const bool same_id = gallery.person_ids[g] == pid;
    if (same_id && gallery.view_ids[g] == view) continue;  // same camera, same person
    ++position;
    if (!same_id) continue;
    ++hits;
    if (hits == 1) out.first_hit = position;
    precision_sum += static_cast<double>(hits) / static_cast<double>(position);
  }
  if (hits == 0) return out;
  out.valid = true;
  out.ap = precision_sum / static_cast<double>(hits);
  return out;
}

}  // namespace

RetrievalMetrics cmc_map(const LabeledEmbeddingSet& probes,
                         const LabeledEmbeddingSet& gallery,
                         std::span<const std::size_t> ks, int threads) {
  probes.validate();
  gallery.validate();
  if (gallery.size() == 0) throw Error(ErrorCode::kEmptyGallery, "gallery is empty");

  std::vector<ProbeOutcome> outcomes(probes.size());
  parallel_for(probes.size(), threads, [&](std::size_t q) {
    outcomes[q] = evaluate_probe(probes.embeddings[q], probes.person_ids[q],
                                 probes.view_ids[q], gallery);
  });

  RetrievalMetrics m;
  const std::set<std::size_t> sorted_ks(ks.begin(), ks.end());
  std::vector<std::size_t> hits_within(sorted_ks.size(), 0);
  m.probe_ap.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (!o.valid) {
      ++m.skipped_probes;
      m.probe_ap.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    ++m.valid_probes;
    m.mean_ap += o.ap;
    m.probe_ap.push_back(o.ap);
    std::size_t idx = 0;
    for (std::size_t k : sorted_ks) {
      if (o.first_hit <= k) ++hits_within[idx];
      ++idx;
    }
  }
  if (m.valid_probes == 0) {
    throw Error(ErrorCode::kNoValidProbes, "no probe has a cross-view match in the gallery");
  }
  const double n = static_cast<double>(m.valid_probes);
  m.mean_ap /= n;
  std::size_t idx = 0;
  for (std::size_t k : sorted_ks) m.rank_k.emplace_back(k, hits_within[idx++] / n);
  return m;
}

std::pair<LabeledEmbeddingSet, LabeledEmbeddingSet> split_probe_gallery(
    const LabeledEmbeddingSet& set) {
  set.validate();
  std::pair<LabeledEmbeddingSet, LabeledEmbeddingSet> out;
  std::set<std::pair<std::int64_t, int>> seen;
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto& dest = seen.emplace(set.person_ids[i], set.view_ids[i]).second ? out.first : out.second;
    dest.embeddings.push_back(set.embeddings[i]);
    dest.person_ids.push_back(set.person_ids[i]);
    dest.view_ids.push_back(set.view_ids[i]);
  }
  return out;
}

}  // namespace mar
