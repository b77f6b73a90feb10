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

#ifndef MAR_EVALSET_HPP_
#define MAR_EVALSET_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mar/geometry.hpp"

namespace mar {

struct LabeledEmbeddingSet {
  std::vector<UnitVector> embeddings;
  std::vector<std::int64_t> person_ids;
  std::vector<int> view_ids;

  std::size_t size() const { return embeddings.size(); }
  void validate() const;
};

// Gallery indices by descending cosine similarity to the probe; ties keep
// ascending index order.
std::vector<std::size_t> rank_gallery(const UnitVector& probe,
                                      const LabeledEmbeddingSet& gallery);

struct RetrievalMetrics {
  std::vector<std::pair<std::size_t, double>> rank_k;  // (k, accuracy), ascending k
  double mean_ap = 0.0;
  std::size_t valid_probes = 0;
  std::size_t skipped_probes = 0;
  std::vector<double> probe_ap;  // NaN for skipped probes

  double rank(std::size_t k) const;
};

// Cross-view protocol: for each probe, gallery entries sharing both its
// person id and its view id are dropped before ranking. Probes left without
// any relevant gallery entry are skipped and counted.
RetrievalMetrics cmc_map(const LabeledEmbeddingSet& probes,
                         const LabeledEmbeddingSet& gallery,
                         std::span<const std::size_t> ks, int threads = 1);

// The first sample of every (person, view) becomes a probe; everything else
// goes to the gallery.
std::pair<LabeledEmbeddingSet, LabeledEmbeddingSet> split_probe_gallery(
    const LabeledEmbeddingSet& set);

}  // namespace mar

#endif  // MAR_EVALSET_HPP_
