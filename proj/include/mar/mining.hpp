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

#ifndef MAR_MINING_HPP_
#define MAR_MINING_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "mar/geometry.hpp"

namespace mar {

struct MiningThresholds {
  double similarity = 0.0;  // S
  double agreement = 0.0;   // T; for the feature-guided baseline, the split similarity
  double ratio = 0.0;       // p
  std::size_t pair_count = 0;
  std::size_t rank = 0;  // max(1, round(p * pair_count))
};

struct MiningSets {
  std::vector<IndexPair> positives;
  std::vector<IndexPair> hard_negatives;
  MiningThresholds thresholds;
};

std::size_t mining_rank(std::size_t pair_count, double ratio);

// S and T are the rank-th largest similarity and agreement respectively.
MiningThresholds compute_thresholds(const PairTable& similarities,
                                    const PairTable& agreements, double ratio);

// The `rank` most similar pairs, ordered by (similarity desc, pair index asc),
// go to the positive set when their agreement is >= T and to the
// hard-negative set otherwise. Both sets keep table order.
MiningSets build_sets(const PairTable& similarities, const PairTable& agreements,
                      const MiningThresholds& thresholds);

// Feature-similarity-guided partition: the similar pairs ordered by
// (similarity desc, pair index asc); the first ceil(n/2) are positives and the
// rest hard negatives.
MiningSets baseline_sets(const PairTable& similarities, double ratio);

struct MdlResult {
  double loss = 0.0;
  double positive_mean = 0.0;  // mean exp(-|f_i - f_j|^2) over positives
  double negative_mean = 0.0;
  std::vector<Vec> grad_embeddings;
};

// -log(P / (P + N)). Throws EmptyMiningSet when either set is empty.
MdlResult mdl_loss(const MiningSets& sets, std::span<const Vec> embeddings);

}  // namespace mar

#endif  // MAR_MINING_HPP_
