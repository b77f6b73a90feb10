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

#include "mar/mining.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mar/error.hpp"

namespace mar {

std::size_t mining_rank(std::size_t pair_count, double ratio) {
  const auto rounded = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(pair_count)));
  return std::clamp<std::size_t>(rounded, 1, std::max<std::size_t>(pair_count, 1));
}

namespace {

void check_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "mining ratio must lie in (0, 1], got " + std::to_string(ratio));
  }
}

void check_table(const PairTable& t) {
  if (t.n() < 2) throw Error(ErrorCode::kBatchTooSmall, "mining needs at least 2 samples");
}

// Indices of the table ordered by (value desc, index asc).
std::vector<std::size_t> descending_order(const PairTable& t) {
  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return t[a] > t[b]; });
  return order;
}

double rank_value(const PairTable& t, std::size_t rank) {
  return t[descending_order(t)[rank - 1]];
}

// The `rank` most similar pairs. Ties at S are broken by pair index, so the
// count is exact.
std::vector<std::size_t> similar_pairs(const PairTable& similarities, std::size_t rank) {
  std::vector<std::size_t> order = descending_order(similarities);
  order.resize(std::min(rank, order.size()));
  return order;
}

}  // namespace

MiningThresholds compute_thresholds(const PairTable& similarities,
                                    const PairTable& agreements, double ratio) {
  check_table(similarities);
  check_ratio(ratio);
  if (similarities.n() != agreements.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "similarity and agreement tables differ in size");
  }
  MiningThresholds th;
  th.ratio = ratio;
  th.pair_count = similarities.size();
  th.rank = mining_rank(th.pair_count, ratio);
  th.similarity = rank_value(similarities, th.rank);
  th.agreement = rank_value(agreements, th.rank);
  return th;
}

MiningSets build_sets(const PairTable& similarities, const PairTable& agreements,
                      const MiningThresholds& thresholds) {
  if (similarities.n() != agreements.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "similarity and agreement tables differ in size");
  }
  MiningSets sets;
  sets.thresholds = thresholds;
  std::vector<std::size_t> similar = similar_pairs(similarities, thresholds.rank);
  std::sort(similar.begin(), similar.end());
  for (std::size_t k : similar) {
    if (agreements[k] >= thresholds.agreement) {
      sets.positives.push_back(similarities.pair(k));
    } else {
      sets.hard_negatives.push_back(similarities.pair(k));
    }
  }
  return sets;
}

MiningSets baseline_sets(const PairTable& similarities, double ratio) {
  check_table(similarities);
  check_ratio(ratio);
  MiningSets sets;
  auto& th = sets.thresholds;
  th.ratio = ratio;
  th.pair_count = similarities.size();
  th.rank = mining_rank(th.pair_count, ratio);
  th.similarity = rank_value(similarities, th.rank);

  const std::vector<std::size_t> similar = similar_pairs(similarities, th.rank);
  const std::size_t upper = (similar.size() + 1) / 2;
  th.agreement = similarities[similar[upper - 1]];
  for (std::size_t r = 0; r < similar.size(); ++r) {
    auto& dest = r < upper ? sets.positives : sets.hard_negatives;
    dest.push_back(similarities.pair(similar[r]));
  }
  // Keep table order inside each set, as build_sets does.
  auto by_index = [&](const IndexPair& a, const IndexPair& b) {
    return similarities.index(a.first, a.second) < similarities.index(b.first, b.second);
  };
  std::sort(sets.positives.begin(), sets.positives.end(), by_index);
  std::sort(sets.hard_negatives.begin(), sets.hard_negatives.end(), by_index);
  return sets;
}

MdlResult mdl_loss(const MiningSets& sets, std::span<const Vec> embeddings) {
  if (sets.positives.empty() || sets.hard_negatives.empty()) {
    throw Error(ErrorCode::kEmptyMiningSet,
                "|P| = " + std::to_string(sets.positives.size()) +
                    ", |N| = " + std::to_string(sets.hard_negatives.size()));
  }
  auto mean_kernel = [&](const std::vector<IndexPair>& pairs) {
    double sum = 0.0;
    for (const auto& [i, j] : pairs) {
      if (i >= embeddings.size() || j >= embeddings.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "mined pair index outside the batch");
      }
      sum += std::exp(-(embeddings[i] - embeddings[j]).squaredNorm());
    }
    return sum / static_cast<double>(pairs.size());
  };

  MdlResult r;
  r.positive_mean = mean_kernel(sets.positives);
  r.negative_mean = mean_kernel(sets.hard_negatives);
  const double pn = r.positive_mean + r.negative_mean;
  r.loss = -std::log(r.positive_mean / pn);

  // dL/dPbar = -Nbar / (Pbar (Pbar + Nbar)), dL/dNbar = 1 / (Pbar + Nbar).
  const double d_pos = -r.negative_mean / (r.positive_mean * pn);
  const double d_neg = 1.0 / pn;

  r.grad_embeddings.assign(embeddings.size(), Vec::Zero(embeddings.front().size()));
  auto accumulate = [&](const std::vector<IndexPair>& pairs, double d_mean) {
    const double w = d_mean / static_cast<double>(pairs.size());
    for (const auto& [i, j] : pairs) {
      const Vec diff = embeddings[i] - embeddings[j];
      // d exp(-|diff|^2) / d f_i = -2 exp(-|diff|^2) diff
      const Vec g = (-2.0 * w * std::exp(-diff.squaredNorm())) * diff;
      r.grad_embeddings[i] += g;
      r.grad_embeddings[j] -= g;
    }
  };
  accumulate(sets.positives, d_pos);
  accumulate(sets.hard_negatives, d_neg);
  return r;
}

}  // namespace mar
