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

#include "mar/geometry.hpp"

#include <cmath>
#include <string>

#include "mar/error.hpp"
#include "mar/parallel.hpp"

namespace mar {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateVector: return "DegenerateVector";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kBatchTooSmall: return "BatchTooSmall";
    case ErrorCode::kNonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::kEmptyAgentBank: return "EmptyAgentBank";
    case ErrorCode::kNoValidViews: return "NoValidViews";
    case ErrorCode::kEmptyMiningSet: return "EmptyMiningSet";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kNoPretrainStats: return "NoPretrainStats";
    case ErrorCode::kInvalidScale: return "InvalidScale";
    case ErrorCode::kEmptyGallery: return "EmptyGallery";
    case ErrorCode::kNoValidProbes: return "NoValidProbes";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
      return 1;
    case ErrorCode::kDegenerateVector:
    case ErrorCode::kNonFiniteActivation:
    case ErrorCode::kInvalidScale:
    case ErrorCode::kNumericalFailure:
      return 3;
    default:
      return 2;
  }
}

UnitVector UnitVector::from_unit(Vec coords) {
  const double norm = coords.norm();
  if (!(std::abs(norm - 1.0) <= 1e-6)) {
    throw Error(ErrorCode::kDegenerateVector,
                "vector norm " + std::to_string(norm) + " is not unit");
  }
  return UnitVector(std::move(coords));
}

UnitVector normalize(const Vec& v) {
  const double norm = v.norm();
  if (!(norm > kNormEpsilon)) {
    throw Error(ErrorCode::kDegenerateVector,
                "cannot normalize vector with norm " + std::to_string(norm));
  }
  return UnitVector(v / norm);
}

double inner(const Vec& u, const Vec& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  return u.dot(v);
}

double cosine(const UnitVector& u, const UnitVector& v) {
  return inner(u.coords(), v.coords());
}

PairTable::PairTable(std::size_t n) : n_(n), values_(pair_count(n)) {
  pairs_.reserve(values_.size());
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs_.emplace_back(i, j);
}

std::size_t PairTable::index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

IndexPair PairTable::pair(std::size_t k) const { return pairs_[k]; }

namespace {

template <typename Get>
PairTable similarity_table(std::size_t n, int threads, Get get) {
  if (n < 2) {
    throw Error(ErrorCode::kBatchTooSmall,
                "need at least 2 vectors, got " + std::to_string(n));
  }
  PairTable table(n);
  for (std::size_t i = 1; i < n; ++i) {
    if (get(i).size() != get(0).size()) {
      throw Error(ErrorCode::kDimensionMismatch, "batch has mixed dimensions");
    }
  }
  // One row per task; each entry is a single dot product, so the result is
  // independent of the schedule.
  parallel_for(n - 1, threads, [&](std::size_t i) {
    const Vec& u = get(i);
    std::size_t k = table.index(i, i + 1);
    for (std::size_t j = i + 1; j < n; ++j, ++k) table[k] = u.dot(get(j));
  });
  return table;
}

}  // namespace

SimilarityTable pairwise_similarities(std::span<const UnitVector> batch,
                                      int threads) {
  return similarity_table(batch.size(), threads,
                          [&](std::size_t i) -> const Vec& { return batch[i].coords(); });
}

SimilarityTable pairwise_inner_products(std::span<const Vec> batch, int threads) {
  return similarity_table(batch.size(), threads,
                          [&](std::size_t i) -> const Vec& { return batch[i]; });
}

}  // namespace mar
