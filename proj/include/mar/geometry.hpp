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

#ifndef MAR_GEOMETRY_HPP_
#define MAR_GEOMETRY_HPP_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mar {

using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Vectors with norm at or below this have no usable direction.
inline constexpr double kNormEpsilon = 1e-12;

// A point on the unit hypersphere. Only constructible through normalize() or
// from_unit(), which checks the norm.
class UnitVector {
 public:
  static UnitVector from_unit(Vec coords);

  const Vec& coords() const { return coords_; }
  Eigen::Index dim() const { return coords_.size(); }
  double operator[](Eigen::Index k) const { return coords_[k]; }

 private:
  explicit UnitVector(Vec coords) : coords_(std::move(coords)) {}
  friend UnitVector normalize(const Vec& v);

  Vec coords_;
};

UnitVector normalize(const Vec& v);

double cosine(const UnitVector& u, const UnitVector& v);

// Dot product with a dimension check; the building block of every similarity
// in the embedding.
double inner(const Vec& u, const Vec& v);

using IndexPair = std::pair<std::size_t, std::size_t>;

// Strict upper triangle of a symmetric n x n table, stored in the fixed order
// (0,1), (0,2), ..., (n-2,n-1).
class PairTable {
 public:
  PairTable() = default;
  explicit PairTable(std::size_t n);

  std::size_t n() const { return n_; }
  std::size_t size() const { return values_.size(); }

  std::size_t index(std::size_t i, std::size_t j) const;
  IndexPair pair(std::size_t k) const;

  double at(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
  std::vector<IndexPair> pairs_;
};

using SimilarityTable = PairTable;

inline std::size_t pair_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

SimilarityTable pairwise_similarities(std::span<const UnitVector> batch,
                                      int threads = 1);

// Same table over raw vectors. Used on embeddings that are already unit-norm
// by construction.
SimilarityTable pairwise_inner_products(std::span<const Vec> batch,
                                        int threads = 1);

}  // namespace mar

#endif  // MAR_GEOMETRY_HPP_
