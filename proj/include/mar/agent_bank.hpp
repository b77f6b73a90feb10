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

#ifndef MAR_AGENT_BANK_HPP_
#define MAR_AGENT_BANK_HPP_

#include <cstddef>
#include <cstdint>

#include "mar/geometry.hpp"

namespace mar {

// One learnable reference agent per auxiliary person, stored as the rows of
// `vectors`. When `constrained` is set every row is unit-norm.
struct AgentBank {
  Mat vectors;
  bool constrained = false;

  std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }
  Eigen::Index dim() const { return vectors.cols(); }
  auto agent(std::size_t i) const { return vectors.row(static_cast<Eigen::Index>(i)); }

  // Rows drawn uniformly on the sphere.
  static AgentBank random(std::size_t count, Eigen::Index dim, std::uint64_t seed);

  // Largest | |a_i| - 1 | over the bank.
  double max_norm_deviation() const;
};

}  // namespace mar

#endif  // MAR_AGENT_BANK_HPP_
