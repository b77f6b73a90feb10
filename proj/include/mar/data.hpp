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

#ifndef MAR_DATA_HPP_
#define MAR_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mar/geometry.hpp"

namespace mar {

enum class Domain { kTarget, kAuxiliary };

const char* to_string(Domain d);

// Raw feature vectors with identities and camera views. Person ids of the
// target domain are hidden from training and used only by evaluation; -1
// marks an unknown identity.
struct FeatureDataset {
  Domain domain = Domain::kTarget;
  std::size_t dim = 0;
  std::vector<Vec> features;
  std::vector<std::int64_t> person_ids;
  std::vector<int> view_ids;

  std::size_t size() const { return features.size(); }
  bool empty() const { return features.empty(); }

  void validate() const;
  bool operator==(const FeatureDataset& other) const;
};

// Desk-scale two-domain benchmark. Person prototypes are uniform on the unit
// sphere; every camera view applies its own affine distortion
//   x = p + s (R_v p + o c_v) + noise,
// with s = view_transform_scale, R_v a Gaussian matrix, c_v a unit offset and
// o = view_offset its length. The auxiliary domain has its own cameras.
struct SyntheticSpec {
  std::size_t n_persons_target = 60;
  std::size_t n_persons_aux = 150;
  std::size_t n_persons_test = 60;  // held-out target identities for evaluation
  std::size_t views_target = 6;
  std::size_t images_per_person_per_view = 4;
  std::size_t d_in = 32;
  double view_transform_scale = 0.6;
  double view_offset = 1.0;
  double noise_sigma = 0.08;
  double confuser_fraction = 0.3;
  std::size_t clue_dim = 4;
  double clue_offset = 0.5;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticData {
  FeatureDataset target;  // unlabeled training split
  FeatureDataset test;    // held-out target identities, same cameras
  FeatureDataset aux;     // labeled reference population

  // confuser_of[p] = q when target (or test) person p was built as a near
  // duplicate of person q, -1 otherwise. Indexed by person id.
  std::vector<std::int64_t> confuser_of;
};

SyntheticData generate(const SyntheticSpec& spec);

// Text format:
//   dim = <d>
//   domain = target|aux
//   count = <n>
//   person_id,view_id,f1,...,fd      (one line per record)
FeatureDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const FeatureDataset& dataset);

}  // namespace mar

#endif  // MAR_DATA_HPP_
