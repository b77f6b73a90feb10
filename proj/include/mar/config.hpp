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

#ifndef MAR_CONFIG_HPP_
#define MAR_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "mar/data.hpp"
#include "mar/trainer.hpp"

namespace mar {

// Ordered `key = value` pairs; `#` starts a comment.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text, const std::string& source);
const std::string& require(const KeyValues& kv, const std::string& key);

double parse_real(std::string_view text, const std::string& key);
std::uint64_t parse_count(std::string_view text, const std::string& key);

// A run is configured by one flat namespace holding the TrainConfig and
// SyntheticSpec fields. `d_in` and `seed` are shared by both.
struct RunConfig {
  TrainConfig train;
  SyntheticSpec synth;

  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& kv);
  // Resolved configuration, sufficient to replay a run.
  std::string to_text() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace mar

#endif  // MAR_CONFIG_HPP_
