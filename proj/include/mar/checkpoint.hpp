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

#ifndef MAR_CHECKPOINT_HPP_
#define MAR_CHECKPOINT_HPP_

#include <filesystem>
#include <string_view>

#include "mar/agent_bank.hpp"
#include "mar/encoder.hpp"

namespace mar {

// Writes to a sibling temporary file and renames it over `path`, so a failed
// run never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Encoder checkpoint, little-endian:
//   "MARENC01", u32 d_in, u32 d_h, u32 d_out, u32 depth,
//   f64 row-major W, b, then W_h, b_h when depth == 2.
std::string encode_encoder(const EncoderParams& params);
EncoderParams decode_encoder(std::string_view bytes);
void save_encoder(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams load_encoder(const std::filesystem::path& path);

// Agent checkpoint: "MARAGT01", u32 N_p, u32 d_out, f64 row-major agents.
std::string encode_agents(const AgentBank& agents);
AgentBank decode_agents(std::string_view bytes, bool constrained);
void save_agents(const std::filesystem::path& path, const AgentBank& agents);
AgentBank load_agents(const std::filesystem::path& path, bool constrained);

std::string read_file(const std::filesystem::path& path);

}  // namespace mar

#endif  // MAR_CHECKPOINT_HPP_
