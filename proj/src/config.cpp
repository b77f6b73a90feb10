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

#include "mar/config.hpp"

#include <charconv>
#include <sstream>

#include "mar/checkpoint.hpp"
#include "mar/error.hpp"

namespace mar {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KeyValues parse_key_values(std::string_view text, const std::string& source) {
  KeyValues kv;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::kInvalidConfig,
                  source + ":" + std::to_string(line_no) + ": expected `key = value`");
    }
    kv[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

const std::string& require(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw Error(ErrorCode::kMalformedFile, "missing key `" + key + "`");
  return it->second;
}

double parse_real(std::string_view text, const std::string& key) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorCode::kInvalidConfig, "`" + key + "` expects a number, got `" + t + "`");
  }
  return v;
}

std::uint64_t parse_count(std::string_view text, const std::string& key) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorCode::kInvalidConfig,
                "`" + key + "` expects a non-negative integer, got `" + t + "`");
  }
  return v;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto real = [&](double& field) { field = parse_real(value, key); };
  auto count = [&](std::size_t& field) { field = static_cast<std::size_t>(parse_count(value, key)); };
  auto u32 = [&](std::uint32_t& field) { field = static_cast<std::uint32_t>(parse_count(value, key)); };

  TrainConfig& t = train;
  SyntheticSpec& s = synth;
  if (key == "lambda1") real(t.lambda1);
  else if (key == "lambda2") real(t.lambda2);
  else if (key == "beta") real(t.beta);
  else if (key == "p") real(t.p);
  else if (key == "m") real(t.m);
  else if (key == "batch_size") count(t.batch_size);
  else if (key == "pretrain_learning_rate") real(t.pretrain_learning_rate);
  else if (key == "learning_rate") real(t.learning_rate);
  else if (key == "pretrain_epochs") count(t.pretrain_epochs);
  else if (key == "train_epochs") count(t.train_epochs);
  else if (key == "seed") t.seed = s.seed = parse_count(value, key);
  else if (key == "d_in") {
    u32(t.d_in);
    s.d_in = t.d_in;
  }
  else if (key == "d_h") u32(t.d_h);
  else if (key == "d_out") u32(t.d_out);
  else if (key == "depth") u32(t.depth);
  else if (key == "clip_norm") real(t.clip_norm);
  else if (key == "threads") t.threads = static_cast<int>(parse_count(value, key));
  else if (key == "mining") {
    if (value == "guided") t.mining = MiningMode::kGuided;
    else if (value == "feature") t.mining = MiningMode::kFeature;
    else throw Error(ErrorCode::kInvalidConfig, "mining must be guided or feature");
  }
  else if (key == "scale_override") real(t.scale_override);
  else if (key == "n_reference") count(t.n_reference);
  else if (key == "eval_every") count(t.eval_every);
  else if (key == "n_persons_target") count(s.n_persons_target);
  else if (key == "n_persons_aux") count(s.n_persons_aux);
  else if (key == "n_persons_test") count(s.n_persons_test);
  else if (key == "views_target") count(s.views_target);
  else if (key == "images_per_person_per_view") count(s.images_per_person_per_view);
  else if (key == "view_transform_scale") real(s.view_transform_scale);
  else if (key == "view_offset") real(s.view_offset);
  else if (key == "noise_sigma") real(s.noise_sigma);
  else if (key == "confuser_fraction") real(s.confuser_fraction);
  else if (key == "clue_dim") count(s.clue_dim);
  else if (key == "clue_offset") real(s.clue_offset);
  else throw Error(ErrorCode::kInvalidConfig, "unknown config key `" + key + "`");
}

void RunConfig::apply(const KeyValues& kv) {
  for (const auto& [k, v] : kv) set(k, v);
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  const TrainConfig& t = train;
  const SyntheticSpec& s = synth;
  out << "# training\n"
      << "lambda1 = " << t.lambda1 << '\n'
      << "lambda2 = " << t.lambda2 << '\n'
      << "beta = " << t.beta << '\n'
      << "p = " << t.p << '\n'
      << "m = " << t.m << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "pretrain_learning_rate = " << t.pretrain_learning_rate << '\n'
      << "learning_rate = " << t.learning_rate << '\n'
      << "pretrain_epochs = " << t.pretrain_epochs << '\n'
      << "train_epochs = " << t.train_epochs << '\n'
      << "seed = " << t.seed << '\n'
      << "d_in = " << t.d_in << '\n'
      << "d_h = " << t.d_h << '\n'
      << "d_out = " << t.d_out << '\n'
      << "depth = " << t.depth << '\n'
      << "clip_norm = " << t.clip_norm << '\n'
      << "threads = " << t.threads << '\n'
      << "mining = " << to_string(t.mining) << '\n'
      << "scale_override = " << t.scale_override << '\n'
      << "n_reference = " << t.n_reference << '\n'
      << "eval_every = " << t.eval_every << '\n'
      << "# synthetic data\n"
      << "n_persons_target = " << s.n_persons_target << '\n'
      << "n_persons_aux = " << s.n_persons_aux << '\n'
      << "n_persons_test = " << s.n_persons_test << '\n'
      << "views_target = " << s.views_target << '\n'
      << "images_per_person_per_view = " << s.images_per_person_per_view << '\n'
      << "view_transform_scale = " << s.view_transform_scale << '\n'
      << "view_offset = " << s.view_offset << '\n'
      << "noise_sigma = " << s.noise_sigma << '\n'
      << "confuser_fraction = " << s.confuser_fraction << '\n'
      << "clue_dim = " << s.clue_dim << '\n'
      << "clue_offset = " << s.clue_offset << '\n';
  return out.str();
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig cfg;
  cfg.apply(parse_key_values(read_file(path), path.string()));
  return cfg;
}

}  // namespace mar
