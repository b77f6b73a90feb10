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

#include <catch_amalgamated.hpp>

#include "mar/config.hpp"
#include "mar/error.hpp"

using namespace mar;

TEST_CASE("key value parsing") {
  const KeyValues kv = parse_key_values("# header\n  lambda1 = 0.5  # trailing\n\nseed=3\n", "t");
  CHECK(kv.size() == 2);
  CHECK(kv.at("lambda1") == "0.5");
  CHECK(kv.at("seed") == "3");
  CHECK_THROWS_AS(parse_key_values("no equals sign\n", "t"), Error);
  CHECK_THROWS_AS(parse_key_values("= 3\n", "t"), Error);
}

TEST_CASE("run config fields") {
  RunConfig rc;
  rc.set("lambda2", "12.5");
  rc.set("depth", "2");
  rc.set("mining", "feature");
  rc.set("view_offset", "0.25");
  CHECK(rc.train.lambda2 == 12.5);
  CHECK(rc.train.depth == 2);
  CHECK(rc.train.mining == MiningMode::kFeature);
  CHECK(rc.synth.view_offset == 0.25);

  SECTION("seed and d_in are shared") {
    rc.set("seed", "42");
    rc.set("d_in", "16");
    CHECK(rc.train.seed == 42);
    CHECK(rc.synth.seed == 42);
    CHECK(rc.train.d_in == 16);
    CHECK(rc.synth.d_in == 16);
  }
  SECTION("bad keys and values") {
    auto code_of = [&](const std::string& k, const std::string& v) {
      try {
        rc.set(k, v);
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::kIo;
    };
    CHECK(code_of("lamda1", "1") == ErrorCode::kInvalidConfig);
    CHECK(code_of("lambda1", "one") == ErrorCode::kInvalidConfig);
    CHECK(code_of("batch_size", "-4") == ErrorCode::kInvalidConfig);
    CHECK(code_of("mining", "random") == ErrorCode::kInvalidConfig);
  }
}

TEST_CASE("resolved config text replays the run") {
  RunConfig rc;
  rc.set("lambda1", "0.000123456789");
  rc.set("learning_rate", "0.1");
  rc.set("n_persons_aux", "77");
  rc.set("scale_override", "3.25");
  RunConfig back;
  back.apply(parse_key_values(rc.to_text(), "text"));
  CHECK(back.to_text() == rc.to_text());
  CHECK(back.train.lambda1 == rc.train.lambda1);
  CHECK(back.train.learning_rate == 0.1);
  CHECK(back.synth.n_persons_aux == 77);
}
