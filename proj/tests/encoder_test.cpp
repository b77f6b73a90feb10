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

#include <limits>
#include <random>

#include "mar/encoder.hpp"
#include "mar/error.hpp"
#include "oracles.hpp"

using namespace mar;

namespace {

EncoderParams identity2() {
  EncoderParams p = EncoderParams::zeros({2, 0, 2, 1});
  p.W.setIdentity();
  return p;
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// Probe loss L = <c, embedding>, whose gradient w.r.t. the embedding is c.
void check_against_differences(std::uint32_t depth, bool constrained, double tolerance) {
  std::mt19937_64 rng(11 + depth);
  EncoderParams p = EncoderParams::initialize({5, 6, 4, depth}, 3);
  for (auto t : p.tensors())
    for (double& v : t) v += 0.1 * oracle::random_vec(rng, 1)[0];
  const Vec x = oracle::random_vec(rng, 5);
  const Vec c = oracle::random_vec(rng, 4);

  const EncoderGrad g = backward(p, x, c, constrained);
  auto loss = [&] { return c.dot(forward(p, x, constrained).embedding); };
  auto analytic = g.tensors();
  auto params = p.tensors();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t k = 0; k < params[t].size(); ++k) {
      const double numeric = oracle::central_difference(loss, &params[t][k]);
      const double a = analytic[t][k];
      INFO("tensor " << t << " entry " << k << " analytic " << a << " numeric " << numeric);
      if (std::abs(a) < 1e-6) {
        CHECK(std::abs(a - numeric) <= 1e-8);
      } else {
        CHECK(std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric)) <= tolerance);
      }
    }
  }
}

}  // namespace

TEST_CASE("forward with an identity head") {
  const EncoderParams p = identity2();
  const Vec e = forward(p, v2(3, 4), true).embedding;
  CHECK(e[0] == Catch::Approx(0.6).margin(1e-15));
  CHECK(e[1] == Catch::Approx(0.8).margin(1e-15));
  CHECK(forward(p, v2(1, 0), true).embedding == v2(1, 0));
  CHECK(forward(p, v2(3, 4), false).embedding == v2(3, 4));
  CHECK(forward(p, v2(3, 4), false).pre_norm == v2(3, 4));
}

TEST_CASE("forward errors") {
  const EncoderParams p = identity2();
  try {
    forward(p, Vec::Ones(3), true);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
  EncoderParams bad = p;
  bad.b[0] = std::numeric_limits<double>::infinity();
  try {
    forward(bad, v2(1, 1), false);
    FAIL("expected NonFiniteActivation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFiniteActivation);
  }
}

TEST_CASE("initialization is fan-in bounded, seeded and bias free") {
  const EncoderShape shape{32, 64, 32, 2};
  const EncoderParams a = EncoderParams::initialize(shape, 7);
  CHECK(a == EncoderParams::initialize(shape, 7));
  CHECK(!(a == EncoderParams::initialize(shape, 8)));
  CHECK(a.W.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(64.0));
  CHECK(a.W_h.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(32.0));
  CHECK(a.b.isZero(0.0));
  CHECK(a.b_h.isZero(0.0));
  CHECK(a.parameter_count() == 32 * 64 + 64 + 64 * 32 + 32);
}

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(EncoderParams::zeros({4, 0, 4, 3}), Error);
  CHECK_THROWS_AS(EncoderParams::zeros({4, 0, 1, 1}), Error);
  CHECK_THROWS_AS(EncoderParams::zeros({4, 0, 4, 2}), Error);
}

TEST_CASE("backward of a zero gradient is zero") {
  const EncoderParams p = EncoderParams::initialize({5, 6, 4, 2}, 1);
  const EncoderGrad g = backward(p, Vec::Ones(5), Vec::Zero(4), true);
  CHECK(g.squared_norm() == 0.0);
}

TEST_CASE("affine layer calculus, unconstrained") {
  std::mt19937_64 rng(5);
  const EncoderParams p = EncoderParams::initialize({5, 0, 4, 1}, 2);
  const Vec x = oracle::random_vec(rng, 5);
  const Vec g = oracle::random_vec(rng, 4);
  const EncoderGrad grad = backward(p, x, g, false);
  CHECK((grad.W - g * x.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(grad.b == g);
}

TEST_CASE("backward matches central differences") {
  SECTION("depth 1, constrained") { check_against_differences(1, true, 1e-6); }
  SECTION("depth 1, unconstrained") { check_against_differences(1, false, 1e-6); }
  SECTION("depth 2, constrained") { check_against_differences(2, true, 1e-6); }
  SECTION("depth 2, unconstrained") { check_against_differences(2, false, 1e-6); }
}

TEST_CASE("normalization backward is orthogonal to the output direction") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const Vec v = oracle::random_vec(rng, 6, 3.0);
    const Vec g = oracle::random_vec(rng, 6);
    const Vec u = v / v.norm();
    CHECK(std::abs(u.dot(normalize_backward(v, g))) <= 1e-9);
  }
}

TEST_CASE("backward_into accumulates") {
  const EncoderParams p = EncoderParams::initialize({5, 6, 4, 2}, 4);
  const Vec x = Vec::LinSpaced(5, -1, 1);
  const Vec g = Vec::LinSpaced(4, 0.5, -0.5);
  EncoderGrad acc = backward(p, x, g, true);
  backward_into(p, x, forward(p, x, true), g, true, acc);
  EncoderGrad twice = backward(p, x, g, true);
  twice.scale(2.0);
  acc.add_scaled(twice, -1.0);
  CHECK(acc.squared_norm() <= 1e-24);
}
