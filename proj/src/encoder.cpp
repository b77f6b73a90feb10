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

#include "mar/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mar/error.hpp"

namespace mar {

void validate_shape(const EncoderShape& shape) {
  if (shape.depth != 1 && shape.depth != 2) {
    throw Error(ErrorCode::kInvalidConfig,
                "encoder depth must be 1 or 2, got " + std::to_string(shape.depth));
  }
  if (shape.d_in == 0 || shape.d_out < 2 || (shape.depth == 2 && shape.d_h == 0)) {
    throw Error(ErrorCode::kInvalidConfig, "encoder dimensions must be positive, d_out >= 2");
  }
}

EncoderParams EncoderParams::zeros(const EncoderShape& shape) {
  validate_shape(shape);
  EncoderParams p;
  p.shape = shape;
  const Eigen::Index last_in = shape.depth == 2 ? shape.d_h : shape.d_in;
  p.W = Mat::Zero(shape.d_out, last_in);
  p.b = Vec::Zero(shape.d_out);
  if (shape.depth == 2) {
    p.W_h = Mat::Zero(shape.d_h, shape.d_in);
    p.b_h = Vec::Zero(shape.d_h);
  }
  return p;
}

EncoderParams EncoderParams::initialize(const EncoderShape& shape, std::uint64_t seed) {
  EncoderParams p = zeros(shape);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Mat& m) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  if (shape.depth == 2) fill(p.W_h);
  fill(p.W);
  return p;
}

std::vector<std::span<double>> EncoderParams::tensors() {
  std::vector<std::span<double>> out{{W.data(), static_cast<std::size_t>(W.size())},
                                     {b.data(), static_cast<std::size_t>(b.size())}};
  if (shape.depth == 2) {
    out.emplace_back(W_h.data(), static_cast<std::size_t>(W_h.size()));
    out.emplace_back(b_h.data(), static_cast<std::size_t>(b_h.size()));
  }
  return out;
}

std::vector<std::span<const double>> EncoderParams::tensors() const {
  std::vector<std::span<const double>> out;
  for (auto t : const_cast<EncoderParams*>(this)->tensors()) out.emplace_back(t);
  return out;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (auto t : tensors()) n += t.size();
  return n;
}

double EncoderParams::squared_norm() const {
  double s = 0.0;
  for (auto t : tensors())
    for (double v : t) s += v * v;
  return s;
}

bool EncoderParams::all_finite() const {
  for (auto t : tensors())
    for (double v : t)
      if (!std::isfinite(v)) return false;
  return true;
}

void EncoderParams::add_scaled(const EncoderParams& other, double alpha) {
  if (!(shape == other.shape)) {
    throw Error(ErrorCode::kDimensionMismatch, "encoder parameter shapes differ");
  }
  W += alpha * other.W;
  b += alpha * other.b;
  if (shape.depth == 2) {
    W_h += alpha * other.W_h;
    b_h += alpha * other.b_h;
  }
}

void EncoderParams::scale(double alpha) {
  for (auto t : tensors())
    for (double& v : t) v *= alpha;
}

void EncoderParams::set_zero() {
  for (auto t : tensors())
    for (double& v : t) v = 0.0;
}

bool EncoderParams::operator==(const EncoderParams& other) const {
  if (!(shape == other.shape)) return false;
  auto a = tensors();
  auto c = other.tensors();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::equal(a[i].begin(), a[i].end(), c[i].begin())) return false;
  return true;
}

EncoderOutput forward(const EncoderParams& params, const Vec& x, bool constrained) {
  if (x.size() != static_cast<Eigen::Index>(params.shape.d_in)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "input has dimension " + std::to_string(x.size()) + ", encoder expects " +
                    std::to_string(params.shape.d_in));
  }
  EncoderOutput out;
  if (params.shape.depth == 2) {
    out.hidden = (params.W_h * x + params.b_h).array().tanh().matrix();
    out.pre_norm = params.W * out.hidden + params.b;
  } else {
    out.pre_norm = params.W * x + params.b;
  }
  if (!out.pre_norm.allFinite()) {
    throw Error(ErrorCode::kNonFiniteActivation, "encoder produced a non-finite activation");
  }
  out.embedding = constrained ? normalize(out.pre_norm).coords() : out.pre_norm;
  return out;
}

Vec normalize_backward(const Vec& pre_norm, const Vec& grad_wrt_unit) {
  const double norm = pre_norm.norm();
  const Vec u = pre_norm / norm;
  return (grad_wrt_unit - u * u.dot(grad_wrt_unit)) / norm;
}

void backward_into(const EncoderParams& params, const Vec& x, const EncoderOutput& out,
                   const Vec& grad_wrt_embedding, bool constrained, EncoderGrad& grad) {
  if (grad_wrt_embedding.size() != static_cast<Eigen::Index>(params.shape.d_out)) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding gradient has wrong dimension");
  }
  const Vec grad_v =
      constrained ? normalize_backward(out.pre_norm, grad_wrt_embedding) : grad_wrt_embedding;
  grad.b += grad_v;
  if (params.shape.depth == 2) {
    grad.W.noalias() += grad_v * out.hidden.transpose();
    const Vec grad_h = params.W.transpose() * grad_v;
    const Vec grad_pre =
        (grad_h.array() * (1.0 - out.hidden.array().square())).matrix();
    grad.b_h += grad_pre;
    grad.W_h.noalias() += grad_pre * x.transpose();
  } else {
    grad.W.noalias() += grad_v * x.transpose();
  }
}

EncoderGrad backward(const EncoderParams& params, const Vec& x,
                     const Vec& grad_wrt_embedding, bool constrained) {
  EncoderGrad grad = EncoderParams::zeros(params.shape);
  backward_into(params, x, forward(params, x, constrained), grad_wrt_embedding,
                constrained, grad);
  return grad;
}

}  // namespace mar
