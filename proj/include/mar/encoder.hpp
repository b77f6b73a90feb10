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

#ifndef MAR_ENCODER_HPP_
#define MAR_ENCODER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "mar/geometry.hpp"

namespace mar {

struct EncoderShape {
  std::uint32_t d_in = 0;
  std::uint32_t d_h = 0;  // only used when depth == 2
  std::uint32_t d_out = 0;
  std::uint32_t depth = 1;

  bool operator==(const EncoderShape&) const = default;
};

// Trainable embedding head. depth 1: v = W x + b. depth 2: h = tanh(W_h x +
// b_h), v = W h + b. The embedding is v / |v| in the constrained phase and v
// itself during pretraining.
struct EncoderParams {
  EncoderShape shape;
  Mat W;
  Vec b;
  Mat W_h;
  Vec b_h;

  static EncoderParams zeros(const EncoderShape& shape);
  // W entries uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  static EncoderParams initialize(const EncoderShape& shape, std::uint64_t seed);

  // Tensors in checkpoint declaration order: W, b, then W_h, b_h for depth 2.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;

  std::size_t parameter_count() const;
  double squared_norm() const;
  bool all_finite() const;

  // this += alpha * other
  void add_scaled(const EncoderParams& other, double alpha);
  void scale(double alpha);
  void set_zero();

  bool operator==(const EncoderParams& other) const;
};

using EncoderGrad = EncoderParams;

struct EncoderOutput {
  Vec embedding;  // unit-norm when constrained, equal to pre_norm otherwise
  Vec pre_norm;
  Vec hidden;  // empty for depth 1
};

void validate_shape(const EncoderShape& shape);

EncoderOutput forward(const EncoderParams& params, const Vec& x, bool constrained);

// Gradient of a loss with respect to the parameters, given the gradient with
// respect to the embedding.
EncoderGrad backward(const EncoderParams& params, const Vec& x,
                     const Vec& grad_wrt_embedding, bool constrained);

// Accumulating form of backward(); reuses a forward pass the caller already has.
void backward_into(const EncoderParams& params, const Vec& x,
                   const EncoderOutput& out, const Vec& grad_wrt_embedding,
                   bool constrained, EncoderGrad& grad);

// Pulls a gradient through u = v / |v|: (I - u u^T) g / |v|.
Vec normalize_backward(const Vec& pre_norm, const Vec& grad_wrt_unit);

}  // namespace mar

#endif  // MAR_ENCODER_HPP_
