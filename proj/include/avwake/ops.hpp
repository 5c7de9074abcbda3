// avwake/ops.hpp

// Copyright 2026  The avwake authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AVWAKE_OPS_HPP_
#define AVWAKE_OPS_HPP_

#include <span>
#include <string_view>
#include <vector>

#include "avwake/tensor.hpp"

namespace avwake {

// Differentiable primitives.  Every op validates operand shapes, rejects
// non-finite inputs, and records itself onto the active tape when any input
// requires grad.  Elementwise binaries broadcast a single-element operand
// against the other side; no other implicit broadcasting exists.

enum class OpKind {
  kAdd,
  kMul,
  kMatMul,
  kConv2d,
  kDepthwiseConv2d,
  kConcat,
  kAvgPool,
  kSigmoid,
  kTanh,
  kLog,
  kSlice,
  kReshape,
  kMax,
  kSum,
  kAddBias,
};

const char* OpKindName(OpKind kind);
OpKind ParseOpKind(std::string_view name);

struct OpAttrs {
  int axis = 0;
  int64_t start = 0;
  int64_t length = 0;
  Shape new_shape;
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;
};

// Uniform entry point over all primitives (the typed functions below are
// thin names over the same node builders).
Tensor ApplyPrimitive(OpKind kind, std::span<const Tensor> inputs,
                      const OpAttrs& attrs = {});

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Max(const Tensor& a, const Tensor& b);
// [m,k] x [k,n] -> [m,n]
Tensor MatMul(const Tensor& a, const Tensor& b);
// x [B,C,H,W], w [O,C,kh,kw], optional bias [O]; zero padding.
Tensor Conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
              int stride_h, int stride_w, int pad_h, int pad_w);
// x [B,C,H,W], w [C,kh,kw], optional bias [C].
Tensor DepthwiseConv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
                       int stride_h, int stride_w, int pad_h, int pad_w);
Tensor Concat(std::span<const Tensor> inputs, int axis);
// [B,C,H,W] -> [B,C], mean over the spatial plane (plain sequential sum).
Tensor GlobalAvgPool(const Tensor& x);
Tensor Sigmoid(const Tensor& x);
Tensor Tanh(const Tensor& x);
// Elementwise natural log; inputs must be strictly positive.
Tensor Log(const Tensor& x);
Tensor Slice(const Tensor& x, int axis, int64_t start, int64_t length);
Tensor Reshape(const Tensor& x, const Shape& shape);
// Full reduction to a single-element tensor.
Tensor Sum(const Tensor& x);
// x [..., d] + b [d], broadcast over the last axis.
Tensor AddBias(const Tensor& x, const Tensor& b);

// max(0, min(6, x)) composed from Mul/Max primitives.
Tensor Relu6(const Tensor& x);

}  // namespace avwake

#endif  // AVWAKE_OPS_HPP_
