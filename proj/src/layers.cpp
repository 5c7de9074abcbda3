// avwake/layers.cpp

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

#include "avwake/layers.hpp"

#include <cmath>
#include <vector>

#include "avwake/errors.hpp"
#include "avwake/ops.hpp"

namespace avwake {

namespace {

// Non-positive scales request a fan-in-derived uniform bound.
double ResolveScale(double requested, int64_t fan_in) {
  if (requested > 0.0) return requested;
  return std::sqrt(6.0 / static_cast<double>(fan_in));
}

}  // namespace

FcLayer::FcLayer(ParamRegistry& registry, const std::string& name, int64_t in,
                 int64_t out, double init_scale)
    : name_(name), in_(in), out_(out) {
  if (in <= 0 || out <= 0) throw ContractError("fc " + name + ": dims must be positive");
  w_ = registry.CreateUniform(name + ".weight", "fc", {in, out},
                              ResolveScale(init_scale, in), true);
  b_ = registry.CreateConstant(name + ".bias", "fc", {out}, 0.0, true);
}

Tensor FcLayer::Forward(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != in_) {
    throw ShapeError("fc " + name_ + ": expected [B," + std::to_string(in_) +
                     "], got " + ShapeStr(x.shape()));
  }
  return AddBias(MatMul(x, w_->Effective()), b_->Effective());
}

Conv2dLayer::Conv2dLayer(ParamRegistry& registry, const std::string& name,
                         int64_t cin, int64_t cout, int64_t kernel, int stride_h,
                         int stride_w, int pad, double init_scale)
    : name_(name), cin_(cin), cout_(cout), kernel_(kernel),
      stride_h_(stride_h), stride_w_(stride_w), pad_(pad) {
  if (cin <= 0 || cout <= 0 || kernel <= 0) {
    throw ContractError("conv2d " + name + ": dims must be positive");
  }
  w_ = registry.CreateUniform(name + ".weight", "conv2d", {cout, cin, kernel, kernel},
                              ResolveScale(init_scale, cin * kernel * kernel), true);
  b_ = registry.CreateConstant(name + ".bias", "conv2d", {cout}, 0.0, true);
}

Tensor Conv2dLayer::Forward(const Tensor& x) const {
  return Conv2d(x, w_->Effective(), b_->Effective(), stride_h_, stride_w_, pad_, pad_);
}

int64_t Conv2dLayer::OutSize(int64_t in, bool height_axis) const {
  const int stride = height_axis ? stride_h_ : stride_w_;
  return (in + 2 * pad_ - kernel_) / stride + 1;
}

DepthwiseConv2dLayer::DepthwiseConv2dLayer(ParamRegistry& registry,
                                           const std::string& name,
                                           int64_t channels, int64_t kernel,
                                           int stride, int pad, double init_scale)
    : name_(name), channels_(channels), kernel_(kernel), stride_(stride), pad_(pad) {
  w_ = registry.CreateUniform(name + ".weight", "dwconv2d", {channels, kernel, kernel},
                              ResolveScale(init_scale, kernel * kernel), true);
  b_ = registry.CreateConstant(name + ".bias", "dwconv2d", {channels}, 0.0, true);
}

Tensor DepthwiseConv2dLayer::Forward(const Tensor& x) const {
  return DepthwiseConv2d(x, w_->Effective(), b_->Effective(), stride_, stride_,
                         pad_, pad_);
}

int64_t DepthwiseConv2dLayer::OutSize(int64_t in) const {
  return (in + 2 * pad_ - kernel_) / stride_ + 1;
}

BottleneckBlock::BottleneckBlock(ParamRegistry& registry, const std::string& name,
                                 int64_t in, int64_t out, int stride,
                                 double expansion, double init_scale)
    : name_(name), in_(in), out_(out), stride_(stride) {
  if (stride != 1 && stride != 2) {
    throw ContractError("bottleneck " + name + ": stride must be 1 or 2, got " +
                        std::to_string(stride));
  }
  if (expansion < 1.0) {
    throw ContractError("bottleneck " + name + ": expansion must be >= 1");
  }
  expanded_ = std::llround(static_cast<double>(in) * expansion);
  residual_ = (stride == 1 && in == out);
  if (expanded_ != in) {
    expand_.emplace(registry, name + ".expand", in, expanded_, 1, 1, 1, 0, init_scale);
  }
  dw_.emplace(registry, name + ".dw", expanded_, 3, stride, 1, init_scale);
  project_.emplace(registry, name + ".project", expanded_, out, 1, 1, 1, 0, init_scale);
}

Tensor BottleneckBlock::Forward(const Tensor& x) const {
  Tensor t = x;
  if (expand_.has_value()) t = Relu6(expand_->Forward(t));
  t = Relu6(dw_->Forward(t));
  t = project_->Forward(t);  // linear projection
  if (residual_) t = Add(t, x);
  return t;
}

LstmLayer::LstmLayer(ParamRegistry& registry, const std::string& name, int64_t in,
                     int64_t hidden, double init_scale)
    : name_(name), in_(in), hidden_(hidden) {
  if (in <= 0 || hidden <= 0) {
    throw ContractError("lstm " + name + ": dims must be positive");
  }
  wx_ = registry.CreateUniform(name + ".wx", "lstm", {in, 4 * hidden}, init_scale, true);
  wh_ = registry.CreateUniform(name + ".wh", "lstm", {hidden, 4 * hidden}, init_scale, true);
  b_ = registry.CreateConstant(name + ".bias", "lstm", {4 * hidden}, 0.0, true);
  // Forget-gate block starts open.
  double* bias = b_->weight.data();
  for (int64_t i = hidden; i < 2 * hidden; ++i) bias[i] = 1.0;
}

Tensor LstmLayer::Forward(const Tensor& x) const {
  if (x.rank() != 3) {
    throw ShapeError("lstm " + name_ + ": expected [B,T,in], got " + ShapeStr(x.shape()));
  }
  const int64_t batch = x.dim(0);
  Tensor h0 = Tensor::Zeros({batch, hidden_});
  Tensor c0 = Tensor::Zeros({batch, hidden_});
  return Forward(x, h0, c0);
}

Tensor LstmLayer::Forward(const Tensor& x, const Tensor& h0, const Tensor& c0) const {
  if (x.rank() != 3 || x.dim(2) != in_) {
    throw ShapeError("lstm " + name_ + ": expected [B,T," + std::to_string(in_) +
                     "], got " + ShapeStr(x.shape()));
  }
  const int64_t batch = x.dim(0);
  const int64_t steps = x.dim(1);
  if (steps < 1) throw ContractError("lstm " + name_ + ": zero-length sequence");
  if (!SameShape(h0.shape(), {batch, hidden_}) || !SameShape(c0.shape(), {batch, hidden_})) {
    throw ShapeError("lstm " + name_ + ": bad initial state shape");
  }

  const Tensor wx = wx_->Effective();
  const Tensor wh = wh_->Effective();
  const Tensor bias = b_->Effective();

  Tensor h = h0;
  Tensor c = c0;
  std::vector<Tensor> outputs;
  outputs.reserve(static_cast<size_t>(steps));
  for (int64_t t = 0; t < steps; ++t) {
    Tensor xt = Reshape(Slice(x, 1, t, 1), {batch, in_});
    Tensor z = AddBias(Add(MatMul(xt, wx), MatMul(h, wh)), bias);
    Tensor gi = Sigmoid(Slice(z, 1, 0, hidden_));
    Tensor gf = Sigmoid(Slice(z, 1, hidden_, hidden_));
    Tensor gc = Tanh(Slice(z, 1, 2 * hidden_, hidden_));
    Tensor go = Sigmoid(Slice(z, 1, 3 * hidden_, hidden_));
    c = Add(Mul(gf, c), Mul(gi, gc));
    h = Mul(go, Tanh(c));
    outputs.push_back(Reshape(h, {batch, 1, hidden_}));
  }
  return Concat(outputs, 1);
}

}  // namespace avwake
