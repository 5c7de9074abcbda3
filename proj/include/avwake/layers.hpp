// avwake/layers.hpp

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

#ifndef AVWAKE_LAYERS_HPP_
#define AVWAKE_LAYERS_HPP_

#include <memory>
#include <optional>
#include <string>

#include "avwake/registry.hpp"
#include "avwake/tensor.hpp"

namespace avwake {

// y = x W + b on [B, in] -> [B, out].
class FcLayer {
 public:
  FcLayer(ParamRegistry& registry, const std::string& name, int64_t in,
          int64_t out, double init_scale);
  Tensor Forward(const Tensor& x) const;
  int64_t in_features() const { return in_; }
  int64_t out_features() const { return out_; }
  const std::shared_ptr<ParamEntry>& weight() const { return w_; }
  const std::shared_ptr<ParamEntry>& bias() const { return b_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  int64_t in_, out_;
  std::shared_ptr<ParamEntry> w_;  // [in, out]
  std::shared_ptr<ParamEntry> b_;  // [out]
};

class Conv2dLayer {
 public:
  Conv2dLayer(ParamRegistry& registry, const std::string& name, int64_t cin,
              int64_t cout, int64_t kernel, int stride_h, int stride_w, int pad,
              double init_scale);
  Tensor Forward(const Tensor& x) const;  // [B,cin,H,W] -> [B,cout,H',W']
  int64_t OutSize(int64_t in, bool height_axis) const;
  int64_t cin() const { return cin_; }
  int64_t cout() const { return cout_; }
  int64_t kernel() const { return kernel_; }
  const std::shared_ptr<ParamEntry>& weight() const { return w_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  int64_t cin_, cout_, kernel_;
  int stride_h_, stride_w_, pad_;
  std::shared_ptr<ParamEntry> w_;  // [cout, cin, k, k]
  std::shared_ptr<ParamEntry> b_;  // [cout]
};

class DepthwiseConv2dLayer {
 public:
  DepthwiseConv2dLayer(ParamRegistry& registry, const std::string& name,
                       int64_t channels, int64_t kernel, int stride, int pad,
                       double init_scale);
  Tensor Forward(const Tensor& x) const;
  int64_t OutSize(int64_t in) const;
  int64_t channels() const { return channels_; }
  int64_t kernel() const { return kernel_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  int64_t channels_, kernel_;
  int stride_, pad_;
  std::shared_ptr<ParamEntry> w_;  // [channels, k, k]
  std::shared_ptr<ParamEntry> b_;  // [channels]
};

// Inverted residual block: 1x1 expand (skipped when the expansion keeps the
// channel count), depthwise 3x3, linear 1x1 projection, residual add when
// stride is 1 and channel counts match.
class BottleneckBlock {
 public:
  BottleneckBlock(ParamRegistry& registry, const std::string& name, int64_t in,
                  int64_t out, int stride, double expansion, double init_scale);
  Tensor Forward(const Tensor& x) const;
  int64_t in_channels() const { return in_; }
  int64_t out_channels() const { return out_; }
  int64_t expanded_channels() const { return expanded_; }
  int stride() const { return stride_; }
  bool has_residual() const { return residual_; }
  const std::optional<Conv2dLayer>& expand() const { return expand_; }
  const DepthwiseConv2dLayer& depthwise() const { return *dw_; }
  const Conv2dLayer& project() const { return *project_; }

 private:
  std::string name_;
  int64_t in_, out_, expanded_;
  int stride_;
  bool residual_;
  std::optional<Conv2dLayer> expand_;
  std::optional<DepthwiseConv2dLayer> dw_;
  std::optional<Conv2dLayer> project_;
};

// Unidirectional LSTM over [B, T, in] -> [B, T, hidden]; gate order in the
// packed 4H dimension is (input, forget, cell, output); forget-gate bias
// initialized to one.
class LstmLayer {
 public:
  LstmLayer(ParamRegistry& registry, const std::string& name, int64_t in,
            int64_t hidden, double init_scale);
  Tensor Forward(const Tensor& x) const;  // zero initial state
  Tensor Forward(const Tensor& x, const Tensor& h0, const Tensor& c0) const;
  int64_t in_features() const { return in_; }
  int64_t hidden() const { return hidden_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  int64_t in_, hidden_;
  std::shared_ptr<ParamEntry> wx_;  // [in, 4H]
  std::shared_ptr<ParamEntry> wh_;  // [H, 4H]
  std::shared_ptr<ParamEntry> b_;   // [4H]
};

}  // namespace avwake

#endif  // AVWAKE_LAYERS_HPP_
