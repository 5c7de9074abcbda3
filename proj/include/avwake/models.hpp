// avwake/models.hpp

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

#ifndef AVWAKE_MODELS_HPP_
#define AVWAKE_MODELS_HPP_

#include <memory>
#include <string>
#include <vector>

#include "avwake/cost.hpp"
#include "avwake/layers.hpp"
#include "avwake/registry.hpp"
#include "avwake/tensor.hpp"

namespace avwake {

enum class Modality { kAudio, kVideo, kAudioVisual };

const char* ModalityName(Modality m);
Modality ParseModality(const std::string& name);

struct BottleneckDims {
  int64_t out = 0;
  int stride = 1;
};

// Per-frame lip encoder: stem conv, inverted-residual ladder, 1x1 head,
// global average pool to an embed_dim vector.
struct EncoderDims {
  int64_t stem_ch = 8;
  int64_t stem_kernel = 5;
  int stem_stride = 4;
  int stem_pad = 2;
  double expansion = 2.0;
  std::vector<BottleneckDims> blocks;  // defaults to a 13-block ladder
  int64_t embed_dim = 64;
};

// Sequence classifier shared by all three streams: two 3x3 convs (stride 2
// on time, the second also stride 2 on the feature axis), LSTM, two FC
// layers, sigmoid score head.
struct BackendDims {
  int64_t conv1_ch = 8;
  int64_t conv2_ch = 16;
  int64_t lstm_hidden = 64;
  int64_t fc_hidden = 32;
};

struct ModelDims {
  int64_t feat_dim = 40;      // acoustic feature width
  int64_t audio_frames = 128;
  int64_t video_frames = 32;
  int64_t lip_size = 88;
  EncoderDims encoder;
  BackendDims backend;
  double init_scale = 0.1;

  static std::vector<BottleneckDims> DefaultLadder();
  void ApplyDefaults();
};

// Repeats each embedding row time_a/time_v times and concatenates it with
// the acoustic features along the feature axis:
// [B,Ta,da] + [B,Tv,dv] -> [B,Ta,da+dv].  time_a must be an integer
// multiple of time_v.
Tensor FuseFeatures(const Tensor& fbank, const Tensor& embeddings);

// Mean binary cross-entropy over a batch of scores against {0,1} labels;
// scores are clamped to [1e-7, 1-1e-7] before the logs.
Tensor WwsLoss(const Tensor& scores, const std::vector<double>& labels);
double WwsLossValue(double score, double label);

// 1 iff score >= threshold (ties accept).
int Decide(double score, double threshold);

class WwsModel {
 public:
  WwsModel(Modality modality, const ModelDims& dims, uint64_t init_seed);

  Modality modality() const { return modality_; }
  const ModelDims& dims() const { return dims_; }
  ParamRegistry& registry() { return registry_; }
  const ParamRegistry& registry() const { return registry_; }

  // Per-frame embeddings: [B,Tv,1,S,S] -> [B,Tv,embed_dim].
  Tensor EncodeLips(const Tensor& lips) const;
  // Scores in (0,1), one per batch row.
  Tensor ScoreAudio(const Tensor& fbank) const;           // [B,Ta,feat]
  Tensor ScoreVideo(const Tensor& lips) const;            // [B,Tv,1,S,S]
  Tensor ScoreAudioVisual(const Tensor& fbank, const Tensor& lips) const;

  // Cost at the configured input shape (one sample).
  CostReport Cost() const;

  int64_t backend_width() const { return backend_width_; }

 private:
  Tensor BackendScore(const Tensor& seq) const;  // [B,T,width] -> [B]

  Modality modality_;
  ModelDims dims_;
  ParamRegistry registry_;
  int64_t backend_width_ = 0;
  int64_t backend_frames_ = 0;

  // encoder (video / audio-visual only)
  std::unique_ptr<Conv2dLayer> stem_;
  std::vector<std::unique_ptr<BottleneckBlock>> blocks_;
  std::unique_ptr<Conv2dLayer> head_;
  std::vector<int64_t> encoder_sizes_;  // spatial size entering each block

  // backend
  std::unique_ptr<Conv2dLayer> conv1_;
  std::unique_ptr<Conv2dLayer> conv2_;
  std::unique_ptr<LstmLayer> lstm_;
  std::unique_ptr<FcLayer> fc1_;
  std::unique_ptr<FcLayer> fc2_;
};

}  // namespace avwake

#endif  // AVWAKE_MODELS_HPP_
