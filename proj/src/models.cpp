// avwake/models.cpp

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

#include "avwake/models.hpp"

#include <cmath>

#include "avwake/errors.hpp"
#include "avwake/ops.hpp"

namespace avwake {

const char* ModalityName(Modality m) {
  switch (m) {
    case Modality::kAudio: return "audio";
    case Modality::kVideo: return "video";
    case Modality::kAudioVisual: return "av";
  }
  return "?";
}

Modality ParseModality(const std::string& name) {
  if (name == "audio") return Modality::kAudio;
  if (name == "video") return Modality::kVideo;
  if (name == "av" || name == "audio-visual" || name == "audiovisual") {
    return Modality::kAudioVisual;
  }
  throw ConfigError("unknown modality: " + name);
}

std::vector<BottleneckDims> ModelDims::DefaultLadder() {
  return {
      {12, 2}, {12, 1}, {12, 1},
      {16, 2}, {16, 1}, {16, 1}, {16, 1},
      {24, 2}, {24, 1}, {24, 1}, {24, 1}, {24, 1}, {24, 1},
  };
}

void ModelDims::ApplyDefaults() {
  if (encoder.blocks.empty()) encoder.blocks = DefaultLadder();
}

Tensor FuseFeatures(const Tensor& fbank, const Tensor& embeddings) {
  if (fbank.rank() != 3 || embeddings.rank() != 3 || fbank.dim(0) != embeddings.dim(0)) {
    throw ShapeError("fuse: expected [B,Ta,da] and [B,Tv,dv], got " +
                     ShapeStr(fbank.shape()) + " and " + ShapeStr(embeddings.shape()));
  }
  const int64_t batch = fbank.dim(0);
  const int64_t ta = fbank.dim(1);
  const int64_t tv = embeddings.dim(1);
  const int64_t dv = embeddings.dim(2);
  if (ta % tv != 0) {
    throw ContractError("fuse: audio frames " + std::to_string(ta) +
                        " not an integer multiple of video frames " + std::to_string(tv));
  }
  const int64_t k = ta / tv;
  Tensor upsampled;
  if (k == 1) {
    upsampled = embeddings;
  } else {
    Tensor col = Reshape(embeddings, {batch, tv, 1, dv});
    std::vector<Tensor> copies(static_cast<size_t>(k), col);
    upsampled = Reshape(Concat(copies, 2), {batch, ta, dv});
  }
  std::vector<Tensor> parts = {fbank, upsampled};
  return Concat(parts, 2);
}

Tensor WwsLoss(const Tensor& scores, const std::vector<double>& labels) {
  if (scores.rank() != 1 || scores.dim(0) != static_cast<int64_t>(labels.size())) {
    throw ShapeError("loss: scores " + ShapeStr(scores.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  std::vector<double> y(labels.size());
  std::vector<double> one_minus_y(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw ContractError("loss: label must be 0 or 1, got " + std::to_string(labels[i]));
    }
    y[i] = labels[i];
    one_minus_y[i] = 1.0 - labels[i];
  }
  const int64_t n = scores.dim(0);
  const double kClamp = 1e-7;
  // p clamped to [kClamp, 1-kClamp]: max, then min via negation.
  Tensor lo = Max(scores, Tensor::Scalar(kClamp));
  Tensor p = Mul(Max(Mul(lo, Tensor::Scalar(-1.0)), Tensor::Scalar(-(1.0 - kClamp))),
                 Tensor::Scalar(-1.0));
  Tensor yt = Tensor::FromData({n}, y);
  Tensor ymt = Tensor::FromData({n}, one_minus_y);
  Tensor pos = Mul(Log(p), yt);
  Tensor q = Add(Mul(p, Tensor::Scalar(-1.0)), Tensor::Scalar(1.0));
  Tensor neg = Mul(Log(q), ymt);
  Tensor total = Sum(Mul(Add(pos, neg), Tensor::Scalar(-1.0)));
  return Mul(total, Tensor::Scalar(1.0 / static_cast<double>(n)));
}

double WwsLossValue(double score, double label) {
  if (label != 0.0 && label != 1.0) {
    throw ContractError("loss: label must be 0 or 1");
  }
  const double kClamp = 1e-7;
  const double p = std::min(std::max(score, kClamp), 1.0 - kClamp);
  return -label * std::log(p) - (1.0 - label) * std::log(1.0 - p);
}

int Decide(double score, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ContractError("decide: threshold must lie in (0,1)");
  }
  return score >= threshold ? 1 : 0;
}

WwsModel::WwsModel(Modality modality, const ModelDims& dims, uint64_t init_seed)
    : modality_(modality), dims_(dims), registry_(init_seed) {
  dims_.ApplyDefaults();
  const double scale = dims_.init_scale;

  const bool has_encoder = modality != Modality::kAudio;
  if (has_encoder) {
    // Encoder layers use fan-in-derived init bounds (scale -1 below): a
    // flat small scale starves the deep per-frame stack of forward signal,
    // leaving the embeddings nearly constant.  The backend keeps the flat
    // scale so its layer families share one magnitude distribution.
    const EncoderDims& e = dims_.encoder;
    stem_ = std::make_unique<Conv2dLayer>(registry_, "encoder.stem", 1, e.stem_ch,
                                          e.stem_kernel, e.stem_stride, e.stem_stride,
                                          e.stem_pad, -1.0);
    int64_t ch = e.stem_ch;
    int64_t size = (dims_.lip_size + 2 * e.stem_pad - e.stem_kernel) / e.stem_stride + 1;
    for (size_t i = 0; i < e.blocks.size(); ++i) {
      encoder_sizes_.push_back(size);
      const BottleneckDims& bd = e.blocks[i];
      char tag[16];
      std::snprintf(tag, sizeof(tag), "b%02zu", i);
      blocks_.push_back(std::make_unique<BottleneckBlock>(
          registry_, "encoder." + std::string(tag), ch, bd.out, bd.stride,
          e.expansion, -1.0));
      ch = bd.out;
      if (bd.stride == 2) size = (size + 2 - 3) / 2 + 1;
    }
    encoder_sizes_.push_back(size);
    head_ = std::make_unique<Conv2dLayer>(registry_, "encoder.head", ch, e.embed_dim,
                                          1, 1, 1, 0, -1.0);
  }

  switch (modality) {
    case Modality::kAudio: backend_width_ = dims_.feat_dim; backend_frames_ = dims_.audio_frames; break;
    case Modality::kVideo: backend_width_ = dims_.encoder.embed_dim; backend_frames_ = dims_.video_frames; break;
    case Modality::kAudioVisual:
      backend_width_ = dims_.feat_dim + dims_.encoder.embed_dim;
      backend_frames_ = dims_.audio_frames;
      break;
  }

  if (modality != Modality::kVideo) {
    registry_.CreateConstant("norm.fbank_mean", "stat", {dims_.feat_dim}, 0.0, false);
    registry_.CreateConstant("norm.fbank_std", "stat", {dims_.feat_dim}, 1.0, false);
  }

  const BackendDims& b = dims_.backend;
  conv1_ = std::make_unique<Conv2dLayer>(registry_, "backend.conv1", 1, b.conv1_ch,
                                         3, 2, 1, 1, scale);
  conv2_ = std::make_unique<Conv2dLayer>(registry_, "backend.conv2", b.conv1_ch,
                                         b.conv2_ch, 3, 2, 2, 1, scale);
  const int64_t w2 = (backend_width_ + 2 - 3) / 2 + 1;
  lstm_ = std::make_unique<LstmLayer>(registry_, "backend.lstm", b.conv2_ch * w2,
                                      b.lstm_hidden, scale);
  fc1_ = std::make_unique<FcLayer>(registry_, "backend.fc1", b.lstm_hidden,
                                   b.fc_hidden, scale);
  fc2_ = std::make_unique<FcLayer>(registry_, "backend.fc2", b.fc_hidden, 1, scale);
}

Tensor WwsModel::EncodeLips(const Tensor& lips) const {
  if (!stem_) {
    throw ContractError("model has no lip encoder (audio modality)");
  }
  if (lips.rank() != 5 || lips.dim(2) != 1 || lips.dim(3) != dims_.lip_size ||
      lips.dim(4) != dims_.lip_size) {
    throw ShapeError("encoder: expected [B,Tv,1," + std::to_string(dims_.lip_size) +
                     "," + std::to_string(dims_.lip_size) + "], got " +
                     ShapeStr(lips.shape()));
  }
  const int64_t batch = lips.dim(0);
  const int64_t frames = lips.dim(1);
  Tensor x = Reshape(lips, {batch * frames, 1, dims_.lip_size, dims_.lip_size});
  x = Relu6(stem_->Forward(x));
  for (const auto& block : blocks_) x = block->Forward(x);
  x = Relu6(head_->Forward(x));
  Tensor pooled = GlobalAvgPool(x);  // [B*Tv, embed]
  return Reshape(pooled, {batch, frames, dims_.encoder.embed_dim});
}

Tensor WwsModel::BackendScore(const Tensor& seq) const {
  if (seq.rank() != 3 || seq.dim(2) != backend_width_) {
    throw ShapeError("backend: expected [B,T," + std::to_string(backend_width_) +
                     "], got " + ShapeStr(seq.shape()));
  }
  const int64_t batch = seq.dim(0);
  const int64_t frames = seq.dim(1);
  Tensor x = Reshape(seq, {batch, 1, frames, backend_width_});
  x = Relu6(conv1_->Forward(x));
  x = Relu6(conv2_->Forward(x));  // [B, c2, T', W']
  const int64_t t2 = x.dim(2);
  const int64_t flat = x.dim(1) * x.dim(3);
  std::vector<Tensor> steps;
  steps.reserve(static_cast<size_t>(t2));
  for (int64_t t = 0; t < t2; ++t) {
    steps.push_back(Reshape(Slice(x, 2, t, 1), {batch, 1, flat}));
  }
  Tensor sequence = Concat(steps, 1);  // [B, T', c2*W']
  Tensor h = lstm_->Forward(sequence);
  Tensor last = Reshape(Slice(h, 1, t2 - 1, 1), {batch, dims_.backend.lstm_hidden});
  Tensor f = Relu6(fc1_->Forward(last));
  Tensor logit = fc2_->Forward(f);  // [B,1]
  return Reshape(Sigmoid(logit), {batch});
}

Tensor WwsModel::ScoreAudio(const Tensor& fbank) const {
  if (modality_ != Modality::kAudio) {
    throw ContractError("ScoreAudio on a non-audio model");
  }
  return BackendScore(fbank);
}

Tensor WwsModel::ScoreVideo(const Tensor& lips) const {
  if (modality_ != Modality::kVideo) {
    throw ContractError("ScoreVideo on a non-video model");
  }
  return BackendScore(EncodeLips(lips));
}

Tensor WwsModel::ScoreAudioVisual(const Tensor& fbank, const Tensor& lips) const {
  if (modality_ != Modality::kAudioVisual) {
    throw ContractError("ScoreAudioVisual on a non-av model");
  }
  return BackendScore(FuseFeatures(fbank, EncodeLips(lips)));
}

namespace {

CostRow RowFor(const ParamRegistry& reg, const std::string& layer,
               const std::string& kind, int64_t flops) {
  CostRow row;
  row.name = layer;
  row.kind = kind;
  row.flops = flops;
  for (const char* suffix : {".weight", ".bias"}) {
    if (auto entry = reg.Find(layer + suffix)) {
      row.params += entry->weight.numel();
      row.pruned += entry->MaskZeroCount();
    }
  }
  return row;
}

}  // namespace

CostReport WwsModel::Cost() const {
  CostReport report;
  const ParamRegistry& reg = registry_;
  const bool has_encoder = modality_ != Modality::kAudio;

  if (has_encoder) {
    const EncoderDims& e = dims_.encoder;
    const int64_t frames = dims_.video_frames;
    int64_t size = encoder_sizes_.front();
    report.AddRow(RowFor(reg, "encoder.stem", "conv2d",
                         frames * Conv2dFlops(e.stem_kernel, 1, e.stem_ch, size, size)));
    for (size_t i = 0; i < blocks_.size(); ++i) {
      const BottleneckBlock& blk = *blocks_[i];
      const int64_t in_size = encoder_sizes_[i];
      const int64_t out_size = (blk.stride() == 2) ? (in_size + 2 - 3) / 2 + 1 : in_size;
      const std::string base = "encoder.b" + [&] {
        char tag[8];
        std::snprintf(tag, sizeof(tag), "%02zu", i);
        return std::string(tag);
      }();
      if (blk.expand().has_value()) {
        report.AddRow(RowFor(reg, base + ".expand", "conv2d",
                             frames * Conv2dFlops(1, blk.in_channels(),
                                                  blk.expanded_channels(), in_size,
                                                  in_size)));
      }
      report.AddRow(RowFor(reg, base + ".dw", "dwconv2d",
                           frames * DepthwiseConv2dFlops(3, blk.expanded_channels(),
                                                         out_size, out_size)));
      report.AddRow(RowFor(reg, base + ".project", "conv2d",
                           frames * Conv2dFlops(1, blk.expanded_channels(),
                                                blk.out_channels(), out_size,
                                                out_size)));
    }
    const int64_t head_size = encoder_sizes_.back();
    report.AddRow(RowFor(reg, "encoder.head", "conv2d",
                         frames * Conv2dFlops(1, e.blocks.back().out, e.embed_dim,
                                              head_size, head_size)));
  }

  const BackendDims& b = dims_.backend;
  const int64_t t1 = (backend_frames_ + 2 - 3) / 2 + 1;
  const int64_t w1 = backend_width_;
  const int64_t t2 = (t1 + 2 - 3) / 2 + 1;
  const int64_t w2 = (w1 + 2 - 3) / 2 + 1;
  report.AddRow(RowFor(reg, "backend.conv1", "conv2d",
                       Conv2dFlops(3, 1, b.conv1_ch, t1, w1)));
  report.AddRow(RowFor(reg, "backend.conv2", "conv2d",
                       Conv2dFlops(3, b.conv1_ch, b.conv2_ch, t2, w2)));
  {
    CostRow row;
    row.name = "backend.lstm";
    row.kind = "lstm";
    row.flops = LstmFlops(b.conv2_ch * w2, b.lstm_hidden, t2);
    for (const char* suffix : {".wx", ".wh", ".bias"}) {
      if (auto entry = reg.Find(std::string("backend.lstm") + suffix)) {
        row.params += entry->weight.numel();
        row.pruned += entry->MaskZeroCount();
      }
    }
    report.AddRow(row);
  }
  report.AddRow(RowFor(reg, "backend.fc1", "fc", FcFlops(b.lstm_hidden, b.fc_hidden)));
  report.AddRow(RowFor(reg, "backend.fc2", "fc", FcFlops(b.fc_hidden, 1)));
  return report;
}

}  // namespace avwake
