// avwake/train.cpp

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

#include "avwake/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "avwake/errors.hpp"
#include "avwake/ops.hpp"

namespace avwake {

std::string TrainLog::ToCsv() const {
  std::ostringstream os;
  os << "iteration,epoch_in_iteration,global_epoch,mean_loss\n";
  char buf[64];
  for (const TrainLogRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.12g", r.mean_loss);
    os << r.iteration << ',' << r.epoch_in_iteration << ',' << r.global_epoch << ','
       << buf << '\n';
  }
  return os.str();
}

NormStats GetModelNormStats(const WwsModel& model) {
  NormStats stats;
  auto mean = model.registry().Find("norm.fbank_mean");
  auto sd = model.registry().Find("norm.fbank_std");
  if (!mean || !sd) throw ContractError("model carries no feature norm stats");
  stats.mean.assign(mean->weight.data(), mean->weight.data() + mean->weight.numel());
  stats.std_dev.assign(sd->weight.data(), sd->weight.data() + sd->weight.numel());
  return stats;
}

void SetModelNormStats(WwsModel& model, const NormStats& stats) {
  auto mean = model.registry().Require("norm.fbank_mean");
  auto sd = model.registry().Require("norm.fbank_std");
  if (static_cast<int64_t>(stats.mean.size()) != mean->weight.numel()) {
    throw ContractError("norm stats width mismatch");
  }
  std::copy(stats.mean.begin(), stats.mean.end(), mean->weight.data());
  std::copy(stats.std_dev.begin(), stats.std_dev.end(), sd->weight.data());
}

Tensor ScoreBatch(const WwsModel& model, const RecordReader& reader,
                  const FeatureCache* fbank_cache, const NormStats* stats,
                  std::span<const int64_t> indices) {
  switch (model.modality()) {
    case Modality::kAudio:
      return model.ScoreAudio(MakeFbankBatch(*fbank_cache, *stats, indices));
    case Modality::kVideo:
      return model.ScoreVideo(MakeLipBatch(reader, indices));
    case Modality::kAudioVisual:
      return model.ScoreAudioVisual(MakeFbankBatch(*fbank_cache, *stats, indices),
                                    MakeLipBatch(reader, indices));
  }
  throw ContractError("unknown modality");
}

Trainer::Trainer(WwsModel& model, const RecordReader& reader,
                 const FbankConfig& fbank, const TrainOptions& options)
    : model_(model), reader_(reader), options_(options) {
  if (options_.batch_size < 1 || options_.chunk_size < 1 || options_.epochs < 0) {
    throw ContractError("trainer: bad options");
  }
  if (model.modality() != Modality::kVideo) {
    fbank_cache_ = std::make_unique<FeatureCache>(reader, fbank);
    stats_ = std::make_unique<NormStats>(fbank_cache_->ComputeStats());
    SetModelNormStats(model, *stats_);
  }
  optimizer_ = std::make_unique<Adam>(model.registry(), options.adam);
}

void Trainer::ResetOptimizer() {
  optimizer_ = std::make_unique<Adam>(model_.registry(), options_.adam);
}

double Trainer::TrainEpochs(int epochs, int iteration) {
  double last = 0.0;
  for (int e = 1; e <= epochs; ++e) {
    last = RunOneEpoch(iteration, e);
  }
  return last;
}

double Trainer::RunOneEpoch(int iteration, int epoch_in_iteration) {
  ++global_epoch_;
  const int64_t n = reader_.size();
  if (n == 0) throw ContractError("trainer: empty dataset");
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(MixSeed(options_.shuffle_seed, static_cast<uint64_t>(global_epoch_)));
  shuffle_rng.Shuffle(order);

  double loss_total = 0.0;
  int batch_index = 0;
  for (int64_t start = 0; start < n; start += options_.batch_size, ++batch_index) {
    const int64_t batch_n = std::min<int64_t>(options_.batch_size, n - start);
    const double inv_batch = 1.0 / static_cast<double>(batch_n);
    double batch_loss = 0.0;
    for (int64_t cstart = 0; cstart < batch_n; cstart += options_.chunk_size) {
      const int64_t chunk_n = std::min<int64_t>(options_.chunk_size, batch_n - cstart);
      std::span<const int64_t> idx(order.data() + start + cstart,
                                   static_cast<size_t>(chunk_n));
      Tape tape;
      Tensor loss;
      {
        TapeScope scope(tape);
        Tensor scores = ScoreBatch(model_, reader_, fbank_cache_.get(), stats_.get(), idx);
        std::vector<double> labels = BatchLabels(reader_, idx);
        // Per-sample losses summed here, normalized by the full batch size
        // so chunking never changes the objective.
        Tensor mean_over_chunk = WwsLoss(scores, labels);
        loss = Mul(mean_over_chunk,
                   Tensor::Scalar(static_cast<double>(chunk_n) * inv_batch));
      }
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(global_epoch_) + " batch " +
                           std::to_string(batch_index));
      }
      batch_loss += value;
      tape.Backward(loss);
    }
    optimizer_->Step();
    optimizer_->ZeroGrads();
    if (options_.verify_masks_each_step) {
      for (const auto& [name, entry] : model_.registry().entries()) {
        if (!entry->mask.defined()) continue;
        const double* w = entry->weight.data();
        const double* m = entry->mask.data();
        for (int64_t i = 0; i < entry->weight.numel(); ++i) {
          if (m[i] == 0.0 && w[i] != 0.0) {
            throw ContractError("mask violation after step: " + name + "[" +
                                std::to_string(i) + "] = " + std::to_string(w[i]));
          }
        }
      }
    }
    loss_total += batch_loss * static_cast<double>(batch_n);
  }
  const double mean_loss = loss_total / static_cast<double>(n);
  log_.rows.push_back({iteration, epoch_in_iteration, global_epoch_, mean_loss});
  return mean_loss;
}

}  // namespace avwake
