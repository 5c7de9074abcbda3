// avwake/train.hpp

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

#ifndef AVWAKE_TRAIN_HPP_
#define AVWAKE_TRAIN_HPP_

#include <memory>
#include <string>
#include <vector>

#include "avwake/adam.hpp"
#include "avwake/dataset.hpp"
#include "avwake/models.hpp"

namespace avwake {

struct TrainOptions {
  int epochs = 5;
  int batch_size = 64;
  // Sub-batch size for graph construction; gradients accumulate across
  // chunks in a fixed order, so the value affects memory only.
  int chunk_size = 8;
  AdamOptions adam;
  uint64_t shuffle_seed = 42;
  // Re-checks the zero-stays-zero mask invariant after every step.
  bool verify_masks_each_step = false;
};

struct TrainLogRow {
  int iteration = 1;        // pruning iteration tag (1 for plain training)
  int epoch_in_iteration = 1;
  int global_epoch = 1;
  double mean_loss = 0.0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  std::string ToCsv() const;
};

NormStats GetModelNormStats(const WwsModel& model);
void SetModelNormStats(WwsModel& model, const NormStats& stats);

// Scores a batch of record indices through the model's modality.
Tensor ScoreBatch(const WwsModel& model, const RecordReader& reader,
                  const FeatureCache* fbank_cache, const NormStats* stats,
                  std::span<const int64_t> indices);

// Epoch-based trainer over one record file.  Owns the optimizer, the
// feature cache, and the shuffle stream; computes corpus normalization
// stats once and stores them on the model.
class Trainer {
 public:
  Trainer(WwsModel& model, const RecordReader& reader, const FbankConfig& fbank,
          const TrainOptions& options);

  // Runs `epochs` epochs tagged with `iteration`; returns the last epoch's
  // mean loss.  Throws NumericError (with epoch/batch context) on a
  // non-finite loss.
  double TrainEpochs(int epochs, int iteration = 1);

  Adam& optimizer() { return *optimizer_; }
  // Discards moment state and the step counter (used by rewind regimes and
  // phase switches).
  void ResetOptimizer();
  // Restarts the epoch/shuffle stream, so retraining after a rewind walks
  // the data exactly like training from scratch.
  void ResetEpochCounter() { global_epoch_ = 0; }
  const TrainLog& log() const { return log_; }
  int global_epoch() const { return global_epoch_; }
  const TrainOptions& options() const { return options_; }
  const FeatureCache* fbank_cache() const { return fbank_cache_.get(); }
  const NormStats* stats() const { return stats_ ? stats_.get() : nullptr; }

 private:
  double RunOneEpoch(int iteration, int epoch_in_iteration);

  WwsModel& model_;
  const RecordReader& reader_;
  TrainOptions options_;
  std::unique_ptr<FeatureCache> fbank_cache_;
  std::unique_ptr<NormStats> stats_;
  std::unique_ptr<Adam> optimizer_;
  TrainLog log_;
  int global_epoch_ = 0;
};

}  // namespace avwake

#endif  // AVWAKE_TRAIN_HPP_
