// avwake/pruning.hpp

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

#ifndef AVWAKE_PRUNING_HPP_
#define AVWAKE_PRUNING_HPP_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "avwake/metrics.hpp"
#include "avwake/registry.hpp"
#include "avwake/train.hpp"

namespace avwake {

// Predicate over prunable registry entries.
struct PruneScope {
  std::string label;
  std::function<bool(const ParamEntry&)> includes;
};

// "all", "encoder" (names under encoder.), or "backend" (everything else).
PruneScope MakeScope(const std::string& label);

int64_t ScopedPoolSize(const ParamRegistry& registry, const PruneScope& scope);
int64_t ScopedZeroCount(const ParamRegistry& registry, const PruneScope& scope);
int64_t PrunablePoolSize(const ParamRegistry& registry);
int64_t PrunableZeroCount(const ParamRegistry& registry);

// Extends masks until the scope holds exactly target_zeros zeroed weights:
// surviving weights are ranked by |value| (globally across the scope, or
// per entry), smallest first, ties broken by name order then flat index.
// Existing zeros never flip back.
void MaskToZeroCount(ParamRegistry& registry, const PruneScope& scope,
                     int64_t target_zeros, bool per_layer_ranking = false);

// Fraction entry point: zeros floor(sparsity * pool) elements in total.
// A target below the current scoped sparsity is a ContractError; an equal
// target is a no-op.
void MagnitudeMask(ParamRegistry& registry, const PruneScope& scope,
                   double target_sparsity, bool per_layer_ranking = false);

// Cumulative zero counts after each pruning event under the per-event
// floor-rounded geometric schedule:
//   pruned_k = floor(rate * survivors_{k-1}).
std::vector<int64_t> GeometricZeroSchedule(int64_t pool, double rate, int events);

struct PruneHistoryRow {
  int iteration = 0;
  double scoped_sparsity = 0.0;
  double global_sparsity = 0.0;
  double train_loss = 0.0;
  double dev_frr = 0.0;
  std::map<int8_t, double> dev_far_by_snr;
};

struct PruneHistory {
  std::vector<PruneHistoryRow> rows;
  std::string ToCsv() const;
};

struct LthOptions {
  int iterations = 5;      // pruning search iterations (T >= 2)
  double rate = 0.05;      // fraction of survivors pruned per event
  int initial_epochs = 5;  // epochs at iteration 1; later iterations train 1
  bool per_layer_ranking = false;
  double dev_threshold = 0.5;
};

// Iterative fine-tuning search: train the fresh model for initial_epochs,
// then per iteration prune the smallest surviving weights and fine-tune a
// single epoch from the carried-over values (no rewind).  Dev FRR/FAR are
// logged after every iteration.
PruneHistory RunLthIf(WwsModel& model, Trainer& trainer, const RecordReader& dev,
                      const FbankConfig& fbank, const PruneScope& scope,
                      const LthOptions& options);

// One-shot baseline: train fully, mask once at target sparsity, rewind the
// surviving weights to their initial values and retrain with a fresh
// optimizer.
PruneHistory RunLthOneshot(WwsModel& model, Trainer& trainer,
                           const RecordReader& dev, const FbankConfig& fbank,
                           const PruneScope& scope, double target_sparsity,
                           const LthOptions& options);

// Two-phase audio-visual regime: prune the lip encoder first, then freeze
// it (weights and masks untouched thereafter) and prune the fusion backend
// with a fresh optimizer.  Returns the concatenated history (phase-2
// iterations continue the numbering).
PruneHistory RunSequentialAv(WwsModel& model, Trainer& trainer,
                             const RecordReader& dev, const FbankConfig& fbank,
                             const LthOptions& encoder_options,
                             const LthOptions& backend_options);

struct SparsityRow {
  std::string kind;  // conv / lstm / fc / total
  int64_t total = 0;
  int64_t pruned = 0;
  double PrunedPct() const;
};

// Pruned share per layer family over prunable weights (biases and stats
// are never pruned and are excluded here; cost reports count them).
struct SparsityReport {
  std::vector<SparsityRow> rows;
  SparsityRow total;
  std::string ToCsv() const;
  const SparsityRow* Row(const std::string& kind) const;
};

SparsityReport ComputeSparsityReport(const ParamRegistry& registry);

}  // namespace avwake

#endif  // AVWAKE_PRUNING_HPP_
