// avwake/pruning.cpp

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

#include "avwake/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "avwake/corpus.hpp"
#include "avwake/errors.hpp"

namespace avwake {

PruneScope MakeScope(const std::string& label) {
  if (label == "all") {
    return {"all", [](const ParamEntry&) { return true; }};
  }
  if (label == "encoder") {
    return {"encoder",
            [](const ParamEntry& e) { return e.name.rfind("encoder.", 0) == 0; }};
  }
  if (label == "backend") {
    return {"backend",
            [](const ParamEntry& e) { return e.name.rfind("encoder.", 0) != 0; }};
  }
  throw ContractError("unknown prune scope: " + label);
}

namespace {

bool InScope(const ParamEntry& e, const PruneScope& scope) {
  return e.prunable && scope.includes(e);
}

std::vector<std::shared_ptr<ParamEntry>> ScopedEntries(const ParamRegistry& registry,
                                                       const PruneScope& scope) {
  std::vector<std::shared_ptr<ParamEntry>> out;
  for (const auto& [name, entry] : registry.entries()) {
    if (InScope(*entry, scope)) out.push_back(entry);
  }
  return out;
}

struct Candidate {
  double magnitude;
  int32_t entry_idx;
  int64_t flat_idx;
};

void ZeroSmallestSurvivors(std::vector<std::shared_ptr<ParamEntry>>& entries,
                           int64_t extra_zeros) {
  if (extra_zeros <= 0) return;
  std::vector<Candidate> survivors;
  for (size_t ei = 0; ei < entries.size(); ++ei) {
    ParamEntry& e = *entries[ei];
    e.EnsureMask();
    const double* w = e.weight.data();
    const double* m = e.mask.data();
    for (int64_t i = 0; i < e.weight.numel(); ++i) {
      if (m[i] != 0.0) {
        survivors.push_back({std::fabs(w[i]), static_cast<int32_t>(ei), i});
      }
    }
  }
  if (extra_zeros > static_cast<int64_t>(survivors.size())) {
    throw ContractError("mask: not enough surviving weights to prune");
  }
  // Smallest magnitude first; ties resolved by entry order (name-sorted),
  // then by flat index.
  std::nth_element(survivors.begin(), survivors.begin() + extra_zeros - 1,
                   survivors.end(), [](const Candidate& a, const Candidate& b) {
                     if (a.magnitude != b.magnitude) return a.magnitude < b.magnitude;
                     if (a.entry_idx != b.entry_idx) return a.entry_idx < b.entry_idx;
                     return a.flat_idx < b.flat_idx;
                   });
  std::sort(survivors.begin(), survivors.begin() + extra_zeros,
            [](const Candidate& a, const Candidate& b) {
              if (a.magnitude != b.magnitude) return a.magnitude < b.magnitude;
              if (a.entry_idx != b.entry_idx) return a.entry_idx < b.entry_idx;
              return a.flat_idx < b.flat_idx;
            });
  for (int64_t k = 0; k < extra_zeros; ++k) {
    const Candidate& c = survivors[static_cast<size_t>(k)];
    ParamEntry& e = *entries[static_cast<size_t>(c.entry_idx)];
    e.mask.data()[c.flat_idx] = 0.0;
    e.weight.data()[c.flat_idx] = 0.0;
  }
}

}  // namespace

int64_t ScopedPoolSize(const ParamRegistry& registry, const PruneScope& scope) {
  int64_t n = 0;
  for (const auto& [name, entry] : registry.entries()) {
    if (InScope(*entry, scope)) n += entry->weight.numel();
  }
  return n;
}

int64_t ScopedZeroCount(const ParamRegistry& registry, const PruneScope& scope) {
  int64_t n = 0;
  for (const auto& [name, entry] : registry.entries()) {
    if (InScope(*entry, scope)) n += entry->MaskZeroCount();
  }
  return n;
}

int64_t PrunablePoolSize(const ParamRegistry& registry) {
  return ScopedPoolSize(registry, MakeScope("all"));
}

int64_t PrunableZeroCount(const ParamRegistry& registry) {
  return ScopedZeroCount(registry, MakeScope("all"));
}

void MaskToZeroCount(ParamRegistry& registry, const PruneScope& scope,
                     int64_t target_zeros, bool per_layer_ranking) {
  auto entries = ScopedEntries(registry, scope);
  if (entries.empty()) throw ContractError("mask: scope selects no prunable entries");
  const int64_t pool = ScopedPoolSize(registry, scope);
  const int64_t current = ScopedZeroCount(registry, scope);
  if (target_zeros < current) {
    throw ContractError("mask: target zeros " + std::to_string(target_zeros) +
                        " below current " + std::to_string(current) +
                        " (masks only ever extend)");
  }
  if (target_zeros > pool) throw ContractError("mask: target exceeds scope pool");
  if (target_zeros == current) return;

  if (!per_layer_ranking) {
    ZeroSmallestSurvivors(entries, target_zeros - current);
    return;
  }
  // Per-entry ranking: each entry is driven to the same zero fraction.
  const double fraction = static_cast<double>(target_zeros) / static_cast<double>(pool);
  for (auto& entry : entries) {
    std::vector<std::shared_ptr<ParamEntry>> one = {entry};
    const int64_t entry_target =
        static_cast<int64_t>(std::floor(fraction * static_cast<double>(entry->weight.numel())));
    const int64_t entry_current = entry->MaskZeroCount();
    if (entry_target > entry_current) {
      ZeroSmallestSurvivors(one, entry_target - entry_current);
    }
  }
}

void MagnitudeMask(ParamRegistry& registry, const PruneScope& scope,
                   double target_sparsity, bool per_layer_ranking) {
  if (!(target_sparsity >= 0.0 && target_sparsity < 1.0)) {
    throw ContractError("mask: sparsity must lie in [0,1)");
  }
  const int64_t pool = ScopedPoolSize(registry, scope);
  const int64_t current = ScopedZeroCount(registry, scope);
  const int64_t target =
      static_cast<int64_t>(std::floor(target_sparsity * static_cast<double>(pool)));
  if (target < current) {
    throw ContractError("mask: requested sparsity below current scoped sparsity");
  }
  MaskToZeroCount(registry, scope, target, per_layer_ranking);
}

std::vector<int64_t> GeometricZeroSchedule(int64_t pool, double rate, int events) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ContractError("schedule: rate must lie in [0,1)");
  }
  std::vector<int64_t> cumulative;
  int64_t survivors = pool;
  for (int k = 0; k < events; ++k) {
    const int64_t pruned =
        static_cast<int64_t>(std::floor(rate * static_cast<double>(survivors)));
    survivors -= pruned;
    cumulative.push_back(pool - survivors);
  }
  return cumulative;
}

std::string PruneHistory::ToCsv() const {
  std::ostringstream os;
  // Column set fixed from the union of snr strata seen in the run.
  std::vector<int8_t> snrs;
  for (const PruneHistoryRow& r : rows) {
    for (const auto& [snr, far] : r.dev_far_by_snr) {
      if (std::find(snrs.begin(), snrs.end(), snr) == snrs.end()) snrs.push_back(snr);
    }
  }
  std::sort(snrs.begin(), snrs.end());
  os << "t,scoped_sparsity,global_sparsity,train_loss,dev_frr";
  for (int8_t snr : snrs) os << ",dev_far_" << FormatSnr(snr);
  os << '\n';
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    os << buf;
  };
  for (const PruneHistoryRow& r : rows) {
    os << r.iteration << ',';
    put(r.scoped_sparsity);
    os << ',';
    put(r.global_sparsity);
    os << ',';
    put(r.train_loss);
    os << ',';
    put(r.dev_frr);
    for (int8_t snr : snrs) {
      os << ',';
      auto it = r.dev_far_by_snr.find(snr);
      if (it == r.dev_far_by_snr.end()) {
        os << '-';
      } else {
        put(it->second);
      }
    }
    os << '\n';
  }
  return os.str();
}

namespace {

PruneHistoryRow EvalRow(WwsModel& model, const RecordReader& dev,
                        const FbankConfig& fbank, const PruneScope& scope,
                        int iteration, double train_loss, double threshold) {
  PruneHistoryRow row;
  row.iteration = iteration;
  const int64_t pool = ScopedPoolSize(model.registry(), scope);
  const int64_t all_pool = PrunablePoolSize(model.registry());
  row.scoped_sparsity =
      pool > 0 ? static_cast<double>(ScopedZeroCount(model.registry(), scope)) /
                     static_cast<double>(pool)
               : 0.0;
  row.global_sparsity =
      all_pool > 0 ? static_cast<double>(PrunableZeroCount(model.registry())) /
                         static_cast<double>(all_pool)
                   : 0.0;
  row.train_loss = train_loss;
  const std::vector<ScoredSample> scored = ScoreAll(model, dev, fbank);
  const EvalResult result = CountDecisions(scored, threshold);
  row.dev_frr = result.overall.HasWake() ? result.overall.Frr() : 0.0;
  for (const auto& [snr, counts] : result.by_snr) {
    if (counts.HasNonWake()) row.dev_far_by_snr[snr] = counts.Far();
  }
  return row;
}

}  // namespace

PruneHistory RunLthIf(WwsModel& model, Trainer& trainer, const RecordReader& dev,
                      const FbankConfig& fbank, const PruneScope& scope,
                      const LthOptions& options) {
  if (options.iterations < 2) {
    throw ContractError("iterative pruning needs at least 2 iterations");
  }
  const int64_t pool = ScopedPoolSize(model.registry(), scope);
  const int64_t base_zeros = ScopedZeroCount(model.registry(), scope);
  const std::vector<int64_t> schedule =
      GeometricZeroSchedule(pool - base_zeros, options.rate, options.iterations - 1);

  PruneHistory history;
  for (int t = 1; t <= options.iterations; ++t) {
    const int epochs = (t == 1) ? options.initial_epochs : 1;
    const double loss = trainer.TrainEpochs(epochs, t);
    if (t < options.iterations) {
      const int64_t target = base_zeros + schedule[static_cast<size_t>(t - 1)];
      MaskToZeroCount(model.registry(), scope, target, options.per_layer_ranking);
    }
    history.rows.push_back(
        EvalRow(model, dev, fbank, scope, t, loss, options.dev_threshold));
  }
  return history;
}

PruneHistory RunLthOneshot(WwsModel& model, Trainer& trainer,
                           const RecordReader& dev, const FbankConfig& fbank,
                           const PruneScope& scope, double target_sparsity,
                           const LthOptions& options) {
  // Snapshot the initial weights for the rewind.
  std::map<std::string, Tensor> initial;
  for (const auto& [name, entry] : model.registry().entries()) {
    initial.emplace(name, entry->weight.Clone());
  }

  PruneHistory history;
  double loss = trainer.TrainEpochs(options.initial_epochs, 1);
  history.rows.push_back(EvalRow(model, dev, fbank, scope, 1, loss, options.dev_threshold));

  MagnitudeMask(model.registry(), scope, target_sparsity, options.per_layer_ranking);
  for (const auto& [name, entry] : model.registry().entries()) {
    const Tensor& init = initial.at(name);
    std::copy(init.data(), init.data() + init.numel(), entry->weight.data());
    entry->ClampWeightToMask();
  }
  trainer.ResetOptimizer();
  trainer.ResetEpochCounter();

  loss = trainer.TrainEpochs(options.initial_epochs, 2);
  history.rows.push_back(EvalRow(model, dev, fbank, scope, 2, loss, options.dev_threshold));
  return history;
}

PruneHistory RunSequentialAv(WwsModel& model, Trainer& trainer,
                             const RecordReader& dev, const FbankConfig& fbank,
                             const LthOptions& encoder_options,
                             const LthOptions& backend_options) {
  if (model.modality() != Modality::kAudioVisual) {
    throw ContractError("sequential pruning applies to the audio-visual model");
  }
  const PruneScope encoder_scope = MakeScope("encoder");
  const PruneScope backend_scope = MakeScope("backend");

  PruneHistory history = RunLthIf(model, trainer, dev, fbank, encoder_scope,
                                  encoder_options);

  // Encoder fixed: weights and masks stay byte-identical through phase 2.
  for (const auto& [name, entry] : model.registry().entries()) {
    if (name.rfind("encoder.", 0) == 0) entry->frozen = true;
  }
  trainer.ResetOptimizer();

  PruneHistory backend = RunLthIf(model, trainer, dev, fbank, backend_scope,
                                  backend_options);
  for (PruneHistoryRow row : backend.rows) {
    row.iteration += encoder_options.iterations;
    history.rows.push_back(std::move(row));
  }
  return history;
}

double SparsityRow::PrunedPct() const {
  return total > 0 ? 100.0 * static_cast<double>(pruned) / static_cast<double>(total)
                   : 0.0;
}

const SparsityRow* SparsityReport::Row(const std::string& kind) const {
  for (const SparsityRow& r : rows) {
    if (r.kind == kind) return &r;
  }
  return nullptr;
}

std::string SparsityReport::ToCsv() const {
  std::ostringstream os;
  os << "kind,total,pruned,pruned_pct\n";
  char buf[32];
  for (const SparsityRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.PrunedPct());
    os << r.kind << ',' << r.total << ',' << r.pruned << ',' << buf << '\n';
  }
  std::snprintf(buf, sizeof(buf), "%.6f", total.PrunedPct());
  os << "total," << total.total << ',' << total.pruned << ',' << buf << '\n';
  return os.str();
}

SparsityReport ComputeSparsityReport(const ParamRegistry& registry) {
  SparsityReport report;
  report.rows = {{"conv", 0, 0}, {"lstm", 0, 0}, {"fc", 0, 0}};
  report.total.kind = "total";
  for (const auto& [name, entry] : registry.entries()) {
    if (!entry->prunable) continue;
    SparsityRow* row = nullptr;
    if (entry->kind == "conv2d" || entry->kind == "dwconv2d") {
      row = &report.rows[0];
    } else if (entry->kind == "lstm") {
      row = &report.rows[1];
    } else if (entry->kind == "fc") {
      row = &report.rows[2];
    }
    const int64_t n = entry->weight.numel();
    const int64_t z = entry->MaskZeroCount();
    if (row != nullptr) {
      row->total += n;
      row->pruned += z;
    }
    report.total.total += n;
    report.total.pruned += z;
  }
  return report;
}

}  // namespace avwake
