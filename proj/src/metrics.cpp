// avwake/metrics.cpp

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

#include "avwake/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "avwake/corpus.hpp"
#include "avwake/errors.hpp"
#include "avwake/train.hpp"

namespace avwake {

double EvalCounts::Frr() const {
  if (n_wake == 0) throw ContractError("FRR undefined: no wake examples");
  return static_cast<double>(n_fr) / static_cast<double>(n_wake);
}

double EvalCounts::Far() const {
  if (n_nonwake == 0) throw ContractError("FAR undefined: no non-wake examples");
  return static_cast<double>(n_fa) / static_cast<double>(n_nonwake);
}

namespace {

std::string PctOrDash(bool defined, double pct) {
  if (!defined) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", pct);
  return buf;
}

void CsvRow(std::ostringstream& os, const std::string& stratum, const EvalCounts& c) {
  os << stratum << ',' << c.n_wake << ',' << c.n_nonwake << ',' << c.n_fr << ','
     << c.n_fa << ',' << PctOrDash(c.HasWake(), c.HasWake() ? c.FrrPct() : 0.0) << ','
     << PctOrDash(c.HasNonWake(), c.HasNonWake() ? c.FarPct() : 0.0) << '\n';
}

}  // namespace

std::string EvalResult::ToCsv() const {
  std::ostringstream os;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9f", threshold);
  os << "# threshold=" << buf << '\n';
  os << "stratum,n_wake,n_nonwake,n_fr,n_fa,frr_pct,far_pct\n";
  CsvRow(os, "all", overall);
  for (const auto& [snr, counts] : by_snr) {
    CsvRow(os, FormatSnr(snr), counts);
  }
  return os.str();
}

std::vector<ScoredSample> ScoreAll(const WwsModel& model, const RecordReader& reader,
                                   const FbankConfig& fbank, int chunk_size) {
  if (chunk_size < 1) throw ContractError("chunk size must be positive");
  std::vector<ScoredSample> out(static_cast<size_t>(reader.size()));
  std::unique_ptr<FeatureCache> cache;
  std::unique_ptr<NormStats> stats;
  if (model.modality() != Modality::kVideo) {
    cache = std::make_unique<FeatureCache>(reader, fbank);
    stats = std::make_unique<NormStats>(GetModelNormStats(model));
  }
  std::vector<int64_t> idx;
  for (int64_t start = 0; start < reader.size(); start += chunk_size) {
    const int64_t n = std::min<int64_t>(chunk_size, reader.size() - start);
    idx.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = start + i;
    Tensor scores = ScoreBatch(model, reader, cache.get(), stats.get(), idx);
    for (int64_t i = 0; i < n; ++i) {
      const RecordMeta& meta = reader.meta(start + i);
      out[static_cast<size_t>(start + i)] = {scores.data()[i], meta.label,
                                             meta.snr_code};
    }
  }
  return out;
}

EvalResult CountDecisions(std::span<const ScoredSample> samples, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ContractError("evaluate: threshold must lie in (0,1)");
  }
  EvalResult result;
  result.threshold = threshold;
  for (const ScoredSample& s : samples) {
    const int decision = Decide(s.score, threshold);
    auto tally = [&](EvalCounts& c) {
      if (s.label == 1) {
        ++c.n_wake;
        if (decision == 0) ++c.n_fr;
      } else {
        ++c.n_nonwake;
        if (decision == 1) ++c.n_fa;
      }
    };
    tally(result.overall);
    tally(result.by_snr[s.snr_code]);
  }
  return result;
}

double CalibrateThreshold(std::span<const double> positive_scores, double target) {
  if (positive_scores.empty()) {
    throw CalibrationError("calibration requires at least one positive example");
  }
  if (!(target >= 0.0 && target <= 1.0)) {
    throw CalibrationError("unreachable calibration target " + std::to_string(target));
  }
  std::vector<double> sorted(positive_scores.begin(), positive_scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const auto p = static_cast<double>(sorted.size());
  const int64_t need = static_cast<int64_t>(std::ceil(target * p - 1e-12));
  if (need <= 0) {
    // Any threshold satisfies the target; report the score clamp bound.
    return 1.0 - 1e-7;
  }
  // Ties accept, so the need-th highest score passes exactly `need` or more.
  return sorted[static_cast<size_t>(need - 1)];
}

}  // namespace avwake
