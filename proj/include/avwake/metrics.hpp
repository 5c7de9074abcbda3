// avwake/metrics.hpp

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

#ifndef AVWAKE_METRICS_HPP_
#define AVWAKE_METRICS_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "avwake/dataset.hpp"
#include "avwake/models.hpp"

namespace avwake {

struct ScoredSample {
  double score = 0.0;
  int label = 0;
  int8_t snr_code = 0;
};

// False-reject / false-alarm bookkeeping.  FRR = n_fr / n_wake over wake
// examples; FAR = n_fa / n_nonwake over non-wake examples.
struct EvalCounts {
  int64_t n_wake = 0;
  int64_t n_nonwake = 0;
  int64_t n_fr = 0;
  int64_t n_fa = 0;

  bool HasWake() const { return n_wake > 0; }
  bool HasNonWake() const { return n_nonwake > 0; }
  double Frr() const;     // in [0,1]; ContractError when n_wake == 0
  double Far() const;
  double FrrPct() const { return 100.0 * Frr(); }
  double FarPct() const { return 100.0 * Far(); }
};

struct EvalResult {
  EvalCounts overall;
  std::map<int8_t, EvalCounts> by_snr;
  double threshold = 0.5;
  std::string ToCsv() const;  // stratum rows; empty strata print "-"
};

// Scores every record through the model (inference mode, chunked).
std::vector<ScoredSample> ScoreAll(const WwsModel& model, const RecordReader& reader,
                                   const FbankConfig& fbank, int chunk_size = 16);

// Exhaustive decision pass at the given threshold (score >= threshold -> 1).
EvalResult CountDecisions(std::span<const ScoredSample> samples, double threshold);

// Largest threshold (drawn from the positive scores) whose measured
// one-minus-FRR on these positives is >= target.  target must lie in [0,1];
// no positive scores -> CalibrationError.  Monotone: a higher target never
// yields a higher threshold.
double CalibrateThreshold(std::span<const double> positive_scores, double target);

}  // namespace avwake

#endif  // AVWAKE_METRICS_HPP_
