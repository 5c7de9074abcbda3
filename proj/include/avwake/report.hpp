// avwake/report.hpp

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

#ifndef AVWAKE_REPORT_HPP_
#define AVWAKE_REPORT_HPP_

#include <string>
#include <vector>

namespace avwake {

struct ReportOutcome {
  std::vector<std::string> written;
  std::vector<std::string> skipped;  // "artifact: reason"
};

// Assembles run-level tables and plots from the systems found under
// run_dir (any direct subdirectory holding eval/threshold/history/sparsity
// artifacts).  Missing inputs skip the dependent artifact; the outcome
// lists both sides.  Emits:
//   far_by_modality.csv        per-system 1-FRR and FAR per SNR stratum
//   pruning_comparison.csv     per-system FAR per SNR plus pruned share
//   sparsity_by_layer_type.csv per-system conv/lstm/fc pruned share
//   far_curve_<system>.svg     dev FAR per SNR against pruning iteration
ReportOutcome WriteRunReport(const std::string& run_dir, const std::string& out_dir);

// Plain polyline SVG (one series per SNR stratum plus axes and labels).
std::string FarCurveSvg(const std::string& history_csv_text,
                        const std::string& title);

}  // namespace avwake

#endif  // AVWAKE_REPORT_HPP_
