// avwake/cost.hpp

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

#ifndef AVWAKE_COST_HPP_
#define AVWAKE_COST_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace avwake {

// Parameter/FLOP accounting convention: one multiply-accumulate counts as
// 2 FLOPs; nonlinearities and pooling are excluded; parameter counts are
// mask-independent, with masked-out elements reported in `pruned`.

struct CostRow {
  std::string name;
  std::string kind;
  int64_t params = 0;
  int64_t pruned = 0;
  int64_t flops = 0;  // one forward pass at the stated input shape
};

class CostReport {
 public:
  void AddRow(CostRow row);
  const std::vector<CostRow>& rows() const { return rows_; }
  int64_t TotalParams() const;
  int64_t TotalPruned() const;
  int64_t TotalFlops() const;
  // Convention comment, header row, per-layer rows, and a total row.
  std::string ToCsv() const;

 private:
  std::vector<CostRow> rows_;
};

inline int64_t FcFlops(int64_t in, int64_t out) { return 2 * in * out; }

inline int64_t Conv2dFlops(int64_t k, int64_t cin, int64_t cout, int64_t ho,
                           int64_t wo) {
  return 2 * k * k * cin * cout * ho * wo;
}

inline int64_t DepthwiseConv2dFlops(int64_t k, int64_t c, int64_t ho, int64_t wo) {
  return 2 * k * k * c * ho * wo;
}

// Per step: the four gate mat-vecs; gate nonlinearities excluded.
inline int64_t LstmFlops(int64_t in, int64_t hidden, int64_t steps) {
  return steps * 2 * 4 * hidden * (in + hidden);
}

}  // namespace avwake

#endif  // AVWAKE_COST_HPP_
