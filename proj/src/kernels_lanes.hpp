// avwake/kernels_lanes.hpp

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

#ifndef AVWAKE_SRC_KERNELS_LANES_HPP_
#define AVWAKE_SRC_KERNELS_LANES_HPP_

#include "avwake/kernels.hpp"

namespace avwake {
namespace kernels {

// Reduction tree over the kLanes partial accumulators.  Every backend must
// fold its partials through this exact association order.
inline double CombineLaneTree(const double acc[kLanes]) {
  double b[kLanes / 2];
  for (size_t j = 0; j < kLanes / 2; ++j) b[j] = acc[j] + acc[j + kLanes / 2];
  double c[4];
  for (size_t j = 0; j < 4; ++j) c[j] = b[j] + b[j + 4];
  return (c[0] + c[2]) + (c[1] + c[3]);
}

const KernelTable& ScalarTable();
const KernelTable* Avx2TableOrNull();

// Output-column range with in-bounds source columns: ox*sw + kx - pw in [0, w).
inline void DwValidRange(int64_t kx, int64_t pw, int64_t w, int64_t wo, int64_t sw,
                         int64_t* ox0, int64_t* ox1) {
  const int64_t lo_num = pw - kx;
  const int64_t lo = lo_num <= 0 ? 0 : (lo_num + sw - 1) / sw;
  const int64_t hi_num = w - kx + pw;
  const int64_t hi = hi_num <= 0 ? 0 : (hi_num + sw - 1) / sw;
  *ox0 = lo;
  *ox1 = hi < wo ? hi : wo;
  if (*ox1 < *ox0) *ox1 = *ox0;
}

}  // namespace kernels
}  // namespace avwake

#endif  // AVWAKE_SRC_KERNELS_LANES_HPP_
