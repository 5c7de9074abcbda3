// avwake/cost.cpp

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

#include "avwake/cost.hpp"

#include <sstream>

namespace avwake {

void CostReport::AddRow(CostRow row) { rows_.push_back(std::move(row)); }

int64_t CostReport::TotalParams() const {
  int64_t n = 0;
  for (const CostRow& r : rows_) n += r.params;
  return n;
}

int64_t CostReport::TotalPruned() const {
  int64_t n = 0;
  for (const CostRow& r : rows_) n += r.pruned;
  return n;
}

int64_t CostReport::TotalFlops() const {
  int64_t n = 0;
  for (const CostRow& r : rows_) n += r.flops;
  return n;
}

std::string CostReport::ToCsv() const {
  std::ostringstream os;
  os << "# flops counted as 2 per multiply-accumulate; nonlinearities and "
        "pooling excluded; params include masked-out elements (see pruned)\n";
  os << "layer,kind,params,pruned,flops\n";
  for (const CostRow& r : rows_) {
    os << r.name << ',' << r.kind << ',' << r.params << ',' << r.pruned << ','
       << r.flops << '\n';
  }
  os << "total,all," << TotalParams() << ',' << TotalPruned() << ',' << TotalFlops()
     << '\n';
  return os.str();
}

}  // namespace avwake
