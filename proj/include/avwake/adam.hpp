// avwake/adam.hpp

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

#ifndef AVWAKE_ADAM_HPP_
#define AVWAKE_ADAM_HPP_

#include <cstdint>
#include <map>
#include <vector>

#include "avwake/registry.hpp"

namespace avwake {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over the trainable, unfrozen entries of a registry.  Masked entries
// have their gradients zeroed before the moment update and their weights
// re-clamped to exact zeros after the step, so pruned weights can never be
// resurrected through stale momentum.
class Adam {
 public:
  Adam(ParamRegistry& registry, const AdamOptions& options);

  void Step();
  void ZeroGrads();
  int64_t step_count() const { return steps_; }
  const AdamOptions& options() const { return options_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  ParamRegistry& registry_;
  AdamOptions options_;
  int64_t steps_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace avwake

#endif  // AVWAKE_ADAM_HPP_
