// avwake/adam.cpp

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

#include "avwake/adam.hpp"

#include <cmath>

namespace avwake {

Adam::Adam(ParamRegistry& registry, const AdamOptions& options)
    : registry_(registry), options_(options) {}

void Adam::Step() {
  ++steps_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  for (const auto& [name, entry] : registry_.entries()) {
    if (!entry->trainable || entry->frozen) continue;
    Tensor& w = entry->weight;
    if (!w.has_grad()) continue;
    const int64_t n = w.numel();
    double* g = w.mutable_grad();
    const double* mask = entry->mask.defined() ? entry->mask.data() : nullptr;
    if (mask != nullptr) {
      for (int64_t i = 0; i < n; ++i) g[i] *= mask[i];
    }
    Moments& mom = state_[name];
    if (mom.m.empty()) {
      mom.m.assign(static_cast<size_t>(n), 0.0);
      mom.v.assign(static_cast<size_t>(n), 0.0);
    }
    double* wd = w.data();
    for (int64_t i = 0; i < n; ++i) {
      mom.m[i] = options_.beta1 * mom.m[i] + (1.0 - options_.beta1) * g[i];
      mom.v[i] = options_.beta2 * mom.v[i] + (1.0 - options_.beta2) * g[i] * g[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      wd[i] -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
    }
    entry->ClampWeightToMask();
  }
}

void Adam::ZeroGrads() { registry_.ZeroGrads(); }

}  // namespace avwake
