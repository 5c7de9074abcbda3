// avwake/registry.cpp

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

#include "avwake/registry.hpp"

#include "avwake/errors.hpp"
#include "avwake/ops.hpp"

namespace avwake {

Tensor ParamEntry::Effective() const {
  if (!mask.defined()) return weight;
  return Mul(weight, mask);
}

void ParamEntry::EnsureMask() {
  if (!mask.defined()) {
    mask = Tensor::Full(weight.shape(), 1.0);
  }
}

int64_t ParamEntry::MaskZeroCount() const {
  if (!mask.defined()) return 0;
  int64_t zeros = 0;
  const double* m = mask.data();
  for (int64_t i = 0; i < mask.numel(); ++i) zeros += (m[i] == 0.0) ? 1 : 0;
  return zeros;
}

void ParamEntry::ClampWeightToMask() {
  if (!mask.defined()) return;
  double* w = weight.data();
  const double* m = mask.data();
  for (int64_t i = 0; i < weight.numel(); ++i) {
    if (m[i] == 0.0) w[i] = 0.0;
  }
}

std::shared_ptr<ParamEntry> ParamRegistry::CreateUniform(const std::string& name,
                                                         const std::string& kind,
                                                         const Shape& shape,
                                                         double scale,
                                                         bool prunable) {
  if (entries_.count(name)) {
    throw ContractError("duplicate parameter name: " + name);
  }
  auto entry = std::make_shared<ParamEntry>();
  entry->name = name;
  entry->kind = kind;
  Rng rng(MixSeed(init_seed_, StableHash(name)));
  entry->weight = Tensor::Random(shape, rng, -scale, scale);
  entry->weight.set_requires_grad(true);
  entry->weight.set_name(name);
  entry->prunable = prunable;
  entries_.emplace(name, entry);
  return entry;
}

std::shared_ptr<ParamEntry> ParamRegistry::CreateConstant(const std::string& name,
                                                          const std::string& kind,
                                                          const Shape& shape,
                                                          double value,
                                                          bool trainable) {
  if (entries_.count(name)) {
    throw ContractError("duplicate parameter name: " + name);
  }
  auto entry = std::make_shared<ParamEntry>();
  entry->name = name;
  entry->kind = kind;
  entry->weight = Tensor::Full(shape, value);
  entry->weight.set_requires_grad(trainable);
  entry->weight.set_name(name);
  entry->trainable = trainable;
  entries_.emplace(name, entry);
  return entry;
}

std::shared_ptr<ParamEntry> ParamRegistry::Find(const std::string& name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : it->second;
}

std::shared_ptr<ParamEntry> ParamRegistry::Require(const std::string& name) const {
  auto entry = Find(name);
  if (!entry) throw ContractError("unknown parameter: " + name);
  return entry;
}

int64_t ParamRegistry::TotalElements() const {
  int64_t n = 0;
  for (const auto& [name, entry] : entries_) n += entry->weight.numel();
  return n;
}

void ParamRegistry::ZeroGrads() {
  for (const auto& [name, entry] : entries_) entry->weight.ZeroGrad();
}

}  // namespace avwake
