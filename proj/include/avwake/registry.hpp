// avwake/registry.hpp

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

#ifndef AVWAKE_REGISTRY_HPP_
#define AVWAKE_REGISTRY_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "avwake/tensor.hpp"

namespace avwake {

// One named model parameter plus its (optional) binary prune mask.
struct ParamEntry {
  std::string name;
  std::string kind;  // layer family: "conv2d", "dwconv2d", "fc", "lstm", "stat"
  Tensor weight;
  Tensor mask;            // undefined until pruning first touches the entry
  bool trainable = true;  // optimizer updates
  bool prunable = false;  // magnitude pruning may zero elements
  bool frozen = false;    // temporarily excluded from optimizer updates

  // Weight as used by forward passes: weight ⊙ mask when a mask exists.
  // Runs through the graph so masked elements also get zero gradients.
  Tensor Effective() const;
  // Creates an all-ones mask if none exists yet.
  void EnsureMask();
  int64_t MaskZeroCount() const;
  // Re-applies the mask to the raw weight buffer (masked slots -> exact 0).
  void ClampWeightToMask();
};

// Name-ordered parameter set of one model.  Iteration order (and therefore
// serialization, ranking tie-breaks and init) is deterministic.
class ParamRegistry {
 public:
  explicit ParamRegistry(uint64_t init_seed) : init_seed_(init_seed) {}

  // Uniform(-scale, scale) init from a per-name substream of the registry
  // seed, so values do not depend on creation order.
  std::shared_ptr<ParamEntry> CreateUniform(const std::string& name,
                                            const std::string& kind,
                                            const Shape& shape, double scale,
                                            bool prunable);
  std::shared_ptr<ParamEntry> CreateConstant(const std::string& name,
                                             const std::string& kind,
                                             const Shape& shape, double value,
                                             bool trainable);

  std::shared_ptr<ParamEntry> Find(const std::string& name) const;
  std::shared_ptr<ParamEntry> Require(const std::string& name) const;

  const std::map<std::string, std::shared_ptr<ParamEntry>>& entries() const {
    return entries_;
  }

  int64_t TotalElements() const;
  void ZeroGrads();
  uint64_t init_seed() const { return init_seed_; }

 private:
  uint64_t init_seed_;
  std::map<std::string, std::shared_ptr<ParamEntry>> entries_;
};

}  // namespace avwake

#endif  // AVWAKE_REGISTRY_HPP_
