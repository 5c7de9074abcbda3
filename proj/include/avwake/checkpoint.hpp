// avwake/checkpoint.hpp

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

#ifndef AVWAKE_CHECKPOINT_HPP_
#define AVWAKE_CHECKPOINT_HPP_

#include <memory>
#include <string>

#include "avwake/models.hpp"

namespace avwake {

// Self-describing model file: versioned header with an embedded model spec,
// then name-ordered per-parameter records (name, flags, kind, shape,
// little-endian f64 data, packed mask bitmap when a mask exists).
// Round-trips bit-exactly.
void SaveCheckpoint(const WwsModel& model, const std::string& path);
std::unique_ptr<WwsModel> LoadCheckpoint(const std::string& path);

}  // namespace avwake

#endif  // AVWAKE_CHECKPOINT_HPP_
