// avwake/checkpoint.cpp

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

#include "avwake/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "avwake/config.hpp"
#include "avwake/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoints are little-endian");

namespace avwake {

namespace {

constexpr char kMagic[9] = "AVWKCKP1";
constexpr uint32_t kVersion = 1;

constexpr uint8_t kFlagHasMask = 1u << 0;
constexpr uint8_t kFlagTrainable = 1u << 1;
constexpr uint8_t kFlagPrunable = 1u << 2;
constexpr uint8_t kFlagFrozen = 1u << 3;

void WriteU32(std::ofstream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t ReadU32(std::ifstream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void WriteString(std::ofstream& os, const std::string& s) {
  WriteU32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string ReadString(std::ifstream& is) {
  const uint32_t len = ReadU32(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  return s;
}

}  // namespace

void SaveCheckpoint(const WwsModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(kMagic, 8);
  WriteU32(os, kVersion);
  WriteString(os, ModelSpecJson(model));
  const auto& entries = model.registry().entries();
  WriteU32(os, static_cast<uint32_t>(entries.size()));
  for (const auto& [name, entry] : entries) {
    WriteString(os, name);
    uint8_t flags = 0;
    if (entry->mask.defined()) flags |= kFlagHasMask;
    if (entry->trainable) flags |= kFlagTrainable;
    if (entry->prunable) flags |= kFlagPrunable;
    if (entry->frozen) flags |= kFlagFrozen;
    os.write(reinterpret_cast<const char*>(&flags), 1);
    WriteString(os, entry->kind);
    const Shape& shape = entry->weight.shape();
    WriteU32(os, static_cast<uint32_t>(shape.size()));
    for (int64_t d : shape) {
      os.write(reinterpret_cast<const char*>(&d), sizeof(d));
    }
    const int64_t n = entry->weight.numel();
    os.write(reinterpret_cast<const char*>(entry->weight.data()),
             static_cast<std::streamsize>(sizeof(double) * n));
    if (entry->mask.defined()) {
      std::vector<uint8_t> bitmap((static_cast<size_t>(n) + 7) / 8, 0);
      const double* m = entry->mask.data();
      for (int64_t i = 0; i < n; ++i) {
        if (m[i] != 0.0) bitmap[static_cast<size_t>(i) >> 3] |= (1u << (i & 7));
      }
      os.write(reinterpret_cast<const char*>(bitmap.data()),
               static_cast<std::streamsize>(bitmap.size()));
    }
  }
  if (!os) throw IoError("write failed on " + path);
}

std::unique_ptr<WwsModel> LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("bad checkpoint magic in " + path);
  }
  const uint32_t version = ReadU32(is);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  std::unique_ptr<WwsModel> model = ModelFromSpecJson(ReadString(is));
  const uint32_t count = ReadU32(is);
  for (uint32_t k = 0; k < count; ++k) {
    const std::string name = ReadString(is);
    uint8_t flags = 0;
    is.read(reinterpret_cast<char*>(&flags), 1);
    const std::string kind = ReadString(is);
    const uint32_t ndim = ReadU32(is);
    Shape shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) {
      is.read(reinterpret_cast<char*>(&shape[d]), sizeof(int64_t));
    }
    auto entry = model->registry().Find(name);
    if (!entry) throw IoError("checkpoint parameter not in model: " + name);
    if (!SameShape(entry->weight.shape(), shape) || entry->kind != kind) {
      throw IoError("checkpoint parameter mismatch for " + name);
    }
    const int64_t n = entry->weight.numel();
    is.read(reinterpret_cast<char*>(entry->weight.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
    entry->trainable = (flags & kFlagTrainable) != 0;
    entry->weight.set_requires_grad(entry->trainable);
    entry->prunable = (flags & kFlagPrunable) != 0;
    entry->frozen = (flags & kFlagFrozen) != 0;
    if (flags & kFlagHasMask) {
      std::vector<uint8_t> bitmap((static_cast<size_t>(n) + 7) / 8);
      is.read(reinterpret_cast<char*>(bitmap.data()),
              static_cast<std::streamsize>(bitmap.size()));
      entry->EnsureMask();
      double* m = entry->mask.data();
      for (int64_t i = 0; i < n; ++i) {
        m[i] = (bitmap[static_cast<size_t>(i) >> 3] >> (i & 7)) & 1u ? 1.0 : 0.0;
      }
    }
    if (!is) throw IoError("truncated checkpoint " + path);
  }
  return model;
}

}  // namespace avwake
