// avwake/dataset.cpp

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

#include "avwake/dataset.hpp"

#include <cstring>

#include "avwake/corpus.hpp"
#include "avwake/errors.hpp"

namespace avwake {

namespace {

uint32_t ReadU32(std::ifstream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

uint64_t ReadU64(std::ifstream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

RecordReader::RecordReader(const std::string& path) : path_(path) {
  file_.open(path, std::ios::binary);
  if (!file_) throw IoError("cannot open record file " + path);
  char magic[8];
  file_.read(magic, 8);
  if (!file_ || std::memcmp(magic, kRecordMagic, 8) != 0) {
    throw IoError("bad record magic in " + path);
  }
  const uint32_t version = ReadU32(file_);
  if (version != kRecordVersion) {
    throw IoError("unsupported record version " + std::to_string(version) + " in " + path);
  }
  const uint32_t count = ReadU32(file_);
  audio_len_ = ReadU32(file_);
  lip_frames_ = ReadU32(file_);
  lip_size_ = ReadU32(file_);
  sample_rate_ = static_cast<int>(ReadU32(file_));
  ReadU32(file_);  // reserved
  header_bytes_ = 36;
  record_bytes_ = 18 + 4ull * audio_len_ + 4ull * lip_frames_ * lip_size_ * lip_size_;

  metas_.resize(count);
  for (uint32_t i = 0; i < count; ++i) {
    file_.seekg(static_cast<std::streamoff>(RecordOffset(i)));
    RecordMeta& m = metas_[i];
    m.id = ReadU64(file_);
    uint8_t label = 0;
    file_.read(reinterpret_cast<char*>(&label), 1);
    m.label = label;
    file_.read(reinterpret_cast<char*>(&m.snr_code), 1);
    m.seed = ReadU64(file_);
    if (!file_) throw IoError("truncated record file " + path);
  }
}

uint64_t RecordReader::RecordOffset(int64_t i) const {
  return header_bytes_ + static_cast<uint64_t>(i) * record_bytes_;
}

std::vector<double> RecordReader::ReadAudio(int64_t i) const {
  if (i < 0 || i >= size()) throw ContractError("record index out of range");
  file_.seekg(static_cast<std::streamoff>(RecordOffset(i) + 18));
  std::vector<float> buf(static_cast<size_t>(audio_len_));
  file_.read(reinterpret_cast<char*>(buf.data()), 4ull * audio_len_);
  if (!file_) throw IoError("audio read failed in " + path_);
  std::vector<double> out(buf.size());
  for (size_t k = 0; k < buf.size(); ++k) out[k] = buf[k];
  return out;
}

Tensor RecordReader::ReadLips(int64_t i) const {
  if (i < 0 || i >= size()) throw ContractError("record index out of range");
  const int64_t values = lip_frames_ * lip_size_ * lip_size_;
  file_.seekg(static_cast<std::streamoff>(RecordOffset(i) + 18 + 4ull * audio_len_));
  std::vector<float> buf(static_cast<size_t>(values));
  file_.read(reinterpret_cast<char*>(buf.data()), 4ull * values);
  if (!file_) throw IoError("lip read failed in " + path_);
  Tensor out = Tensor::Uninitialized({lip_frames_, 1, lip_size_, lip_size_});
  double* dst = out.data();
  for (int64_t k = 0; k < values; ++k) dst[k] = buf[k];
  return out;
}

FeatureCache::FeatureCache(const RecordReader& reader, const FbankConfig& config)
    : reader_(reader), extractor_(config), cache_(static_cast<size_t>(reader.size())) {}

const Tensor& FeatureCache::Fbank(int64_t i) const {
  Tensor& slot = cache_[static_cast<size_t>(i)];
  if (!slot.defined()) {
    const std::vector<double> audio = reader_.ReadAudio(i);
    slot = extractor_.Compute(audio);
  }
  return slot;
}

NormStats FeatureCache::ComputeStats() const {
  NormStatsAccumulator acc(extractor_.config().num_mels);
  for (int64_t i = 0; i < reader_.size(); ++i) acc.Add(Fbank(i));
  return acc.Finalize();
}

Tensor MakeFbankBatch(const FeatureCache& cache, const NormStats& stats,
                      std::span<const int64_t> indices) {
  if (indices.empty()) throw ContractError("empty batch");
  const Tensor& first = cache.Fbank(indices[0]);
  const int64_t frames = first.dim(0);
  const int64_t dim = first.dim(1);
  Tensor out = Tensor::Uninitialized({static_cast<int64_t>(indices.size()), frames, dim});
  for (size_t b = 0; b < indices.size(); ++b) {
    Tensor norm = NormalizeFeatures(cache.Fbank(indices[b]), stats);
    std::memcpy(out.data() + static_cast<int64_t>(b) * frames * dim, norm.data(),
                sizeof(double) * frames * dim);
  }
  return out;
}

Tensor MakeLipBatch(const RecordReader& reader, std::span<const int64_t> indices) {
  if (indices.empty()) throw ContractError("empty batch");
  const int64_t frames = reader.lip_frames();
  const int64_t size = reader.lip_size();
  const int64_t per = frames * size * size;
  Tensor out = Tensor::Uninitialized(
      {static_cast<int64_t>(indices.size()), frames, 1, size, size});
  for (size_t b = 0; b < indices.size(); ++b) {
    Tensor lips = reader.ReadLips(indices[b]);
    std::memcpy(out.data() + static_cast<int64_t>(b) * per, lips.data(),
                sizeof(double) * per);
  }
  return out;
}

std::vector<double> BatchLabels(const RecordReader& reader,
                                std::span<const int64_t> indices) {
  std::vector<double> labels(indices.size());
  for (size_t b = 0; b < indices.size(); ++b) {
    labels[b] = static_cast<double>(reader.meta(indices[b]).label);
  }
  return labels;
}

}  // namespace avwake
