// avwake/dataset.hpp

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

#ifndef AVWAKE_DATASET_HPP_
#define AVWAKE_DATASET_HPP_

#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "avwake/features.hpp"
#include "avwake/tensor.hpp"

namespace avwake {

struct RecordMeta {
  uint64_t id = 0;
  int label = 0;
  int8_t snr_code = 0;
  uint64_t seed = 0;
};

// Random-access reader over one record file.  Records are fixed-size, so
// offsets are computed from the header; lips are streamed per request while
// audio is small enough to read eagerly per sample.
class RecordReader {
 public:
  explicit RecordReader(const std::string& path);

  int64_t size() const { return static_cast<int64_t>(metas_.size()); }
  const RecordMeta& meta(int64_t i) const { return metas_[static_cast<size_t>(i)]; }
  int64_t audio_len() const { return audio_len_; }
  int64_t lip_frames() const { return lip_frames_; }
  int64_t lip_size() const { return lip_size_; }
  int sample_rate() const { return sample_rate_; }

  std::vector<double> ReadAudio(int64_t i) const;
  // [lip_frames, 1, lip_size, lip_size]
  Tensor ReadLips(int64_t i) const;

 private:
  uint64_t RecordOffset(int64_t i) const;

  std::string path_;
  mutable std::ifstream file_;
  std::vector<RecordMeta> metas_;
  int64_t audio_len_ = 0, lip_frames_ = 0, lip_size_ = 0;
  int sample_rate_ = 0;
  uint64_t header_bytes_ = 0, record_bytes_ = 0;
};

// Caches raw (unnormalized) fbank features per sample.
class FeatureCache {
 public:
  FeatureCache(const RecordReader& reader, const FbankConfig& config);
  const Tensor& Fbank(int64_t i) const;
  NormStats ComputeStats() const;  // over every sample in the reader
  const RecordReader& reader() const { return reader_; }

 private:
  const RecordReader& reader_;
  FbankExtractor extractor_;
  mutable std::vector<Tensor> cache_;
};

Tensor MakeFbankBatch(const FeatureCache& cache, const NormStats& stats,
                      std::span<const int64_t> indices);
Tensor MakeLipBatch(const RecordReader& reader, std::span<const int64_t> indices);
std::vector<double> BatchLabels(const RecordReader& reader,
                                std::span<const int64_t> indices);

}  // namespace avwake

#endif  // AVWAKE_DATASET_HPP_
