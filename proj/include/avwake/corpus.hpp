// avwake/corpus.hpp

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

#ifndef AVWAKE_CORPUS_HPP_
#define AVWAKE_CORPUS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "avwake/tensor.hpp"

namespace avwake {

// snr code for unmixed samples.
inline constexpr int8_t kCleanSnr = 127;

struct CorpusConfig {
  std::string dir;
  int64_t train_count = 2000;
  int64_t dev_count = 400;
  int64_t test_count = 400;
  std::vector<int> snrs_db = {-5, 0, 5};
  bool train_includes_clean = true;
  uint64_t seed = 42;
  int sample_rate = 16000;
  double clip_seconds = 1.3;
  int video_fps = 25;
  int lip_render_size = 110;  // frames are rendered here, then resized
  int lip_size = 88;

  int64_t ClipSamples() const;
  int64_t VideoFrames() const;
};

// One generated clip: fixed-duration waveform plus synchronized lip frames.
struct Sample {
  std::vector<double> audio;  // peak-bounded to [-1, 1]
  Tensor lips;                // [frames, 1, lip_size, lip_size] in [0, 1]
  int label = 0;
  int8_t snr_code = kCleanSnr;
  uint64_t seed = 0;
};

// The wake pattern: a fixed two-tone chirp (rising then falling sweep),
// unit peak envelope, 0.5 s long.
std::vector<double> WakeTemplate(int sample_rate);

// Mouth-opening trajectory of the wake pattern at phase u in [0, 1].
double WakeApertureAt(double u);

// Canonical positive aperture trajectory over a whole clip (wake centered),
// used as the reference series for lip/audio correlation checks.
std::vector<double> CanonicalApertureSeries(const CorpusConfig& config);

// clean + g*noise with g chosen so that mean-square powers satisfy the
// requested SNR; rescaled to peak 1 if the mix would clip.
std::vector<double> MixNoise(std::span<const double> clean,
                             std::span<const double> noise, double snr_db);

// Deterministic sample synthesis: identical (label, snr, seed) inputs yield
// bitwise-identical samples.
Sample SynthSample(int label, int8_t snr_code, uint64_t seed,
                   const CorpusConfig& config);

struct ManifestRecord {
  std::string split;
  uint64_t id = 0;
  int label = 0;
  int8_t snr_code = kCleanSnr;
  uint64_t seed = 0;
  std::string file;
  uint64_t offset = 0;
};

std::string FormatSnr(int8_t code);
int8_t ParseSnr(const std::string& text);

// Writes train.rec / dev.rec / test.rec plus manifest.csv under config.dir.
// Refuses to touch existing corpus files unless overwrite is set.
std::vector<ManifestRecord> BuildCorpus(const CorpusConfig& config, bool overwrite);

std::vector<ManifestRecord> ReadManifest(const std::string& path);

// Record container layout (shared by corpus records and feature dumps):
// header: magic "AVWKREC1", u32 version, u32 count, u32 audio_len,
// u32 lip_frames, u32 lip_size, u32 sample_rate, u32 reserved; then per
// record: u64 id, u8 label, i8 snr, u64 seed, f32 audio[audio_len],
// f32 lips[lip_frames*lip_size*lip_size].  All little-endian.
inline constexpr char kRecordMagic[9] = "AVWKREC1";
inline constexpr uint32_t kRecordVersion = 1;

class RecordWriter {
 public:
  RecordWriter(const std::string& path, uint32_t audio_len, uint32_t lip_frames,
               uint32_t lip_size, uint32_t sample_rate, bool overwrite);
  ~RecordWriter();
  // Returns the byte offset of the written record.
  uint64_t Append(const Sample& sample, uint64_t id);
  void Close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace avwake

#endif  // AVWAKE_CORPUS_HPP_
