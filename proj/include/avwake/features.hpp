// avwake/features.hpp

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

#ifndef AVWAKE_FEATURES_HPP_
#define AVWAKE_FEATURES_HPP_

#include <span>
#include <vector>

#include "avwake/tensor.hpp"

namespace avwake {

struct FbankConfig {
  int sample_rate = 16000;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int num_mels = 40;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  double log_floor = 1e-10;
};

double MelFromHz(double hz);
double HzFromMel(double mel);

// Short-time magnitude spectrum -> triangular mel bank -> log with floor.
// Hamming window, centers every hop, no padding: frames = 1 + floor((N-win)/hop).
class FbankExtractor {
 public:
  explicit FbankExtractor(const FbankConfig& config);

  // waveform in [-1,1] -> [frames, num_mels]; throws ContractError when the
  // clip is shorter than one window.
  Tensor Compute(std::span<const double> wave) const;
  int64_t NumFrames(int64_t samples) const;
  int64_t window_samples() const { return window_; }
  int64_t hop_samples() const { return hop_; }
  const FbankConfig& config() const { return config_; }
  // Band center frequencies in Hz.
  const std::vector<double>& CenterFreqsHz() const { return centers_hz_; }

 private:
  FbankConfig config_;
  int64_t window_, hop_, nfft_, bins_;
  std::vector<double> hamming_;
  // filters stored per band as (first bin, weights...)
  std::vector<int64_t> band_start_;
  std::vector<std::vector<double>> band_weights_;
  std::vector<double> centers_hz_;
};

// Per-dimension mean / standard deviation computed on the training corpus.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std_dev;
};

// (x - mean) / max(std, 1e-8) per feature dimension.
Tensor NormalizeFeatures(const Tensor& feats, const NormStats& stats);

// Streaming accumulator for NormStats over [frames, dim] matrices.
class NormStatsAccumulator {
 public:
  explicit NormStatsAccumulator(int64_t dim);
  void Add(const Tensor& feats);
  NormStats Finalize() const;

 private:
  int64_t dim_;
  int64_t count_ = 0;
  std::vector<double> sum_, sum_sq_;
};

// Bilinear resize of a square grayscale image (align-corners sampling:
// corner pixels map to corner pixels).  in/out are row-major size*size.
void BilinearResizeSquare(const double* in, int64_t in_size, double* out,
                          int64_t out_size);

// Grayscale square frames [T,1,S,S] in [0,1] -> [T,1,out,out].
Tensor PreprocessLipFrames(const Tensor& frames, int64_t out_size);

}  // namespace avwake

#endif  // AVWAKE_FEATURES_HPP_
