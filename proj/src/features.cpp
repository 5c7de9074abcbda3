// avwake/features.cpp

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

#include "avwake/features.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "avwake/errors.hpp"
#include "avwake/fft.hpp"

namespace avwake {

double MelFromHz(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double HzFromMel(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

FbankExtractor::FbankExtractor(const FbankConfig& config) : config_(config) {
  if (config.sample_rate <= 0 || config.num_mels <= 0) {
    throw ContractError("fbank: bad config");
  }
  if (config.fmax_hz > config.sample_rate / 2.0 || config.fmax_hz <= config.fmin_hz) {
    throw ContractError("fbank: mel range must satisfy fmin < fmax <= nyquist");
  }
  window_ = static_cast<int64_t>(std::llround(config.sample_rate * config.window_ms / 1000.0));
  hop_ = static_cast<int64_t>(std::llround(config.sample_rate * config.hop_ms / 1000.0));
  if (window_ <= 0 || hop_ <= 0) throw ContractError("fbank: bad framing");
  nfft_ = NextPow2(window_);
  bins_ = nfft_ / 2 + 1;

  hamming_.resize(static_cast<size_t>(window_));
  for (int64_t i = 0; i < window_; ++i) {
    hamming_[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i /
                                         static_cast<double>(window_ - 1));
  }

  // Triangular filters on a mel-spaced grid from fmin to fmax.
  const int m = config.num_mels;
  const double mel_lo = MelFromHz(config.fmin_hz);
  const double mel_hi = MelFromHz(config.fmax_hz);
  std::vector<double> edges_hz(m + 2);
  for (int j = 0; j < m + 2; ++j) {
    edges_hz[j] = HzFromMel(mel_lo + (mel_hi - mel_lo) * j / (m + 1));
  }
  centers_hz_.assign(edges_hz.begin() + 1, edges_hz.end() - 1);

  band_start_.resize(m);
  band_weights_.resize(m);
  const double bin_hz = static_cast<double>(config.sample_rate) / static_cast<double>(nfft_);
  for (int j = 0; j < m; ++j) {
    const double lo = edges_hz[j], mid = edges_hz[j + 1], hi = edges_hz[j + 2];
    int64_t first = -1;
    std::vector<double> weights;
    for (int64_t k = 0; k < bins_; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f < mid) {
        w = (f - lo) / (mid - lo);
      } else if (f >= mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      if (w > 0.0) {
        if (first < 0) first = k;
        weights.push_back(w);
      } else if (first >= 0) {
        break;
      }
    }
    if (first < 0) {
      // Degenerate band narrower than one bin; pin it to the nearest bin.
      first = static_cast<int64_t>(mid / bin_hz);
      weights.push_back(1.0);
    }
    band_start_[j] = first;
    band_weights_[j] = std::move(weights);
  }
}

int64_t FbankExtractor::NumFrames(int64_t samples) const {
  if (samples < window_) return 0;
  return 1 + (samples - window_) / hop_;
}

Tensor FbankExtractor::Compute(std::span<const double> wave) const {
  const int64_t n = static_cast<int64_t>(wave.size());
  const int64_t frames = NumFrames(n);
  if (frames <= 0) {
    throw ContractError("fbank: clip of " + std::to_string(n) +
                        " samples is shorter than one window (" +
                        std::to_string(window_) + ")");
  }
  Tensor out = Tensor::Uninitialized({frames, config_.num_mels});
  std::vector<std::complex<double>> buf(static_cast<size_t>(nfft_));
  std::vector<double> mag(static_cast<size_t>(bins_));
  for (int64_t f = 0; f < frames; ++f) {
    const double* src = wave.data() + f * hop_;
    for (int64_t i = 0; i < window_; ++i) buf[i] = {src[i] * hamming_[i], 0.0};
    for (int64_t i = window_; i < nfft_; ++i) buf[i] = {0.0, 0.0};
    Fft(buf);
    for (int64_t k = 0; k < bins_; ++k) mag[k] = std::abs(buf[k]);
    double* row = out.data() + f * config_.num_mels;
    for (int j = 0; j < config_.num_mels; ++j) {
      double acc = 0.0;
      const int64_t start = band_start_[j];
      const std::vector<double>& w = band_weights_[j];
      for (size_t k = 0; k < w.size(); ++k) acc += w[k] * mag[start + static_cast<int64_t>(k)];
      row[j] = std::log(std::max(acc, config_.log_floor));
    }
  }
  return out;
}

Tensor NormalizeFeatures(const Tensor& feats, const NormStats& stats) {
  if (feats.rank() != 2 ||
      feats.dim(1) != static_cast<int64_t>(stats.mean.size()) ||
      stats.mean.size() != stats.std_dev.size()) {
    throw ContractError("normalize: stats dimensionality " +
                        std::to_string(stats.mean.size()) + " does not match features " +
                        ShapeStr(feats.shape()));
  }
  const int64_t frames = feats.dim(0);
  const int64_t dim = feats.dim(1);
  Tensor out = Tensor::Uninitialized(feats.shape());
  for (int64_t f = 0; f < frames; ++f) {
    const double* src = feats.data() + f * dim;
    double* dst = out.data() + f * dim;
    for (int64_t j = 0; j < dim; ++j) {
      const double sd = std::max(stats.std_dev[j], 1e-8);
      dst[j] = (src[j] - stats.mean[j]) / sd;
    }
  }
  return out;
}

NormStatsAccumulator::NormStatsAccumulator(int64_t dim)
    : dim_(dim), sum_(dim, 0.0), sum_sq_(dim, 0.0) {}

void NormStatsAccumulator::Add(const Tensor& feats) {
  if (feats.rank() != 2 || feats.dim(1) != dim_) {
    throw ContractError("norm stats: feature width mismatch");
  }
  const int64_t frames = feats.dim(0);
  for (int64_t f = 0; f < frames; ++f) {
    const double* row = feats.data() + f * dim_;
    for (int64_t j = 0; j < dim_; ++j) {
      sum_[j] += row[j];
      sum_sq_[j] += row[j] * row[j];
    }
  }
  count_ += frames;
}

NormStats NormStatsAccumulator::Finalize() const {
  if (count_ == 0) throw ContractError("norm stats: no frames accumulated");
  NormStats stats;
  stats.mean.resize(dim_);
  stats.std_dev.resize(dim_);
  for (int64_t j = 0; j < dim_; ++j) {
    const double mean = sum_[j] / static_cast<double>(count_);
    const double var = std::max(0.0, sum_sq_[j] / static_cast<double>(count_) - mean * mean);
    stats.mean[j] = mean;
    stats.std_dev[j] = std::sqrt(var);
  }
  return stats;
}

void BilinearResizeSquare(const double* in, int64_t in_size, double* out,
                          int64_t out_size) {
  if (in_size == out_size) {
    std::copy(in, in + in_size * in_size, out);
    return;
  }
  const double scale = (out_size > 1)
                           ? static_cast<double>(in_size - 1) / static_cast<double>(out_size - 1)
                           : 0.0;
  for (int64_t y = 0; y < out_size; ++y) {
    const double sy = y * scale;
    const int64_t y0 = static_cast<int64_t>(sy);
    const int64_t y1 = std::min(y0 + 1, in_size - 1);
    const double fy = sy - y0;
    for (int64_t x = 0; x < out_size; ++x) {
      const double sx = x * scale;
      const int64_t x0 = static_cast<int64_t>(sx);
      const int64_t x1 = std::min(x0 + 1, in_size - 1);
      const double fx = sx - x0;
      const double top = in[y0 * in_size + x0] * (1.0 - fx) + in[y0 * in_size + x1] * fx;
      const double bot = in[y1 * in_size + x0] * (1.0 - fx) + in[y1 * in_size + x1] * fx;
      out[y * out_size + x] = top * (1.0 - fy) + bot * fy;
    }
  }
}

Tensor PreprocessLipFrames(const Tensor& frames, int64_t out_size) {
  if (frames.rank() != 4 || frames.dim(1) != 1) {
    throw ContractError("lip preprocess: expected [T,1,S,S], got " +
                        ShapeStr(frames.shape()));
  }
  if (frames.dim(2) != frames.dim(3)) {
    throw ContractError("lip preprocess: frames must be square, got " +
                        ShapeStr(frames.shape()));
  }
  const int64_t t = frames.dim(0);
  const int64_t in_size = frames.dim(2);
  Tensor out = Tensor::Uninitialized({t, 1, out_size, out_size});
  for (int64_t i = 0; i < t; ++i) {
    BilinearResizeSquare(frames.data() + i * in_size * in_size, in_size,
                         out.data() + i * out_size * out_size, out_size);
  }
  return out;
}

}  // namespace avwake
