// avwake/corpus.cpp

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

#include "avwake/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "avwake/errors.hpp"
#include "avwake/features.hpp"
#include "avwake/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "record files are little-endian");

namespace avwake {

namespace {

constexpr double kWakeSeconds = 0.5;
constexpr double kBackgroundRms = 0.04;
// Seed-range stride between splits; keeps per-split seed sets disjoint.
constexpr uint64_t kSplitSeedStride = 10'000'000ULL;

double MeanSquare(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

void PeakLimit(std::vector<double>& x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  if (peak > 1.0) {
    const double s = 1.0 / peak;
    for (double& v : x) v *= s;
  }
}

// Three-stage filtered white noise with a roughly 1/f spectrum.
std::vector<double> PinkNoise(Rng& rng, int64_t n) {
  std::vector<double> out(static_cast<size_t>(n));
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0;
  for (int64_t i = 0; i < n; ++i) {
    const double white = rng.Uniform(-1.0, 1.0);
    b0 = 0.99886 * b0 + white * 0.0555179;
    b1 = 0.99332 * b1 + white * 0.0750759;
    b2 = 0.96900 * b2 + white * 0.1538520;
    b3 = 0.86650 * b3 + white * 0.3104856;
    b4 = 0.55000 * b4 + white * 0.5329522;
    b5 = -0.7616 * b5 - white * 0.0168980;
    out[i] = (b0 + b1 + b2 + b3 + b4 + b5 + white * 0.5362) * 0.11;
  }
  return out;
}

void AddToneBurst(std::vector<double>& audio, int sample_rate, double freq_hz,
                  double onset_s, double dur_s, double amp) {
  const int64_t n = static_cast<int64_t>(audio.size());
  const int64_t start = static_cast<int64_t>(onset_s * sample_rate);
  const int64_t len = static_cast<int64_t>(dur_s * sample_rate);
  for (int64_t i = 0; i < len; ++i) {
    const int64_t idx = start + i;
    if (idx < 0 || idx >= n) break;
    const double u = static_cast<double>(i) / static_cast<double>(len - 1);
    const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * u);
    audio[idx] += amp * env *
                  std::sin(2.0 * std::numbers::pi * freq_hz * i / sample_rate);
  }
}

// SNR-mixing "babble" stand-in: pink bed plus randomly gated tone bursts,
// mostly inside the speech band so low-SNR mixes genuinely collide with
// the wake pattern.
std::vector<double> NoiseSignal(Rng& rng, int64_t n, int sample_rate) {
  std::vector<double> noise = PinkNoise(rng, n);
  for (double& v : noise) v *= 2.0;
  const int bursts = 4 + static_cast<int>(rng.NextBelow(5));
  const double total_s = static_cast<double>(n) / sample_rate;
  for (int b = 0; b < bursts; ++b) {
    const double freq = rng.NextDouble() < 0.7 ? rng.Uniform(400.0, 1600.0)
                                               : rng.Uniform(200.0, 4000.0);
    const double dur = rng.Uniform(0.1, 0.4);
    const double onset = rng.Uniform(0.0, std::max(0.0, total_s - dur));
    const double amp = rng.Uniform(0.3, 0.9);
    AddToneBurst(noise, sample_rate, freq, onset, dur, amp);
  }
  return noise;
}

struct LipGeometry {
  double width_jitter;
};

// Renders one mouth frame: light face, two fixed nostril dots, and a dark
// elliptical mouth whose vertical opening follows the aperture.
void RenderLipFrame(double aperture, const LipGeometry& geom, Rng& texture_rng,
                    int64_t size, double* out) {
  const double r = static_cast<double>(size);
  const double cx = 0.5 * r;
  const double cy = 0.62 * r;
  const double rx = r * (0.17 + 0.02 * geom.width_jitter);
  const double ry = r * (0.015 + 0.21 * aperture);
  const double nx1 = 0.42 * r, nx2 = 0.58 * r, ny = 0.36 * r, nr = 0.025 * r;
  for (int64_t y = 0; y < size; ++y) {
    for (int64_t x = 0; x < size; ++x) {
      double v = 0.8 + texture_rng.Uniform(-0.02, 0.02);
      const double dx = (x - cx) / rx;
      const double dy = (y - cy) / ry;
      const double d = dx * dx + dy * dy;
      if (d < 1.2) {
        const double inside = std::clamp((1.2 - d) / 0.4, 0.0, 1.0);
        v -= 0.62 * inside;
      }
      const double dn1 = ((x - nx1) * (x - nx1) + (y - ny) * (y - ny)) / (nr * nr);
      const double dn2 = ((x - nx2) * (x - nx2) + (y - ny) * (y - ny)) / (nr * nr);
      if (dn1 < 1.0) v -= 0.3 * (1.0 - dn1);
      if (dn2 < 1.0) v -= 0.3 * (1.0 - dn2);
      out[y * size + x] = std::clamp(v, 0.0, 1.0);
    }
  }
}

void WriteU32(std::ofstream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void WriteU64(std::ofstream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

}  // namespace

int64_t CorpusConfig::ClipSamples() const {
  return static_cast<int64_t>(std::llround(sample_rate * clip_seconds));
}

int64_t CorpusConfig::VideoFrames() const {
  return static_cast<int64_t>(video_fps * clip_seconds);
}

std::vector<double> WakeTemplate(int sample_rate) {
  const int64_t n = static_cast<int64_t>(kWakeSeconds * sample_rate);
  const int64_t half = n / 2;
  std::vector<double> out(static_cast<size_t>(n));
  double phase = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double freq, u;
    if (i < half) {
      u = static_cast<double>(i) / static_cast<double>(half);
      freq = 500.0 + 400.0 * u;  // rising sweep
    } else {
      u = static_cast<double>(i - half) / static_cast<double>(n - half);
      freq = 1400.0 - 400.0 * u;  // falling sweep
    }
    phase += 2.0 * std::numbers::pi * freq / sample_rate;
    const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * u);
    out[i] = env * std::sin(phase);
  }
  return out;
}

double WakeApertureAt(double u) {
  const double s = std::sin(4.0 * std::numbers::pi * u);
  return s * s;
}

std::vector<double> CanonicalApertureSeries(const CorpusConfig& config) {
  const int64_t frames = config.VideoFrames();
  const double onset_s = (config.clip_seconds - kWakeSeconds) / 2.0;
  std::vector<double> series(static_cast<size_t>(frames), 0.0);
  for (int64_t f = 0; f < frames; ++f) {
    const double t = (f + 0.5) / config.video_fps;
    if (t >= onset_s && t <= onset_s + kWakeSeconds) {
      series[f] = WakeApertureAt((t - onset_s) / kWakeSeconds);
    }
  }
  return series;
}

std::vector<double> MixNoise(std::span<const double> clean,
                             std::span<const double> noise, double snr_db) {
  if (clean.size() != noise.size()) {
    throw ContractError("mix: clean and noise lengths differ");
  }
  if (clean.empty()) throw ContractError("mix: empty signals");
  const double p_clean = MeanSquare(clean);
  const double p_noise = MeanSquare(noise);
  if (p_clean <= 0.0) throw ContractError("mix: clean signal has zero power");
  if (p_noise <= 0.0) throw ContractError("mix: noise has zero power at finite snr");
  const double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
  std::vector<double> out(clean.size());
  for (size_t i = 0; i < clean.size(); ++i) out[i] = clean[i] + gain * noise[i];
  PeakLimit(out);
  return out;
}

Sample SynthSample(int label, int8_t snr_code, uint64_t seed,
                   const CorpusConfig& config) {
  if (label != 0 && label != 1) throw ContractError("synth: label must be 0 or 1");
  const int64_t n = config.ClipSamples();
  const int64_t frames = config.VideoFrames();
  const int sr = config.sample_rate;

  Rng content_rng(MixSeed(seed, 1));
  Rng lips_rng(MixSeed(seed, 2));
  Rng noise_rng(MixSeed(seed, 3));

  // Audio content: low pink bed plus wake pattern or distractor tones.
  std::vector<double> audio = PinkNoise(content_rng, n);
  {
    const double rms = std::sqrt(MeanSquare(audio));
    const double s = (rms > 0.0) ? kBackgroundRms / rms : 0.0;
    for (double& v : audio) v *= s;
  }

  double onset_s = 0.0;
  std::vector<double> aperture(static_cast<size_t>(frames), 0.0);
  if (label == 1) {
    const std::vector<double> wake = WakeTemplate(sr);
    const int64_t max_onset = n - static_cast<int64_t>(wake.size());
    const int64_t onset = static_cast<int64_t>(content_rng.NextBelow(max_onset + 1));
    onset_s = static_cast<double>(onset) / sr;
    const double amp = content_rng.Uniform(0.35, 0.6);
    for (size_t i = 0; i < wake.size(); ++i) audio[onset + i] += amp * wake[i];
    // Mouth follows the wake pattern (articulation strength varies per
    // speaker); closed elsewhere.
    const double articulation = lips_rng.Uniform(0.45, 1.0);
    for (int64_t f = 0; f < frames; ++f) {
      const double t = (f + 0.5) / config.video_fps;
      double a = 0.04 + lips_rng.Uniform(0.0, 0.02);
      if (t >= onset_s && t <= onset_s + kWakeSeconds) {
        a += 0.88 * articulation * WakeApertureAt((t - onset_s) / kWakeSeconds);
      }
      aperture[f] = std::clamp(a, 0.0, 1.0);
    }
  } else {
    // Distractors never enter the wake sweep band (500-1400 Hz), so the
    // clean-signal content is separable; only the SNR noise (whose bursts
    // do cross the band) degrades the audio stream.
    const int tones = 1 + static_cast<int>(content_rng.NextBelow(3));
    for (int i = 0; i < tones; ++i) {
      const double freq = content_rng.NextDouble() < 0.4
                              ? content_rng.Uniform(280.0, 440.0)
                              : content_rng.Uniform(1650.0, 3400.0);
      const double dur = content_rng.Uniform(0.12, 0.35);
      const double onset = content_rng.Uniform(0.0, config.clip_seconds - dur);
      const double amp = content_rng.Uniform(0.3, 0.55);
      AddToneBurst(audio, sr, freq, onset, dur, amp);
    }
    // Negative mouths, all uncorrelated with the audio: a few hold still
    // (plus jitter), most oscillate at an off-pattern rate, and some mouth
    // a wake-like burst with the wrong pulse count ("visual babble").
    const double kind = lips_rng.NextDouble();
    const double base = lips_rng.Uniform(0.05, 0.45);
    if (kind < 0.75) {
      const bool drifts = kind >= 0.15;
      const double depth = drifts ? lips_rng.Uniform(0.1, 0.45) : 0.0;
      const double freq = lips_rng.Uniform(2.5, 6.0);
      const double phase = lips_rng.Uniform(0.0, 2.0 * std::numbers::pi);
      for (int64_t f = 0; f < frames; ++f) {
        const double t = (f + 0.5) / config.video_fps;
        const double drift = depth * 0.5 *
                             (1.0 + std::sin(2.0 * std::numbers::pi * freq * t + phase));
        aperture[f] = std::clamp(base + drift + lips_rng.Uniform(-0.04, 0.04), 0.0, 1.0);
      }
    } else {
      const double cycles = lips_rng.NextBelow(2) ? 1.0 : 3.0;  // wake uses 2
      const double dur = lips_rng.Uniform(0.35, 0.7);
      const double start = lips_rng.Uniform(0.0, config.clip_seconds - dur);
      const double strength = lips_rng.Uniform(0.45, 1.0);
      for (int64_t f = 0; f < frames; ++f) {
        const double t = (f + 0.5) / config.video_fps;
        double a = 0.04 + lips_rng.Uniform(0.0, 0.02);
        if (t >= start && t <= start + dur) {
          const double u = (t - start) / dur;
          const double s = std::sin(2.0 * std::numbers::pi * cycles * u);
          a += 0.88 * strength * s * s;
        }
        aperture[f] = std::clamp(a, 0.0, 1.0);
      }
    }
  }
  PeakLimit(audio);

  Sample sample;
  sample.label = label;
  sample.snr_code = snr_code;
  sample.seed = seed;

  if (snr_code != kCleanSnr) {
    std::vector<double> noise = NoiseSignal(noise_rng, n, sr);
    sample.audio = MixNoise(audio, noise, static_cast<double>(snr_code));
  } else {
    sample.audio = std::move(audio);
  }

  // Lips rendered at native resolution, then resized to the model size.
  const int64_t render = config.lip_render_size;
  LipGeometry geom{lips_rng.Uniform(-1.0, 1.0)};
  Tensor raw = Tensor::Uninitialized({frames, 1, render, render});
  for (int64_t f = 0; f < frames; ++f) {
    RenderLipFrame(aperture[f], geom, lips_rng, render,
                   raw.data() + f * render * render);
  }
  sample.lips = PreprocessLipFrames(raw, config.lip_size);
  return sample;
}

std::string FormatSnr(int8_t code) {
  if (code == kCleanSnr) return "clean";
  return std::to_string(static_cast<int>(code));
}

int8_t ParseSnr(const std::string& text) {
  if (text == "clean") return kCleanSnr;
  return static_cast<int8_t>(std::stoi(text));
}

struct RecordWriter::Impl {
  std::ofstream os;
  std::string path;
  uint32_t count = 0;
  uint32_t audio_len = 0;
  uint32_t lip_values = 0;
  bool open = false;
};

RecordWriter::RecordWriter(const std::string& path, uint32_t audio_len,
                           uint32_t lip_frames, uint32_t lip_size,
                           uint32_t sample_rate, bool overwrite)
    : impl_(std::make_unique<Impl>()) {
  if (!overwrite && std::filesystem::exists(path)) {
    throw IoError("refusing to overwrite existing " + path +
                  " (pass the overwrite flag)");
  }
  impl_->path = path;
  impl_->os.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->os) throw IoError("cannot open " + path + " for writing");
  impl_->audio_len = audio_len;
  impl_->lip_values = lip_frames * lip_size * lip_size;
  impl_->open = true;
  impl_->os.write(kRecordMagic, 8);
  WriteU32(impl_->os, kRecordVersion);
  WriteU32(impl_->os, 0);  // count patched on Close
  WriteU32(impl_->os, audio_len);
  WriteU32(impl_->os, lip_frames);
  WriteU32(impl_->os, lip_size);
  WriteU32(impl_->os, sample_rate);
  WriteU32(impl_->os, 0);
}

RecordWriter::~RecordWriter() {
  if (impl_ && impl_->open) Close();
}

uint64_t RecordWriter::Append(const Sample& sample, uint64_t id) {
  Impl& im = *impl_;
  if (!im.open) throw LifecycleError("record writer already closed");
  if (sample.audio.size() != im.audio_len ||
      static_cast<uint32_t>(sample.lips.numel()) != im.lip_values) {
    throw ContractError("record writer: sample dims do not match file header");
  }
  const uint64_t offset = static_cast<uint64_t>(im.os.tellp());
  WriteU64(im.os, id);
  const uint8_t label = static_cast<uint8_t>(sample.label);
  im.os.write(reinterpret_cast<const char*>(&label), 1);
  im.os.write(reinterpret_cast<const char*>(&sample.snr_code), 1);
  WriteU64(im.os, sample.seed);
  std::vector<float> buf(im.audio_len);
  for (uint32_t i = 0; i < im.audio_len; ++i) {
    buf[i] = static_cast<float>(sample.audio[i]);
  }
  im.os.write(reinterpret_cast<const char*>(buf.data()), 4ull * im.audio_len);
  buf.resize(im.lip_values);
  const double* lips = sample.lips.data();
  for (uint32_t i = 0; i < im.lip_values; ++i) buf[i] = static_cast<float>(lips[i]);
  im.os.write(reinterpret_cast<const char*>(buf.data()), 4ull * im.lip_values);
  if (!im.os) throw IoError("write failed on " + im.path);
  ++im.count;
  return offset;
}

void RecordWriter::Close() {
  Impl& im = *impl_;
  if (!im.open) return;
  im.os.seekp(12);
  WriteU32(im.os, im.count);
  im.os.close();
  im.open = false;
  if (!im.os) throw IoError("close failed on " + im.path);
}

std::vector<ManifestRecord> BuildCorpus(const CorpusConfig& config, bool overwrite) {
  namespace fs = std::filesystem;
  if (config.train_count >= static_cast<int64_t>(kSplitSeedStride) ||
      config.dev_count >= static_cast<int64_t>(kSplitSeedStride) ||
      config.test_count >= static_cast<int64_t>(kSplitSeedStride)) {
    throw ContractError("corpus: split too large for disjoint seed ranges");
  }
  fs::create_directories(config.dir);
  const std::string manifest_path = (fs::path(config.dir) / "manifest.csv").string();
  if (!overwrite && fs::exists(manifest_path)) {
    throw IoError("refusing to overwrite existing " + manifest_path +
                  " (pass the overwrite flag)");
  }

  const int64_t n_audio = config.ClipSamples();
  const int64_t frames = config.VideoFrames();
  std::vector<ManifestRecord> manifest;

  struct SplitSpec {
    const char* name;
    int64_t count;
    uint64_t seed_base;
    bool stratified;  // dev/test: snr strata only; train cycles clean too
  };
  const SplitSpec splits[] = {
      {"train", config.train_count, config.seed + 0 * kSplitSeedStride, false},
      {"dev", config.dev_count, config.seed + 1 * kSplitSeedStride, true},
      {"test", config.test_count, config.seed + 2 * kSplitSeedStride, true},
  };

  std::vector<int8_t> train_cycle;
  if (config.train_includes_clean) train_cycle.push_back(kCleanSnr);
  for (int snr : config.snrs_db) train_cycle.push_back(static_cast<int8_t>(snr));
  if (train_cycle.empty()) train_cycle.push_back(kCleanSnr);

  uint64_t id = 0;
  for (const SplitSpec& split : splits) {
    const std::string file = std::string(split.name) + ".rec";
    RecordWriter writer((fs::path(config.dir) / file).string(),
                        static_cast<uint32_t>(n_audio), static_cast<uint32_t>(frames),
                        static_cast<uint32_t>(config.lip_size),
                        static_cast<uint32_t>(config.sample_rate), overwrite);
    for (int64_t i = 0; i < split.count; ++i) {
      const int label = static_cast<int>(i % 2);
      int8_t snr;
      if (split.stratified) {
        snr = static_cast<int8_t>(config.snrs_db[(i / 2) % config.snrs_db.size()]);
      } else {
        snr = train_cycle[i % train_cycle.size()];
      }
      const uint64_t seed = split.seed_base + static_cast<uint64_t>(i);
      Sample sample = SynthSample(label, snr, seed, config);
      const uint64_t offset = writer.Append(sample, id);
      manifest.push_back({split.name, id, label, snr, seed, file, offset});
      ++id;
    }
    writer.Close();
  }

  std::ofstream os(manifest_path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + manifest_path);
  os << "split,id,label,snr,seed,file,offset\n";
  for (const ManifestRecord& r : manifest) {
    os << r.split << ',' << r.id << ',' << r.label << ',' << FormatSnr(r.snr_code)
       << ',' << r.seed << ',' << r.file << ',' << r.offset << '\n';
  }
  os.close();
  return manifest;
}

std::vector<ManifestRecord> ReadManifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty manifest " + path);
  std::vector<ManifestRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    ManifestRecord r;
    std::getline(ss, r.split, ',');
    std::getline(ss, field, ',');
    r.id = std::stoull(field);
    std::getline(ss, field, ',');
    r.label = std::stoi(field);
    std::getline(ss, field, ',');
    r.snr_code = ParseSnr(field);
    std::getline(ss, field, ',');
    r.seed = std::stoull(field);
    std::getline(ss, r.file, ',');
    std::getline(ss, field, ',');
    r.offset = std::stoull(field);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace avwake
