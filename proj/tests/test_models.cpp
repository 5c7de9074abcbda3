// avwake/tests/test_models.cpp

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "avwake/checkpoint.hpp"
#include "avwake/config.hpp"
#include "avwake/errors.hpp"
#include "avwake/gradcheck.hpp"
#include "avwake/models.hpp"
#include "avwake/ops.hpp"

using namespace avwake;

namespace {

// Tiny dims keeping all layer kinds present while staying cheap enough for
// whole-model finite differences.
ModelDims MicroDims() {
  ModelDims dims;
  dims.feat_dim = 6;
  dims.audio_frames = 8;
  dims.video_frames = 2;
  dims.lip_size = 12;
  dims.encoder.stem_ch = 2;
  dims.encoder.stem_kernel = 3;
  dims.encoder.stem_stride = 2;
  dims.encoder.stem_pad = 1;
  dims.encoder.expansion = 2.0;
  dims.encoder.blocks = {{3, 2}, {3, 1}};
  dims.encoder.embed_dim = 4;
  dims.backend.conv1_ch = 2;
  dims.backend.conv2_ch = 3;
  dims.backend.lstm_hidden = 4;
  dims.backend.fc_hidden = 3;
  dims.init_scale = 0.3;
  return dims;
}

}  // namespace

TEST_CASE("loss closed forms") {
  CHECK(WwsLossValue(0.5, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(WwsLossValue(0.5, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(WwsLossValue(1.0 - 1e-7, 1.0) == doctest::Approx(1e-7).epsilon(1e-3));
  CHECK(WwsLossValue(0.9, 0.0) == doctest::Approx(-std::log(0.1)).epsilon(1e-12));
  CHECK_THROWS_AS(WwsLossValue(0.5, 0.3), ContractError);

  // Batch-graph loss agrees with the scalar closed form to 1e-12.
  Tensor scores = Tensor::FromData({3}, {0.5, 0.9, 1.0 - 1e-7});
  Tensor loss = WwsLoss(scores, {1.0, 0.0, 1.0});
  const double expected =
      (WwsLossValue(0.5, 1) + WwsLossValue(0.9, 0) + WwsLossValue(1.0 - 1e-7, 1)) / 3.0;
  CHECK(loss.item() == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(WwsLoss(scores, {1.0, 2.0, 0.0}), ContractError);

  // Loss is non-negative even at clamped extremes.
  Tensor extreme = Tensor::FromData({2}, {1e-9, 1.0});
  CHECK(WwsLoss(extreme, {0.0, 1.0}).item() >= 0.0);
}

TEST_CASE("decision rule with documented tie acceptance") {
  CHECK(Decide(0.9, 0.5) == 1);
  CHECK(Decide(0.2, 0.5) == 0);
  CHECK(Decide(0.5, 0.5) == 1);
  CHECK_THROWS_AS(Decide(0.5, 0.0), ContractError);
  CHECK_THROWS_AS(Decide(0.5, 1.0), ContractError);
}

TEST_CASE("fuse repeats embeddings and concatenates verbatim") {
  Rng rng(20);
  Tensor fbank = Tensor::Random({1, 8, 3}, rng, -2, 2);
  Tensor emb = Tensor::Random({1, 2, 2}, rng, -2, 2);
  Tensor fused = FuseFeatures(fbank, emb);
  CHECK(fused.shape() == Shape{1, 8, 5});
  // Rows 0-3 carry emb[0], rows 4-7 carry emb[1].
  for (int64_t t = 0; t < 8; ++t) {
    const int64_t src = t / 4;
    for (int64_t j = 0; j < 2; ++j) {
      CHECK(fused.at({0, t, 3 + j}) == emb.at({0, src, j}));
    }
  }
  // First columns recover the acoustic features exactly.
  Tensor first = Slice(fused, 2, 0, 3);
  CHECK(std::memcmp(first.data(), fbank.data(), sizeof(double) * fbank.numel()) == 0);
  Tensor rest = Slice(fused, 2, 3, 2);
  for (int64_t t = 0; t < 8; ++t) {
    for (int64_t j = 0; j < 2; ++j) {
      CHECK(rest.at({0, t, j}) == emb.at({0, t / 4, j}));
    }
  }

  // Non-integer alignment ratio is a contract violation.
  Tensor bad = Tensor::Random({1, 3, 2}, rng, -1, 1);
  CHECK_THROWS_AS(FuseFeatures(fbank, bad), ContractError);
}

TEST_CASE("default fused width is the acoustic width plus the embedding width") {
  ModelDims dims;
  dims.ApplyDefaults();
  WwsModel model(Modality::kAudioVisual, dims, 1);
  CHECK(model.backend_width() == 40 + 64);
}

TEST_CASE("scores stay strictly inside (0,1) and are deterministic") {
  ModelDims dims = MicroDims();
  WwsModel model(Modality::kAudio, dims, 5);
  Rng rng(21);
  Tensor fbank = Tensor::Random({3, 8, 6}, rng, -1, 1);
  Tensor s1 = model.ScoreAudio(fbank);
  Tensor s2 = model.ScoreAudio(fbank);
  CHECK(s1.shape() == Shape{3});
  for (int64_t i = 0; i < 3; ++i) {
    CHECK(s1.data()[i] > 0.0);
    CHECK(s1.data()[i] < 1.0);
  }
  CHECK(std::memcmp(s1.data(), s2.data(), sizeof(double) * 3) == 0);
  CHECK_THROWS_AS(model.ScoreAudio(Tensor::Zeros({3, 8, 7})), ShapeError);
}

TEST_CASE("video and av models produce finite scores at micro dims") {
  ModelDims dims = MicroDims();
  Rng rng(22);
  {
    WwsModel model(Modality::kVideo, dims, 6);
    Tensor lips = Tensor::Random({2, 2, 1, 12, 12}, rng, 0, 1);
    Tensor s = model.ScoreVideo(lips);
    CHECK(s.shape() == Shape{2});
    for (int64_t i = 0; i < 2; ++i) {
      CHECK(s.data()[i] > 0.0);
      CHECK(s.data()[i] < 1.0);
    }
    Tensor emb = model.EncodeLips(lips);
    CHECK(emb.shape() == Shape{2, 2, 4});
  }
  {
    WwsModel model(Modality::kAudioVisual, dims, 7);
    Tensor fbank = Tensor::Random({2, 8, 6}, rng, -1, 1);
    Tensor lips = Tensor::Random({2, 2, 1, 12, 12}, rng, 0, 1);
    Tensor s = model.ScoreAudioVisual(fbank, lips);
    CHECK(s.shape() == Shape{2});
    CHECK_THROWS_AS(model.ScoreAudio(fbank), ContractError);
  }
}

TEST_CASE("loss gradients through each full model pass finite differences") {
  ModelDims dims = MicroDims();
  Rng rng(23);

  auto check_model = [&](WwsModel& model, auto make_loss) {
    // Bias the clipped activations into their linear band: the check then
    // probes smooth calculus only (kink subgradients are pinned by the
    // primitive tests), and gradients stay above the f64 noise floor.
    for (const auto& [name, entry] : model.registry().entries()) {
      if (entry->kind != "lstm" && entry->kind != "stat" && name.ends_with(".bias")) {
        for (int64_t i = 0; i < entry->weight.numel(); ++i) {
          entry->weight.data()[i] = 0.5;
        }
      }
    }
    std::vector<Tensor> params;
    for (const auto& [name, entry] : model.registry().entries()) {
      if (entry->trainable) params.push_back(entry->weight);
    }
    auto report = FiniteDiffCheck(make_loss, params, 2e-4);
    CHECK(report.max_rel_err < 1e-4);
  };

  {
    WwsModel model(Modality::kAudio, dims, 31);
    Tensor fbank = Tensor::Random({2, 8, 6}, rng, -1, 1);
    std::vector<double> labels = {1.0, 0.0};
    check_model(model, [&]() { return WwsLoss(model.ScoreAudio(fbank), labels); });
  }
  {
    WwsModel model(Modality::kVideo, dims, 32);
    Tensor lips = Tensor::Random({2, 2, 1, 12, 12}, rng, 0.05, 0.95);
    std::vector<double> labels = {0.0, 1.0};
    check_model(model, [&]() { return WwsLoss(model.ScoreVideo(lips), labels); });
  }
  {
    WwsModel model(Modality::kAudioVisual, dims, 33);
    Tensor fbank = Tensor::Random({2, 8, 6}, rng, -1, 1);
    Tensor lips = Tensor::Random({2, 2, 1, 12, 12}, rng, 0.05, 0.95);
    std::vector<double> labels = {1.0, 1.0};
    check_model(model,
                [&]() { return WwsLoss(model.ScoreAudioVisual(fbank, lips), labels); });
  }
}

TEST_CASE("checkpoints round-trip bit exactly including masks and flags") {
  ModelDims dims = MicroDims();
  WwsModel model(Modality::kAudioVisual, dims, 77);
  // Dirty some state: a mask with zeros, a frozen entry, norm stats.
  auto entry = model.registry().Require("backend.fc1.weight");
  entry->EnsureMask();
  entry->mask.data()[0] = 0.0;
  entry->mask.data()[3] = 0.0;
  entry->ClampWeightToMask();
  model.registry().Require("encoder.stem.weight")->frozen = true;
  auto mean = model.registry().Require("norm.fbank_mean");
  mean->weight.data()[2] = -3.25;

  const std::string path = (std::filesystem::temp_directory_path() /
                            "avwake_test_ckpt.bin").string();
  SaveCheckpoint(model, path);
  std::unique_ptr<WwsModel> loaded = LoadCheckpoint(path);

  CHECK(loaded->modality() == Modality::kAudioVisual);
  for (const auto& [name, src] : model.registry().entries()) {
    auto dst = loaded->registry().Require(name);
    REQUIRE(dst->weight.numel() == src->weight.numel());
    CHECK(std::memcmp(src->weight.data(), dst->weight.data(),
                      sizeof(double) * src->weight.numel()) == 0);
    CHECK(src->mask.defined() == dst->mask.defined());
    if (src->mask.defined()) {
      CHECK(std::memcmp(src->mask.data(), dst->mask.data(),
                        sizeof(double) * src->mask.numel()) == 0);
    }
    CHECK(src->trainable == dst->trainable);
    CHECK(src->prunable == dst->prunable);
    CHECK(src->frozen == dst->frozen);
  }

  // Saving the loaded model reproduces the file byte for byte.
  const std::string path2 = path + ".resave";
  SaveCheckpoint(*loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("model spec json reconstructs the same architecture") {
  ModelDims dims = MicroDims();
  WwsModel model(Modality::kVideo, dims, 123);
  std::unique_ptr<WwsModel> rebuilt = ModelFromSpecJson(ModelSpecJson(model));
  CHECK(rebuilt->modality() == Modality::kVideo);
  CHECK(rebuilt->registry().entries().size() == model.registry().entries().size());
  for (const auto& [name, src] : model.registry().entries()) {
    auto dst = rebuilt->registry().Require(name);
    // Same init seed in the spec -> identical fresh weights.
    CHECK(std::memcmp(src->weight.data(), dst->weight.data(),
                      sizeof(double) * src->weight.numel()) == 0);
  }
}

TEST_CASE("config parsing applies per-modality protocol defaults") {
  ExperimentConfig a = ParseConfigJson(R"({"modality": "audio"})");
  CHECK(a.train.batch_size == 64);
  CHECK(a.train.adam.lr == doctest::Approx(5e-3));
  ExperimentConfig v = ParseConfigJson(R"({"modality": "video"})");
  CHECK(v.train.batch_size == 16);
  CHECK(v.train.adam.lr == doctest::Approx(2e-3));
  ExperimentConfig av = ParseConfigJson(R"({"modality": "av", "train": {"lr": 0.5}})");
  CHECK(av.train.adam.lr == doctest::Approx(0.5));
  CHECK(av.train.batch_size == 16);
}

TEST_CASE("config rejects unknown keys and malformed json") {
  CHECK_THROWS_AS(ParseConfigJson("{nope"), ConfigError);
  CHECK_THROWS_AS(ParseConfigJson(R"({"modality": "audio", "typo_key": 1})"),
                  ConfigError);
  CHECK_THROWS_AS(ParseConfigJson(R"({"train": {"lr": 0.1, "unknown": 2}})"),
                  ConfigError);
  CHECK_THROWS_AS(ParseConfigJson(R"({"modality": "sonar"})"), ConfigError);
  CHECK_THROWS_AS(ParseConfigJson(R"({"corpus": {"snrs_db": []}})"), ConfigError);
}

TEST_CASE("cost report covers every parameter-bearing layer") {
  ModelDims dims = MicroDims();
  WwsModel model(Modality::kAudioVisual, dims, 9);
  CostReport report = model.Cost();
  int64_t counted = report.TotalParams();
  int64_t registered = 0;
  for (const auto& [name, entry] : model.registry().entries()) {
    if (entry->kind != "stat") registered += entry->weight.numel();
  }
  CHECK(counted == registered);
  CHECK(report.TotalFlops() > 0);
  CHECK(report.TotalPruned() == 0);

  // Masking shows up in pruned counts but never changes params.
  auto entry = model.registry().Require("backend.conv1.weight");
  entry->EnsureMask();
  entry->mask.data()[0] = 0.0;
  CostReport after = model.Cost();
  CHECK(after.TotalParams() == counted);
  CHECK(after.TotalPruned() == 1);
}
