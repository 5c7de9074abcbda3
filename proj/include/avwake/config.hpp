// avwake/config.hpp

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

#ifndef AVWAKE_CONFIG_HPP_
#define AVWAKE_CONFIG_HPP_

#include <memory>
#include <string>

#include "avwake/corpus.hpp"
#include "avwake/features.hpp"
#include "avwake/models.hpp"
#include "avwake/train.hpp"

namespace avwake {

struct PruneConfig {
  std::string regime = "lth_if";  // lth_if | lth_oneshot | sequential_av
  int iterations = 5;             // T
  double rate = 0.05;             // fraction of survivors pruned per event
  int initial_epochs = 5;         // E
  std::string scope = "all";      // all | encoder | backend
  std::string ranking = "global";  // global | per_layer
  double target_sparsity = 0.5;    // one-shot regime
  double dev_threshold = 0.5;
  int encoder_iterations = 8;
  double encoder_rate = 0.2;
  int backend_iterations = 5;
  double backend_rate = 0.1;
};

struct EvalConfig {
  std::string split = "test";
  double threshold = 0.5;
};

struct CalibrateConfig {
  std::string split = "dev";
  double target_one_minus_frr = 0.98;
};

// Whole-experiment configuration.  JSON-backed; unknown keys are rejected,
// absent keys take defaults (training batch size and learning rate default
// per modality: audio 64 @ 1e-4, video and audio-visual 16 @ 2e-4).
struct ExperimentConfig {
  uint64_t seed = 42;
  Modality modality = Modality::kAudio;
  CorpusConfig corpus;
  FbankConfig features;
  ModelDims model;
  TrainOptions train;
  PruneConfig prune;
  EvalConfig eval;
  CalibrateConfig calibrate;
};

ExperimentConfig ParseConfigJson(const std::string& text);
ExperimentConfig LoadConfigFile(const std::string& path);

// Model reconstruction blob stored inside checkpoints.
std::string ModelSpecJson(const WwsModel& model);
std::unique_ptr<WwsModel> ModelFromSpecJson(const std::string& json_text);

}  // namespace avwake

#endif  // AVWAKE_CONFIG_HPP_
