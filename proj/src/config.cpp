// avwake/config.cpp

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

#include "avwake/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "avwake/errors.hpp"

namespace avwake {

namespace {

using nlohmann::json;

void RejectUnknownKeys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
  }
}

template <typename T>
void Get(const json& obj, const char* key, T* out) {
  if (obj.contains(key)) {
    try {
      *out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
    }
  }
}

void ParseCorpus(const json& obj, CorpusConfig* c) {
  RejectUnknownKeys(obj,
                    {"dir", "train_count", "dev_count", "test_count", "snrs_db",
                     "train_includes_clean", "seed", "sample_rate", "clip_seconds",
                     "video_fps", "lip_render_size", "lip_size"},
                    "corpus");
  Get(obj, "dir", &c->dir);
  Get(obj, "train_count", &c->train_count);
  Get(obj, "dev_count", &c->dev_count);
  Get(obj, "test_count", &c->test_count);
  Get(obj, "snrs_db", &c->snrs_db);
  Get(obj, "train_includes_clean", &c->train_includes_clean);
  Get(obj, "seed", &c->seed);
  Get(obj, "sample_rate", &c->sample_rate);
  Get(obj, "clip_seconds", &c->clip_seconds);
  Get(obj, "video_fps", &c->video_fps);
  Get(obj, "lip_render_size", &c->lip_render_size);
  Get(obj, "lip_size", &c->lip_size);
  if (c->train_count < 0 || c->dev_count < 0 || c->test_count < 0) {
    throw ConfigError("corpus counts must be non-negative");
  }
  if (c->snrs_db.empty()) throw ConfigError("corpus.snrs_db must be non-empty");
}

void ParseFeatures(const json& obj, FbankConfig* f) {
  RejectUnknownKeys(obj,
                    {"sample_rate", "window_ms", "hop_ms", "num_mels", "fmin_hz",
                     "fmax_hz", "log_floor"},
                    "features");
  Get(obj, "sample_rate", &f->sample_rate);
  Get(obj, "window_ms", &f->window_ms);
  Get(obj, "hop_ms", &f->hop_ms);
  Get(obj, "num_mels", &f->num_mels);
  Get(obj, "fmin_hz", &f->fmin_hz);
  Get(obj, "fmax_hz", &f->fmax_hz);
  Get(obj, "log_floor", &f->log_floor);
}

void ParseEncoder(const json& obj, EncoderDims* e) {
  RejectUnknownKeys(obj,
                    {"stem_ch", "stem_kernel", "stem_stride", "stem_pad", "expansion",
                     "blocks", "embed_dim"},
                    "model.encoder");
  Get(obj, "stem_ch", &e->stem_ch);
  Get(obj, "stem_kernel", &e->stem_kernel);
  Get(obj, "stem_stride", &e->stem_stride);
  Get(obj, "stem_pad", &e->stem_pad);
  Get(obj, "expansion", &e->expansion);
  Get(obj, "embed_dim", &e->embed_dim);
  if (obj.contains("blocks")) {
    e->blocks.clear();
    for (const json& b : obj.at("blocks")) {
      if (!b.is_array() || b.size() != 2) {
        throw ConfigError("model.encoder.blocks entries must be [out_channels, stride]");
      }
      e->blocks.push_back({b[0].get<int64_t>(), b[1].get<int>()});
    }
  }
}

void ParseModel(const json& obj, ModelDims* m) {
  RejectUnknownKeys(obj,
                    {"feat_dim", "audio_frames", "video_frames", "lip_size", "encoder",
                     "backend", "init_scale"},
                    "model");
  Get(obj, "feat_dim", &m->feat_dim);
  Get(obj, "audio_frames", &m->audio_frames);
  Get(obj, "video_frames", &m->video_frames);
  Get(obj, "lip_size", &m->lip_size);
  Get(obj, "init_scale", &m->init_scale);
  if (obj.contains("encoder")) ParseEncoder(obj.at("encoder"), &m->encoder);
  if (obj.contains("backend")) {
    const json& b = obj.at("backend");
    RejectUnknownKeys(b, {"conv1_ch", "conv2_ch", "lstm_hidden", "fc_hidden"},
                      "model.backend");
    Get(b, "conv1_ch", &m->backend.conv1_ch);
    Get(b, "conv2_ch", &m->backend.conv2_ch);
    Get(b, "lstm_hidden", &m->backend.lstm_hidden);
    Get(b, "fc_hidden", &m->backend.fc_hidden);
  }
}

void ParseTrain(const json& obj, Modality modality, TrainOptions* t) {
  RejectUnknownKeys(obj,
                    {"epochs", "batch_size", "chunk_size", "lr", "beta1", "beta2",
                     "eps", "shuffle_seed"},
                    "train");
  // Per-modality defaults.  Batch sizes follow the 64/16/16 protocol; the
  // default learning rates keep its 1:2 audio-to-visual ratio but are
  // scaled up for the small corpus, where five epochs leave Adam only a few
  // hundred steps.
  if (modality == Modality::kAudio) {
    t->batch_size = 64;
    t->adam.lr = 5e-3;
  } else {
    t->batch_size = 16;
    t->adam.lr = 2e-3;
  }
  Get(obj, "epochs", &t->epochs);
  Get(obj, "batch_size", &t->batch_size);
  Get(obj, "chunk_size", &t->chunk_size);
  Get(obj, "lr", &t->adam.lr);
  Get(obj, "beta1", &t->adam.beta1);
  Get(obj, "beta2", &t->adam.beta2);
  Get(obj, "eps", &t->adam.eps);
  Get(obj, "shuffle_seed", &t->shuffle_seed);
}

void ParsePrune(const json& obj, PruneConfig* p) {
  RejectUnknownKeys(obj,
                    {"regime", "iterations", "rate", "initial_epochs", "scope",
                     "ranking", "target_sparsity", "dev_threshold",
                     "encoder_iterations", "encoder_rate", "backend_iterations",
                     "backend_rate"},
                    "prune");
  Get(obj, "regime", &p->regime);
  Get(obj, "iterations", &p->iterations);
  Get(obj, "rate", &p->rate);
  Get(obj, "initial_epochs", &p->initial_epochs);
  Get(obj, "scope", &p->scope);
  Get(obj, "ranking", &p->ranking);
  Get(obj, "target_sparsity", &p->target_sparsity);
  Get(obj, "dev_threshold", &p->dev_threshold);
  Get(obj, "encoder_iterations", &p->encoder_iterations);
  Get(obj, "encoder_rate", &p->encoder_rate);
  Get(obj, "backend_iterations", &p->backend_iterations);
  Get(obj, "backend_rate", &p->backend_rate);
  if (p->regime != "lth_if" && p->regime != "lth_oneshot" && p->regime != "sequential_av") {
    throw ConfigError("prune.regime must be lth_if, lth_oneshot or sequential_av");
  }
  if (p->ranking != "global" && p->ranking != "per_layer") {
    throw ConfigError("prune.ranking must be global or per_layer");
  }
}

}  // namespace

ExperimentConfig ParseConfigJson(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  RejectUnknownKeys(root,
                    {"seed", "modality", "corpus", "features", "model", "train",
                     "prune", "eval", "calibrate"},
                    "config root");
  ExperimentConfig cfg;
  Get(root, "seed", &cfg.seed);
  std::string modality = "audio";
  Get(root, "modality", &modality);
  cfg.modality = ParseModality(modality);
  cfg.corpus.seed = cfg.seed;
  cfg.train.shuffle_seed = cfg.seed;
  if (root.contains("corpus")) ParseCorpus(root.at("corpus"), &cfg.corpus);
  if (root.contains("features")) ParseFeatures(root.at("features"), &cfg.features);
  if (root.contains("model")) {
    ParseModel(root.at("model"), &cfg.model);
  }
  ParseTrain(root.contains("train") ? root.at("train") : json::object(), cfg.modality,
             &cfg.train);
  if (root.contains("prune")) ParsePrune(root.at("prune"), &cfg.prune);
  if (root.contains("eval")) {
    const json& e = root.at("eval");
    RejectUnknownKeys(e, {"split", "threshold"}, "eval");
    Get(e, "split", &cfg.eval.split);
    Get(e, "threshold", &cfg.eval.threshold);
  }
  if (root.contains("calibrate")) {
    const json& c = root.at("calibrate");
    RejectUnknownKeys(c, {"split", "target_one_minus_frr"}, "calibrate");
    Get(c, "split", &cfg.calibrate.split);
    Get(c, "target_one_minus_frr", &cfg.calibrate.target_one_minus_frr);
  }
  cfg.model.ApplyDefaults();
  // Keep the feature pipeline and the generator on the same clock.
  cfg.features.sample_rate = cfg.corpus.sample_rate;
  return cfg;
}

ExperimentConfig LoadConfigFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ParseConfigJson(ss.str());
}

std::string ModelSpecJson(const WwsModel& model) {
  const ModelDims& d = model.dims();
  json blocks = json::array();
  for (const BottleneckDims& b : d.encoder.blocks) {
    blocks.push_back(json::array({b.out, b.stride}));
  }
  json spec = {
      {"modality", ModalityName(model.modality())},
      {"init_seed", model.registry().init_seed()},
      {"dims",
       {{"feat_dim", d.feat_dim},
        {"audio_frames", d.audio_frames},
        {"video_frames", d.video_frames},
        {"lip_size", d.lip_size},
        {"init_scale", d.init_scale},
        {"encoder",
         {{"stem_ch", d.encoder.stem_ch},
          {"stem_kernel", d.encoder.stem_kernel},
          {"stem_stride", d.encoder.stem_stride},
          {"stem_pad", d.encoder.stem_pad},
          {"expansion", d.encoder.expansion},
          {"embed_dim", d.encoder.embed_dim},
          {"blocks", blocks}}},
        {"backend",
         {{"conv1_ch", d.backend.conv1_ch},
          {"conv2_ch", d.backend.conv2_ch},
          {"lstm_hidden", d.backend.lstm_hidden},
          {"fc_hidden", d.backend.fc_hidden}}}}},
  };
  return spec.dump();
}

std::unique_ptr<WwsModel> ModelFromSpecJson(const std::string& json_text) {
  json spec;
  try {
    spec = json::parse(json_text);
  } catch (const json::exception& e) {
    throw IoError(std::string("bad model spec: ") + e.what());
  }
  const Modality modality = ParseModality(spec.at("modality").get<std::string>());
  const uint64_t init_seed = spec.at("init_seed").get<uint64_t>();
  ModelDims dims;
  const json& d = spec.at("dims");
  dims.feat_dim = d.at("feat_dim").get<int64_t>();
  dims.audio_frames = d.at("audio_frames").get<int64_t>();
  dims.video_frames = d.at("video_frames").get<int64_t>();
  dims.lip_size = d.at("lip_size").get<int64_t>();
  dims.init_scale = d.at("init_scale").get<double>();
  const json& e = d.at("encoder");
  dims.encoder.stem_ch = e.at("stem_ch").get<int64_t>();
  dims.encoder.stem_kernel = e.at("stem_kernel").get<int64_t>();
  dims.encoder.stem_stride = e.at("stem_stride").get<int>();
  dims.encoder.stem_pad = e.at("stem_pad").get<int>();
  dims.encoder.expansion = e.at("expansion").get<double>();
  dims.encoder.embed_dim = e.at("embed_dim").get<int64_t>();
  dims.encoder.blocks.clear();
  for (const json& b : e.at("blocks")) {
    dims.encoder.blocks.push_back({b[0].get<int64_t>(), b[1].get<int>()});
  }
  const json& bk = d.at("backend");
  dims.backend.conv1_ch = bk.at("conv1_ch").get<int64_t>();
  dims.backend.conv2_ch = bk.at("conv2_ch").get<int64_t>();
  dims.backend.lstm_hidden = bk.at("lstm_hidden").get<int64_t>();
  dims.backend.fc_hidden = bk.at("fc_hidden").get<int64_t>();
  return std::make_unique<WwsModel>(modality, dims, init_seed);
}

}  // namespace avwake
