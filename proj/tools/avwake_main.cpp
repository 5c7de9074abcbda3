// avwake/tools/avwake_main.cpp

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

#include <malloc.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "avwake/checkpoint.hpp"
#include "avwake/config.hpp"
#include "avwake/corpus.hpp"
#include "avwake/errors.hpp"
#include "avwake/metrics.hpp"
#include "avwake/pruning.hpp"
#include "avwake/report.hpp"
#include "avwake/train.hpp"

namespace fs = std::filesystem;
using namespace avwake;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCalibration = 4;
constexpr int kExitOther = 1;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  bool overwrite = false;
};

ExperimentConfig LoadAndOverride(const CommonArgs& args) {
  if (args.config_path.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = LoadConfigFile(args.config_path);
  if (args.seed_set) {
    cfg.seed = args.seed;
    cfg.corpus.seed = args.seed;
    cfg.train.shuffle_seed = args.seed;
  }
  return cfg;
}

void WriteText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

std::string SplitRecPath(const ExperimentConfig& cfg, const std::string& split) {
  if (cfg.corpus.dir.empty()) throw ConfigError("corpus.dir must be set");
  if (split != "train" && split != "dev" && split != "test") {
    throw ConfigError("split must be train, dev or test");
  }
  return (fs::path(cfg.corpus.dir) / (split + ".rec")).string();
}

uint64_t ModelInitSeed(const ExperimentConfig& cfg) {
  return MixSeed(cfg.seed, StableHash(ModalityName(cfg.modality)));
}

void SaveRunArtifacts(const WwsModel& model, const Trainer& trainer,
                      const fs::path& out, const PruneHistory* history) {
  fs::create_directories(out);
  SaveCheckpoint(model, (out / "checkpoint.ckpt").string());
  WriteText(out / "train_log.csv", trainer.log().ToCsv());
  WriteText(out / "sparsity.csv", ComputeSparsityReport(model.registry()).ToCsv());
  WriteText(out / "cost.csv", model.Cost().ToCsv());
  if (history != nullptr) {
    WriteText(out / "history.csv", history->ToCsv());
  }
}

int CmdSynth(const CommonArgs& args) {
  ExperimentConfig cfg = LoadAndOverride(args);
  if (!args.out_dir.empty()) cfg.corpus.dir = args.out_dir;
  if (cfg.corpus.dir.empty()) throw ConfigError("corpus.dir or --out must be set");
  const auto manifest = BuildCorpus(cfg.corpus, args.overwrite);
  std::cout << "corpus written to " << cfg.corpus.dir << " (" << manifest.size()
            << " samples)\n";
  return kExitOk;
}

int CmdTrain(const CommonArgs& args) {
  ExperimentConfig cfg = LoadAndOverride(args);
  if (args.out_dir.empty()) throw ConfigError("--out run directory is required");
  WwsModel model(cfg.modality, cfg.model, ModelInitSeed(cfg));
  RecordReader train_reader(SplitRecPath(cfg, "train"));
  Trainer trainer(model, train_reader, cfg.features, cfg.train);
  trainer.TrainEpochs(cfg.train.epochs, 1);
  SaveRunArtifacts(model, trainer, args.out_dir, nullptr);
  std::cout << "trained " << ModalityName(cfg.modality) << " model for "
            << cfg.train.epochs << " epochs; final mean loss "
            << trainer.log().rows.back().mean_loss << "\n";
  return kExitOk;
}

int CmdPrune(const CommonArgs& args) {
  ExperimentConfig cfg = LoadAndOverride(args);
  if (args.out_dir.empty()) throw ConfigError("--out run directory is required");
  WwsModel model(cfg.modality, cfg.model, ModelInitSeed(cfg));
  RecordReader train_reader(SplitRecPath(cfg, "train"));
  RecordReader dev_reader(SplitRecPath(cfg, "dev"));
  Trainer trainer(model, train_reader, cfg.features, cfg.train);

  LthOptions options;
  options.iterations = cfg.prune.iterations;
  options.rate = cfg.prune.rate;
  options.initial_epochs = cfg.prune.initial_epochs;
  options.per_layer_ranking = cfg.prune.ranking == "per_layer";
  options.dev_threshold = cfg.prune.dev_threshold;

  PruneHistory history;
  if (cfg.prune.regime == "lth_if") {
    history = RunLthIf(model, trainer, dev_reader, cfg.features,
                       MakeScope(cfg.prune.scope), options);
  } else if (cfg.prune.regime == "lth_oneshot") {
    history = RunLthOneshot(model, trainer, dev_reader, cfg.features,
                            MakeScope(cfg.prune.scope), cfg.prune.target_sparsity,
                            options);
  } else {
    LthOptions encoder_opts = options;
    encoder_opts.iterations = cfg.prune.encoder_iterations;
    encoder_opts.rate = cfg.prune.encoder_rate;
    LthOptions backend_opts = options;
    backend_opts.iterations = cfg.prune.backend_iterations;
    backend_opts.rate = cfg.prune.backend_rate;
    history = RunSequentialAv(model, trainer, dev_reader, cfg.features, encoder_opts,
                              backend_opts);
  }
  SaveRunArtifacts(model, trainer, args.out_dir, &history);
  std::cout << "pruning regime " << cfg.prune.regime << " finished; global sparsity "
            << history.rows.back().global_sparsity << "\n";
  return kExitOk;
}

int CmdEval(const CommonArgs& args, const std::string& ckpt, const std::string& split_flag,
            double threshold_flag, const std::string& threshold_file) {
  ExperimentConfig cfg = LoadAndOverride(args);
  if (ckpt.empty()) throw ConfigError("--ckpt is required");
  const std::string split = split_flag.empty() ? cfg.eval.split : split_flag;
  double threshold = threshold_flag > 0.0 ? threshold_flag : cfg.eval.threshold;
  if (!threshold_file.empty()) {
    std::ifstream is(threshold_file);
    if (!is) throw ConfigError("cannot read threshold file " + threshold_file);
    nlohmann::json j;
    is >> j;
    threshold = j.at("threshold").get<double>();
  }
  std::unique_ptr<WwsModel> model = LoadCheckpoint(ckpt);
  RecordReader reader(SplitRecPath(cfg, split));
  const auto scored = ScoreAll(*model, reader, cfg.features);
  const EvalResult result = CountDecisions(scored, threshold);
  const std::string csv = result.ToCsv();
  if (!args.out_dir.empty()) {
    WriteText(fs::path(args.out_dir) / ("eval_" + split + ".csv"), csv);
  }
  std::cout << csv;
  return kExitOk;
}

int CmdCalibrate(const CommonArgs& args, const std::string& ckpt, double target_flag) {
  ExperimentConfig cfg = LoadAndOverride(args);
  if (ckpt.empty()) throw ConfigError("--ckpt is required");
  const double target =
      target_flag >= 0.0 ? target_flag : cfg.calibrate.target_one_minus_frr;
  std::unique_ptr<WwsModel> model = LoadCheckpoint(ckpt);
  RecordReader reader(SplitRecPath(cfg, cfg.calibrate.split));
  const auto scored = ScoreAll(*model, reader, cfg.features);
  std::vector<double> positives;
  for (const ScoredSample& s : scored) {
    if (s.label == 1) positives.push_back(s.score);
  }
  const double threshold = CalibrateThreshold(positives, target);
  const EvalResult check = CountDecisions(scored, threshold);
  nlohmann::json j = {
      {"threshold", threshold},
      {"target_one_minus_frr", target},
      {"dev_one_minus_frr", 1.0 - check.overall.Frr()},
  };
  if (!args.out_dir.empty()) {
    WriteText(fs::path(args.out_dir) / "threshold.json", j.dump(2) + "\n");
  }
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int CmdFlops(const CommonArgs& args, const std::string& ckpt) {
  std::unique_ptr<WwsModel> model;
  if (!ckpt.empty()) {
    model = LoadCheckpoint(ckpt);
  } else {
    ExperimentConfig cfg = LoadAndOverride(args);
    model = std::make_unique<WwsModel>(cfg.modality, cfg.model, ModelInitSeed(cfg));
  }
  const std::string csv = model->Cost().ToCsv();
  if (!args.out_dir.empty()) {
    WriteText(fs::path(args.out_dir) / "cost.csv", csv);
  }
  std::cout << csv;
  return kExitOk;
}

int CmdReport(const std::string& run_dir, const std::string& out_dir) {
  if (run_dir.empty() || out_dir.empty()) {
    throw ConfigError("report requires --run and --out");
  }
  const ReportOutcome outcome = WriteRunReport(run_dir, out_dir);
  for (const std::string& w : outcome.written) std::cout << "wrote " << w << "\n";
  for (const std::string& s : outcome.skipped) std::cout << "skipped " << s << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  // Large tensor buffers churn quickly; keep them on the heap instead of
  // round-tripping through mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"audio-visual wake word spotting workbench"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string ckpt, split, threshold_file, run_dir;
  double threshold = -1.0, target = -1.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "experiment config (JSON)");
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_option("--seed", common.seed, "override config seed")
        ->each([&](const std::string&) { common.seed_set = true; });
    cmd->add_flag("--overwrite", common.overwrite, "allow clobbering outputs");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic corpus");
  add_common(synth);
  CLI::App* train = app.add_subcommand("train", "train one model");
  add_common(train);
  CLI::App* prune = app.add_subcommand("prune", "run a pruning regime");
  add_common(prune);
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval);
  eval->add_option("--ckpt", ckpt, "checkpoint path");
  eval->add_option("--split", split, "corpus split (train/dev/test)");
  eval->add_option("--threshold", threshold, "decision threshold in (0,1)");
  eval->add_option("--threshold-file", threshold_file, "threshold.json from calibrate");
  CLI::App* calibrate = app.add_subcommand("calibrate", "pick a decision threshold");
  add_common(calibrate);
  calibrate->add_option("--ckpt", ckpt, "checkpoint path");
  calibrate->add_option("--target", target, "target one-minus-FRR in [0,1]");
  CLI::App* flops = app.add_subcommand("flops", "parameter and FLOPs accounting");
  add_common(flops);
  flops->add_option("--ckpt", ckpt, "checkpoint path (else a fresh model from config)");
  CLI::App* report = app.add_subcommand("report", "assemble run tables and plots");
  report->add_option("--run", run_dir, "run directory with per-system subdirs");
  report->add_option("--out", common.out_dir, "report output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth->parsed()) return CmdSynth(common);
    if (train->parsed()) return CmdTrain(common);
    if (prune->parsed()) return CmdPrune(common);
    if (eval->parsed()) return CmdEval(common, ckpt, split, threshold, threshold_file);
    if (calibrate->parsed()) return CmdCalibrate(common, ckpt, target);
    if (flops->parsed()) return CmdFlops(common, ckpt);
    if (report->parsed()) return CmdReport(run_dir, common.out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << "\n";
    return kExitCalibration;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
