// Copyright 2026 The caplab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Run configuration and the glue shared by the CLI, the ablation command and
// the acceptance run: stage ordering, stage checkpoints and evaluation.
//
// A run config is JSON; every key is optional and merges onto defaults():
//
//   {"seed": 7,
//    "grammar": {...ToyGrammarSpec...},
//    "corpus": {"n_train": 100, "n_val": 80, "n_test": 20},
//    "model": {...ModelConfig keys, feature dims come from the data...},
//    "stages": {"pos": {...}, "caption_xe": {...}, "caption_rl": {...}},
//    "beam_width": 5}

#ifndef CAPLAB_PIPELINE_HPP
#define CAPLAB_PIPELINE_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <optional>

#include "caplab/corpus.hpp"
#include "caplab/formats.hpp"
#include "caplab/training.hpp"

namespace caplab {

struct RunConfig {
  std::uint64_t seed = 7;
  ToyGrammarSpec grammar;
  std::size_t n_train = 100;
  std::size_t n_val = 80;
  std::size_t n_test = 20;
  Json model = Json::object();  // ModelConfig overrides
  std::map<TrainStage, TrainConfig> stages;
  std::size_t beam_width = 5;

  static RunConfig defaults();
  // Unknown keys are rejected with ConfigError.
  static RunConfig from_json(const Json& j);
  Json to_json() const;

  // Sets the run seed and every stage seed.
  void set_seed(std::uint64_t s);
  const TrainConfig& stage(TrainStage s) const;
  // Toy architecture with the feature dimensions of `manifest`, the
  // vocabulary size and the "model" overrides applied.
  ModelConfig model_config(const DatasetManifest& manifest, const Vocabulary& vocab) const;
};

// Writes the checkpoint with meta {stage, seed, run_config, data_hash}.
void save_stage_checkpoint(const CaptionModel& model, TrainStage stage, const RunConfig& run,
                           const DatasetManifest& manifest, const std::filesystem::path& path);

// The model a stage starts from. Without `init_from` a fresh model is built.
// caption_xe on a POS model needs a pos checkpoint, caption_rl a caption
// checkpoint; otherwise ContractError unless `force`. A checkpoint trained
// on different data is a ConfigError unless `force`.
std::unique_ptr<CaptionModel> model_for_stage(
    TrainStage stage, const std::optional<std::filesystem::path>& init_from,
    const RunConfig& run, const DatasetManifest& manifest, bool force);

// Corpus metrics of beam captions against every clip's references.
EvaluationReport evaluate_split(const CaptionModel& model, const std::vector<ClipData>& clips,
                                std::size_t beam_width);

}  // namespace caplab

#endif  // CAPLAB_PIPELINE_HPP
